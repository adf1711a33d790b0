#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mllmsent {

/// Base class for every failure the pipeline reports. `kind()` is the stable
/// machine-readable name that ends up in error reports and CLI messages.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message);
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define MLLMSENT_DECLARE_ERROR(Name)                                          \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {}  \
    }

// corpus
MLLMSENT_DECLARE_ERROR(MissingFile);
MLLMSENT_DECLARE_ERROR(SchemaMismatch);
MLLMSENT_DECLARE_ERROR(DuplicateImageId);

class VoteSumViolation : public Error {
public:
    VoteSumViolation(std::string image_id, const std::string& message)
        : Error("VoteSumViolation", message), image_id_(std::move(image_id)) {}
    const std::string& image_id() const noexcept { return image_id_; }

private:
    std::string image_id_;
};

// labeling
MLLMSENT_DECLARE_ERROR(UnsupportedMerge);
MLLMSENT_DECLARE_ERROR(InvalidSetup);

// gateway
MLLMSENT_DECLARE_ERROR(ShotCountOutOfRange);
MLLMSENT_DECLARE_ERROR(ShotLabelOutsideSetup);
MLLMSENT_DECLARE_ERROR(TransportError);
MLLMSENT_DECLARE_ERROR(AuthError);
MLLMSENT_DECLARE_ERROR(RateLimited);
MLLMSENT_DECLARE_ERROR(EmptyCaption);
MLLMSENT_DECLARE_ERROR(InvalidEndpointConfig);

// lexicon
MLLMSENT_DECLARE_ERROR(EmptyLexicon);
MLLMSENT_DECLARE_ERROR(LexiconFormat);
MLLMSENT_DECLARE_ERROR(UnsupportedSetup);

// evalkit
MLLMSENT_DECLARE_ERROR(EmptyMatrix);
MLLMSENT_DECLARE_ERROR(TooFewScores);
MLLMSENT_DECLARE_ERROR(LengthMismatch);
MLLMSENT_DECLARE_ERROR(ZeroVarianceDifferences);
MLLMSENT_DECLARE_ERROR(NonpositiveBaseline);
MLLMSENT_DECLARE_ERROR(IoError);

class ClassTooSmall : public Error {
public:
    ClassTooSmall(std::size_t cls, std::size_t count, std::size_t k);
    std::size_t cls() const noexcept { return cls_; }
    std::size_t count() const noexcept { return count_; }

private:
    std::size_t cls_;
    std::size_t count_;
};

// cli / pipeline
MLLMSENT_DECLARE_ERROR(ConfigError);
MLLMSENT_DECLARE_ERROR(MissingCaptions);
MLLMSENT_DECLARE_ERROR(TunerUnavailable);
MLLMSENT_DECLARE_ERROR(TunerError);
MLLMSENT_DECLARE_ERROR(UnknownModel);
MLLMSENT_DECLARE_ERROR(LeakageDetected);

#undef MLLMSENT_DECLARE_ERROR

}  // namespace mllmsent
