#include "mllmsent/error.hpp"

namespace mllmsent {

Error::Error(std::string kind, const std::string& message)
    : std::runtime_error(message), kind_(std::move(kind)) {}

ClassTooSmall::ClassTooSmall(std::size_t cls, std::size_t count, std::size_t k)
    : Error("ClassTooSmall", "class " + std::to_string(cls) + " has " + std::to_string(count) +
                                 " instances, fewer than the " + std::to_string(k) + " folds"),
      cls_(cls),
      count_(count) {}

}  // namespace mllmsent
