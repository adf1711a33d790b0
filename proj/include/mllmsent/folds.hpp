#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mllmsent::evalkit {

/// Stratified k-fold assignment. `fold_of[i]` is the fold of instance i in the
/// order the instances were given.
struct FoldPlan {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_of;
    std::map<std::string, std::size_t> assignments;  // image_id -> fold

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Shuffles each class with a seeded generator and deals its members across
/// folds round-robin, continuing the rotation from class to class so fold
/// totals stay balanced. Every class present needs at least k members.
FoldPlan make_folds(const std::vector<std::string>& ids, const std::vector<std::size_t>& labels,
                    std::size_t k, std::uint64_t seed);

/// Portable Fisher-Yates driven by mt19937_64 (std::shuffle output differs
/// between standard libraries).
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

/// Uniform draw without replacement of `count` distinct elements of `pool`.
std::vector<std::size_t> seeded_sample(std::vector<std::size_t> pool, std::size_t count,
                                       std::uint64_t seed);

}  // namespace mllmsent::evalkit
