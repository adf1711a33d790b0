#include "mllmsent/folds.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

#include "mllmsent/error.hpp"

namespace mllmsent::evalkit {

namespace {

// Unbiased draw in [0, bound) from raw generator output.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[bounded(rng, i)]);
    }
}

std::vector<std::size_t> seeded_sample(std::vector<std::size_t> pool, std::size_t count,
                                       std::uint64_t seed) {
    if (count > pool.size()) {
        throw std::invalid_argument("cannot sample " + std::to_string(count) + " of " +
                                    std::to_string(pool.size()));
    }
    seeded_shuffle(pool, seed);
    pool.resize(count);
    return pool;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan make_folds(const std::vector<std::string>& ids, const std::vector<std::size_t>& labels,
                    std::size_t k, std::uint64_t seed) {
    if (ids.size() != labels.size()) throw LengthMismatch("ids and labels differ in length");
    if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");

    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class) {
        if (members.size() < k) throw ClassTooSmall(cls, members.size(), k);
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.fold_of.assign(ids.size(), 0);
    std::size_t offset = 0;
    for (auto& [cls, members] : by_class) {
        seeded_shuffle(members, seed ^ (0x9e3779b97f4a7c15ULL * (cls + 1)));
        for (std::size_t j = 0; j < members.size(); ++j) {
            plan.fold_of[members[j]] = (offset + j) % k;
        }
        offset += members.size();
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!plan.assignments.emplace(ids[i], plan.fold_of[i]).second) {
            throw DuplicateImageId("duplicate id '" + ids[i] + "' in fold plan");
        }
    }
    return plan;
}

}  // namespace mllmsent::evalkit
