#pragma once

// Train/validation/test partitioning: 10% held-out test, then two
// independently drawn 15% validation sets over the remaining 90%, each
// paired with the complementary 75% for training.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rinnlab/rng.hpp"

namespace rinnlab {

struct SplitFold {
    std::vector<int> train;
    std::vector<int> val;
};

struct SplitPlan {
    std::vector<int> test;
    std::vector<SplitFold> folds;  // two folds sharing the 90% pool
    std::uint64_t seed = 0;
};

inline SplitPlan make_splits(int n, std::uint64_t seed) {
    if (n < 10) throw std::invalid_argument("make_splits: need at least 10 rows, got " +
                                            std::to_string(n));
    const int n_test = static_cast<int>(std::lround(0.10 * n));
    const int n_val = static_cast<int>(std::lround(0.15 * n));

    SplitPlan plan;
    plan.seed = seed;

    Rng base(substream(seed, "split-test"));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    base.shuffle(idx);
    plan.test.assign(idx.begin(), idx.begin() + n_test);
    std::vector<int> pool(idx.begin() + n_test, idx.end());

    for (int fold = 0; fold < 2; ++fold) {
        Rng frng(substream(seed, static_cast<std::uint64_t>(1000 + fold)));
        std::vector<int> shuffled = pool;
        frng.shuffle(shuffled);
        SplitFold f;
        f.val.assign(shuffled.begin(), shuffled.begin() + n_val);
        f.train.assign(shuffled.begin() + n_val, shuffled.end());
        plan.folds.push_back(std::move(f));
    }
    return plan;
}

}  // namespace rinnlab
