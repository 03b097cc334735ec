#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

namespace ganinf {

/// Tie-corrected Kendall tau-b in O(n log n). Throws if either list is constant.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/**
 * The m largest and m smallest scores (ties to the lower instance id).
 * `ids` defaults to positions.
 */
std::set<std::uint32_t> critical_set(std::span<const double> scores, std::size_t m,
                                     std::span<const std::uint32_t> ids = {});

/// Jaccard index of the critical sets of the estimated and true scores.
double jaccard_critical(std::span<const double> estimated, std::span<const double> truth, std::size_t m = 10,
                        std::span<const std::uint32_t> ids = {});

struct PermutationTest {
    double observed = 0.0;
    /// 97.5th percentile of tau under random reorderings of the estimates.
    double quantile_975 = 0.0;
    /// One-sided, (1 + #{tau_perm >= observed}) / (1 + permutations).
    double p_value = 1.0;
    std::size_t permutations = 0;

    [[nodiscard]] bool significant() const noexcept { return observed > quantile_975; }
};

PermutationTest kendall_permutation_test(std::span<const double> estimated, std::span<const double> truth,
                                         std::size_t permutations, std::uint64_t seed);

struct SignTest {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t zeros = 0;
    /// One-sided P(at least `positives` successes) under Binomial(positives + negatives, 1/2).
    double p_value = 1.0;
};

SignTest sign_test(std::span<const double> differences);

}  // namespace ganinf
