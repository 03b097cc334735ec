#include "ganinf/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ganinf/train/schedule.hpp"

namespace ganinf {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_size)
{
    if (a.size() != b.size()) throw std::invalid_argument("score lists differ in length");
    if (a.size() < min_size) throw std::invalid_argument("need at least " + std::to_string(min_size) + " scores");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) throw std::invalid_argument("NaN score");
    }
}

// Sorts v and returns the number of inversions it had.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi)
{
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq same_as_previous)
{
    std::uint64_t total = 0, run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && same_as_previous(i)) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b)
{
    check_pair(a, b, 2);
    const std::size_t n = a.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]); });

    const auto n1 = tied_pairs(n, [&](std::size_t i) { return a[order[i]] == a[order[i - 1]]; });
    const auto n3 = tied_pairs(n, [&](std::size_t i) {
        return a[order[i]] == a[order[i - 1]] && b[order[i]] == b[order[i - 1]];
    });
    std::vector<double> bs(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) bs[i] = b[order[i]];
    const auto swaps = count_inversions(bs, buf, 0, n);
    const auto n2 = tied_pairs(n, [&](std::size_t i) { return bs[i] == bs[i - 1]; });

    const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double denom = std::sqrt((n0 - static_cast<double>(n1)) * (n0 - static_cast<double>(n2)));
    if (denom == 0.0) throw std::invalid_argument("Kendall tau is undefined for a constant list");
    const double s = n0 - static_cast<double>(n1) - static_cast<double>(n2) + static_cast<double>(n3) -
                     2.0 * static_cast<double>(swaps);
    return std::clamp(s / denom, -1.0, 1.0);
}

std::set<std::uint32_t> critical_set(std::span<const double> scores, std::size_t m, std::span<const std::uint32_t> ids)
{
    if (!ids.empty() && ids.size() != scores.size()) throw std::invalid_argument("ids and scores differ in length");
    if (scores.size() < 2 * m) throw std::invalid_argument("need at least 2m scored instances");
    std::vector<std::uint32_t> id(scores.size());
    std::vector<std::size_t> pos(scores.size());
    std::iota(pos.begin(), pos.end(), 0);
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = ids.empty() ? static_cast<std::uint32_t>(i) : ids[i];

    std::set<std::uint32_t> out;
    std::sort(pos.begin(), pos.end(),
              [&](auto i, auto j) { return scores[i] > scores[j] || (scores[i] == scores[j] && id[i] < id[j]); });
    for (std::size_t i = 0; i < m; ++i) out.insert(id[pos[i]]);
    std::sort(pos.begin(), pos.end(),
              [&](auto i, auto j) { return scores[i] < scores[j] || (scores[i] == scores[j] && id[i] < id[j]); });
    for (std::size_t i = 0; i < m; ++i) out.insert(id[pos[i]]);
    return out;
}

double jaccard_critical(std::span<const double> estimated, std::span<const double> truth, std::size_t m,
                        std::span<const std::uint32_t> ids)
{
    check_pair(estimated, truth, 2 * m);
    const auto a = critical_set(estimated, m, ids);
    const auto b = critical_set(truth, m, ids);
    std::size_t common = 0;
    for (auto i : a) common += b.contains(i);
    const std::size_t uni = a.size() + b.size() - common;
    return uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
}

PermutationTest kendall_permutation_test(std::span<const double> estimated, std::span<const double> truth,
                                         std::size_t permutations, std::uint64_t seed)
{
    if (permutations == 0) throw std::invalid_argument("permutation test needs at least one permutation");
    PermutationTest r;
    r.observed = kendall_tau(estimated, truth);
    r.permutations = permutations;
    std::mt19937_64 rng(seed);
    std::vector<double> shuffled(estimated.begin(), estimated.end());
    std::vector<double> taus(permutations);
    std::size_t at_least = 0;
    for (auto& t : taus) {
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[bounded(rng, i + 1)]);
        t = kendall_tau(shuffled, truth);
        at_least += t >= r.observed;
    }
    std::sort(taus.begin(), taus.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(permutations)));
    r.quantile_975 = taus[std::max<std::size_t>(rank, 1) - 1];
    r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    return r;
}

SignTest sign_test(std::span<const double> differences)
{
    SignTest r;
    for (double d : differences) {
        if (std::isnan(d)) throw std::invalid_argument("NaN difference");
        if (d > 0) ++r.positives;
        else if (d < 0) ++r.negatives;
        else ++r.zeros;
    }
    const std::size_t n = r.positives + r.negatives;
    // sum_{i >= positives} C(n, i) / 2^n, accumulated in log space.
    double p = 0.0;
    for (std::size_t i = r.positives; i <= n; ++i) {
        const double log_c = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                             std::lgamma(static_cast<double>(n - i) + 1);
        p += std::exp(log_c - static_cast<double>(n) * std::log(2.0));
    }
    r.p_value = std::min(1.0, p);
    return r;
}

}  // namespace ganinf
