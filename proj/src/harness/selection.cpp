#include "ganinf/harness/selection.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ganinf/log.hpp"
#include "ganinf/train/schedule.hpp"

namespace ganinf {

std::vector<std::uint32_t> select_harmful(const InfluenceTable& table, const MetricSpec& spec, std::size_t n_h)
{
    if (table.indices.size() != table.scores.size()) throw std::invalid_argument("malformed influence table");
    if (n_h > table.indices.size()) throw std::invalid_argument("n_h exceeds the number of scored instances");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < table.scores.size(); ++i) {
        if (harmfulness(spec, table.scores[i]) > 0.0) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        const double ha = harmfulness(spec, table.scores[a]), hb = harmfulness(spec, table.scores[b]);
        return ha > hb || (ha == hb && table.indices[a] < table.indices[b]);
    });
    if (order.size() < n_h) {
        warn("only " + std::to_string(order.size()) + " instances are harmful for " + spec.name() + "; asked for " +
             std::to_string(n_h));
    }
    order.resize(std::min(order.size(), n_h));
    std::vector<std::uint32_t> out;
    for (auto i : order) out.push_back(table.indices[i]);
    return out;
}

std::vector<std::uint32_t> select_random(std::size_t n, std::size_t n_h, std::uint64_t seed)
{
    if (n_h > n) throw std::invalid_argument("cannot draw more instances than exist");
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n_h; ++i) std::swap(all[i], all[i + bounded(rng, n - i)]);
    all.resize(n_h);
    return all;
}

}  // namespace ganinf
