#pragma once

#include <cstdint>
#include <vector>

#include "ganinf/influence/engine.hpp"
#include "ganinf/metrics/evaluation.hpp"

namespace ganinf {

/**
 * Up to n_h instances ordered by harmfulness (score after the metric's sign
 * flip), most harmful first, ties to the lower index. Only strictly harmful
 * instances qualify; a shorter set is returned with a warning if too few do.
 */
std::vector<std::uint32_t> select_harmful(const InfluenceTable& table, const MetricSpec& spec, std::size_t n_h);

/// n_h distinct indices drawn uniformly from 0..n-1.
std::vector<std::uint32_t> select_random(std::size_t n, std::size_t n_h, std::uint64_t seed);

}  // namespace ganinf
