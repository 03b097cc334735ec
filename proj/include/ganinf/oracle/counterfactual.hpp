#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/metrics/evaluation.hpp"
#include "ganinf/train/trainer.hpp"

namespace ganinf {

struct CounterfactualResult {
    std::uint32_t j = 0;
    std::size_t k_epochs = 0;
    std::size_t window_start = 0;
    std::vector<double> theta_cf;
    std::vector<double> delta_theta;
    /// Metric name -> V(theta_cf) - V(theta_final).
    std::map<std::string, double> delta_metric;
    /// Set when the re-run for this target failed; the other fields are then empty.
    std::optional<std::string> error;

    [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

/// A metric evaluated on a fixed latent set Z' shared by both parameter vectors.
struct MetricQuery {
    MetricSpec spec;
    const ad::Tensor* latents = nullptr;
    MetricContext context;
};

/**
 * Final parameters when every instance in `excluded` is dropped from the
 * discriminator data term from step `window_start` on. Steps before the first
 * affected one are taken from the trace, which is exact because the re-run is
 * deterministic.
 */
std::vector<double> counterfactual_params(const TrainingTrace& trace, const ad::Tensor& dataset,
                                          std::span<const std::uint32_t> excluded, std::size_t window_start);

CounterfactualResult counterfactual_retrain(const TrainingTrace& trace, const ad::Tensor& dataset, std::uint32_t j,
                                            std::size_t k_epochs);

/// V(G(Z'; theta_cf)) - V(G(Z'; theta_final)).
double true_influence_on_metric(const GanModel& model, std::span<const double> theta_final,
                                std::span<const double> theta_cf, const MetricQuery& query);

/**
 * One independent re-run per target, spread over `workers` threads (0 picks
 * the hardware concurrency). Results line up with `targets`; a failing target
 * records its error instead of aborting the batch.
 */
std::vector<CounterfactualResult> batch_oracle(const TrainingTrace& trace, const ad::Tensor& dataset,
                                               std::span<const std::uint32_t> targets, std::size_t k_epochs,
                                               std::span<const MetricQuery> queries, unsigned workers = 0);

}  // namespace ganinf
