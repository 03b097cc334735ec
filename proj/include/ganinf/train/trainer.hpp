#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/gan/model.hpp"
#include "ganinf/train/schedule.hpp"

namespace ganinf {

/// One recorded step: theta is the parameter value *before* the update.
struct StepRecord {
    std::size_t t = 0;
    IndexBatch indices;
    double lr_generator = 0.0;
    double lr_discriminator = 0.0;
    std::vector<double> theta;
    std::uint64_t z_seed = 0;

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainingTrace {
    GanArchitecture architecture;
    TrainingConfig training;
    std::uint64_t seed = 0;
    std::size_t dataset_size = 0;
    std::string dataset_checksum;
    std::string fingerprint;
    std::vector<std::size_t> epoch_boundaries;
    std::vector<StepRecord> records;
    std::vector<double> final_params;

    [[nodiscard]] std::size_t steps() const noexcept { return records.size(); }
    [[nodiscard]] std::size_t epochs() const noexcept { return epoch_boundaries.size(); }
    /// First step of the window covering the last k epochs.
    [[nodiscard]] std::size_t window_start(std::size_t k_epochs) const;
};

/// Hash of architecture, training hyperparameters and dataset checksum.
std::string config_fingerprint(const GanArchitecture& arch, const TrainingConfig& cfg,
                               std::string_view dataset_checksum);

/// Parameter magnitude beyond which training is treated as diverged.
inline constexpr double kDivergenceLimit = 1e6;

/// Mini-batch for step data: latents regenerated from the seed, one per scheduled index.
MiniBatch assemble_batch(const ad::Tensor& dataset, const IndexBatch& indices, std::uint64_t z_seed,
                         std::size_t latent_dim, const std::unordered_set<std::uint32_t>* excluded = nullptr);

/// theta - B g with B = diag(eta_G I, eta_D I). A block whose rate is 0 is copied unchanged.
std::vector<double> asgd_step(const GanModel& model, std::span<const double> theta, const MiniBatch& batch,
                              double lr_generator, double lr_discriminator);

TrainingTrace run_training(const GanArchitecture& arch, const TrainingConfig& cfg, const ad::Tensor& dataset,
                           std::uint64_t seed);

/**
 * Re-runs the recorded steps from `start` (using that record's snapshot) to
 * the end and returns the final parameters. Instances in `excluded` are
 * dropped from the data term; latent counts and rates are left as recorded.
 */
std::vector<double> replay(const TrainingTrace& trace, const ad::Tensor& dataset, std::size_t start = 0,
                           const std::unordered_set<std::uint32_t>& excluded = {});

/// Throws TraceError if the trace is internally inconsistent with `dataset`.
void validate_trace(const TrainingTrace& trace, const ad::Tensor& dataset);

}  // namespace ganinf
