#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganinf/harness/config.hpp"
#include "ganinf/harness/datasets.hpp"
#include "ganinf/influence/engine.hpp"
#include "ganinf/metrics/classifier.hpp"
#include "ganinf/train/trainer.hpp"

namespace ganinf {

/// Everything one seed of an experiment derives from the config.
struct SeedRun {
    std::uint64_t seed = 0;
    ExperimentData data;
    TrainingTrace trace;
    std::optional<Classifier> classifier;
    ad::Tensor query_latents;  // Z'
    ad::Tensor test_latents;   // Z_test

    /// Reference data D'_x (and classifier) used to build query vectors.
    [[nodiscard]] MetricContext query_context() const;
    /// Held-out D_test (and classifier) used to judge cleansing.
    [[nodiscard]] MetricContext test_context() const;
};

/// Data, classifier and latent sets for `seed`; trains a trace unless one is given.
SeedRun prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, std::optional<TrainingTrace> trace = {});

/// Throws TraceError unless `trace` was recorded with this config's model, training and data.
void check_trace_matches(const TrainingTrace& trace, const ExperimentConfig& cfg, const ad::Tensor& dataset);

/// u for `spec` at the final parameters of the run, on Z' and D'_x.
std::vector<double> query_vector(const SeedRun& run, const MetricSpec& spec);

struct AccuracyRow {
    std::uint64_t seed = 0;
    std::string metric;
    std::size_t k_epochs = 0;
    std::size_t targets = 0;
    double tau = 0.0;
    double jaccard = 0.0;
    double tau_quantile_975 = 0.0;
    double p_value = 1.0;
    std::string fingerprint;
};

/// One (estimated, true) influence pair.
struct InfluencePoint {
    std::uint64_t seed = 0;
    std::string metric;
    std::size_t k_epochs = 0;
    std::uint32_t index = 0;
    double true_influence = 0.0;
    double estimated_influence = 0.0;
};

struct AccuracyReport {
    std::string fingerprint;
    std::vector<AccuracyRow> rows;
    std::vector<InfluencePoint> points;

    [[nodiscard]] double mean_tau(const std::string& metric, std::size_t k) const;
    [[nodiscard]] nlohmann::json to_json() const;
    static AccuracyReport from_json(const nlohmann::json& j);
    /// accuracy.csv, influence_points.csv and accuracy.json.
    void write(const std::filesystem::path& dir) const;
};

struct AccuracyOptions {
    /// Use the oracle values as the estimate; tau and Jaccard must come out as 1.
    bool self_test = false;
    /// Pre-trained traces by seed; seeds without one are trained.
    std::function<std::optional<TrainingTrace>(std::uint64_t)> trace_for;
};

AccuracyReport run_estimation_accuracy(const ExperimentConfig& cfg, const AccuracyOptions& opts = {});

struct CleansingRow {
    std::uint64_t seed = 0;
    std::string method;
    std::string metric;
    std::size_t n_harmful = 0;
    /// Instances actually removed (selection can fall short of n_harmful).
    std::size_t removed = 0;
    double before = 0.0;
    double after = 0.0;
    /// (after - before) oriented so that positive means better.
    double improvement = 0.0;
    std::string fingerprint;
};

struct CleansingReport {
    std::string fingerprint;
    std::vector<CleansingRow> rows;

    [[nodiscard]] double mean_improvement(const std::string& method, const std::string& metric, std::size_t n_h) const;
    /// Per-seed improvement of `method` minus that of `baseline`, in seed order.
    [[nodiscard]] std::vector<double> paired_differences(const std::string& method, const std::string& baseline,
                                                         const std::string& metric, std::size_t n_h) const;
    [[nodiscard]] nlohmann::json to_json() const;
    static CleansingReport from_json(const nlohmann::json& j);
    /// cleansing.csv and cleansing.json.
    void write(const std::filesystem::path& dir) const;
};

struct CleansingOptions {
    std::function<std::optional<TrainingTrace>(std::uint64_t)> trace_for;
    /// Where to save the proposed-method influence tables (JSON, one per seed and metric); empty skips.
    std::filesystem::path table_dir;
};

CleansingReport run_data_cleansing(const ExperimentConfig& cfg, const CleansingOptions& opts = {});

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware concurrency). Rethrows the first error.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace ganinf
