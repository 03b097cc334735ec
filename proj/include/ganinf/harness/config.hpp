#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ganinf/gan/architecture.hpp"
#include "ganinf/metrics/classifier.hpp"
#include "ganinf/metrics/evaluation.hpp"
#include "ganinf/train/schedule.hpp"

namespace ganinf {

enum class DatasetKind { Normal2D, Digits8, Idx };

std::string to_string(DatasetKind k);
DatasetKind parse_dataset_kind(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Normal2D;
    std::size_t size = 1000;
    /// Size of every held-out set (query reference D'_x and test set D_test).
    std::size_t holdout_size = 1000;
    std::array<double, 2> mean{1.0, 1.0};
    std::array<double, 4> covariance{1.0, 0.8, 0.8, 1.0};
    double pixel_noise = 0.2;
    std::filesystem::path idx_images;
    std::filesystem::path idx_labels;
    std::size_t image_side = 8;
};

enum class SelectionMethod { Proposed, DiscLoss, Random };

std::string to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view name);

struct ExperimentConfig {
    DatasetSpec dataset;
    GanArchitecture architecture;
    TrainingConfig training;
    std::vector<std::uint64_t> seeds{1};
    std::vector<MetricSpec> metrics;
    /// |Z'| for query vectors and |Z_test| for cleansing evaluation.
    std::size_t eval_latents = 1000;
    ClassifierConfig classifier;

    std::vector<std::size_t> k_epochs{1};
    std::size_t targets = 50;
    std::size_t critical_m = 10;
    std::size_t permutations = 1000;

    std::vector<std::size_t> n_harmful{50, 100, 250};
    std::vector<SelectionMethod> methods{SelectionMethod::Proposed, SelectionMethod::DiscLoss,
                                         SelectionMethod::Random};
    std::size_t cleanse_k_epochs = 1;

    unsigned workers = 0;
    std::filesystem::path output_dir = "out";

    /// Throws ConfigError on any inconsistency.
    void validate() const;
    /// Everything except the output directory and worker count, in a stable order.
    [[nodiscard]] std::string canonical() const;
    [[nodiscard]] std::string fingerprint() const;
    [[nodiscard]] bool needs_classifier() const;
};

/**
 * INI-style file with sections [dataset] [model] [training] [metrics]
 * [accuracy] [cleansing] [output]. `overrides` are "section.key=value"
 * strings applied on top of the file.
 */
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

}  // namespace ganinf
