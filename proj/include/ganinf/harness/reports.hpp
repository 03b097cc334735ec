#pragma once

#include <filesystem>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/harness/experiments.hpp"
#include "ganinf/influence/engine.hpp"
#include "ganinf/metrics/evaluation.hpp"

namespace ganinf {

/// index,score,harmfulness plus x,y columns when the data is two-dimensional.
void write_scatter_csv(const std::filesystem::path& file, const InfluenceTable& table, const MetricSpec& spec,
                       const ad::Tensor& data);

/// method,metric,n_harmful,seeds,mean_before,mean_after,mean_improvement,std_improvement
void write_cleansing_curves(const std::filesystem::path& file, const CleansingReport& report);

/// metric,k_epochs,seeds,mean_tau,mean_jaccard,significant_runs
void write_accuracy_curves(const std::filesystem::path& file, const AccuracyReport& report);

/**
 * Emits plot data for everything found in an experiment output directory:
 * scatter_<metric>_seed<s>.csv for each saved influence table,
 * cleansing_curves.csv and accuracy_by_k.csv. Returns the files written.
 */
std::vector<std::filesystem::path> write_report_directory(const std::filesystem::path& experiment_dir,
                                                          const ExperimentConfig& cfg,
                                                          const std::filesystem::path& out_dir);

}  // namespace ganinf
