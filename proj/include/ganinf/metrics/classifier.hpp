#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ganinf/autodiff/graph.hpp"

namespace ganinf {

struct ClassifierConfig {
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.5;

    void validate() const;
};

/**
 * MLP d_x -> hidden1 -> hidden2 -> C with sigmoid hidden units and a softmax
 * head. The hidden2 activations are the feature vector.
 */
class Classifier {
public:
    Classifier() = default;
    Classifier(std::size_t input_dim, std::size_t classes, std::size_t hidden1 = 64, std::size_t hidden2 = 32);

    /// Glorot-uniform hidden kernels, zero head and biases (uniform posteriors before training).
    void initialize(std::uint64_t seed);

    [[nodiscard]] std::size_t input_dim() const noexcept { return input_; }
    [[nodiscard]] std::size_t classes() const noexcept { return classes_; }
    [[nodiscard]] std::size_t feature_dim() const noexcept { return hidden2_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    void set_parameters(std::vector<double> params);

    struct Outputs {
        ad::Var features;
        ad::Var logits;
        ad::Var log_posteriors;
    };
    /// Builds the network over `input`; `params` is a d x 1 node (leaf or constant).
    Outputs build(ad::Var params, ad::Var input) const;

    [[nodiscard]] ad::Tensor posteriors(const ad::Tensor& x) const;
    [[nodiscard]] ad::Tensor features(const ad::Tensor& x) const;

    /// Parameter file plus a JSON manifest with the shape.
    void save(const std::filesystem::path& stem) const;
    static Classifier load(const std::filesystem::path& stem);

private:
    std::size_t input_ = 0;
    std::size_t classes_ = 0;
    std::size_t hidden1_ = 0;
    std::size_t hidden2_ = 0;
    std::vector<double> params_;
};

struct TrainedClassifier {
    Classifier classifier;
    double training_accuracy = 0.0;
};

/// Labels are 0-based class ids. Mini-batch SGD on mean cross-entropy with a seeded schedule.
TrainedClassifier train_classifier(const ad::Tensor& x, std::span<const std::uint32_t> labels, std::size_t classes,
                                   const ClassifierConfig& cfg, std::uint64_t seed);

double classifier_accuracy(const Classifier& clf, const ad::Tensor& x, std::span<const std::uint32_t> labels);

}  // namespace ganinf
