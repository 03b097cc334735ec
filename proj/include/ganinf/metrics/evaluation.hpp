#pragma once

#include <span>
#include <string>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/gan/model.hpp"
#include "ganinf/metrics/classifier.hpp"

namespace ganinf {

enum class MetricKind { ALL, IS, FID, DISC_LOSS };

std::string to_string(MetricKind k);
MetricKind parse_metric_kind(std::string_view name);

struct MetricSpec {
    MetricKind kind = MetricKind::ALL;
    double bandwidth = 1.0;
    std::string classifier_ref;

    /**
     * +1 if a positive influence (removal raises the value) marks a harmful
     * instance, -1 if a negative one does: ALL and IS are higher-is-better,
     * FID is lower-is-better, and the discriminator-loss baseline treats
     * negative influence as harmful.
     */
    [[nodiscard]] int harmful_sign() const noexcept;
    /// +1 if larger values are better.
    [[nodiscard]] int better_sign() const noexcept;
    [[nodiscard]] std::string name() const { return to_string(kind); }
    void validate() const;
};

/// Score oriented so that larger means more harmful.
double harmfulness(const MetricSpec& spec, double score) noexcept;

/// Data the metrics compare against: real samples D'_x and, for IS/FID, the domain classifier.
struct MetricContext {
    const ad::Tensor* reference = nullptr;
    const Classifier* classifier = nullptr;
};

/// V on a set of generated samples (ALL, IS, FID). FID uses classifier features when a classifier is given.
double evaluate_on_samples(const MetricSpec& spec, const ad::Tensor& generated, const MetricContext& ctx);

/// dV / d generated, one row per sample.
ad::Tensor metric_gradient_wrt_generated(const MetricSpec& spec, const ad::Tensor& generated, const MetricContext& ctx);

/// Mean discriminator loss over fake latents and the reference data, no regularizer.
double expected_discriminator_loss(const GanModel& model, std::span<const double> theta, const ad::Tensor& latents,
                                   const ad::Tensor& reference);

/// V at parameters theta: ALL/IS/FID on G(Z'), or the discriminator loss for DISC_LOSS.
double evaluate_metric(const MetricSpec& spec, const GanModel& model, std::span<const double> theta,
                       const ad::Tensor& latents, const MetricContext& ctx);

/// u_G = grad_G <W, G(Z'; theta_G)> for fixed sample gradients W; u_D = 0 exactly.
std::vector<double> query_from_sample_gradients(const GanModel& model, std::span<const double> theta,
                                                const ad::Tensor& latents, const ad::Tensor& sample_gradients);

/// Query vector at the final parameters for any metric kind.
std::vector<double> build_query_vector(const MetricSpec& spec, const GanModel& model, std::span<const double> theta,
                                       const ad::Tensor& latents, const MetricContext& ctx);

}  // namespace ganinf
