#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ganinf/autodiff/graph.hpp"
#include "ganinf/gan/architecture.hpp"
#include "ganinf/gan/params.hpp"

namespace ganinf {

/// Discriminator outputs are clamped to [kProbabilityClamp, 1 - kProbabilityClamp] before logs.
inline constexpr double kProbabilityClamp = 1e-7;

enum class LossTerm { Generator, DiscriminatorFake, DiscriminatorReal };

/**
 * One mini-batch as seen by the joint gradient. `latents` has |Z| rows and
 * fixes every batch-mean denominator. `data` holds the rows that enter the
 * discriminator's data term; it may have fewer rows than `latents` (instances
 * excluded by a counterfactual run) or none at all.
 */
struct MiniBatch {
    ad::Tensor latents;
    ad::Tensor data;
};

class GanModel {
public:
    explicit GanModel(GanArchitecture arch);

    [[nodiscard]] const GanArchitecture& architecture() const noexcept { return arch_; }
    [[nodiscard]] const ParamLayout& layout() const noexcept { return *layout_; }
    [[nodiscard]] const std::shared_ptr<const ParamLayout>& layout_ptr() const noexcept { return layout_; }
    [[nodiscard]] std::size_t generator_size() const noexcept { return layout_->generator_size(); }
    [[nodiscard]] std::size_t discriminator_size() const noexcept { return layout_->discriminator_size(); }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return layout_->total_size(); }

    /// Glorot-uniform kernels, zero biases.
    [[nodiscard]] ParamVector initialize(std::uint64_t seed) const;
    [[nodiscard]] ParamVector wrap(std::vector<double> values) const;

    // Graph builders. `theta` is the flat d x 1 parameter node.
    ad::Var generate(ad::Var theta, ad::Var latents) const;
    ad::Var discriminate(ad::Var theta, ad::Var samples) const;
    ad::Var generator_losses(ad::Var d_fake) const;
    ad::Var fake_losses(ad::Var d_fake) const;
    ad::Var real_losses(ad::Var d_real) const;
    ad::Var regularizer(ad::Var theta) const;
    /// Stacked (grad_G mean L_G, grad_D mean L_D); differentiable. `theta` must be a leaf.
    ad::Var joint_gradient(ad::Var theta, const MiniBatch& batch) const;

    // Value-level wrappers.
    [[nodiscard]] std::vector<double> generator_forward(std::span<const double> theta,
                                                        std::span<const double> z) const;
    [[nodiscard]] ad::Tensor generate(std::span<const double> theta, const ad::Tensor& latents) const;
    [[nodiscard]] ad::Tensor discriminate(std::span<const double> theta, const ad::Tensor& samples) const;
    /// f_G(z), f_D^z(z) or f_D^x(x) for a single input vector.
    [[nodiscard]] double per_sample_loss(LossTerm term, std::span<const double> theta,
                                         std::span<const double> input) const;
    [[nodiscard]] std::vector<double> joint_gradient(std::span<const double> theta,
                                                     const MiniBatch& batch) const;
    /// grad_{theta_D} f_D^x(x; theta), length d_D.
    [[nodiscard]] std::vector<double> remove_term_gradient(std::span<const double> x,
                                                           std::span<const double> theta) const;
    /**
     * <direction_D, grad_{theta_D} f_D^x(x_i; theta)> for every row x_i of
     * `data`, from one batched double-backward pass.
     */
    [[nodiscard]] std::vector<double> removal_directional_derivatives(
        std::span<const double> theta, const ad::Tensor& data,
        std::span<const double> direction_D) const;

private:
    ad::Var dense_stack(ad::Var theta, ad::Var input, Network net) const;
    void check_theta(std::size_t n) const;

    GanArchitecture arch_;
    std::shared_ptr<const ParamLayout> layout_;
    std::size_t gen_layers_ = 0;
    std::size_t disc_layers_ = 0;
};

}  // namespace ganinf
