#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganinf/autodiff/vjp.hpp"
#include "ganinf/train/trainer.hpp"

namespace ganinf {

/**
 * Read-only view of a recorded optimisation run, as the inference phase sees
 * it. The GAN trace is the production implementation; tests plug in analytic
 * games.
 */
class StepSource {
public:
    virtual ~StepSource() = default;

    [[nodiscard]] virtual std::size_t steps() const = 0;
    [[nodiscard]] virtual std::size_t generator_size() const = 0;
    [[nodiscard]] virtual std::size_t parameter_count() const = 0;
    [[nodiscard]] virtual std::size_t instance_count() const = 0;

    [[nodiscard]] virtual std::span<const double> theta(std::size_t t) const = 0;
    [[nodiscard]] virtual std::span<const std::uint32_t> members(std::size_t t) const = 0;
    [[nodiscard]] virtual double lr_generator(std::size_t t) const = 0;
    [[nodiscard]] virtual double lr_discriminator(std::size_t t) const = 0;

    /// Joint gradient at step t (latents fixed, full batch), differentiable in theta.
    [[nodiscard]] virtual ad::GradientFn gradient(std::size_t t) const = 0;
    /// <u_D, grad_D f_D^x(x_i; theta_t)> for each listed instance.
    [[nodiscard]] virtual std::vector<double> removal_derivatives(std::size_t t, std::span<const std::uint32_t> ids,
                                                                  std::span<const double> u_d) const = 0;
    /// grad_D f_D^x(x_i; theta_t), length d_D.
    [[nodiscard]] virtual std::vector<double> removal_gradient(std::size_t t, std::uint32_t id) const = 0;
};

class GanTraceSource final : public StepSource {
public:
    /// Both references must outlive the source.
    GanTraceSource(const TrainingTrace& trace, const ad::Tensor& dataset);

    std::size_t steps() const override { return trace_.steps(); }
    std::size_t generator_size() const override { return model_.generator_size(); }
    std::size_t parameter_count() const override { return model_.parameter_count(); }
    std::size_t instance_count() const override { return dataset_.rows(); }
    std::span<const double> theta(std::size_t t) const override { return trace_.records.at(t).theta; }
    std::span<const std::uint32_t> members(std::size_t t) const override { return trace_.records.at(t).indices; }
    double lr_generator(std::size_t t) const override { return trace_.records.at(t).lr_generator; }
    double lr_discriminator(std::size_t t) const override { return trace_.records.at(t).lr_discriminator; }
    ad::GradientFn gradient(std::size_t t) const override;
    std::vector<double> removal_derivatives(std::size_t t, std::span<const std::uint32_t> ids,
                                            std::span<const double> u_d) const override;
    std::vector<double> removal_gradient(std::size_t t, std::uint32_t id) const override;

    [[nodiscard]] const GanModel& model() const noexcept { return model_; }
    [[nodiscard]] const TrainingTrace& trace() const noexcept { return trace_; }

private:
    const TrainingTrace& trace_;
    const ad::Tensor& dataset_;
    GanModel model_;
};

struct InfluenceTable {
    std::string metric;
    std::size_t k_epochs = 0;
    std::size_t window_start = 0;
    std::string query_fingerprint;
    std::string trace_fingerprint;
    /// Aligned: scores[i] belongs to indices[i]. Duplicated targets repeat their score.
    std::vector<std::uint32_t> indices;
    std::vector<double> scores;

    [[nodiscard]] double score_of(std::uint32_t index) const;
    void write_csv(const std::filesystem::path& file) const;
    [[nodiscard]] nlohmann::json to_json() const;
    static InfluenceTable from_json(const nlohmann::json& j);
};

/// Hash of the bit patterns of u.
std::string query_fingerprint(std::span<const double> u);

std::vector<std::uint32_t> all_indices(std::size_t n);

/**
 * u - (B J)^T u for one step: the gradient of <(eta_G u_G, eta_D u_D), g(theta)>
 * subtracted from u. Exactly one vjp evaluation.
 */
std::vector<double> propagate_query(std::span<const double> u, const ad::GradientFn& grad, std::span<const double> theta,
                                    std::size_t generator_size, double lr_generator, double lr_discriminator);
std::vector<double> propagate_query(std::span<const double> u, const StepSource& source, std::size_t t);

/**
 * Backward sweep from the last step down to `window_start`, accumulating
 *   score_j += (eta_D / |S_t|) <u_D, grad_D f_D^x(x_j; theta_t)>
 * for targets in S_t before propagating u through step t. One vjp per step.
 */
InfluenceTable infer_linear_influence_window(const StepSource& source, std::span<const double> u,
                                             std::span<const std::uint32_t> targets, std::size_t window_start);

InfluenceTable infer_linear_influence(const TrainingTrace& trace, const ad::Tensor& dataset, std::span<const double> u,
                                      std::span<const std::uint32_t> targets, std::size_t k_epochs,
                                      std::string metric = {});

struct CrossBlockReport {
    std::size_t step = 0;
    double input_norm = 0.0;
    double generator_block_norm = 0.0;
    double discriminator_block_norm = 0.0;
    std::vector<double> output;
};

/// (I - B J) v for v = (0, v_D), via an exact Jacobian-vector product.
CrossBlockReport cross_block_transfer(const ad::GradientFn& grad, std::span<const double> theta,
                                      std::size_t generator_size, double lr_generator, double lr_discriminator,
                                      std::span<const double> v_d);
CrossBlockReport cross_block_transfer_check(const StepSource& source, std::size_t t, std::span<const double> v_d);

}  // namespace ganinf
