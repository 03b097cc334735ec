#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ganinf/autodiff/vjp.hpp"
#include "ganinf/influence/engine.hpp"

namespace ganinf {

inline constexpr std::size_t kForwardEstimateCap = 2000;

/// J v by central differences of g along v/|v|, step 1e-4 (1 + |v|), rescaled by |v|.
std::vector<double> finite_difference_jvp(const ad::GradientFn& grad, std::span<const double> theta,
                                          std::span<const double> v);

/**
 * Forward recursion delta_{t+1} = (I - B_t J_t) delta_t + [j in S_t] (eta_D / |S_t|) (0, grad_D f_D^x(x_j; theta_t))
 * over the window; returns the estimated parameter change from removing j.
 * Validation utility: refuses models with more than `cap` parameters.
 */
std::vector<double> estimate_influence_vector_window(const StepSource& source, std::uint32_t j, std::size_t window_start,
                                                     std::size_t cap = kForwardEstimateCap);
std::vector<double> estimate_influence_vector(const TrainingTrace& trace, const ad::Tensor& dataset, std::uint32_t j,
                                              std::size_t k_epochs, std::size_t cap = kForwardEstimateCap);

}  // namespace ganinf
