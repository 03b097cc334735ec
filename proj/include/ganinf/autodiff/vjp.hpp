#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ganinf/autodiff/graph.hpp"

namespace ganinf::ad {

/// Builds a flat (d x 1) gradient-valued node from a parameter leaf. Must be
/// differentiable, i.e. produced with Graph::backward(..., create_graph=true).
using GradientFn = std::function<Var(Graph&, Var params)>;

/**
 * Row vector u^T (dg/dtheta) where g = grad_fn(theta), computed as the
 * gradient of <u, g(theta)> by double backpropagation. The d x d Jacobian is
 * never formed.
 */
std::vector<double> vjp_of_gradient(std::span<const double> u, const GradientFn& grad_fn,
                                    std::span<const double> params);

/**
 * Column vector (dg/dtheta) v. Uses a third reverse pass: for a dummy w,
 * h(w) = J^T w is linear in w, so d<v, h(w)>/dw = J v exactly.
 */
std::vector<double> jvp_of_gradient(std::span<const double> v, const GradientFn& grad_fn,
                                    std::span<const double> params);

/// Process-wide count of vjp_of_gradient calls (instrumentation).
std::uint64_t vjp_call_count() noexcept;
void reset_vjp_call_count() noexcept;

}  // namespace ganinf::ad
