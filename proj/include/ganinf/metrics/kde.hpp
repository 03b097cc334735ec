#pragma once

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf {

/**
 * Mean log-density of `real` under an isotropic Gaussian KDE centred on the
 * rows of `generated`, with the full (2 pi h^2)^(-d/2) normaliser.
 */
double average_log_likelihood(const ad::Tensor& real, const ad::Tensor& generated, double bandwidth);

/// d ALL / d generated, one row per generated sample.
ad::Tensor average_log_likelihood_gradient(const ad::Tensor& real, const ad::Tensor& generated, double bandwidth);

}  // namespace ganinf
