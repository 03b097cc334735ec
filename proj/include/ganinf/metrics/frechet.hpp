#pragma once

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf {

struct FidDiagnostics {
    /// Most negative eigenvalue met before clipping (0 if none).
    double most_negative_eigenvalue = 0.0;
    bool clipped = false;
};

/**
 * |mu_1 - mu_2|^2 + Tr(S_1 + S_2 - 2 (S_1 S_2)^(1/2)) with unbiased covariances.
 * The trace term is computed as Tr sqrt(S_1^(1/2) S_2 S_1^(1/2)), whose
 * eigenvalues are clipped at 0.
 */
double fid(const ad::Tensor& real_features, const ad::Tensor& generated_features, FidDiagnostics* diag = nullptr);

/// d FID / d generated_features, one row per generated sample.
ad::Tensor fid_gradient(const ad::Tensor& real_features, const ad::Tensor& generated_features);

}  // namespace ganinf
