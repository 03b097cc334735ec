#pragma once

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/metrics/classifier.hpp"

namespace ganinf {

/// exp(mean_m KL(p(y|x_m) || p(y))) from a posterior matrix (rows = samples), with 0 log 0 = 0.
double inception_score_from_posteriors(const ad::Tensor& posteriors);

double inception_score(const ad::Tensor& generated, const Classifier& clf);

/// d IS / d generated through the classifier, one row per sample.
ad::Tensor inception_score_gradient(const ad::Tensor& generated, const Classifier& clf);

}  // namespace ganinf
