#include "ganinf/metrics/inception.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ganinf {

using ad::Tensor;
using ad::Var;

double inception_score_from_posteriors(const Tensor& p)
{
    if (p.rows() == 0) throw std::invalid_argument("inception score of an empty set");
    const std::size_t n = p.rows(), c = p.cols();
    std::vector<double> marginal(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) marginal[k] += p(i, k);
    for (auto& v : marginal) v /= static_cast<double>(n);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) {
            const double q = p(i, k);
            if (q > 0.0) kl += q * (std::log(q) - std::log(marginal[k]));
        }
    return std::exp(kl / static_cast<double>(n));
}

double inception_score(const Tensor& generated, const Classifier& clf)
{
    return inception_score_from_posteriors(clf.posteriors(generated));
}

Tensor inception_score_gradient(const Tensor& generated, const Classifier& clf)
{
    if (generated.rows() == 0) throw std::invalid_argument("inception score of an empty set");
    ad::Graph g;
    Var x = g.leaf(generated, "generated");
    auto out = clf.build(g.constant(Tensor::column(clf.parameters())), x);
    const auto n = static_cast<double>(generated.rows());
    Var logp = out.log_posteriors;
    Var p = ad::exp(logp);
    Var log_marginal = ad::log(ad::scale(ad::sum_rows(p), 1.0 / n));
    Var kl = ad::sum(p * (logp - ad::broadcast_rows(log_marginal, generated.rows())));
    Var score = ad::exp(ad::scale(kl, 1.0 / n));
    return g.backward(score, {x}, false).value(0);
}

}  // namespace ganinf
