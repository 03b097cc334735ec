#include "ganinf/metrics/kde.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ganinf/errors.hpp"

namespace ganinf {

namespace {

void check_inputs(const ad::Tensor& real, const ad::Tensor& generated, double h)
{
    if (real.rows() == 0 || generated.rows() == 0) throw std::invalid_argument("KDE needs non-empty sets");
    if (real.cols() != generated.cols()) throw ShapeError("real and generated samples differ in dimension");
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("KDE bandwidth must be positive");
}

// Squared distances from real row r to every generated row, scaled by -1/(2h^2).
void log_kernels(const ad::Tensor& real, std::size_t r, const ad::Tensor& gen, double h, std::vector<double>& out)
{
    const double inv = -0.5 / (h * h);
    for (std::size_t m = 0; m < gen.rows(); ++m) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < gen.cols(); ++c) {
            const double diff = real(r, c) - gen(m, c);
            d2 += diff * diff;
        }
        out[m] = inv * d2;
    }
}

}  // namespace

double average_log_likelihood(const ad::Tensor& real, const ad::Tensor& generated, double h)
{
    check_inputs(real, generated, h);
    const auto d = static_cast<double>(real.cols());
    const auto m_count = static_cast<double>(generated.rows());
    const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * h * h) - std::log(m_count);
    std::vector<double> lk(generated.rows());
    double total = 0.0;
    for (std::size_t r = 0; r < real.rows(); ++r) {
        log_kernels(real, r, generated, h, lk);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : lk) mx = std::max(mx, v);
        double s = 0.0;
        for (double v : lk) s += std::exp(v - mx);
        total += mx + std::log(s) + log_norm;
    }
    return total / static_cast<double>(real.rows());
}

ad::Tensor average_log_likelihood_gradient(const ad::Tensor& real, const ad::Tensor& generated, double h)
{
    check_inputs(real, generated, h);
    ad::Tensor grad({generated.rows(), generated.cols()});
    std::vector<double> lk(generated.rows());
    const double scale = 1.0 / (static_cast<double>(real.rows()) * h * h);
    for (std::size_t r = 0; r < real.rows(); ++r) {
        log_kernels(real, r, generated, h, lk);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : lk) mx = std::max(mx, v);
        double s = 0.0;
        for (auto& v : lk) {
            v = std::exp(v - mx);
            s += v;
        }
        for (std::size_t m = 0; m < generated.rows(); ++m) {
            const double w = lk[m] / s * scale;
            if (w == 0.0) continue;
            for (std::size_t c = 0; c < generated.cols(); ++c) grad(m, c) += w * (real(r, c) - generated(m, c));
        }
    }
    return grad;
}

}  // namespace ganinf
