#include "ganinf/influence/forward_estimate.hpp"

#include <algorithm>
#include <cmath>

#include "ganinf/errors.hpp"

namespace ganinf {

namespace {

std::vector<double> evaluate(const ad::GradientFn& grad, std::span<const double> theta)
{
    ad::Graph g;
    ad::Var leaf = g.leaf(ad::Tensor::column(theta), "theta");
    return grad(g, leaf).value().values();
}

}  // namespace

std::vector<double> finite_difference_jvp(const ad::GradientFn& grad, std::span<const double> theta,
                                          std::span<const double> v)
{
    if (v.size() != theta.size()) throw ShapeError("direction and parameters differ in length");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return std::vector<double>(evaluate(grad, theta).size(), 0.0);
    const double eps = 1e-4 * (1.0 + norm);
    std::vector<double> up(theta.begin(), theta.end());
    std::vector<double> down(theta.begin(), theta.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        up[i] += eps * v[i] / norm;
        down[i] -= eps * v[i] / norm;
    }
    auto g_up = evaluate(grad, up);
    const auto g_down = evaluate(grad, down);
    for (std::size_t i = 0; i < g_up.size(); ++i) g_up[i] = norm * (g_up[i] - g_down[i]) / (2.0 * eps);
    return g_up;
}

std::vector<double> estimate_influence_vector_window(const StepSource& source, std::uint32_t j, std::size_t window_start,
                                                     std::size_t cap)
{
    const std::size_t d = source.parameter_count();
    const std::size_t dg = source.generator_size();
    if (d > cap) {
        throw std::invalid_argument("forward estimate refuses " + std::to_string(d) + " parameters (cap " +
                                    std::to_string(cap) + ")");
    }
    if (j >= source.instance_count()) throw std::invalid_argument("instance outside the dataset");
    if (window_start > source.steps()) throw std::invalid_argument("window starts after the last step");

    std::vector<double> delta(d, 0.0);
    bool touched = false;
    for (std::size_t t = window_start; t < source.steps(); ++t) {
        if (touched) {
            const auto jv = finite_difference_jvp(source.gradient(t), source.theta(t), delta);
            const double lr_g = source.lr_generator(t);
            const double lr_d = source.lr_discriminator(t);
            for (std::size_t i = 0; i < d; ++i) delta[i] -= (i < dg ? lr_g : lr_d) * jv[i];
        }
        const auto members = source.members(t);
        const double lr_d = source.lr_discriminator(t);
        if (lr_d != 0.0 && std::find(members.begin(), members.end(), j) != members.end()) {
            const auto grad = source.removal_gradient(t, j);
            const double factor = lr_d / static_cast<double>(members.size());
            for (std::size_t i = 0; i < grad.size(); ++i) delta[dg + i] += factor * grad[i];
            touched = true;
        }
    }
    return delta;
}

std::vector<double> estimate_influence_vector(const TrainingTrace& trace, const ad::Tensor& dataset, std::uint32_t j,
                                              std::size_t k_epochs, std::size_t cap)
{
    GanTraceSource source(trace, dataset);
    return estimate_influence_vector_window(source, j, trace.window_start(k_epochs), cap);
}

}  // namespace ganinf
