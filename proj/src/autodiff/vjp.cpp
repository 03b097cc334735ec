#include "ganinf/autodiff/vjp.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

#include "ganinf/errors.hpp"

namespace ganinf::ad {

namespace {

std::atomic<std::uint64_t> g_vjp_calls{0};

Var build_gradient(Graph& graph, Var theta, const GradientFn& grad_fn, std::size_t expected)
{
    Var g = grad_fn(graph, theta);
    if (g.shape().size() != expected) {
        throw ShapeError("gradient function returned " + std::to_string(g.shape().size()) +
                         " entries, direction vector has " + std::to_string(expected));
    }
    if (graph.passes_detach(g)) {
        throw std::invalid_argument(
            "gradient function is not differentiable: it contains a detached (non-differentiable) "
            "gradient");
    }
    return g;
}

}  // namespace

std::vector<double> vjp_of_gradient(std::span<const double> u, const GradientFn& grad_fn,
                                    std::span<const double> params)
{
    g_vjp_calls.fetch_add(1, std::memory_order_relaxed);
    Graph graph;
    Var theta = graph.leaf(Tensor::column(params), "params");
    Var g = build_gradient(graph, theta, grad_fn, u.size());
    Var weights = graph.constant(Tensor(g.shape(), std::vector<double>(u.begin(), u.end())));
    Var s = inner(weights, g);
    auto grads = graph.backward(s, {theta}, false);
    return grads.value(0).values();
}

std::vector<double> jvp_of_gradient(std::span<const double> v, const GradientFn& grad_fn,
                                    std::span<const double> params)
{
    if (v.size() != params.size()) {
        throw ShapeError("jvp direction has " + std::to_string(v.size()) + " entries, parameters " +
                         std::to_string(params.size()));
    }
    Graph graph;
    Var theta = graph.leaf(Tensor::column(params), "params");
    Var g = build_gradient(graph, theta, grad_fn, params.size());
    Var w = graph.leaf(Tensor(g.shape(), 1.0), "dummy");
    Var h = graph.backward(inner(w, g), {theta}, true).grads[0];
    Var direction = graph.constant(Tensor(h.shape(), std::vector<double>(v.begin(), v.end())));
    auto jv = graph.backward(inner(direction, h), {w}, false);
    return jv.value(0).values();
}

std::uint64_t vjp_call_count() noexcept { return g_vjp_calls.load(std::memory_order_relaxed); }

void reset_vjp_call_count() noexcept { g_vjp_calls.store(0, std::memory_order_relaxed); }

}  // namespace ganinf::ad
