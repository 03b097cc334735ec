#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf::ad {

using NodeId = std::uint32_t;

enum class Op : std::uint8_t {
    Leaf,
    Constant,
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    BroadcastRows,
    SumRows,
    BroadcastCols,
    SumCols,
    Sum,
    BroadcastScalar,
    Sigmoid,
    Tanh,
    Relu,
    Step,
    Log,
    Exp,
    Square,
    Reciprocal,
    Clamp,
    InRange,
    RowMax,
    Slice,
    Embed,
    Concat,
    Detach,
};

std::string_view op_name(Op op) noexcept;

/// True for ops whose derivative is zero by convention (masks, stop-gradient).
bool is_zero_derivative(Op op) noexcept;

class Graph;

/// Lightweight handle to a node of a Graph.
class Var {
public:
    Var() = default;
    Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

    [[nodiscard]] Graph& graph() const { return *graph_; }
    [[nodiscard]] NodeId id() const noexcept { return id_; }
    [[nodiscard]] bool valid() const noexcept { return graph_ != nullptr; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Shape& shape() const;

private:
    Graph* graph_ = nullptr;
    NodeId id_ = 0;
};

/// Gradients of one scalar with respect to a list of leaves.
struct GradResult {
    std::vector<NodeId> wrt;
    std::vector<Var> grads;

    [[nodiscard]] const Tensor& value(std::size_t i) const { return grads.at(i).value(); }
};

using LeafBindings = std::vector<std::pair<Var, Tensor>>;

/**
 * Define-by-run computation graph.
 *
 * Every op is evaluated eagerly when it is added and its inputs always precede
 * it, so the node vector is a topological order. backward() appends the
 * adjoint computation to the same graph, which makes gradients themselves
 * differentiable (double backpropagation). forward() re-executes the recorded
 * nodes with new leaf values.
 */
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor value, std::string name = {});
    Var constant(Tensor value);

    /// Re-run every recorded node with the given leaf values and return `output`.
    const Tensor& forward(const LeafBindings& bindings, Var output);

    /**
     * Reverse-mode gradient of the scalar `output` with respect to `wrt`.
     *
     * With create_graph=false the returned gradients are wrapped in Detach
     * nodes; differentiating through them later is an error.
     */
    GradResult backward(Var output, const std::vector<Var>& wrt, bool create_graph = true);

    [[nodiscard]] const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    [[nodiscard]] Op op(NodeId id) const { return nodes_.at(id).op; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    /// True if a Detach node with a differentiable input lies upstream of `v`.
    [[nodiscard]] bool passes_detach(Var v) const { return nodes_.at(v.id()).tainted; }

    // Node constructors used by the free functions below.
    Var unary(Op op, Var a, double p0 = 0.0, double p1 = 0.0);
    Var binary(Op op, Var a, Var b);
    Var reshape_op(Op op, Var a, std::size_t offset, Shape shape);

private:
    struct Node {
        Op op = Op::Constant;
        NodeId in0 = 0;
        NodeId in1 = 0;
        std::uint8_t arity = 0;
        double p0 = 0.0;
        double p1 = 0.0;
        std::size_t offset = 0;
        Shape target{};
        bool depends_on_leaf = false;
        bool tainted = false;
        std::string name;
        Tensor value;
    };

    Var push(Node node);
    void evaluate(Node& node) const;
    void check_finite(const Node& node, NodeId id) const;
    Var check(Var v) const;

    std::vector<Node> nodes_;
};

// Graph operations. All operands must belong to the same graph.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
/// x (n x m) + b (1 x m) broadcast over rows.
Var add_bias(Var x, Var b);
Var broadcast_rows(Var a, std::size_t rows);
Var sum_rows(Var a);
Var broadcast_cols(Var a, std::size_t cols);
Var sum_cols(Var a);
Var sum(Var a);
Var mean(Var a);
Var broadcast_scalar(Var a, Shape shape);
Var inner(Var a, Var b);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var step(Var a);
Var log(Var a);
Var exp(Var a);
Var square(Var a);
Var reciprocal(Var a);
Var clamp(Var a, double lo, double hi);
Var in_range(Var a, double lo, double hi);
/// Per-row maximum, treated as a constant when differentiating.
Var row_max(Var a);
/// Contiguous range of the flattened data of `a`, reshaped to `shape`.
Var slice(Var a, std::size_t offset, Shape shape);
/// Zero tensor of `shape` with the flattened `a` written at `offset`.
Var embed(Var a, std::size_t offset, Shape shape);
/// Flattened a followed by flattened b, as a column vector.
Var concat(Var a, Var b);
Var detach(Var a);

}  // namespace ganinf::ad
