#include "ganinf/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ganinf/errors.hpp"

namespace ganinf::ad {

std::string_view op_name(Op op) noexcept
{
    switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::SumRows: return "sum_rows";
    case Op::BroadcastCols: return "broadcast_cols";
    case Op::SumCols: return "sum_cols";
    case Op::Sum: return "sum";
    case Op::BroadcastScalar: return "broadcast_scalar";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::Step: return "step";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Square: return "square";
    case Op::Reciprocal: return "reciprocal";
    case Op::Clamp: return "clamp";
    case Op::InRange: return "in_range";
    case Op::RowMax: return "row_max";
    case Op::Slice: return "slice";
    case Op::Embed: return "embed";
    case Op::Concat: return "concat";
    case Op::Detach: return "detach";
    }
    return "unknown";
}

bool is_zero_derivative(Op op) noexcept
{
    return op == Op::Constant || op == Op::Step || op == Op::InRange || op == Op::RowMax ||
           op == Op::Detach;
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Shape& Var::shape() const { return graph_->value(id_).shape(); }

namespace {

[[noreturn]] void shape_fail(Op op, const std::string& detail)
{
    throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

void require_same(Op op, const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        shape_fail(op, "operand shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                           " differ");
    }
}

template <typename F>
Tensor map_unary(const Tensor& a, F f)
{
    Tensor out(a.shape());
    const auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
    return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f)
{
    Tensor out(a.shape());
    const auto x = a.data();
    const auto y = b.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
    return out;
}

double stable_sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var Graph::check(Var v) const
{
    if (!v.valid() || &v.graph() != this || v.id() >= nodes_.size()) {
        throw std::invalid_argument("variable does not belong to this graph");
    }
    return v;
}

Var Graph::push(Node node)
{
    const auto id = static_cast<NodeId>(nodes_.size());
    if (node.op != Op::Leaf && node.op != Op::Constant) {
        evaluate(node);
    }
    check_finite(node, id);
    nodes_.push_back(std::move(node));
    return {this, id};
}

void Graph::check_finite(const Node& node, NodeId id) const
{
    if (!node.value.all_finite()) {
        std::string what = "non-finite value produced by " + std::string(op_name(node.op)) +
                           " node #" + std::to_string(id);
        if (!node.name.empty()) what += " '" + node.name + "'";
        if (node.arity > 0) {
            what += " (input #" + std::to_string(node.in0) + " " +
                    std::string(op_name(nodes_[node.in0].op)) + ")";
        }
        throw NumericalError(what);
    }
}

Var Graph::leaf(Tensor value, std::string name)
{
    Node n;
    n.op = Op::Leaf;
    n.depends_on_leaf = true;
    n.name = std::move(name);
    n.value = std::move(value);
    return push(std::move(n));
}

Var Graph::constant(Tensor value)
{
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Graph::unary(Op op, Var a, double p0, double p1)
{
    check(a);
    Node n;
    n.op = op;
    n.in0 = a.id();
    n.arity = 1;
    n.p0 = p0;
    n.p1 = p1;
    const Node& in = nodes_[a.id()];
    n.depends_on_leaf = !is_zero_derivative(op) && in.depends_on_leaf;
    n.tainted = in.tainted || (op == Op::Detach && in.depends_on_leaf);
    return push(std::move(n));
}

Var Graph::binary(Op op, Var a, Var b)
{
    check(a);
    check(b);
    Node n;
    n.op = op;
    n.in0 = a.id();
    n.in1 = b.id();
    n.arity = 2;
    const Node& x = nodes_[a.id()];
    const Node& y = nodes_[b.id()];
    n.depends_on_leaf = x.depends_on_leaf || y.depends_on_leaf;
    n.tainted = x.tainted || y.tainted;
    return push(std::move(n));
}

Var Graph::reshape_op(Op op, Var a, std::size_t offset, Shape shape)
{
    check(a);
    Node n;
    n.op = op;
    n.in0 = a.id();
    n.arity = 1;
    n.offset = offset;
    n.target = shape;
    const Node& in = nodes_[a.id()];
    n.depends_on_leaf = !is_zero_derivative(op) && in.depends_on_leaf;
    n.tainted = in.tainted;
    return push(std::move(n));
}

void Graph::evaluate(Node& node) const
{
    const Tensor& a = nodes_[node.in0].value;
    switch (node.op) {
    case Op::Leaf:
    case Op::Constant:
        return;
    case Op::MatMul: {
        const Tensor& b = nodes_[node.in1].value;
        if (a.cols() != b.rows()) {
            shape_fail(node.op, "cannot multiply " + to_string(a.shape()) + " by " +
                                    to_string(b.shape()));
        }
        Tensor out({a.rows(), b.cols()});
        const std::size_t inner_dim = a.cols();
        const std::size_t cols = b.cols();
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double* dst = &out(i, 0);
            for (std::size_t p = 0; p < inner_dim; ++p) {
                const double s = a(i, p);
                if (s == 0.0) continue;
                const double* src = &b.data()[p * cols];
                for (std::size_t j = 0; j < cols; ++j) dst[j] += s * src[j];
            }
        }
        node.value = std::move(out);
        return;
    }
    case Op::Transpose: {
        Tensor out({a.cols(), a.rows()});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
        node.value = std::move(out);
        return;
    }
    case Op::Add:
        require_same(node.op, a, nodes_[node.in1].value);
        node.value = map_binary(a, nodes_[node.in1].value, [](double x, double y) { return x + y; });
        return;
    case Op::Sub:
        require_same(node.op, a, nodes_[node.in1].value);
        node.value = map_binary(a, nodes_[node.in1].value, [](double x, double y) { return x - y; });
        return;
    case Op::Mul:
        require_same(node.op, a, nodes_[node.in1].value);
        node.value = map_binary(a, nodes_[node.in1].value, [](double x, double y) { return x * y; });
        return;
    case Op::Scale: {
        const double c = node.p0;
        node.value = map_unary(a, [c](double x) { return c * x; });
        return;
    }
    case Op::AddScalar: {
        const double c = node.p0;
        node.value = map_unary(a, [c](double x) { return x + c; });
        return;
    }
    case Op::BroadcastRows: {
        if (a.rows() != 1) shape_fail(node.op, "expects a 1 x m input, got " + to_string(a.shape()));
        Tensor out({node.target.rows, a.cols()});
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(0, j);
        node.value = std::move(out);
        return;
    }
    case Op::SumRows: {
        Tensor out({1, a.cols()});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += a(i, j);
        node.value = std::move(out);
        return;
    }
    case Op::BroadcastCols: {
        if (a.cols() != 1) shape_fail(node.op, "expects an n x 1 input, got " + to_string(a.shape()));
        Tensor out({a.rows(), node.target.cols});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = a(i, 0);
        node.value = std::move(out);
        return;
    }
    case Op::SumCols: {
        Tensor out({a.rows(), 1});
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
            out(i, 0) = s;
        }
        node.value = std::move(out);
        return;
    }
    case Op::Sum: {
        double s = 0.0;
        for (double v : a.data()) s += v;
        node.value = Tensor::scalar(s);
        return;
    }
    case Op::BroadcastScalar:
        if (a.size() != 1) shape_fail(node.op, "expects a scalar input, got " + to_string(a.shape()));
        node.value = Tensor(node.target, a[0]);
        return;
    case Op::Sigmoid:
        node.value = map_unary(a, stable_sigmoid);
        return;
    case Op::Tanh:
        node.value = map_unary(a, [](double x) { return std::tanh(x); });
        return;
    case Op::Relu:
        node.value = map_unary(a, [](double x) { return x > 0.0 ? x : 0.0; });
        return;
    case Op::Step:
        node.value = map_unary(a, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
        return;
    case Op::Log:
        node.value = map_unary(a, [](double x) { return std::log(x); });
        return;
    case Op::Exp:
        node.value = map_unary(a, [](double x) { return std::exp(x); });
        return;
    case Op::Square:
        node.value = map_unary(a, [](double x) { return x * x; });
        return;
    case Op::Reciprocal:
        node.value = map_unary(a, [](double x) { return 1.0 / x; });
        return;
    case Op::Clamp: {
        const double lo = node.p0;
        const double hi = node.p1;
        node.value = map_unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); });
        return;
    }
    case Op::InRange: {
        const double lo = node.p0;
        const double hi = node.p1;
        node.value = map_unary(a, [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
        return;
    }
    case Op::RowMax: {
        if (a.cols() == 0) shape_fail(node.op, "empty rows");
        Tensor out({a.rows(), 1});
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double m = a(i, 0);
            for (std::size_t j = 1; j < a.cols(); ++j) m = std::max(m, a(i, j));
            out(i, 0) = m;
        }
        node.value = std::move(out);
        return;
    }
    case Op::Slice: {
        if (node.offset + node.target.size() > a.size()) {
            shape_fail(node.op, "range [" + std::to_string(node.offset) + ", " +
                                    std::to_string(node.offset + node.target.size()) +
                                    ") exceeds input of size " + std::to_string(a.size()));
        }
        const auto src = a.data().subspan(node.offset, node.target.size());
        node.value = Tensor(node.target, std::vector<double>(src.begin(), src.end()));
        return;
    }
    case Op::Embed: {
        if (node.offset + a.size() > node.target.size()) {
            shape_fail(node.op, "input of size " + std::to_string(a.size()) + " at offset " +
                                    std::to_string(node.offset) + " exceeds " +
                                    to_string(node.target));
        }
        Tensor out(node.target);
        std::copy(a.data().begin(), a.data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(node.offset));
        node.value = std::move(out);
        return;
    }
    case Op::Concat: {
        const Tensor& b = nodes_[node.in1].value;
        Tensor out({a.size() + b.size(), 1});
        std::copy(a.data().begin(), a.data().end(), out.data().begin());
        std::copy(b.data().begin(), b.data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
        node.value = std::move(out);
        return;
    }
    case Op::Detach:
        node.value = a;
        return;
    }
}

const Tensor& Graph::forward(const LeafBindings& bindings, Var output)
{
    check(output);
    std::vector<bool> bound(nodes_.size(), false);
    for (const auto& [var, value] : bindings) {
        check(var);
        Node& n = nodes_[var.id()];
        if (n.op != Op::Leaf) {
            throw std::invalid_argument("binding targets node #" + std::to_string(var.id()) +
                                        " which is not a leaf");
        }
        if (n.value.shape() != value.shape()) {
            throw ShapeError("binding for leaf #" + std::to_string(var.id()) + " has shape " +
                             to_string(value.shape()) + ", expected " + to_string(n.value.shape()));
        }
        n.value = value;
        check_finite(n, var.id());
        bound[var.id()] = true;
    }
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        Node& n = nodes_[id];
        if (n.op == Op::Leaf) {
            if (!bound[id]) {
                throw std::invalid_argument("leaf #" + std::to_string(id) + " '" + n.name +
                                            "' has no binding");
            }
            continue;
        }
        if (n.op == Op::Constant) continue;
        evaluate(n);
        check_finite(n, id);
    }
    return nodes_[output.id()].value;
}

GradResult Graph::backward(Var output, const std::vector<Var>& wrt, bool create_graph)
{
    check(output);
    if (output.value().size() != 1) {
        throw ShapeError("backward needs a scalar output, got " + to_string(output.shape()));
    }
    const NodeId out = output.id();
    std::vector<bool> needs(static_cast<std::size_t>(out) + 1, false);
    for (const Var& w : wrt) {
        check(w);
        if (nodes_[w.id()].op != Op::Leaf) {
            throw std::invalid_argument("gradient requested for node #" + std::to_string(w.id()) +
                                        " which is not a leaf");
        }
        if (w.id() <= out) needs[w.id()] = true;
    }
    for (NodeId id = 0; id <= out; ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::Leaf || is_zero_derivative(n.op)) continue;
        if (!n.depends_on_leaf) continue;
        bool any = needs[n.in0];
        if (n.arity == 2) any = any || needs[n.in1];
        needs[id] = any;
    }

    std::vector<Var> adj(static_cast<std::size_t>(out) + 1);
    auto accumulate = [&adj](NodeId target, Var contribution) {
        adj[target] = adj[target].valid() ? adj[target] + contribution : contribution;
    };

    if (needs[out]) adj[out] = constant(Tensor::scalar(1.0));

    for (NodeId id = out + 1; id-- > 0;) {
        if (!needs[id] || !adj[id].valid()) continue;
        // Copy what we need: pushing nodes may reallocate nodes_.
        const Op op = nodes_[id].op;
        if (op == Op::Leaf) continue;
        const NodeId i0 = nodes_[id].in0;
        const NodeId i1 = nodes_[id].in1;
        const double p0 = nodes_[id].p0;
        const double p1 = nodes_[id].p1;
        const std::size_t offset = nodes_[id].offset;
        const Var gy = adj[id];
        const Var a{this, i0};
        const Var b{this, i1};
        const Var y{this, id};
        const bool na = needs[i0];
        const bool nb = nodes_[id].arity == 2 && needs[i1];

        switch (op) {
        case Op::Leaf:
        case Op::Constant:
        case Op::Step:
        case Op::InRange:
        case Op::RowMax:
        case Op::Detach:
            break;
        case Op::MatMul:
            if (na) accumulate(i0, matmul(gy, transpose(b)));
            if (nb) accumulate(i1, matmul(transpose(a), gy));
            break;
        case Op::Transpose:
            accumulate(i0, transpose(gy));
            break;
        case Op::Add:
            if (na) accumulate(i0, gy);
            if (nb) accumulate(i1, gy);
            break;
        case Op::Sub:
            if (na) accumulate(i0, gy);
            if (nb) accumulate(i1, -gy);
            break;
        case Op::Mul:
            if (na) accumulate(i0, gy * b);
            if (nb) accumulate(i1, gy * a);
            break;
        case Op::Scale:
            accumulate(i0, scale(gy, p0));
            break;
        case Op::AddScalar:
            accumulate(i0, gy);
            break;
        case Op::BroadcastRows:
            accumulate(i0, sum_rows(gy));
            break;
        case Op::SumRows:
            accumulate(i0, broadcast_rows(gy, a.shape().rows));
            break;
        case Op::BroadcastCols:
            accumulate(i0, sum_cols(gy));
            break;
        case Op::SumCols:
            accumulate(i0, broadcast_cols(gy, a.shape().cols));
            break;
        case Op::Sum:
            accumulate(i0, broadcast_scalar(gy, a.shape()));
            break;
        case Op::BroadcastScalar:
            accumulate(i0, sum(gy));
            break;
        case Op::Sigmoid:
            accumulate(i0, gy * (y - square(y)));
            break;
        case Op::Tanh:
            accumulate(i0, gy * add_scalar(-square(y), 1.0));
            break;
        case Op::Relu:
            accumulate(i0, gy * step(a));
            break;
        case Op::Log:
            accumulate(i0, gy * reciprocal(a));
            break;
        case Op::Exp:
            accumulate(i0, gy * y);
            break;
        case Op::Square:
            accumulate(i0, scale(gy * a, 2.0));
            break;
        case Op::Reciprocal:
            accumulate(i0, -(gy * square(y)));
            break;
        case Op::Clamp:
            accumulate(i0, gy * in_range(a, p0, p1));
            break;
        case Op::Slice:
            accumulate(i0, embed(gy, offset, a.shape()));
            break;
        case Op::Embed:
            accumulate(i0, slice(gy, offset, a.shape()));
            break;
        case Op::Concat: {
            const Shape sa = a.shape();
            const Shape sb = b.shape();
            if (na) accumulate(i0, slice(gy, 0, sa));
            if (nb) accumulate(i1, slice(gy, sa.size(), sb));
            break;
        }
        }
    }

    GradResult result;
    for (const Var& w : wrt) {
        Var g = (w.id() <= out && adj[w.id()].valid()) ? adj[w.id()]
                                                         : constant(Tensor(w.shape()));
        if (!create_graph) g = detach(g);
        result.wrt.push_back(w.id());
        result.grads.push_back(g);
    }
    return result;
}

// Free functions -------------------------------------------------------------

Var matmul(Var a, Var b) { return a.graph().binary(Op::MatMul, a, b); }
Var transpose(Var a) { return a.graph().unary(Op::Transpose, a); }
Var operator+(Var a, Var b) { return a.graph().binary(Op::Add, a, b); }
Var operator-(Var a, Var b) { return a.graph().binary(Op::Sub, a, b); }
Var operator*(Var a, Var b) { return a.graph().binary(Op::Mul, a, b); }
Var operator-(Var a) { return scale(a, -1.0); }
Var scale(Var a, double c) { return a.graph().unary(Op::Scale, a, c); }
Var add_scalar(Var a, double c) { return a.graph().unary(Op::AddScalar, a, c); }

Var add_bias(Var x, Var b)
{
    if (b.shape().rows != 1 || b.shape().cols != x.shape().cols) {
        throw ShapeError("add_bias: bias " + to_string(b.shape()) + " does not fit " +
                         to_string(x.shape()));
    }
    return x + broadcast_rows(b, x.shape().rows);
}

Var broadcast_rows(Var a, std::size_t rows)
{
    return a.graph().reshape_op(Op::BroadcastRows, a, 0, {rows, a.shape().cols});
}
Var sum_rows(Var a) { return a.graph().unary(Op::SumRows, a); }
Var broadcast_cols(Var a, std::size_t cols)
{
    return a.graph().reshape_op(Op::BroadcastCols, a, 0, {a.shape().rows, cols});
}
Var sum_cols(Var a) { return a.graph().unary(Op::SumCols, a); }
Var sum(Var a) { return a.graph().unary(Op::Sum, a); }

Var mean(Var a)
{
    const auto n = a.shape().size();
    if (n == 0) throw ShapeError("mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var broadcast_scalar(Var a, Shape shape)
{
    return a.graph().reshape_op(Op::BroadcastScalar, a, 0, shape);
}
Var inner(Var a, Var b) { return sum(a * b); }
Var sigmoid(Var a) { return a.graph().unary(Op::Sigmoid, a); }
Var tanh(Var a) { return a.graph().unary(Op::Tanh, a); }
Var relu(Var a) { return a.graph().unary(Op::Relu, a); }
Var step(Var a) { return a.graph().unary(Op::Step, a); }
Var log(Var a) { return a.graph().unary(Op::Log, a); }
Var exp(Var a) { return a.graph().unary(Op::Exp, a); }
Var square(Var a) { return a.graph().unary(Op::Square, a); }
Var reciprocal(Var a) { return a.graph().unary(Op::Reciprocal, a); }
Var clamp(Var a, double lo, double hi) { return a.graph().unary(Op::Clamp, a, lo, hi); }
Var in_range(Var a, double lo, double hi) { return a.graph().unary(Op::InRange, a, lo, hi); }
Var row_max(Var a) { return a.graph().unary(Op::RowMax, a); }
Var slice(Var a, std::size_t offset, Shape shape)
{
    return a.graph().reshape_op(Op::Slice, a, offset, shape);
}
Var embed(Var a, std::size_t offset, Shape shape)
{
    return a.graph().reshape_op(Op::Embed, a, offset, shape);
}
Var concat(Var a, Var b) { return a.graph().binary(Op::Concat, a, b); }
Var detach(Var a) { return a.graph().unary(Op::Detach, a); }

}  // namespace ganinf::ad
