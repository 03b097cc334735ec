#include "ganinf/gan/model.hpp"

#include <cmath>
#include <random>

#include "ganinf/errors.hpp"

namespace ganinf {

using ad::Tensor;
using ad::Var;

namespace {

Var activate(Var x, Activation a)
{
    switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return ad::relu(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
    }
    return x;
}

// 1 - p
Var complement(Var p) { return ad::add_scalar(-p, 1.0); }

Var clamped(Var p) { return ad::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

GanModel::GanModel(GanArchitecture arch) : arch_(arch)
{
    arch_.validate();
    auto layout = std::make_shared<ParamLayout>();
    auto add_dense = [&layout](Network net, std::size_t layer, std::size_t in, std::size_t out) {
        layout->add(net, layer, ParamKind::Kernel, {in, out});
        layout->add(net, layer, ParamKind::Bias, {1, out});
    };
    if (arch_.gen_hidden > 0) {
        add_dense(Network::Generator, 0, arch_.latent_dim, arch_.gen_hidden);
        add_dense(Network::Generator, 1, arch_.gen_hidden, arch_.data_dim);
        gen_layers_ = 2;
    } else {
        add_dense(Network::Generator, 0, arch_.latent_dim, arch_.data_dim);
        gen_layers_ = 1;
    }
    if (arch_.disc_hidden > 0) {
        add_dense(Network::Discriminator, 0, arch_.data_dim, arch_.disc_hidden);
        add_dense(Network::Discriminator, 1, arch_.disc_hidden, 1);
        disc_layers_ = 2;
    } else {
        add_dense(Network::Discriminator, 0, arch_.data_dim, 1);
        disc_layers_ = 1;
    }
    layout_ = std::move(layout);
}

ParamVector GanModel::initialize(std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    std::vector<double> values(layout_->total_size(), 0.0);
    for (const auto& e : layout_->entries()) {
        if (e.kind != ParamKind::Kernel) continue;
        const double a = std::sqrt(6.0 / static_cast<double>(e.shape.rows + e.shape.cols));
        std::uniform_real_distribution<double> dist(-a, a);
        for (std::size_t i = 0; i < e.size(); ++i) values[e.offset + i] = dist(rng);
    }
    return {layout_, std::move(values)};
}

ParamVector GanModel::wrap(std::vector<double> values) const { return {layout_, std::move(values)}; }

void GanModel::check_theta(std::size_t n) const
{
    if (n != layout_->total_size()) {
        throw ShapeError("parameter vector has " + std::to_string(n) + " entries, model expects " +
                         std::to_string(layout_->total_size()));
    }
}

Var GanModel::dense_stack(Var theta, Var input, Network net) const
{
    const std::size_t layers = net == Network::Generator ? gen_layers_ : disc_layers_;
    Var h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& k = layout_->find(net, l, ParamKind::Kernel);
        const auto& b = layout_->find(net, l, ParamKind::Bias);
        Var pre = ad::add_bias(ad::matmul(h, ad::slice(theta, k.offset, k.shape)),
                               ad::slice(theta, b.offset, b.shape));
        const bool last = l + 1 == layers;
        Activation act;
        if (net == Network::Generator) {
            act = last ? arch_.gen_output_activation : arch_.gen_hidden_activation;
        } else {
            act = last ? Activation::Sigmoid : arch_.disc_hidden_activation;
        }
        h = activate(pre, act);
    }
    return h;
}

Var GanModel::generate(Var theta, Var latents) const
{
    if (latents.shape().cols != arch_.latent_dim) {
        throw ShapeError("latents have " + std::to_string(latents.shape().cols) +
                         " columns, generator expects " + std::to_string(arch_.latent_dim));
    }
    return dense_stack(theta, latents, Network::Generator);
}

Var GanModel::discriminate(Var theta, Var samples) const
{
    if (samples.shape().cols != arch_.data_dim) {
        throw ShapeError("samples have " + std::to_string(samples.shape().cols) +
                         " columns, discriminator expects " + std::to_string(arch_.data_dim));
    }
    return dense_stack(theta, samples, Network::Discriminator);
}

Var GanModel::generator_losses(Var d_fake) const
{
    if (arch_.objective == Objective::NonSaturating) return -d_fake;
    return ad::log(complement(clamped(d_fake)));
}

Var GanModel::fake_losses(Var d_fake) const { return -ad::log(complement(clamped(d_fake))); }

Var GanModel::real_losses(Var d_real) const { return -ad::log(clamped(d_real)); }

Var GanModel::regularizer(Var theta) const
{
    Var total;
    for (const auto& e : layout_->entries()) {
        if (e.kind != ParamKind::Kernel) continue;
        Var term = ad::sum(ad::square(ad::slice(theta, e.offset, e.shape)));
        total = total.valid() ? total + term : term;
    }
    return ad::scale(total, arch_.l2_rate);
}

Var GanModel::joint_gradient(Var theta, const MiniBatch& batch) const
{
    const std::size_t n_latent = batch.latents.rows();
    if (n_latent == 0) throw std::invalid_argument("joint gradient of an empty batch");
    auto& g = theta.graph();
    Var z = g.constant(batch.latents);
    Var d_fake = discriminate(theta, generate(theta, z));

    Var loss_g = ad::mean(generator_losses(d_fake));
    Var data_sum = ad::sum(fake_losses(d_fake));
    if (batch.data.rows() > 0) {
        data_sum = data_sum + ad::sum(real_losses(discriminate(theta, g.constant(batch.data))));
    }
    Var loss_d = ad::scale(data_sum, 1.0 / static_cast<double>(n_latent));
    if (arch_.l2_rate > 0.0) {
        Var reg = regularizer(theta);
        loss_g = loss_g + reg;
        loss_d = loss_d + reg;
    }

    const std::size_t d_g = generator_size();
    const std::size_t d_d = discriminator_size();
    Var grad_g = g.backward(loss_g, {theta}).grads[0];
    Var grad_d = g.backward(loss_d, {theta}).grads[0];
    return ad::concat(ad::slice(grad_g, 0, {d_g, 1}), ad::slice(grad_d, d_g, {d_d, 1}));
}

std::vector<double> GanModel::generator_forward(std::span<const double> theta,
                                                std::span<const double> z) const
{
    return generate(theta, Tensor({1, z.size()}, std::vector<double>(z.begin(), z.end()))).values();
}

Tensor GanModel::generate(std::span<const double> theta, const Tensor& latents) const
{
    check_theta(theta.size());
    ad::Graph g;
    Var t = g.constant(Tensor::column(theta));
    return generate(t, g.constant(latents)).value();
}

Tensor GanModel::discriminate(std::span<const double> theta, const Tensor& samples) const
{
    check_theta(theta.size());
    ad::Graph g;
    Var t = g.constant(Tensor::column(theta));
    return discriminate(t, g.constant(samples)).value();
}

double GanModel::per_sample_loss(LossTerm term, std::span<const double> theta,
                                 std::span<const double> input) const
{
    check_theta(theta.size());
    ad::Graph g;
    Var t = g.constant(Tensor::column(theta));
    Var in = g.constant(Tensor({1, input.size()}, std::vector<double>(input.begin(), input.end())));
    switch (term) {
    case LossTerm::Generator: return generator_losses(discriminate(t, generate(t, in))).value().item();
    case LossTerm::DiscriminatorFake: return fake_losses(discriminate(t, generate(t, in))).value().item();
    case LossTerm::DiscriminatorReal: return real_losses(discriminate(t, in)).value().item();
    }
    return 0.0;
}

std::vector<double> GanModel::joint_gradient(std::span<const double> theta, const MiniBatch& batch) const
{
    check_theta(theta.size());
    ad::Graph g;
    Var t = g.leaf(Tensor::column(theta), "theta");
    return joint_gradient(t, batch).value().values();
}

std::vector<double> GanModel::remove_term_gradient(std::span<const double> x,
                                                   std::span<const double> theta) const
{
    check_theta(theta.size());
    ad::Graph g;
    Var t = g.leaf(Tensor::column(theta), "theta");
    Var in = g.constant(Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end())));
    Var loss = ad::sum(real_losses(discriminate(t, in)));
    Var grad = g.backward(loss, {t}, false).grads[0];
    const auto all = grad.value().data();
    return {all.begin() + static_cast<std::ptrdiff_t>(generator_size()), all.end()};
}

std::vector<double> GanModel::removal_directional_derivatives(std::span<const double> theta,
                                                              const Tensor& data,
                                                              std::span<const double> direction_D) const
{
    check_theta(theta.size());
    if (direction_D.size() != discriminator_size()) {
        throw ShapeError("direction has " + std::to_string(direction_D.size()) +
                         " entries, discriminator block has " + std::to_string(discriminator_size()));
    }
    if (data.rows() == 0) return {};
    ad::Graph g;
    Var t = g.leaf(Tensor::column(theta), "theta");
    Var losses = real_losses(discriminate(t, g.constant(data)));
    // h(w) = sum_i w_i grad f_i is linear in w, so d<v, h(w)>/dw_i = <v, grad f_i>.
    Var w = g.leaf(Tensor(losses.shape(), 1.0), "weights");
    Var h = g.backward(ad::inner(w, losses), {t}).grads[0];
    Var h_d = ad::slice(h, generator_size(), {discriminator_size(), 1});
    Var v = g.constant(Tensor::column(direction_D));
    return g.backward(ad::inner(v, h_d), {w}, false).value(0).values();
}

}  // namespace ganinf
