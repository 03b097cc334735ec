#include "ganinf/metrics/evaluation.hpp"

#include <cctype>
#include <cmath>

#include "ganinf/errors.hpp"
#include "ganinf/metrics/frechet.hpp"
#include "ganinf/metrics/inception.hpp"
#include "ganinf/metrics/kde.hpp"

namespace ganinf {

using ad::Tensor;
using ad::Var;

std::string to_string(MetricKind k)
{
    switch (k) {
    case MetricKind::ALL: return "ALL";
    case MetricKind::IS: return "IS";
    case MetricKind::FID: return "FID";
    case MetricKind::DISC_LOSS: return "DISC_LOSS";
    }
    return "ALL";
}

MetricKind parse_metric_kind(std::string_view name)
{
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "ALL") return MetricKind::ALL;
    if (s == "IS") return MetricKind::IS;
    if (s == "FID") return MetricKind::FID;
    if (s == "DISC_LOSS" || s == "DISC-LOSS" || s == "DISCLOSS") return MetricKind::DISC_LOSS;
    throw ConfigError("unknown metric '" + std::string(name) + "'");
}

int MetricSpec::harmful_sign() const noexcept
{
    return kind == MetricKind::ALL || kind == MetricKind::IS ? 1 : -1;
}

int MetricSpec::better_sign() const noexcept { return kind == MetricKind::FID ? -1 : 1; }

void MetricSpec::validate() const
{
    if (kind == MetricKind::ALL && (!(bandwidth > 0.0) || !std::isfinite(bandwidth))) {
        throw ConfigError("ALL bandwidth must be positive");
    }
}

double harmfulness(const MetricSpec& spec, double score) noexcept { return spec.harmful_sign() * score; }

namespace {

const Tensor& need_reference(const MetricContext& ctx, const MetricSpec& spec)
{
    if (!ctx.reference) throw std::invalid_argument(spec.name() + " needs reference data");
    return *ctx.reference;
}

const Classifier& need_classifier(const MetricContext& ctx)
{
    if (!ctx.classifier) throw std::invalid_argument("IS needs a classifier");
    return *ctx.classifier;
}

Tensor fid_features(const MetricContext& ctx, const Tensor& x)
{
    return ctx.classifier ? ctx.classifier->features(x) : x;
}

}  // namespace

double evaluate_on_samples(const MetricSpec& spec, const Tensor& generated, const MetricContext& ctx)
{
    switch (spec.kind) {
    case MetricKind::ALL: return average_log_likelihood(need_reference(ctx, spec), generated, spec.bandwidth);
    case MetricKind::IS: return inception_score(generated, need_classifier(ctx));
    case MetricKind::FID:
        return fid(fid_features(ctx, need_reference(ctx, spec)), fid_features(ctx, generated));
    case MetricKind::DISC_LOSS: break;
    }
    throw std::invalid_argument("DISC_LOSS is a function of the parameters, not of generated samples alone");
}

Tensor metric_gradient_wrt_generated(const MetricSpec& spec, const Tensor& generated, const MetricContext& ctx)
{
    switch (spec.kind) {
    case MetricKind::ALL:
        return average_log_likelihood_gradient(need_reference(ctx, spec), generated, spec.bandwidth);
    case MetricKind::IS: return inception_score_gradient(generated, need_classifier(ctx));
    case MetricKind::FID: {
        const auto& ref = need_reference(ctx, spec);
        if (!ctx.classifier) return fid_gradient(ref, generated);
        const auto& clf = *ctx.classifier;
        const auto df = fid_gradient(clf.features(ref), clf.features(generated));
        ad::Graph g;
        Var x = g.leaf(generated, "generated");
        auto out = clf.build(g.constant(Tensor::column(clf.parameters())), x);
        return g.backward(ad::inner(g.constant(df), out.features), {x}, false).value(0);
    }
    case MetricKind::DISC_LOSS: break;
    }
    throw std::invalid_argument("DISC_LOSS has no per-sample gradient");
}

namespace {

Var disc_loss_graph(const GanModel& model, Var theta, const Tensor& latents, const Tensor& reference)
{
    auto& g = theta.graph();
    Var fake = ad::mean(model.fake_losses(model.discriminate(theta, model.generate(theta, g.constant(latents)))));
    Var real = ad::mean(model.real_losses(model.discriminate(theta, g.constant(reference))));
    return fake + real;
}

}  // namespace

double expected_discriminator_loss(const GanModel& model, std::span<const double> theta, const Tensor& latents,
                                   const Tensor& reference)
{
    if (latents.rows() == 0 || reference.rows() == 0) throw std::invalid_argument("discriminator loss of an empty set");
    ad::Graph g;
    return disc_loss_graph(model, g.constant(Tensor::column(theta)), latents, reference).value().item();
}

double evaluate_metric(const MetricSpec& spec, const GanModel& model, std::span<const double> theta,
                       const Tensor& latents, const MetricContext& ctx)
{
    if (spec.kind == MetricKind::DISC_LOSS) {
        return expected_discriminator_loss(model, theta, latents, need_reference(ctx, spec));
    }
    return evaluate_on_samples(spec, model.generate(theta, latents), ctx);
}

std::vector<double> query_from_sample_gradients(const GanModel& model, std::span<const double> theta,
                                                const Tensor& latents, const Tensor& sample_gradients)
{
    ad::Graph g;
    Var t = g.leaf(Tensor::column(theta), "theta");
    Var gen = model.generate(t, g.constant(latents));
    if (gen.shape() != sample_gradients.shape()) throw ShapeError("sample gradients do not match the generated set");
    auto grad = g.backward(ad::inner(g.constant(sample_gradients), gen), {t}, false).value(0).values();
    std::fill(grad.begin() + static_cast<std::ptrdiff_t>(model.generator_size()), grad.end(), 0.0);
    return grad;
}

std::vector<double> build_query_vector(const MetricSpec& spec, const GanModel& model, std::span<const double> theta,
                                       const Tensor& latents, const MetricContext& ctx)
{
    spec.validate();
    if (latents.rows() == 0) throw std::invalid_argument("query vector needs latent samples");
    if (spec.kind == MetricKind::DISC_LOSS) {
        const auto& ref = need_reference(ctx, spec);
        ad::Graph g;
        Var t = g.leaf(Tensor::column(theta), "theta");
        return g.backward(disc_loss_graph(model, t, latents, ref), {t}, false).value(0).values();
    }
    const auto generated = model.generate(theta, latents);
    return query_from_sample_gradients(model, theta, latents, metric_gradient_wrt_generated(spec, generated, ctx));
}

}  // namespace ganinf
