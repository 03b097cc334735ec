#include "ganinf/influence/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>

#include "ganinf/errors.hpp"
#include "ganinf/train/hashing.hpp"

namespace ganinf {

namespace {

// Neumaier's variant of Kahan summation.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x)
    {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    [[nodiscard]] double value() const { return sum + carry; }
};

double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

GanTraceSource::GanTraceSource(const TrainingTrace& trace, const ad::Tensor& dataset)
    : trace_(trace), dataset_(dataset), model_(trace.architecture)
{
    if (dataset.rows() != trace.dataset_size) {
        throw TraceError("trace was recorded on " + std::to_string(trace.dataset_size) + " instances, dataset has " +
                         std::to_string(dataset.rows()));
    }
}

ad::GradientFn GanTraceSource::gradient(std::size_t t) const
{
    const auto& rec = trace_.records.at(t);
    auto batch = std::make_shared<MiniBatch>(
        assemble_batch(dataset_, rec.indices, rec.z_seed, trace_.architecture.latent_dim));
    const GanModel* model = &model_;
    return [model, batch](ad::Graph&, ad::Var theta) { return model->joint_gradient(theta, *batch); };
}

std::vector<double> GanTraceSource::removal_derivatives(std::size_t t, std::span<const std::uint32_t> ids,
                                                        std::span<const double> u_d) const
{
    return model_.removal_directional_derivatives(theta(t), dataset_.gather_rows(ids), u_d);
}

std::vector<double> GanTraceSource::removal_gradient(std::size_t t, std::uint32_t id) const
{
    return model_.remove_term_gradient(dataset_.row(id).data(), theta(t));
}

double InfluenceTable::score_of(std::uint32_t index) const
{
    auto it = std::find(indices.begin(), indices.end(), index);
    if (it == indices.end()) throw std::out_of_range("instance " + std::to_string(index) + " is not in the table");
    return scores[static_cast<std::size_t>(it - indices.begin())];
}

void InfluenceTable::write_csv(const std::filesystem::path& file) const
{
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "index,score\n" << std::setprecision(17);
    for (std::size_t i = 0; i < indices.size(); ++i) out << indices[i] << ',' << scores[i] << '\n';
}

nlohmann::json InfluenceTable::to_json() const
{
    return {{"metric", metric},
            {"k_epochs", k_epochs},
            {"window_start", window_start},
            {"query_fingerprint", query_fingerprint},
            {"trace_fingerprint", trace_fingerprint},
            {"indices", indices},
            {"scores", scores}};
}

InfluenceTable InfluenceTable::from_json(const nlohmann::json& j)
{
    InfluenceTable t;
    t.metric = j.at("metric").get<std::string>();
    t.k_epochs = j.at("k_epochs").get<std::size_t>();
    t.window_start = j.at("window_start").get<std::size_t>();
    t.query_fingerprint = j.at("query_fingerprint").get<std::string>();
    t.trace_fingerprint = j.at("trace_fingerprint").get<std::string>();
    t.indices = j.at("indices").get<std::vector<std::uint32_t>>();
    t.scores = j.at("scores").get<std::vector<double>>();
    if (t.indices.size() != t.scores.size()) throw std::invalid_argument("influence table columns differ in length");
    return t;
}

std::string query_fingerprint(std::span<const double> u)
{
    Sha256 h;
    h.update_u64(u.size());
    h.update_f64(u);
    return h.hex_digest();
}

std::vector<std::uint32_t> all_indices(std::size_t n)
{
    std::vector<std::uint32_t> out(n);
    std::iota(out.begin(), out.end(), 0u);
    return out;
}

std::vector<double> propagate_query(std::span<const double> u, const ad::GradientFn& grad, std::span<const double> theta,
                                    std::size_t generator_size, double lr_generator, double lr_discriminator)
{
    if (u.size() != theta.size()) {
        throw ShapeError("query has " + std::to_string(u.size()) + " entries, parameters have " +
                         std::to_string(theta.size()));
    }
    std::vector<double> scaled(u.begin(), u.end());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= i < generator_size ? lr_generator : lr_discriminator;
    const auto bj = ad::vjp_of_gradient(scaled, grad, theta);
    std::vector<double> out(u.begin(), u.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bj[i];
    return out;
}

std::vector<double> propagate_query(std::span<const double> u, const StepSource& source, std::size_t t)
{
    return propagate_query(u, source.gradient(t), source.theta(t), source.generator_size(), source.lr_generator(t),
                           source.lr_discriminator(t));
}

InfluenceTable infer_linear_influence_window(const StepSource& source, std::span<const double> u0,
                                             std::span<const std::uint32_t> targets, std::size_t window_start)
{
    const std::size_t d = source.parameter_count();
    const std::size_t dg = source.generator_size();
    if (u0.size() != d) {
        throw ShapeError("query has " + std::to_string(u0.size()) + " entries, trace parameters have " +
                         std::to_string(d));
    }
    if (!std::all_of(u0.begin(), u0.end(), [](double x) { return std::isfinite(x); })) {
        throw std::invalid_argument("query vector is not finite");
    }
    if (window_start > source.steps()) throw std::invalid_argument("window starts after the last step");
    const std::size_t n = source.instance_count();

    // slot[i]: accumulator for instance i, or -1 if i is not a target.
    std::vector<std::int64_t> slot(n, -1);
    std::vector<std::uint32_t> unique;
    for (auto j : targets) {
        if (j >= n) throw std::invalid_argument("target " + std::to_string(j) + " is outside the dataset");
        if (slot[j] < 0) {
            slot[j] = static_cast<std::int64_t>(unique.size());
            unique.push_back(j);
        }
    }
    std::vector<CompensatedSum> acc(unique.size());

    std::vector<double> u(u0.begin(), u0.end());
    std::vector<std::uint32_t> hit_ids;
    std::vector<std::size_t> hit_slots;
    for (std::size_t t = source.steps(); t-- > window_start;) {
        const double lr_d = source.lr_discriminator(t);
        const auto members = source.members(t);
        hit_ids.clear();
        hit_slots.clear();
        for (auto i : members) {
            if (slot[i] >= 0) {
                hit_ids.push_back(i);
                hit_slots.push_back(static_cast<std::size_t>(slot[i]));
            }
        }
        if (!hit_ids.empty() && lr_d != 0.0) {
            const auto dots = source.removal_derivatives(t, hit_ids, std::span<const double>(u).subspan(dg));
            const double factor = lr_d / static_cast<double>(members.size());
            for (std::size_t h = 0; h < hit_ids.size(); ++h) acc[hit_slots[h]].add(factor * dots[h]);
        }
        u = propagate_query(u, source, t);
        if (!std::all_of(u.begin(), u.end(), [](double x) { return std::isfinite(x); })) {
            throw NumericalError("query vector became non-finite while propagating through step " + std::to_string(t));
        }
    }

    InfluenceTable table;
    table.window_start = window_start;
    table.query_fingerprint = query_fingerprint(u0);
    table.indices.assign(targets.begin(), targets.end());
    table.scores.reserve(targets.size());
    for (auto j : targets) table.scores.push_back(acc[static_cast<std::size_t>(slot[j])].value());
    return table;
}

InfluenceTable infer_linear_influence(const TrainingTrace& trace, const ad::Tensor& dataset, std::span<const double> u,
                                      std::span<const std::uint32_t> targets, std::size_t k_epochs, std::string metric)
{
    GanTraceSource source(trace, dataset);
    auto table = infer_linear_influence_window(source, u, targets, trace.window_start(k_epochs));
    table.metric = std::move(metric);
    table.k_epochs = k_epochs;
    table.trace_fingerprint = trace.fingerprint;
    return table;
}

CrossBlockReport cross_block_transfer(const ad::GradientFn& grad, std::span<const double> theta,
                                      std::size_t generator_size, double lr_generator, double lr_discriminator,
                                      std::span<const double> v_d)
{
    if (v_d.size() + generator_size != theta.size()) {
        throw ShapeError("discriminator direction has " + std::to_string(v_d.size()) + " entries, expected " +
                         std::to_string(theta.size() - generator_size));
    }
    std::vector<double> v(theta.size(), 0.0);
    std::copy(v_d.begin(), v_d.end(), v.begin() + static_cast<std::ptrdiff_t>(generator_size));
    const auto jv = ad::jvp_of_gradient(v, grad, theta);
    CrossBlockReport r;
    r.input_norm = norm2(v_d);
    r.output = v;
    for (std::size_t i = 0; i < v.size(); ++i) r.output[i] -= (i < generator_size ? lr_generator : lr_discriminator) * jv[i];
    const std::span<const double> out(r.output);
    r.generator_block_norm = norm2(out.first(generator_size));
    r.discriminator_block_norm = norm2(out.subspan(generator_size));
    return r;
}

CrossBlockReport cross_block_transfer_check(const StepSource& source, std::size_t t, std::span<const double> v_d)
{
    if (t >= source.steps()) throw std::invalid_argument("step " + std::to_string(t) + " is not in the trace");
    auto r = cross_block_transfer(source.gradient(t), source.theta(t), source.generator_size(), source.lr_generator(t),
                                  source.lr_discriminator(t), v_d);
    r.step = t;
    return r;
}

}  // namespace ganinf
