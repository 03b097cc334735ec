#include "ganinf/metrics/classifier.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "ganinf/errors.hpp"
#include "ganinf/train/schedule.hpp"
#include "ganinf/train/trace_io.hpp"

namespace ganinf {

using ad::Tensor;
using ad::Var;

void ClassifierConfig::validate() const
{
    if (hidden1 == 0 || hidden2 == 0) throw ConfigError("classifier hidden widths must be positive");
    if (batch_size == 0) throw ConfigError("classifier batch size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("classifier learning rate must be positive");
}

Classifier::Classifier(std::size_t input_dim, std::size_t classes, std::size_t hidden1, std::size_t hidden2)
    : input_(input_dim), classes_(classes), hidden1_(hidden1), hidden2_(hidden2)
{
    if (input_dim == 0 || classes < 2 || hidden1 == 0 || hidden2 == 0) {
        throw ConfigError("classifier needs a positive input size, at least two classes and positive widths");
    }
    params_.assign(parameter_count(), 0.0);
}

std::size_t Classifier::parameter_count() const noexcept
{
    return input_ * hidden1_ + hidden1_ + hidden1_ * hidden2_ + hidden2_ + hidden2_ * classes_ + classes_;
}

void Classifier::initialize(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    params_.assign(parameter_count(), 0.0);
    auto fill = [&](std::size_t offset, std::size_t in, std::size_t out) {
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t i = 0; i < in * out; ++i) {
            params_[offset + i] = (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0) * a;
        }
    };
    fill(0, input_, hidden1_);
    fill(input_ * hidden1_ + hidden1_, hidden1_, hidden2_);
}

void Classifier::set_parameters(std::vector<double> params)
{
    if (params.size() != parameter_count()) {
        throw ShapeError("classifier expects " + std::to_string(parameter_count()) + " parameters, got " +
                         std::to_string(params.size()));
    }
    params_ = std::move(params);
}

Classifier::Outputs Classifier::build(Var params, Var input) const
{
    if (input.shape().cols != input_) {
        throw ShapeError("classifier input has " + std::to_string(input.shape().cols) + " columns, expected " +
                         std::to_string(input_));
    }
    std::size_t off = 0;
    auto dense = [&](Var h, std::size_t in, std::size_t out) {
        Var w = ad::slice(params, off, {in, out});
        off += in * out;
        Var b = ad::slice(params, off, {1, out});
        off += out;
        return ad::add_bias(ad::matmul(h, w), b);
    };
    Var h1 = ad::sigmoid(dense(input, input_, hidden1_));
    Var h2 = ad::sigmoid(dense(h1, hidden1_, hidden2_));
    Var logits = dense(h2, hidden2_, classes_);
    Var shifted = logits - ad::broadcast_cols(ad::row_max(logits), classes_);
    Var lse = ad::log(ad::sum_cols(ad::exp(shifted)));
    return {h2, logits, shifted - ad::broadcast_cols(lse, classes_)};
}

Tensor Classifier::posteriors(const Tensor& x) const
{
    ad::Graph g;
    auto out = build(g.constant(Tensor::column(params_)), g.constant(x));
    return ad::exp(out.log_posteriors).value();
}

Tensor Classifier::features(const Tensor& x) const
{
    ad::Graph g;
    return build(g.constant(Tensor::column(params_)), g.constant(x)).features.value();
}

void Classifier::save(const std::filesystem::path& stem) const
{
    auto bin = stem;
    bin += ".bin";
    save_params(bin, params_);
    nlohmann::json m = {{"format", "ganinf-classifier"},
                        {"version", 1},
                        {"input_dim", input_},
                        {"classes", classes_},
                        {"hidden1", hidden1_},
                        {"hidden2", hidden2_},
                        {"feature_layer", "hidden2"},
                        {"parameters", bin.filename().string()}};
    auto js = stem;
    js += ".json";
    std::ofstream out(js, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + js.string());
    out << m.dump(2) << '\n';
}

Classifier Classifier::load(const std::filesystem::path& stem)
{
    auto js = stem;
    js += ".json";
    std::ifstream in(js);
    if (!in) throw TraceError("no classifier manifest at " + js.string());
    try {
        auto m = nlohmann::json::parse(in);
        if (m.at("format") != "ganinf-classifier") throw TraceError("not a classifier manifest");
        Classifier c(m.at("input_dim").get<std::size_t>(), m.at("classes").get<std::size_t>(),
                     m.at("hidden1").get<std::size_t>(), m.at("hidden2").get<std::size_t>());
        c.set_parameters(load_params(stem.parent_path() / m.at("parameters").get<std::string>()));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(std::string("malformed classifier manifest: ") + e.what());
    } catch (const ShapeError& e) {
        throw TraceError(std::string("classifier parameters do not match the manifest: ") + e.what());
    }
}

double classifier_accuracy(const Classifier& clf, const Tensor& x, std::span<const std::uint32_t> labels)
{
    if (labels.size() != x.rows()) throw ShapeError("label count differs from sample count");
    if (labels.empty()) return 0.0;
    const auto p = clf.posteriors(x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.cols(); ++c)
            if (p(i, c) > p(i, best)) best = c;
        if (best == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

TrainedClassifier train_classifier(const Tensor& x, std::span<const std::uint32_t> labels, std::size_t classes,
                                   const ClassifierConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    if (x.rows() == 0) throw std::invalid_argument("classifier training set is empty");
    if (labels.size() != x.rows()) throw ShapeError("label count differs from sample count");
    for (auto l : labels) {
        if (l >= classes) throw std::invalid_argument("label " + std::to_string(l) + " outside 0.." + std::to_string(classes - 1));
    }
    Classifier clf(x.cols(), classes, cfg.hidden1, cfg.hidden2);
    clf.initialize(derive_seed(seed, SeedStream::Init, 0));
    std::vector<double> params(clf.parameters().begin(), clf.parameters().end());

    const std::size_t batch = std::min(cfg.batch_size, x.rows());
    const auto schedule = cfg.epochs == 0 ? std::vector<IndexBatch>{}
                                          : minibatch_schedule(x.rows(), batch, cfg.epochs, seed);
    for (const auto& idx : schedule) {
        Tensor onehot({idx.size(), classes});
        for (std::size_t r = 0; r < idx.size(); ++r) onehot(r, labels[idx[r]]) = 1.0;
        ad::Graph g;
        Var p = g.leaf(Tensor::column(params), "classifier");
        auto out = clf.build(p, g.constant(x.gather_rows(idx)));
        Var loss = ad::scale(ad::inner(g.constant(onehot), out.log_posteriors), -1.0 / static_cast<double>(idx.size()));
        const auto& grad = g.backward(loss, {p}, false).value(0);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
        for (double v : params) {
            if (!std::isfinite(v) || std::abs(v) > 1e6) throw NumericalError("classifier training diverged");
        }
    }
    clf.set_parameters(std::move(params));
    TrainedClassifier out{std::move(clf), 0.0};
    out.training_accuracy = classifier_accuracy(out.classifier, x, labels);
    return out;
}

}  // namespace ganinf
