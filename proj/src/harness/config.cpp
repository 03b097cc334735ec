#include "ganinf/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "ganinf/errors.hpp"
#include "ganinf/train/hashing.hpp"

namespace ganinf {

namespace pt = boost::property_tree;

std::string to_string(DatasetKind k)
{
    switch (k) {
    case DatasetKind::Normal2D: return "normal2d";
    case DatasetKind::Digits8: return "digits8";
    case DatasetKind::Idx: return "idx";
    }
    return "normal2d";
}

DatasetKind parse_dataset_kind(std::string_view name)
{
    if (name == "normal2d") return DatasetKind::Normal2D;
    if (name == "digits8") return DatasetKind::Digits8;
    if (name == "idx") return DatasetKind::Idx;
    throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

std::string to_string(SelectionMethod m)
{
    switch (m) {
    case SelectionMethod::Proposed: return "proposed";
    case SelectionMethod::DiscLoss: return "disc-loss";
    case SelectionMethod::Random: return "random";
    }
    return "proposed";
}

SelectionMethod parse_selection_method(std::string_view name)
{
    if (name == "proposed") return SelectionMethod::Proposed;
    if (name == "disc-loss" || name == "disc-loss-influence") return SelectionMethod::DiscLoss;
    if (name == "random") return SelectionMethod::Random;
    throw ConfigError("unknown selection method '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string s)
{
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Reads keys out of the tree and remembers which were used, so leftovers can be reported.
class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& key)
    {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (v) used_.insert(key);
        return v ? std::optional(trim(*v)) : std::nullopt;
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        auto v = raw(key);
        if (!v) return;
        out = convert<T>(key, *v);
    }

    template <class T>
    void get_list(const std::string& key, std::vector<T>& out)
    {
        auto v = raw(key);
        if (!v) return;
        out.clear();
        for (const auto& item : split_list(*v)) out.push_back(convert<T>(key, item));
    }

    void check_unused() const
    {
        for (const auto& [section, body] : tree_) {
            if (body.empty()) throw ConfigError("key '" + section + "' is outside any section");
            for (const auto& [key, _] : body) {
                if (!used_.contains(section + "." + key)) {
                    throw ConfigError("unknown config key '" + section + "." + key + "'");
                }
            }
        }
    }

private:
    template <class T>
    static T convert(const std::string& key, const std::string& s)
    {
        try {
            if constexpr (std::is_same_v<T, std::string>) {
                return s;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (s == "true" || s == "1" || s == "yes") return true;
                if (s == "false" || s == "0" || s == "no") return false;
                throw std::invalid_argument(s);
            } else if constexpr (std::is_floating_point_v<T>) {
                std::size_t pos = 0;
                const double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return v;
            } else {
                if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
                std::size_t pos = 0;
                const auto v = std::stoull(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return static_cast<T>(v);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad value '" + s + "' for " + key);
        }
    }

    const pt::ptree& tree_;
    std::set<std::string> used_;
};

void apply_overrides(pt::ptree& tree, const std::vector<std::string>& overrides)
{
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto key = trim(o.substr(0, eq));
        if (eq == std::string::npos || key.find('.') == std::string::npos) {
            throw ConfigError("override '" + o + "' is not of the form section.key=value");
        }
        tree.put(pt::ptree::path_type(key, '.'), trim(o.substr(eq + 1)));
    }
}

ExperimentConfig from_tree(const pt::ptree& tree)
{
    ExperimentConfig c;
    Reader r(tree);

    if (auto v = r.raw("dataset.kind")) c.dataset.kind = parse_dataset_kind(*v);
    r.get("dataset.size", c.dataset.size);
    r.get("dataset.holdout_size", c.dataset.holdout_size);
    std::vector<double> mean, cov;
    r.get_list("dataset.mean", mean);
    r.get_list("dataset.covariance", cov);
    if (!mean.empty()) {
        if (mean.size() != 2) throw ConfigError("dataset.mean needs 2 values");
        std::copy(mean.begin(), mean.end(), c.dataset.mean.begin());
    }
    if (!cov.empty()) {
        if (cov.size() != 4) throw ConfigError("dataset.covariance needs 4 values (row-major 2x2)");
        std::copy(cov.begin(), cov.end(), c.dataset.covariance.begin());
    }
    r.get("dataset.pixel_noise", c.dataset.pixel_noise);
    if (auto v = r.raw("dataset.idx_images")) c.dataset.idx_images = *v;
    if (auto v = r.raw("dataset.idx_labels")) c.dataset.idx_labels = *v;
    r.get("dataset.image_side", c.dataset.image_side);

    auto& a = c.architecture;
    r.get("model.latent_dim", a.latent_dim);
    r.get("model.gen_hidden", a.gen_hidden);
    r.get("model.disc_hidden", a.disc_hidden);
    if (auto v = r.raw("model.gen_hidden_activation")) a.gen_hidden_activation = parse_activation(*v);
    if (auto v = r.raw("model.gen_output_activation")) a.gen_output_activation = parse_activation(*v);
    if (auto v = r.raw("model.disc_hidden_activation")) a.disc_hidden_activation = parse_activation(*v);
    r.get("model.l2_rate", a.l2_rate);
    if (auto v = r.raw("model.objective")) a.objective = parse_objective(*v);
    a.data_dim = c.dataset.kind == DatasetKind::Normal2D ? 2 : c.dataset.image_side * c.dataset.image_side;
    std::size_t declared_dim = a.data_dim;
    r.get("model.data_dim", declared_dim);
    if (declared_dim != a.data_dim) {
        throw ConfigError("model.data_dim " + std::to_string(declared_dim) + " disagrees with the dataset (" +
                          std::to_string(a.data_dim) + ")");
    }

    auto& t = c.training;
    r.get("training.epochs", t.epochs);
    r.get("training.batch_size", t.batch_size);
    r.get("training.lr_generator", t.lr_generator);
    r.get("training.lr_discriminator", t.lr_discriminator);
    if (auto v = r.raw("training.mode")) t.mode = parse_update_mode(*v);
    r.get("training.generator_first", t.generator_first);
    r.get_list("training.seeds", c.seeds);

    std::vector<std::string> kinds{"ALL"};
    r.get_list("metrics.kinds", kinds);
    double bandwidth = 1.0;
    r.get("metrics.bandwidth", bandwidth);
    std::string classifier_ref;
    r.get("metrics.classifier", classifier_ref);
    for (const auto& k : kinds) {
        MetricSpec s;
        s.kind = parse_metric_kind(k);
        s.bandwidth = bandwidth;
        s.classifier_ref = classifier_ref;
        c.metrics.push_back(s);
    }
    r.get("metrics.eval_latents", c.eval_latents);
    r.get("metrics.classifier_epochs", c.classifier.epochs);
    r.get("metrics.classifier_hidden1", c.classifier.hidden1);
    r.get("metrics.classifier_hidden2", c.classifier.hidden2);
    r.get("metrics.classifier_batch_size", c.classifier.batch_size);
    r.get("metrics.classifier_learning_rate", c.classifier.learning_rate);

    r.get_list("accuracy.k_epochs", c.k_epochs);
    r.get("accuracy.targets", c.targets);
    r.get("accuracy.critical_m", c.critical_m);
    r.get("accuracy.permutations", c.permutations);

    r.get_list("cleansing.n_harmful", c.n_harmful);
    std::vector<std::string> methods;
    r.get_list("cleansing.methods", methods);
    if (!methods.empty()) {
        c.methods.clear();
        for (const auto& m : methods) c.methods.push_back(parse_selection_method(m));
    }
    r.get("cleansing.k_epochs", c.cleanse_k_epochs);

    if (auto v = r.raw("output.dir")) c.output_dir = *v;
    r.get("output.workers", c.workers);

    r.check_unused();
    c.validate();
    return c;
}

}  // namespace

void ExperimentConfig::validate() const
{
    architecture.validate();
    training.validate();
    classifier.validate();
    if (dataset.size == 0 || dataset.holdout_size < 2) throw ConfigError("dataset sizes must be positive");
    if (training.batch_size > dataset.size) throw ConfigError("batch_size exceeds the dataset size");
    if (dataset.kind == DatasetKind::Normal2D) {
        const auto& s = dataset.covariance;
        if (s[1] != s[2] || !(s[0] > 0.0) || !(s[0] * s[3] - s[1] * s[2] > 0.0)) {
            throw ConfigError("dataset.covariance must be symmetric positive definite");
        }
    }
    if (dataset.kind == DatasetKind::Idx && (dataset.idx_images.empty() || dataset.idx_labels.empty())) {
        throw ConfigError("idx datasets need idx_images and idx_labels");
    }
    if (dataset.kind != DatasetKind::Normal2D && dataset.image_side == 0) throw ConfigError("image_side must be positive");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (metrics.empty()) throw ConfigError("at least one metric is required");
    for (const auto& m : metrics) {
        m.validate();
        if (m.kind == MetricKind::IS && dataset.kind == DatasetKind::Normal2D) {
            throw ConfigError("IS needs a labelled image dataset");
        }
    }
    if (eval_latents < 2) throw ConfigError("eval_latents must be at least 2");
    if (k_epochs.empty()) throw ConfigError("accuracy.k_epochs is empty");
    for (auto k : k_epochs) {
        if (k == 0 || k > training.epochs) throw ConfigError("k_epochs values must lie in [1, epochs]");
    }
    if (cleanse_k_epochs == 0 || cleanse_k_epochs > training.epochs) {
        throw ConfigError("cleansing.k_epochs must lie in [1, epochs]");
    }
    if (targets == 0 || targets > dataset.size) throw ConfigError("accuracy.targets must lie in [1, N]");
    if (critical_m == 0) throw ConfigError("accuracy.critical_m must be positive");
    for (auto n : n_harmful) {
        if (n >= dataset.size) throw ConfigError("n_harmful values must be below N");
    }
    if (methods.empty()) throw ConfigError("cleansing.methods is empty");
}

std::string ExperimentConfig::canonical() const
{
    std::ostringstream o;
    o.precision(17);
    o << "data=" << to_string(dataset.kind) << ',' << dataset.size << ',' << dataset.holdout_size;
    if (dataset.kind == DatasetKind::Normal2D) {
        o << ",mu=" << dataset.mean[0] << ',' << dataset.mean[1] << ",cov=" << dataset.covariance[0] << ','
          << dataset.covariance[1] << ',' << dataset.covariance[2] << ',' << dataset.covariance[3];
    } else {
        o << ",side=" << dataset.image_side << ",noise=" << dataset.pixel_noise;
        if (dataset.kind == DatasetKind::Idx) o << ",img=" << dataset.idx_images.string() << ",lbl=" << dataset.idx_labels.string();
    }
    o << "|arch=" << architecture.canonical() << "|train=" << training.canonical() << "|seeds=";
    for (auto s : seeds) o << s << ',';
    o << "|metrics=";
    for (const auto& m : metrics) o << m.name() << ':' << m.bandwidth << ':' << m.classifier_ref << ',';
    o << "|zeval=" << eval_latents << "|clf=" << classifier.hidden1 << ',' << classifier.hidden2 << ','
      << classifier.epochs << ',' << classifier.batch_size << ',' << classifier.learning_rate << "|k=";
    for (auto k : k_epochs) o << k << ',';
    o << "|targets=" << targets << ",m=" << critical_m << ",perm=" << permutations << "|nh=";
    for (auto n : n_harmful) o << n << ',';
    o << "|methods=";
    for (auto m : methods) o << to_string(m) << ',';
    o << "|ck=" << cleanse_k_epochs;
    return o.str();
}

std::string ExperimentConfig::fingerprint() const { return sha256_hex(canonical()); }

bool ExperimentConfig::needs_classifier() const
{
    if (dataset.kind == DatasetKind::Normal2D) return false;
    return std::any_of(metrics.begin(), metrics.end(),
                       [](const MetricSpec& m) { return m.kind == MetricKind::IS || m.kind == MetricKind::FID; });
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    apply_overrides(tree, overrides);
    return from_tree(tree);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

}  // namespace ganinf
