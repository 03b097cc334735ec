#include "ganinf/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <thread>

#include "ganinf/errors.hpp"
#include "ganinf/harness/selection.hpp"
#include "ganinf/harness/stats.hpp"
#include "ganinf/oracle/counterfactual.hpp"
#include "ganinf/train/hashing.hpp"

namespace ganinf {

using ad::Tensor;

namespace {

enum : std::uint64_t { kQueryLatents = 200, kTestLatents = 201, kClassifierInit = 300 };
enum : std::uint64_t { kTargetDraw = 0, kPermutations = 1, kRandomRemoval = 1000 };

std::ofstream open_out(const std::filesystem::path& file)
{
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << std::setprecision(17);
    return out;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) { open_out(file) << j.dump(2) << '\n'; }

}  // namespace

MetricContext SeedRun::query_context() const
{
    return {&data.reference.x, classifier ? &*classifier : nullptr};
}

MetricContext SeedRun::test_context() const { return {&data.test.x, classifier ? &*classifier : nullptr}; }

void check_trace_matches(const TrainingTrace& trace, const ExperimentConfig& cfg, const Tensor& dataset)
{
    const auto expected = config_fingerprint(cfg.architecture, cfg.training, tensor_checksum(dataset));
    if (trace.fingerprint != expected) {
        throw TraceError("trace fingerprint " + trace.fingerprint.substr(0, 12) + " does not match the config (" +
                         expected.substr(0, 12) + ")");
    }
    validate_trace(trace, dataset);
}

SeedRun prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, std::optional<TrainingTrace> trace)
{
    SeedRun run;
    run.seed = seed;
    run.data = make_experiment_data(cfg.dataset, seed);
    if (trace) {
        if (trace->seed != seed) throw TraceError("trace was recorded with seed " + std::to_string(trace->seed));
        check_trace_matches(*trace, cfg, run.data.train.x);
        run.trace = std::move(*trace);
    } else {
        run.trace = run_training(cfg.architecture, cfg.training, run.data.train.x, seed);
    }
    if (cfg.needs_classifier()) {
        const auto& ref = cfg.metrics.front().classifier_ref;
        if (!ref.empty()) {
            run.classifier = Classifier::load(ref);
        } else {
            if (run.data.train.labels.empty()) throw ConfigError("IS/FID need labels to train the classifier");
            run.classifier = train_classifier(run.data.train.x, run.data.train.labels, run.data.train.classes,
                                              cfg.classifier, derive_seed(seed, SeedStream::Evaluation, kClassifierInit))
                                 .classifier;
        }
    }
    const auto dz = cfg.architecture.latent_dim;
    run.query_latents =
        regenerate_latents(derive_seed(seed, SeedStream::Evaluation, kQueryLatents), cfg.eval_latents, dz);
    run.test_latents = regenerate_latents(derive_seed(seed, SeedStream::Evaluation, kTestLatents), cfg.eval_latents, dz);
    return run;
}

std::vector<double> query_vector(const SeedRun& run, const MetricSpec& spec)
{
    GanModel model(run.trace.architecture);
    return build_query_vector(spec, model, run.trace.final_params, run.query_latents, run.query_context());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex m;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(m);
                        if (!first) first = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (first) std::rethrow_exception(first);
}

// ---- estimation accuracy -------------------------------------------------

double AccuracyReport::mean_tau(const std::string& metric, std::size_t k) const
{
    double s = 0.0;
    std::size_t c = 0;
    for (const auto& r : rows) {
        if (r.metric == metric && r.k_epochs == k) {
            s += r.tau;
            ++c;
        }
    }
    if (c == 0) throw std::invalid_argument("no accuracy rows for " + metric + " at k=" + std::to_string(k));
    return s / static_cast<double>(c);
}

nlohmann::json AccuracyReport::to_json() const
{
    nlohmann::json j{{"fingerprint", fingerprint}, {"rows", nlohmann::json::array()}, {"points", nlohmann::json::array()}};
    for (const auto& r : rows) {
        j["rows"].push_back({{"seed", r.seed}, {"metric", r.metric}, {"k_epochs", r.k_epochs}, {"targets", r.targets},
                             {"tau", r.tau}, {"jaccard", r.jaccard}, {"tau_quantile_975", r.tau_quantile_975},
                             {"p_value", r.p_value}, {"fingerprint", r.fingerprint}});
    }
    for (const auto& p : points) {
        j["points"].push_back({{"seed", p.seed}, {"metric", p.metric}, {"k_epochs", p.k_epochs}, {"index", p.index},
                               {"true_influence", p.true_influence}, {"estimated_influence", p.estimated_influence}});
    }
    return j;
}

AccuracyReport AccuracyReport::from_json(const nlohmann::json& j)
{
    AccuracyReport r;
    try {
        r.fingerprint = j.at("fingerprint").get<std::string>();
        for (const auto& x : j.at("rows")) {
            r.rows.push_back({x.at("seed"), x.at("metric"), x.at("k_epochs"), x.at("targets"), x.at("tau"),
                              x.at("jaccard"), x.at("tau_quantile_975"), x.at("p_value"), x.at("fingerprint")});
        }
        for (const auto& x : j.at("points")) {
            r.points.push_back({x.at("seed"), x.at("metric"), x.at("k_epochs"), x.at("index"), x.at("true_influence"),
                                x.at("estimated_influence")});
        }
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(std::string("malformed accuracy report: ") + e.what());
    }
    return r;
}

void AccuracyReport::write(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    auto a = open_out(dir / "accuracy.csv");
    a << "seed,metric,k_epochs,targets,kendall_tau,jaccard,tau_quantile_975,p_value,fingerprint\n";
    for (const auto& r : rows) {
        a << r.seed << ',' << r.metric << ',' << r.k_epochs << ',' << r.targets << ',' << r.tau << ',' << r.jaccard
          << ',' << r.tau_quantile_975 << ',' << r.p_value << ',' << r.fingerprint << '\n';
    }
    auto p = open_out(dir / "influence_points.csv");
    p << "seed,k_epochs,index,metric,true_influence,estimated_influence\n";
    for (const auto& x : points) {
        p << x.seed << ',' << x.k_epochs << ',' << x.index << ',' << x.metric << ',' << x.true_influence << ','
          << x.estimated_influence << '\n';
    }
    write_json(dir / "accuracy.json", to_json());
}

AccuracyReport run_estimation_accuracy(const ExperimentConfig& cfg, const AccuracyOptions& opts)
{
    cfg.validate();
    if (cfg.targets < 2 * cfg.critical_m) {
        throw ConfigError("accuracy needs at least " + std::to_string(2 * cfg.critical_m) + " targets");
    }
    AccuracyReport report;
    report.fingerprint = cfg.fingerprint();
    for (auto seed : cfg.seeds) {
        auto run = prepare_seed(cfg, seed, opts.trace_for ? opts.trace_for(seed) : std::nullopt);
        auto targets = select_random(run.data.train.x.rows(), cfg.targets, derive_seed(seed, SeedStream::Selection, kTargetDraw));
        std::sort(targets.begin(), targets.end());

        std::vector<MetricQuery> queries;
        std::vector<std::vector<double>> us;
        for (const auto& spec : cfg.metrics) {
            queries.push_back({spec, &run.query_latents, run.query_context()});
            us.push_back(query_vector(run, spec));
        }
        for (auto k : cfg.k_epochs) {
            const auto truths = batch_oracle(run.trace, run.data.train.x, targets, k, queries, cfg.workers);
            for (const auto& r : truths) {
                if (!r.ok()) throw NumericalError("oracle re-run for instance " + std::to_string(r.j) + " failed: " + *r.error);
            }
            for (std::size_t m = 0; m < cfg.metrics.size(); ++m) {
                const auto name = cfg.metrics[m].name();
                std::vector<double> truth;
                for (const auto& r : truths) truth.push_back(r.delta_metric.at(name));
                std::vector<double> est = truth;
                if (!opts.self_test) {
                    est = infer_linear_influence(run.trace, run.data.train.x, us[m], targets, k, name).scores;
                }
                const auto perm = kendall_permutation_test(
                    est, truth, cfg.permutations,
                    derive_seed(seed, SeedStream::Selection, kPermutations + 64 * k + m));
                report.rows.push_back({seed, name, k, targets.size(), perm.observed,
                                       jaccard_critical(est, truth, cfg.critical_m, targets), perm.quantile_975,
                                       perm.p_value, report.fingerprint});
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    report.points.push_back({seed, name, k, targets[i], truth[i], est[i]});
                }
            }
        }
    }
    return report;
}

// ---- data cleansing ------------------------------------------------------

double CleansingReport::mean_improvement(const std::string& method, const std::string& metric, std::size_t n_h) const
{
    double s = 0.0;
    std::size_t c = 0;
    for (const auto& r : rows) {
        if (r.method == method && r.metric == metric && r.n_harmful == n_h) {
            s += r.improvement;
            ++c;
        }
    }
    if (c == 0) throw std::invalid_argument("no cleansing rows for " + method + "/" + metric);
    return s / static_cast<double>(c);
}

std::vector<double> CleansingReport::paired_differences(const std::string& method, const std::string& baseline,
                                                        const std::string& metric, std::size_t n_h) const
{
    std::map<std::uint64_t, double> a, b;
    for (const auto& r : rows) {
        if (r.metric != metric || r.n_harmful != n_h) continue;
        if (r.method == method) a[r.seed] = r.improvement;
        if (r.method == baseline) b[r.seed] = r.improvement;
    }
    std::vector<double> out;
    for (const auto& [seed, v] : a) {
        if (b.contains(seed)) out.push_back(v - b.at(seed));
    }
    return out;
}

nlohmann::json CleansingReport::to_json() const
{
    nlohmann::json j{{"fingerprint", fingerprint}, {"rows", nlohmann::json::array()}};
    for (const auto& r : rows) {
        j["rows"].push_back({{"seed", r.seed}, {"method", r.method}, {"metric", r.metric}, {"n_harmful", r.n_harmful},
                             {"removed", r.removed}, {"before", r.before}, {"after", r.after},
                             {"improvement", r.improvement}, {"fingerprint", r.fingerprint}});
    }
    return j;
}

CleansingReport CleansingReport::from_json(const nlohmann::json& j)
{
    CleansingReport r;
    try {
        r.fingerprint = j.at("fingerprint").get<std::string>();
        for (const auto& x : j.at("rows")) {
            r.rows.push_back({x.at("seed"), x.at("method"), x.at("metric"), x.at("n_harmful"), x.at("removed"),
                              x.at("before"), x.at("after"), x.at("improvement"), x.at("fingerprint")});
        }
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(std::string("malformed cleansing report: ") + e.what());
    }
    return r;
}

void CleansingReport::write(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    auto out = open_out(dir / "cleansing.csv");
    out << "seed,method,metric,n_harmful,removed,before,after,improvement,fingerprint\n";
    for (const auto& r : rows) {
        out << r.seed << ',' << r.method << ',' << r.metric << ',' << r.n_harmful << ',' << r.removed << ','
            << r.before << ',' << r.after << ',' << r.improvement << ',' << r.fingerprint << '\n';
    }
    write_json(dir / "cleansing.json", to_json());
}

CleansingReport run_data_cleansing(const ExperimentConfig& cfg, const CleansingOptions& opts)
{
    cfg.validate();
    CleansingReport report;
    report.fingerprint = cfg.fingerprint();
    if (!opts.table_dir.empty()) std::filesystem::create_directories(opts.table_dir);
    MetricSpec disc;
    disc.kind = MetricKind::DISC_LOSS;

    for (auto seed : cfg.seeds) {
        auto run = prepare_seed(cfg, seed, opts.trace_for ? opts.trace_for(seed) : std::nullopt);
        const auto& trace = run.trace;
        const auto& x = run.data.train.x;
        const std::size_t n = x.rows();
        const std::size_t start = trace.window_start(cfg.cleanse_k_epochs);
        const GanModel model(trace.architecture);
        const auto everyone = all_indices(n);

        std::optional<InfluenceTable> disc_table;
        if (std::find(cfg.methods.begin(), cfg.methods.end(), SelectionMethod::DiscLoss) != cfg.methods.end()) {
            disc_table = infer_linear_influence(trace, x, query_vector(run, disc), everyone, cfg.cleanse_k_epochs,
                                                disc.name());
        }

        struct Job {
            std::size_t row;
            std::vector<std::uint32_t> removed;
        };
        std::vector<Job> jobs;
        for (const auto& spec : cfg.metrics) {
            const MetricQuery test{spec, &run.test_latents, run.test_context()};
            const double before = evaluate_metric(spec, model, trace.final_params, run.test_latents, test.context);
            std::optional<InfluenceTable> proposed;
            if (std::find(cfg.methods.begin(), cfg.methods.end(), SelectionMethod::Proposed) != cfg.methods.end()) {
                proposed = infer_linear_influence(trace, x, query_vector(run, spec), everyone, cfg.cleanse_k_epochs,
                                                  spec.name());
                if (!opts.table_dir.empty()) {
                    std::ofstream(opts.table_dir / ("influence_" + spec.name() + "_seed" + std::to_string(seed) + ".json"))
                        << proposed->to_json().dump() << '\n';
                }
            }
            for (auto method : cfg.methods) {
                for (auto n_h : cfg.n_harmful) {
                    std::vector<std::uint32_t> h;
                    switch (method) {
                    case SelectionMethod::Proposed: h = select_harmful(*proposed, spec, n_h); break;
                    case SelectionMethod::DiscLoss: h = select_harmful(*disc_table, disc, n_h); break;
                    case SelectionMethod::Random:
                        h = select_random(n, n_h, derive_seed(seed, SeedStream::Selection, kRandomRemoval + n_h));
                        break;
                    }
                    CleansingRow row{seed, to_string(method), spec.name(), n_h, h.size(), before, before, 0.0,
                                     report.fingerprint};
                    jobs.push_back({report.rows.size(), std::move(h)});
                    report.rows.push_back(row);
                }
            }
        }
        // Counterfactual re-runs are independent; each writes only its own row.
        parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
            auto& row = report.rows[jobs[i].row];
            const auto spec_it = std::find_if(cfg.metrics.begin(), cfg.metrics.end(),
                                              [&](const MetricSpec& s) { return s.name() == row.metric; });
            const auto theta = counterfactual_params(trace, x, jobs[i].removed, start);
            const MetricQuery test{*spec_it, &run.test_latents, run.test_context()};
            row.after = theta == trace.final_params ? row.before
                                                    : evaluate_metric(test.spec, model, theta, run.test_latents, test.context);
            row.improvement = spec_it->better_sign() * (row.after - row.before);
        });
    }
    return report;
}

}  // namespace ganinf
