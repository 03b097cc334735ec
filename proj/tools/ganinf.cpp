// Command-line driver: train, influence, oracle, accuracy, cleanse, report.
#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "ganinf/errors.hpp"
#include "ganinf/harness/config.hpp"
#include "ganinf/harness/experiments.hpp"
#include "ganinf/harness/reports.hpp"
#include "ganinf/harness/selection.hpp"
#include "ganinf/influence/engine.hpp"
#include "ganinf/oracle/counterfactual.hpp"
#include "ganinf/train/trace_io.hpp"

namespace fs = std::filesystem;
using namespace ganinf;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;

    [[nodiscard]] ExperimentConfig load() const
    {
        auto cfg = load_config(config, overrides);
        if (seed) cfg.seeds = {*seed};
        if (workers) cfg.workers = *workers;
        return cfg;
    }
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("-c,--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
    app->add_option("--set", c.overrides, "override a config key, section.key=value")->take_all();
    app->add_option("--seed", c.seed, "run a single seed instead of the configured list");
    app->add_option("--workers", c.workers, "worker threads (0 = all cores)");
}

const MetricSpec& pick_metric(const ExperimentConfig& cfg, const std::string& name)
{
    if (name.empty()) return cfg.metrics.front();
    const auto kind = parse_metric_kind(name);
    for (const auto& m : cfg.metrics) {
        if (m.kind == kind) return m;
    }
    throw ConfigError("metric " + name + " is not configured");
}

// A trace on disk, checked against the config before anything uses it.
SeedRun load_run(const ExperimentConfig& cfg, const fs::path& trace_dir)
{
    auto trace = load_trace(trace_dir);
    return prepare_seed(cfg, trace.seed, std::move(trace));
}

std::vector<std::uint32_t> choose_targets(const SeedRun& run, std::size_t count, const std::vector<std::uint32_t>& listed)
{
    const auto n = run.data.train.x.rows();
    if (!listed.empty()) return listed;
    if (count == 0 || count >= n) return all_indices(n);
    auto t = select_random(n, count, derive_seed(run.seed, SeedStream::Selection, 0));
    std::sort(t.begin(), t.end());
    return t;
}

fs::path default_trace_dir(const ExperimentConfig& cfg, std::uint64_t seed)
{
    return cfg.output_dir / ("trace_seed" + std::to_string(seed));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Influence estimation for GAN training instances"};
    app.require_subcommand(1);

    Common common;
    std::string trace_dir, out, metric, from;
    std::size_t k = 1, target_count = 0;
    std::vector<std::uint32_t> indices;
    std::vector<std::size_t> k_list, n_h_list;
    std::optional<std::size_t> targets_override;
    bool self_test = false;

    auto* train = app.add_subcommand("train", "train a GAN and record its trace");
    add_common(train, common);
    train->add_option("-o,--out", out, "trace directory (default <output.dir>/trace_seed<seed>)");

    auto* influence = app.add_subcommand("influence", "estimate influence of training instances on a metric");
    add_common(influence, common);
    influence->add_option("-t,--trace", trace_dir, "trace directory")->required();
    influence->add_option("-m,--metric", metric, "metric name (default: first configured)");
    influence->add_option("-k,--k", k, "epochs to trace back")->check(CLI::NonNegativeNumber);
    influence->add_option("--targets", target_count, "random subset size (default: all instances)");
    influence->add_option("--indices", indices, "explicit instance indices")->delimiter(',');
    influence->add_option("-o,--out", out, "CSV file (a JSON table is written next to it)")->required();

    auto* oracle = app.add_subcommand("oracle", "true influence by counterfactual re-runs, next to the estimate");
    add_common(oracle, common);
    oracle->add_option("-t,--trace", trace_dir, "trace directory")->required();
    oracle->add_option("-m,--metric", metric, "metric name (default: first configured)");
    oracle->add_option("-k,--k", k, "epochs to re-run");
    oracle->add_option("--targets", target_count, "random subset size (default: all instances)");
    oracle->add_option("--indices", indices, "explicit instance indices")->delimiter(',');
    oracle->add_option("-o,--out", out, "CSV file")->required();

    auto* accuracy = app.add_subcommand("accuracy", "estimated vs true influence: Kendall tau and Jaccard");
    add_common(accuracy, common);
    accuracy->add_option("-k,--k", k_list, "trace-back depths")->delimiter(',');
    accuracy->add_option("--targets", targets_override, "number of target instances");
    accuracy->add_flag("--self-test", self_test, "score the oracle against itself");
    accuracy->add_option("-o,--out", out, "output directory (default <output.dir>)");

    auto* cleanse = app.add_subcommand("cleanse", "remove harmful instances and measure the test metrics");
    add_common(cleanse, common);
    cleanse->add_option("--n-harmful", n_h_list, "numbers of instances to remove")->delimiter(',');
    cleanse->add_option("-o,--out", out, "output directory (default <output.dir>)");

    auto* report = app.add_subcommand("report", "plot data from an accuracy or cleansing output directory");
    add_common(report, common);
    report->add_option("--from", from, "experiment output directory (default <output.dir>)");
    report->add_option("-o,--out", out, "directory for plot CSVs (default <from>/plots)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        auto cfg = common.load();
        std::cout << std::setprecision(17);

        if (*train) {
            for (auto seed : cfg.seeds) {
                const auto data = make_experiment_data(cfg.dataset, seed);
                const auto trace = run_training(cfg.architecture, cfg.training, data.train.x, seed);
                const fs::path dir = !out.empty() && cfg.seeds.size() == 1 ? fs::path(out) : default_trace_dir(cfg, seed);
                save_trace(trace, dir);
                std::cout << "seed " << seed << " trace " << dir.string() << " checksum " << trace_checksum(trace)
                          << " fingerprint " << trace.fingerprint << '\n';
            }
        } else if (*influence || *oracle) {
            const auto run = load_run(cfg, trace_dir);
            const auto& spec = pick_metric(cfg, metric);
            const auto targets = choose_targets(run, target_count, indices);
            const auto u = query_vector(run, spec);
            const auto table = infer_linear_influence(run.trace, run.data.train.x, u, targets, k, spec.name());
            if (*influence) {
                table.write_csv(out);
                std::ofstream(fs::path(out).replace_extension(".json")) << table.to_json().dump() << '\n';
                std::cout << "wrote " << table.indices.size() << " scores to " << out << '\n';
            } else {
                const std::vector<MetricQuery> q = {{spec, &run.query_latents, run.query_context()}};
                const auto truths = batch_oracle(run.trace, run.data.train.x, targets, k, q, cfg.workers);
                std::ofstream csv(out);
                if (!csv) throw std::runtime_error("cannot write " + out);
                csv << std::setprecision(17) << "index,metric,true_influence,estimated_influence\n";
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    if (!truths[i].ok()) throw NumericalError("re-run for " + std::to_string(targets[i]) + ": " + *truths[i].error);
                    csv << targets[i] << ',' << spec.name() << ',' << truths[i].delta_metric.at(spec.name()) << ','
                        << table.scores[i] << '\n';
                }
                std::cout << "wrote " << targets.size() << " oracle rows to " << out << '\n';
            }
        } else if (*accuracy) {
            if (!k_list.empty()) cfg.k_epochs = k_list;
            if (targets_override) cfg.targets = *targets_override;
            const fs::path dir = out.empty() ? cfg.output_dir : fs::path(out);
            AccuracyOptions opts;
            opts.self_test = self_test;
            const auto rep = run_estimation_accuracy(cfg, opts);
            rep.write(dir);
            for (const auto& r : rep.rows) {
                std::cout << "seed " << r.seed << ' ' << r.metric << " k=" << r.k_epochs << " tau=" << r.tau
                          << " jaccard=" << r.jaccard << " q975=" << r.tau_quantile_975 << " p=" << r.p_value << '\n';
            }
        } else if (*cleanse) {
            if (!n_h_list.empty()) cfg.n_harmful = n_h_list;
            cfg.validate();
            const fs::path dir = out.empty() ? cfg.output_dir : fs::path(out);
            CleansingOptions opts;
            opts.table_dir = dir;
            const auto rep = run_data_cleansing(cfg, opts);
            rep.write(dir);
            for (const auto& r : rep.rows) {
                std::cout << "seed " << r.seed << ' ' << r.method << ' ' << r.metric << " n_h=" << r.n_harmful
                          << " removed=" << r.removed << " before=" << r.before << " after=" << r.after
                          << " improvement=" << r.improvement << '\n';
            }
        } else if (*report) {
            const fs::path src = from.empty() ? cfg.output_dir : fs::path(from);
            const fs::path dst = out.empty() ? src / "plots" : fs::path(out);
            for (const auto& f : write_report_directory(src, cfg, dst)) std::cout << "wrote " << f.string() << '\n';
        }
        return 0;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const TraceError& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
