#include "ganinf/harness/reports.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <tuple>

#include "ganinf/errors.hpp"
#include "ganinf/harness/datasets.hpp"

namespace ganinf {

namespace {

std::ofstream open_out(const std::filesystem::path& file)
{
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << std::setprecision(17);
    return out;
}

nlohmann::json read_json(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw TraceError("cannot open " + file.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(file.string() + ": " + e.what());
    }
}

struct Moments {
    std::size_t n = 0;
    double sum = 0.0, sum_sq = 0.0;

    void add(double v)
    {
        ++n;
        sum += v;
        sum_sq += v * v;
    }
    [[nodiscard]] double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    [[nodiscard]] double sd() const
    {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1)));
    }
};

}  // namespace

void write_scatter_csv(const std::filesystem::path& file, const InfluenceTable& table, const MetricSpec& spec,
                       const ad::Tensor& data)
{
    const bool planar = data.cols() == 2;
    auto out = open_out(file);
    out << "index," << (planar ? "x,y," : "") << "score,harmfulness\n";
    for (std::size_t i = 0; i < table.indices.size(); ++i) {
        const auto j = table.indices[i];
        if (j >= data.rows()) throw std::out_of_range("influence table indexes past the dataset");
        out << j << ',';
        if (planar) out << data(j, 0) << ',' << data(j, 1) << ',';
        out << table.scores[i] << ',' << harmfulness(spec, table.scores[i]) << '\n';
    }
}

void write_cleansing_curves(const std::filesystem::path& file, const CleansingReport& report)
{
    std::map<std::tuple<std::string, std::string, std::size_t>, std::array<Moments, 3>> groups;
    for (const auto& r : report.rows) {
        auto& g = groups[{r.method, r.metric, r.n_harmful}];
        g[0].add(r.before);
        g[1].add(r.after);
        g[2].add(r.improvement);
    }
    auto out = open_out(file);
    out << "method,metric,n_harmful,seeds,mean_before,mean_after,mean_improvement,std_improvement\n";
    for (const auto& [key, g] : groups) {
        const auto& [method, metric, n_h] = key;
        out << method << ',' << metric << ',' << n_h << ',' << g[2].n << ',' << g[0].mean() << ',' << g[1].mean()
            << ',' << g[2].mean() << ',' << g[2].sd() << '\n';
    }
}

void write_accuracy_curves(const std::filesystem::path& file, const AccuracyReport& report)
{
    struct Acc {
        Moments tau, jaccard;
        std::size_t significant = 0;
    };
    std::map<std::pair<std::string, std::size_t>, Acc> groups;
    for (const auto& r : report.rows) {
        auto& g = groups[{r.metric, r.k_epochs}];
        g.tau.add(r.tau);
        g.jaccard.add(r.jaccard);
        g.significant += r.tau > r.tau_quantile_975;
    }
    auto out = open_out(file);
    out << "metric,k_epochs,seeds,mean_tau,mean_jaccard,significant_runs\n";
    for (const auto& [key, g] : groups) {
        out << key.first << ',' << key.second << ',' << g.tau.n << ',' << g.tau.mean() << ',' << g.jaccard.mean() << ','
            << g.significant << '\n';
    }
}

std::vector<std::filesystem::path> write_report_directory(const std::filesystem::path& experiment_dir,
                                                          const ExperimentConfig& cfg,
                                                          const std::filesystem::path& out_dir)
{
    if (!std::filesystem::is_directory(experiment_dir)) {
        throw ConfigError(experiment_dir.string() + " is not a directory");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    const std::regex table_name(R"(influence_([A-Z_]+)_seed(\d+)\.json)");
    std::vector<std::filesystem::path> tables;
    for (const auto& e : std::filesystem::directory_iterator(experiment_dir)) tables.push_back(e.path());
    std::sort(tables.begin(), tables.end());
    std::map<std::uint64_t, ExperimentData> data_by_seed;
    for (const auto& p : tables) {
        std::smatch m;
        const auto name = p.filename().string();
        if (!std::regex_match(name, m, table_name)) continue;
        const auto table = InfluenceTable::from_json(read_json(p));
        const auto seed = std::stoull(m[2].str());
        if (!data_by_seed.contains(seed)) data_by_seed.emplace(seed, make_experiment_data(cfg.dataset, seed));
        MetricSpec spec;
        spec.kind = parse_metric_kind(m[1].str());
        auto file = out_dir / ("scatter_" + m[1].str() + "_seed" + m[2].str() + ".csv");
        write_scatter_csv(file, table, spec, data_by_seed.at(seed).train.x);
        written.push_back(file);
    }
    if (std::filesystem::exists(experiment_dir / "cleansing.json")) {
        auto file = out_dir / "cleansing_curves.csv";
        write_cleansing_curves(file, CleansingReport::from_json(read_json(experiment_dir / "cleansing.json")));
        written.push_back(file);
    }
    if (std::filesystem::exists(experiment_dir / "accuracy.json")) {
        auto file = out_dir / "accuracy_by_k.csv";
        write_accuracy_curves(file, AccuracyReport::from_json(read_json(experiment_dir / "accuracy.json")));
        written.push_back(file);
    }
    if (written.empty()) throw ConfigError("nothing to report in " + experiment_dir.string());
    return written;
}

}  // namespace ganinf
