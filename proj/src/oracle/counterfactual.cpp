#include "ganinf/oracle/counterfactual.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace ganinf {

std::vector<double> counterfactual_params(const TrainingTrace& trace, const ad::Tensor& dataset,
                                          std::span<const std::uint32_t> excluded, std::size_t window_start)
{
    if (window_start > trace.steps()) throw std::invalid_argument("window starts past the end of the trace");
    for (auto j : excluded) {
        if (j >= trace.dataset_size) throw std::out_of_range("excluded index " + std::to_string(j) + " out of range");
    }
    const std::unordered_set<std::uint32_t> set(excluded.begin(), excluded.end());
    std::size_t first = trace.steps();
    for (std::size_t t = window_start; t < trace.steps() && first == trace.steps(); ++t) {
        const auto& rec = trace.records[t];
        if (rec.lr_discriminator == 0.0) continue;
        if (std::any_of(rec.indices.begin(), rec.indices.end(), [&](auto i) { return set.contains(i); })) first = t;
    }
    return replay(trace, dataset, first, set);
}

CounterfactualResult counterfactual_retrain(const TrainingTrace& trace, const ad::Tensor& dataset, std::uint32_t j,
                                            std::size_t k_epochs)
{
    CounterfactualResult r;
    r.j = j;
    r.k_epochs = k_epochs;
    r.window_start = trace.window_start(k_epochs);
    const std::uint32_t one[] = {j};
    r.theta_cf = counterfactual_params(trace, dataset, one, r.window_start);
    r.delta_theta.resize(r.theta_cf.size());
    for (std::size_t i = 0; i < r.theta_cf.size(); ++i) r.delta_theta[i] = r.theta_cf[i] - trace.final_params[i];
    return r;
}

double true_influence_on_metric(const GanModel& model, std::span<const double> theta_final,
                                std::span<const double> theta_cf, const MetricQuery& query)
{
    if (!query.latents) throw std::invalid_argument("metric query has no latent set");
    if (std::equal(theta_final.begin(), theta_final.end(), theta_cf.begin(), theta_cf.end())) return 0.0;
    return evaluate_metric(query.spec, model, theta_cf, *query.latents, query.context) -
           evaluate_metric(query.spec, model, theta_final, *query.latents, query.context);
}

std::vector<CounterfactualResult> batch_oracle(const TrainingTrace& trace, const ad::Tensor& dataset,
                                               std::span<const std::uint32_t> targets, std::size_t k_epochs,
                                               std::span<const MetricQuery> queries, unsigned workers)
{
    (void)trace.window_start(k_epochs);  // reject a bad depth before spawning anything
    std::vector<CounterfactualResult> out(targets.size());
    if (targets.empty()) return out;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, targets.size()));
    const GanModel model(trace.architecture);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < targets.size(); i = next++) {
            try {
                auto r = counterfactual_retrain(trace, dataset, targets[i], k_epochs);
                for (const auto& q : queries) {
                    r.delta_metric[q.spec.name()] = true_influence_on_metric(model, trace.final_params, r.theta_cf, q);
                }
                out[i] = std::move(r);
            } catch (const std::exception& e) {
                out[i] = CounterfactualResult{};
                out[i].j = targets[i];
                out[i].k_epochs = k_epochs;
                out[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();
    return out;
}

}  // namespace ganinf
