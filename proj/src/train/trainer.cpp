#include "ganinf/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "ganinf/errors.hpp"
#include "ganinf/train/hashing.hpp"

namespace ganinf {

std::size_t TrainingTrace::window_start(std::size_t k_epochs) const
{
    if (k_epochs > epochs()) {
        throw std::invalid_argument("cannot trace back " + std::to_string(k_epochs) + " epochs of " +
                                    std::to_string(epochs()));
    }
    if (k_epochs == 0) return steps();
    return epoch_boundaries[epochs() - k_epochs];
}

std::string config_fingerprint(const GanArchitecture& arch, const TrainingConfig& cfg,
                               std::string_view dataset_checksum)
{
    Sha256 h;
    h.update(arch.canonical());
    h.update("|");
    h.update(cfg.canonical());
    h.update("|");
    h.update(dataset_checksum);
    return h.hex_digest();
}

MiniBatch assemble_batch(const ad::Tensor& dataset, const IndexBatch& indices, std::uint64_t z_seed,
                         std::size_t latent_dim, const std::unordered_set<std::uint32_t>* excluded)
{
    MiniBatch b{regenerate_latents(z_seed, indices.size(), latent_dim), {}};
    if (!excluded || excluded->empty()) {
        b.data = dataset.gather_rows(indices);
        return b;
    }
    IndexBatch kept;
    kept.reserve(indices.size());
    for (auto i : indices) {
        if (!excluded->contains(i)) kept.push_back(i);
    }
    b.data = dataset.gather_rows(kept);
    return b;
}

std::vector<double> asgd_step(const GanModel& model, std::span<const double> theta, const MiniBatch& batch,
                              double lr_generator, double lr_discriminator)
{
    std::vector<double> next(theta.begin(), theta.end());
    if (lr_generator == 0.0 && lr_discriminator == 0.0) return next;
    const auto g = model.joint_gradient(theta, batch);
    const std::size_t dg = model.generator_size();
    if (lr_generator != 0.0) {
        for (std::size_t i = 0; i < dg; ++i) next[i] -= lr_generator * g[i];
    }
    if (lr_discriminator != 0.0) {
        for (std::size_t i = dg; i < next.size(); ++i) next[i] -= lr_discriminator * g[i];
    }
    return next;
}

namespace {

bool within_limits(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && std::abs(x) <= kDivergenceLimit; });
}

std::vector<double> guarded_step(const GanModel& model, std::span<const double> theta, const MiniBatch& batch,
                                 double lr_g, double lr_d, std::size_t t)
{
    std::vector<double> next;
    try {
        next = asgd_step(model, theta, batch, lr_g, lr_d);
    } catch (const NumericalError& e) {
        throw NumericalError("training diverged at step " + std::to_string(t) +
                             "; last finite parameters are those entering that step (" + e.what() + ")");
    }
    if (!within_limits(next)) {
        throw NumericalError("training diverged at step " + std::to_string(t) +
                             ": parameter magnitude exceeded the divergence limit; last finite parameters are "
                             "those entering that step");
    }
    return next;
}

}  // namespace

TrainingTrace run_training(const GanArchitecture& arch, const TrainingConfig& cfg, const ad::Tensor& dataset,
                           std::uint64_t seed)
{
    cfg.validate();
    if (dataset.rows() == 0) throw std::invalid_argument("training on an empty dataset");
    if (dataset.cols() != arch.data_dim) {
        throw ShapeError("dataset has " + std::to_string(dataset.cols()) + " columns, architecture expects " +
                         std::to_string(arch.data_dim));
    }
    GanModel model(arch);
    TrainingTrace trace;
    trace.architecture = arch;
    trace.training = cfg;
    trace.seed = seed;
    trace.dataset_size = dataset.rows();
    trace.dataset_checksum = tensor_checksum(dataset);
    trace.fingerprint = config_fingerprint(arch, cfg, trace.dataset_checksum);
    trace.epoch_boundaries = epoch_boundaries(dataset.rows(), cfg.batch_size, cfg.epochs);

    auto schedule = minibatch_schedule(dataset.rows(), cfg.batch_size, cfg.epochs, seed);
    const auto rates = learning_rate_sequence(cfg, schedule.size());
    std::vector<double> theta = model.initialize(derive_seed(seed, SeedStream::Init, 0)).vector();

    trace.records.reserve(schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        StepRecord rec;
        rec.t = t;
        rec.indices = std::move(schedule[t]);
        rec.lr_generator = rates[t].first;
        rec.lr_discriminator = rates[t].second;
        rec.z_seed = derive_seed(seed, SeedStream::Latents, t);
        rec.theta = theta;
        const auto batch = assemble_batch(dataset, rec.indices, rec.z_seed, arch.latent_dim);
        theta = guarded_step(model, theta, batch, rec.lr_generator, rec.lr_discriminator, t);
        trace.records.push_back(std::move(rec));
    }
    trace.final_params = std::move(theta);
    return trace;
}

std::vector<double> replay(const TrainingTrace& trace, const ad::Tensor& dataset, std::size_t start,
                           const std::unordered_set<std::uint32_t>& excluded)
{
    if (start > trace.steps()) throw std::invalid_argument("replay start beyond the end of the trace");
    if (start == trace.steps()) return trace.final_params;
    GanModel model(trace.architecture);
    std::vector<double> theta = trace.records[start].theta;
    for (std::size_t t = start; t < trace.steps(); ++t) {
        const auto& rec = trace.records[t];
        const auto batch = assemble_batch(dataset, rec.indices, rec.z_seed, trace.architecture.latent_dim, &excluded);
        theta = guarded_step(model, theta, batch, rec.lr_generator, rec.lr_discriminator, t);
    }
    return theta;
}

void validate_trace(const TrainingTrace& trace, const ad::Tensor& dataset)
{
    if (dataset.rows() != trace.dataset_size) {
        throw TraceError("trace was recorded on " + std::to_string(trace.dataset_size) + " instances, dataset has " +
                         std::to_string(dataset.rows()));
    }
    if (tensor_checksum(dataset) != trace.dataset_checksum) throw TraceError("dataset checksum does not match the trace");
    GanModel model(trace.architecture);
    const std::size_t d = model.parameter_count();
    if (trace.final_params.size() != d) throw TraceError("final parameters have the wrong length");
    for (const auto& rec : trace.records) {
        if (rec.theta.size() != d) throw TraceError("step " + std::to_string(rec.t) + " snapshot has the wrong length");
        if (rec.indices.empty()) throw TraceError("step " + std::to_string(rec.t) + " has an empty batch");
        for (auto i : rec.indices) {
            if (i >= dataset.rows()) throw TraceError("step " + std::to_string(rec.t) + " indexes past the dataset");
        }
    }
    for (std::size_t t = 0; t < trace.records.size(); ++t) {
        if (trace.records[t].t != t) throw TraceError("trace records are out of order");
    }
}

}  // namespace ganinf
