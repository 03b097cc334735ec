#include "ganinf/train/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "ganinf/errors.hpp"

namespace ganinf {

std::string to_string(UpdateMode m) { return m == UpdateMode::Simultaneous ? "simultaneous" : "alternating"; }

UpdateMode parse_update_mode(std::string_view name)
{
    if (name == "simultaneous") return UpdateMode::Simultaneous;
    if (name == "alternating") return UpdateMode::Alternating;
    throw ConfigError("unknown update mode '" + std::string(name) + "'");
}

void TrainingConfig::validate() const
{
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(lr_generator >= 0.0) || !(lr_discriminator >= 0.0) || !std::isfinite(lr_generator) ||
        !std::isfinite(lr_discriminator)) {
        throw ConfigError("learning rates must be finite and non-negative");
    }
}

std::string TrainingConfig::canonical() const
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "K=%zu;batch=%zu;eta_g=%.17g;eta_d=%.17g;mode=%s;gfirst=%d", epochs,
                  batch_size, lr_generator, lr_discriminator, to_string(mode).c_str(), generator_first ? 1 : 0);
    return buf;
}

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index) noexcept
{
    return mix64(mix64(base ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

std::vector<double> standard_normals(std::uint64_t seed, std::size_t count)
{
    std::mt19937_64 rng(seed);
    auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; i += 2) {
        double u1 = unit();
        while (u1 == 0.0) u1 = unit();
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(phi);
        if (i + 1 < count) out[i + 1] = r * std::sin(phi);
    }
    return out;
}

ad::Tensor regenerate_latents(std::uint64_t z_seed, std::size_t rows, std::size_t latent_dim)
{
    return {{rows, latent_dim}, standard_normals(z_seed, rows * latent_dim)};
}

std::vector<IndexBatch> minibatch_schedule(std::size_t n, std::size_t batch_size, std::size_t epochs,
                                           std::uint64_t seed)
{
    if (n == 0) throw std::invalid_argument("schedule over an empty dataset");
    if (batch_size == 0 || batch_size > n) {
        throw std::invalid_argument("batch size " + std::to_string(batch_size) + " not in [1, " +
                                    std::to_string(n) + "]");
    }
    if (n > UINT32_MAX) throw std::invalid_argument("dataset too large for 32-bit indices");
    std::vector<IndexBatch> out;
    out.reserve(epochs * ((n + batch_size - 1) / batch_size));
    std::vector<std::uint32_t> perm(n);
    for (std::size_t k = 0; k < epochs; ++k) {
        std::iota(perm.begin(), perm.end(), 0u);
        std::mt19937_64 rng(derive_seed(seed, SeedStream::Schedule, k));
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(perm[i], perm[bounded(rng, i + 1)]);
        }
        for (std::size_t s = 0; s < n; s += batch_size) {
            const std::size_t e = std::min(n, s + batch_size);
            out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(s),
                             perm.begin() + static_cast<std::ptrdiff_t>(e));
        }
    }
    return out;
}

std::vector<std::size_t> epoch_boundaries(std::size_t n, std::size_t batch_size, std::size_t epochs)
{
    const std::size_t per_epoch = (n + batch_size - 1) / batch_size;
    std::vector<std::size_t> out(epochs);
    for (std::size_t k = 0; k < epochs; ++k) out[k] = k * per_epoch;
    return out;
}

std::vector<std::pair<double, double>> learning_rate_sequence(const TrainingConfig& cfg, std::size_t steps)
{
    std::vector<std::pair<double, double>> out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        if (cfg.mode == UpdateMode::Simultaneous) {
            out[t] = {cfg.lr_generator, cfg.lr_discriminator};
        } else {
            const bool generator_turn = (t % 2 == 0) == cfg.generator_first;
            out[t] = generator_turn ? std::pair{cfg.lr_generator, 0.0} : std::pair{0.0, cfg.lr_discriminator};
        }
    }
    return out;
}

}  // namespace ganinf
