#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf {

enum class UpdateMode { Simultaneous, Alternating };

std::string to_string(UpdateMode m);
UpdateMode parse_update_mode(std::string_view name);

struct TrainingConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 100;
    double lr_generator = 1e-3;
    double lr_discriminator = 1e-3;
    UpdateMode mode = UpdateMode::Simultaneous;
    /// Alternating mode only: which network moves on even steps.
    bool generator_first = true;

    void validate() const;
    [[nodiscard]] std::string canonical() const;
};

using IndexBatch = std::vector<std::uint32_t>;

// Seed streams. Every random quantity in a run is derived from the run seed
// and one of these tags, so no two consumers share a generator.
enum class SeedStream : std::uint64_t { Init = 1, Schedule = 2, Latents = 3, Evaluation = 4, Selection = 5 };

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index) noexcept;

/// Uniform integer in [0, bound) from a 64-bit engine output stream (rejection sampling).
template <class Engine>
std::uint64_t bounded(Engine& rng, std::uint64_t bound)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Standard normals via Box-Muller on raw mt19937_64 output; bit-stable across standard libraries.
std::vector<double> standard_normals(std::uint64_t seed, std::size_t count);
ad::Tensor regenerate_latents(std::uint64_t z_seed, std::size_t rows, std::size_t latent_dim);

/**
 * K epochs of 0-based indices. Each epoch is a fresh seeded permutation of
 * 0..N-1 cut into batches; the last batch of an epoch is short when
 * batch_size does not divide N.
 */
std::vector<IndexBatch> minibatch_schedule(std::size_t n, std::size_t batch_size, std::size_t epochs,
                                           std::uint64_t seed);

/// Step index where each epoch starts, for the same N, batch size and K.
std::vector<std::size_t> epoch_boundaries(std::size_t n, std::size_t batch_size, std::size_t epochs);

/// (eta_G, eta_D) for every step.
std::vector<std::pair<double, double>> learning_rate_sequence(const TrainingConfig& cfg, std::size_t steps);

}  // namespace ganinf
