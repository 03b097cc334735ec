#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ganinf {

enum class Activation { Identity, Relu, Tanh, Sigmoid };

/// NonSaturating: f_G = -D(G(z)). Minimax: f_G = log(1 - D(G(z))), f_D^z = -f_G.
enum class Objective { NonSaturating, Minimax };

std::string to_string(Activation a);
std::string to_string(Objective o);
Activation parse_activation(std::string_view name);
Objective parse_objective(std::string_view name);

/**
 * Fully-connected generator/discriminator pair. A hidden width of 0 drops the
 * hidden layer. The discriminator head is always a sigmoid.
 */
struct GanArchitecture {
    std::size_t latent_dim = 10;
    std::size_t data_dim = 2;
    std::size_t gen_hidden = 32;
    std::size_t disc_hidden = 64;
    Activation gen_hidden_activation = Activation::Relu;
    Activation gen_output_activation = Activation::Tanh;
    Activation disc_hidden_activation = Activation::Relu;
    /// L2 rate applied to every kernel (not biases) in both mean losses.
    double l2_rate = 1e-3;
    Objective objective = Objective::NonSaturating;

    void validate() const;
    /// Stable textual form used for fingerprints and manifests.
    [[nodiscard]] std::string canonical() const;
};

}  // namespace ganinf
