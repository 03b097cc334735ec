#include "ganinf/gan/architecture.hpp"

#include <cmath>
#include <cstdio>

#include "ganinf/errors.hpp"

namespace ganinf {

std::string to_string(Activation a)
{
    switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    }
    return "identity";
}

std::string to_string(Objective o)
{
    return o == Objective::NonSaturating ? "non_saturating" : "minimax";
}

Activation parse_activation(std::string_view name)
{
    if (name == "identity" || name == "linear") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Objective parse_objective(std::string_view name)
{
    if (name == "non_saturating" || name == "nonsaturating") return Objective::NonSaturating;
    if (name == "minimax") return Objective::Minimax;
    throw ConfigError("unknown objective '" + std::string(name) + "'");
}

void GanArchitecture::validate() const
{
    if (latent_dim == 0 || data_dim == 0) throw ConfigError("latent and data dimensions must be positive");
    if (!(l2_rate >= 0.0) || !std::isfinite(l2_rate)) throw ConfigError("l2_rate must be a non-negative number");
}

std::string GanArchitecture::canonical() const
{
    char rate[64];
    std::snprintf(rate, sizeof rate, "%.17g", l2_rate);
    return "dz=" + std::to_string(latent_dim) + ";dx=" + std::to_string(data_dim) +
           ";hg=" + std::to_string(gen_hidden) + ";hd=" + std::to_string(disc_hidden) +
           ";ag=" + to_string(gen_hidden_activation) + ";ao=" + to_string(gen_output_activation) +
           ";ad=" + to_string(disc_hidden_activation) + ";l2=" + rate +
           ";obj=" + to_string(objective);
}

}  // namespace ganinf
