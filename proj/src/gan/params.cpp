#include "ganinf/gan/params.hpp"

#include <algorithm>
#include <stdexcept>

#include "ganinf/errors.hpp"

namespace ganinf {

std::string to_string(Network net)
{
    return net == Network::Generator ? "generator" : "discriminator";
}

void ParamLayout::add(Network net, std::size_t layer, ParamKind kind, ad::Shape shape)
{
    if (net == Network::Generator && seen_discriminator_) {
        throw std::logic_error("generator parameters must precede discriminator parameters");
    }
    entries_.push_back({net, layer, kind, total_, shape});
    total_ += shape.size();
    if (net == Network::Generator) {
        split_ = total_;
    } else {
        seen_discriminator_ = true;
    }
}

const ParamEntry& ParamLayout::find(Network net, std::size_t layer, ParamKind kind) const
{
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ParamEntry& e) {
        return e.network == net && e.layer == layer && e.kind == kind;
    });
    if (it == entries_.end()) {
        throw std::out_of_range("no " + to_string(net) + " parameter for layer " +
                                std::to_string(layer));
    }
    return *it;
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values))
{
    if (!layout_ || values_.size() != layout_->total_size()) {
        throw ShapeError("parameter vector of length " + std::to_string(values_.size()) +
                         " does not match its layout");
    }
}

ParamVector ParamVector::pack(std::shared_ptr<const ParamLayout> layout,
                              std::span<const ad::Tensor> tensors)
{
    const auto& entries = layout->entries();
    if (tensors.size() != entries.size()) {
        throw ShapeError("pack expects " + std::to_string(entries.size()) + " tensors");
    }
    std::vector<double> values;
    values.reserve(layout->total_size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (tensors[i].shape() != entries[i].shape) {
            throw ShapeError("tensor " + std::to_string(i) + " has shape " +
                             ad::to_string(tensors[i].shape()) + ", layout expects " +
                             ad::to_string(entries[i].shape));
        }
        values.insert(values.end(), tensors[i].data().begin(), tensors[i].data().end());
    }
    return {std::move(layout), std::move(values)};
}

std::vector<ad::Tensor> ParamVector::unpack() const
{
    std::vector<ad::Tensor> out;
    for (const auto& e : layout_->entries()) {
        auto src = std::span<const double>(values_).subspan(e.offset, e.size());
        out.emplace_back(e.shape, std::vector<double>(src.begin(), src.end()));
    }
    return out;
}

std::span<const double> ParamVector::generator_block() const
{
    return std::span<const double>(values_).first(layout_->generator_size());
}

std::span<const double> ParamVector::discriminator_block() const
{
    return std::span<const double>(values_).subspan(layout_->generator_size());
}

}  // namespace ganinf
