#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf {

enum class Network { Generator, Discriminator };
enum class ParamKind { Kernel, Bias };

std::string to_string(Network net);

struct ParamEntry {
    Network network = Network::Generator;
    std::size_t layer = 0;
    ParamKind kind = ParamKind::Kernel;
    std::size_t offset = 0;
    ad::Shape shape{};

    [[nodiscard]] std::size_t size() const noexcept { return shape.size(); }
};

/**
 * Index ranges of every kernel and bias inside the flat parameter vector.
 * Generator entries come first, so [0, generator_size) is theta_G and the
 * remainder is theta_D.
 */
class ParamLayout {
public:
    ParamLayout() = default;

    /// Appends an entry; all generator entries must precede discriminator ones.
    void add(Network net, std::size_t layer, ParamKind kind, ad::Shape shape);

    [[nodiscard]] const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const ParamEntry& find(Network net, std::size_t layer, ParamKind kind) const;
    [[nodiscard]] std::size_t total_size() const noexcept { return total_; }
    [[nodiscard]] std::size_t generator_size() const noexcept { return split_; }
    [[nodiscard]] std::size_t discriminator_size() const noexcept { return total_ - split_; }

private:
    std::vector<ParamEntry> entries_;
    std::size_t total_ = 0;
    std::size_t split_ = 0;
    bool seen_discriminator_ = false;
};

/// Flat coupled parameters theta = (theta_G, theta_D) plus their layout.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values);

    /// Concatenates per-entry tensors in layout order.
    static ParamVector pack(std::shared_ptr<const ParamLayout> layout,
                            std::span<const ad::Tensor> tensors);
    /// One tensor per layout entry, in layout order.
    [[nodiscard]] std::vector<ad::Tensor> unpack() const;

    [[nodiscard]] const ParamLayout& layout() const { return *layout_; }
    [[nodiscard]] const std::shared_ptr<const ParamLayout>& layout_ptr() const noexcept { return layout_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& vector() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> generator_block() const;
    [[nodiscard]] std::span<const double> discriminator_block() const;

    friend bool operator==(const ParamVector& a, const ParamVector& b) { return a.values_ == b.values_; }

private:
    std::shared_ptr<const ParamLayout> layout_;
    std::vector<double> values_;
};

}  // namespace ganinf
