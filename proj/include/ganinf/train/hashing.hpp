#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "ganinf/autodiff/tensor.hpp"

namespace ganinf {

/// Incremental SHA-256, hex digest.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::span<const std::byte> bytes);
    void update(std::string_view text);
    void update_f64(std::span<const double> values);
    void update_u64(std::uint64_t v);
    std::string hex_digest();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);

/// Hash of the shape and little-endian bit patterns of every value.
std::string tensor_checksum(const ad::Tensor& t);

}  // namespace ganinf
