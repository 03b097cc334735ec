#include "ganinf/train/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <stdexcept>

namespace ganinf {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>())
{
    impl_->ctx = EVP_MD_CTX_new();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 initialisation failed");
    }
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

void Sha256::update(std::span<const std::byte> bytes)
{
    if (EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size()) != 1) throw std::runtime_error("SHA-256 update failed");
}

void Sha256::update(std::string_view text) { update(std::as_bytes(std::span(text.data(), text.size()))); }

void Sha256::update_u64(std::uint64_t v)
{
    std::array<std::byte, 8> b;
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::byte>(v >> (8 * i));
    update(b);
}

void Sha256::update_f64(std::span<const double> values)
{
    for (double v : values) update_u64(std::bit_cast<std::uint64_t>(v));
}

std::string Sha256::hex_digest()
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx, md, &len) != 1) throw std::runtime_error("SHA-256 finalisation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
    return out;
}

std::string sha256_hex(std::string_view text)
{
    Sha256 h;
    h.update(text);
    return h.hex_digest();
}

std::string tensor_checksum(const ad::Tensor& t)
{
    Sha256 h;
    h.update_u64(t.rows());
    h.update_u64(t.cols());
    h.update_f64(t.data());
    return h.hex_digest();
}

}  // namespace ganinf
