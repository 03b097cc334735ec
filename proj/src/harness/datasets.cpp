#include "ganinf/harness/datasets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "ganinf/errors.hpp"
#include "ganinf/train/schedule.hpp"

namespace ganinf {

using ad::Tensor;

Tensor sample_2d_normal(std::size_t n, std::uint64_t seed, std::array<double, 2> mean,
                        std::array<double, 4> covariance)
{
    if (n == 0) throw std::invalid_argument("sample_2d_normal needs N >= 1");
    Eigen::Matrix2d s;
    s << covariance[0], covariance[1], covariance[2], covariance[3];
    Eigen::LLT<Eigen::Matrix2d> llt(s);
    if (llt.info() != Eigen::Success || covariance[1] != covariance[2]) {
        throw ConfigError("covariance is not symmetric positive definite");
    }
    const Eigen::Matrix2d l = llt.matrixL();
    const auto e = standard_normals(seed, 2 * n);
    Tensor out({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d x = l * Eigen::Vector2d(e[2 * i], e[2 * i + 1]);
        out(i, 0) = mean[0] + x(0);
        out(i, 1) = mean[1] + x(1);
    }
    return out;
}

namespace {

// Segments a..g as (row0, col0, row1, col1) inclusive lines on the 8x8 grid.
constexpr std::array<std::array<int, 4>, 7> kSegments = {{
    {1, 2, 1, 5},  // a top
    {1, 5, 4, 5},  // b upper right
    {4, 5, 6, 5},  // c lower right
    {6, 2, 6, 5},  // d bottom
    {4, 2, 6, 2},  // e lower left
    {1, 2, 4, 2},  // f upper left
    {4, 2, 4, 5},  // g middle
}};

constexpr std::array<const char*, 10> kDigitSegments = {"abcdef", "bc",     "abged", "abgcd",   "fgbc",
                                                        "afgcd",  "afgedc", "abc",   "abcdefg", "abcdfg"};

}  // namespace

LabelledSet sample_digits8(std::size_t n, std::uint64_t seed, double noise)
{
    if (n == 0) throw std::invalid_argument("sample_digits8 needs N >= 1");
    std::mt19937_64 rng(seed);
    const auto e = standard_normals(mix64(seed), n * 64);
    LabelledSet out{Tensor({n, 64}, -1.0), std::vector<std::uint32_t>(n), 10};
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = static_cast<std::uint32_t>(bounded(rng, 10));
        const int dr = static_cast<int>(bounded(rng, 3)) - 1;
        const int dc = static_cast<int>(bounded(rng, 3)) - 1;
        out.labels[i] = label;
        for (const char* s = kDigitSegments[label]; *s; ++s) {
            const auto& seg = kSegments[static_cast<std::size_t>(*s - 'a')];
            for (int r = seg[0]; r <= seg[2]; ++r)
                for (int c = seg[1]; c <= seg[3]; ++c)
                    out.x(i, static_cast<std::size_t>((r + dr) * 8 + (c + dc))) = 1.0;
        }
        for (std::size_t p = 0; p < 64; ++p) {
            out.x(i, p) = std::clamp(out.x(i, p) + noise * e[i * 64 + p], -1.0, 1.0);
        }
    }
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path)
{
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw TraceError("truncated IDX header in " + path.string());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v)
{
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace

IdxArray read_idx(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError("cannot open " + path.string());
    const auto magic = read_be32(in, path);
    if ((magic >> 8) != 0x08) throw TraceError(path.string() + " is not an unsigned-byte IDX file");
    const auto rank = magic & 0xff;
    if (rank == 0) throw TraceError(path.string() + " has rank 0");
    IdxArray a;
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        a.dims.push_back(read_be32(in, path));
        total *= a.dims.back();
    }
    a.data.resize(total);
    if (!in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(total))) {
        throw TraceError("truncated IDX payload in " + path.string());
    }
    return a;
}

void write_idx(const std::filesystem::path& path, const IdxArray& array)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError("cannot write " + path.string());
    write_be32(out, 0x0800u | static_cast<std::uint32_t>(array.dims.size()));
    for (auto d : array.dims) write_be32(out, d);
    out.write(reinterpret_cast<const char*>(array.data.data()), static_cast<std::streamsize>(array.data.size()));
}

LabelledSet load_idx_images(const std::filesystem::path& images, const std::filesystem::path& labels,
                            std::size_t side)
{
    const auto img = read_idx(images);
    const auto lbl = read_idx(labels);
    if (img.dims.size() != 3) throw TraceError("IDX images must have rank 3");
    if (lbl.dims.size() != 1 || lbl.dims[0] != img.dims[0]) throw TraceError("IDX labels do not match the images");
    const std::size_t n = img.dims[0], h = img.dims[1], w = img.dims[2];
    if (side == 0 || side > h || side > w) throw ConfigError("image_side must lie in [1, source size]");
    LabelledSet out{Tensor({n, side * side}), {}, 0};
    out.labels.assign(lbl.data.begin(), lbl.data.end());
    out.classes = n ? *std::max_element(out.labels.begin(), out.labels.end()) + 1u : 0u;
    // Area averaging: output pixel (r, c) covers source rows [r h / side, (r + 1) h / side).
    for (std::size_t i = 0; i < n; ++i) {
        const auto* px = img.data.data() + i * h * w;
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c) {
                const std::size_t r0 = r * h / side, r1 = (r + 1) * h / side;
                const std::size_t c0 = c * w / side, c1 = (c + 1) * w / side;
                double s = 0.0;
                for (std::size_t y = r0; y < r1; ++y)
                    for (std::size_t x = c0; x < c1; ++x) s += px[y * w + x];
                const double mean = s / static_cast<double>((r1 - r0) * (c1 - c0));
                out.x(i, r * side + c) = mean / 127.5 - 1.0;
            }
    }
    return out;
}

namespace {

enum : std::uint64_t { kTrainData = 100, kReferenceData = 101, kTestData = 102, kIdxSplit = 103 };

LabelledSet take_rows(const LabelledSet& src, std::span<const std::uint32_t> rows)
{
    LabelledSet out{src.x.gather_rows(rows), {}, src.classes};
    for (auto r : rows) out.labels.push_back(src.labels[r]);
    return out;
}

}  // namespace

ExperimentData make_experiment_data(const DatasetSpec& spec, std::uint64_t seed)
{
    const auto s = [&](std::uint64_t i) { return derive_seed(seed, SeedStream::Evaluation, i); };
    switch (spec.kind) {
    case DatasetKind::Normal2D:
        return {{sample_2d_normal(spec.size, s(kTrainData), spec.mean, spec.covariance), {}, 0},
                {sample_2d_normal(spec.holdout_size, s(kReferenceData), spec.mean, spec.covariance), {}, 0},
                {sample_2d_normal(spec.holdout_size, s(kTestData), spec.mean, spec.covariance), {}, 0}};
    case DatasetKind::Digits8:
        if (spec.image_side != 8) throw ConfigError("digits8 images are 8x8");
        return {sample_digits8(spec.size, s(kTrainData), spec.pixel_noise),
                sample_digits8(spec.holdout_size, s(kReferenceData), spec.pixel_noise),
                sample_digits8(spec.holdout_size, s(kTestData), spec.pixel_noise)};
    case DatasetKind::Idx: {
        const auto all = load_idx_images(spec.idx_images, spec.idx_labels, spec.image_side);
        const std::size_t need = spec.size + 2 * spec.holdout_size;
        if (all.x.rows() < need) {
            throw ConfigError("IDX file has " + std::to_string(all.x.rows()) + " images, config needs " +
                              std::to_string(need));
        }
        auto order = minibatch_schedule(all.x.rows(), all.x.rows(), 1, s(kIdxSplit)).front();
        std::span<const std::uint32_t> o(order);
        return {take_rows(all, o.first(spec.size)), take_rows(all, o.subspan(spec.size, spec.holdout_size)),
                take_rows(all, o.subspan(spec.size + spec.holdout_size, spec.holdout_size))};
    }
    }
    throw ConfigError("unknown dataset kind");
}

}  // namespace ganinf
