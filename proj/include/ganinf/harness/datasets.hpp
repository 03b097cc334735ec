#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ganinf/autodiff/tensor.hpp"
#include "ganinf/harness/config.hpp"

namespace ganinf {

struct LabelledSet {
    ad::Tensor x;
    std::vector<std::uint32_t> labels;  // empty for unlabelled data
    std::size_t classes = 0;
};

/// Training set, query reference D'_x and test set D_test for one seed.
struct ExperimentData {
    LabelledSet train;
    LabelledSet reference;
    LabelledSet test;
};

/// N draws of mean + L e with L the Cholesky factor of the row-major 2x2 covariance.
ad::Tensor sample_2d_normal(std::size_t n, std::uint64_t seed, std::array<double, 2> mean = {1.0, 1.0},
                            std::array<double, 4> covariance = {1.0, 0.8, 0.8, 1.0});

/// Seven-segment style digits on an 8x8 grid in [-1, 1], jittered by one pixel and noised.
LabelledSet sample_digits8(std::size_t n, std::uint64_t seed, double noise = 0.2);

struct IdxArray {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

/// Unsigned-byte IDX file (big-endian magic 0x0000080N and dimension header).
IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

/// IDX images area-averaged down to side x side, scaled to [-1, 1], with IDX labels.
LabelledSet load_idx_images(const std::filesystem::path& images, const std::filesystem::path& labels,
                            std::size_t side);

ExperimentData make_experiment_data(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace ganinf
