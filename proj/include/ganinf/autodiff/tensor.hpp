#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ganinf::ad {

/// Extents of a dense row-major matrix. Scalars are 1x1, vectors are n x 1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense 64-bit tensor of rank <= 2.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1, 1}, v); }
    static Tensor column(std::span<const double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rows() const noexcept { return shape_.rows; }
    [[nodiscard]] std::size_t cols() const noexcept { return shape_.cols; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }
    std::vector<double> release() && { return std::move(data_); }

    /// Value of a 1x1 tensor.
    [[nodiscard]] double item() const;
    [[nodiscard]] bool all_finite() const noexcept;

    /// Copy of row r as a 1 x cols tensor.
    [[nodiscard]] Tensor row(std::size_t r) const;
    /// Rows selected by index, in the given order.
    [[nodiscard]] Tensor gather_rows(std::span<const std::uint32_t> rows) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

}  // namespace ganinf::ad
