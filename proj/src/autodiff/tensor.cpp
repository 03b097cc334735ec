#include "ganinf/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ganinf/errors.hpp"

namespace ganinf::ad {

std::string to_string(const Shape& s)
{
    return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data))
{
    if (data_.size() != shape_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + to_string(shape_));
    }
}

Tensor Tensor::column(std::span<const double> v)
{
    return Tensor({v.size(), 1}, std::vector<double>(v.begin(), v.end()));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
{
    return Tensor({rows, cols}, std::vector<double>(values));
}

double Tensor::item() const
{
    if (data_.size() != 1) {
        throw ShapeError("item() on non-scalar tensor " + to_string(shape_));
    }
    return data_[0];
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::row(std::size_t r) const
{
    Tensor out({1, shape_.cols});
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * shape_.cols), shape_.cols,
                out.data_.begin());
    return out;
}

Tensor Tensor::gather_rows(std::span<const std::uint32_t> rows) const
{
    Tensor out({rows.size(), shape_.cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= shape_.rows) {
            throw ShapeError("row index " + std::to_string(rows[i]) + " out of range for " +
                             to_string(shape_));
        }
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * shape_.cols),
                    shape_.cols, out.data_.begin() + static_cast<std::ptrdiff_t>(i * shape_.cols));
    }
    return out;
}

}  // namespace ganinf::ad
