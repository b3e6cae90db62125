#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"

namespace ser3d {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor extent must be positive, got " + std::to_string(e));
        n *= e;
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

// Dense row-major N-d array over a real scalar. float carries training,
// double carries gradient checks.
template <typename Scalar>
class Tensor {
public:
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Tensor() = default;

    explicit Tensor(Shape shape, Scalar fill = Scalar(0))
        : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

    Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_))
            throw DimensionError("data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(shape_));
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::vector<Scalar>& values() { return data_; }
    const std::vector<Scalar>& values() const { return data_; }

    Scalar& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    Scalar operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Row-major flat offset of a multi-index.
    std::int64_t offset(std::initializer_list<int> idx) const {
        std::int64_t off = 0;
        std::size_t axis = 0;
        for (int i : idx) {
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    Scalar& at(std::initializer_list<int> idx) { return data_[static_cast<std::size_t>(offset(idx))]; }
    Scalar at(std::initializer_list<int> idx) const { return data_[static_cast<std::size_t>(offset(idx))]; }

    Eigen::Map<VectorType> vec() { return Eigen::Map<VectorType>(data_.data(), numel()); }
    Eigen::Map<const VectorType> vec() const { return Eigen::Map<const VectorType>(data_.data(), numel()); }

    bool all_finite() const {
        for (Scalar v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void require_finite(const char* where) const {
        if (!all_finite()) throw NumericError(std::string(where) + ": non-finite value in tensor " + shape_str(shape_));
    }

    Tensor reshaped(Shape new_shape) const {
        if (shape_numel(new_shape) != numel())
            throw DimensionError("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) + " changes element count");
        Tensor out = *this;
        out.shape_ = std::move(new_shape);
        return out;
    }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> out(shape_);
        for (std::int64_t i = 0; i < numel(); ++i) out[i] = static_cast<Other>(data_[static_cast<std::size_t>(i)]);
        return out;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    Shape shape_;
    std::vector<Scalar> data_;
};

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* where) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(where) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace ser3d
