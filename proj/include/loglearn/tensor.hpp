#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "loglearn/errors.hpp"

namespace loglearn {

// Dense real tensor, row-major, 64-bit precision.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)), values_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<int64_t> shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (checked_numel(shape_) != static_cast<int64_t>(values_.size()))
            throw ShapeError("tensor: value count does not match shape");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int64_t>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(values_.size()); }

    int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int64_t rows() const { return dim(0); }
    int64_t cols() const { return dim(1); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](int64_t i) { return values_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return values_[static_cast<size_t>(i)]; }

    double& at(int64_t r, int64_t c) { return values_[static_cast<size_t>(r * cols() + c)]; }
    double at(int64_t r, int64_t c) const { return values_[static_cast<size_t>(r * cols() + c)]; }

    bool is_scalar() const { return numel() == 1; }
    double item() const {
        if (!is_scalar()) throw ShapeError("tensor: item() on non-scalar");
        return values_[0];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

    static std::string shape_str(const std::vector<int64_t>& s) {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_str(shape));
            n *= d;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<double> values_;
};

}  // namespace loglearn
