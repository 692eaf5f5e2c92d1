#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "stylegest/core/errors.hpp"

namespace stylegest {

using idx = std::int64_t;

// Dense row-major n-d array of doubles. Rank is dynamic; rank 1..3 in practice.
class Array {
public:
    Array() = default;

    explicit Array(std::vector<idx> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    static Array from(std::vector<idx> shape, std::vector<double> data) {
        Array a;
        if (count(shape) != static_cast<idx>(data.size()))
            throw ShapeError("Array::from: shape/data size mismatch");
        a.shape_ = std::move(shape);
        a.data_ = std::move(data);
        return a;
    }

    static Array scalar(double v) { return from({1}, {v}); }

    static Array row(std::vector<double> data) {
        idx n = static_cast<idx>(data.size());
        return from({n}, std::move(data));
    }

    idx rank() const { return static_cast<idx>(shape_.size()); }
    idx dim(idx i) const { return shape_[static_cast<std::size_t>(i)]; }
    idx size() const { return static_cast<idx>(data_.size()); }
    const std::vector<idx>& shape() const { return shape_; }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](idx i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](idx i) const { return data_[static_cast<std::size_t>(i)]; }

    // 2-d accessors (rows x cols)
    idx rows() const { return rank() == 2 ? dim(0) : (rank() == 1 ? 1 : throw_rank()); }
    idx cols() const { return rank() == 2 ? dim(1) : (rank() == 1 ? dim(0) : throw_rank()); }
    double& at(idx r, idx c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
    double at(idx r, idx c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }

    bool same_shape(const Array& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape_[i]);
        return s + ")";
    }

    static idx count(const std::vector<idx>& shape) {
        idx n = 1;
        for (idx d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

private:
    [[noreturn]] idx throw_rank() const { throw ShapeError("Array: 2-d access on rank-" + std::to_string(rank()) + " array"); }

    std::vector<idx> shape_;
    std::vector<double> data_;
};

inline void check_same_shape(const Array& a, const Array& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace stylegest
