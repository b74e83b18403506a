#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ganlab/errors.hpp"

namespace ganlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// Dense row-major tensor of 64-bit reals.
struct Tensor {
    Shape shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> vals) : shape(std::move(s)), v(std::move(vals)) {
        if (shape_numel(shape) != v.size())
            throw ShapeError("Tensor: shape " + shape_str(shape) + " does not match value count " +
                             std::to_string(v.size()));
    }

    static Tensor zeros(Shape s) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }
    static Tensor full(Shape s, double x) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, x));
    }
    static Tensor scalar(double x) { return Tensor({1}, {x}); }

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace ganlab
