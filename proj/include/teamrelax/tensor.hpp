#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace teamrelax {

using Vec = std::vector<double>;

/// Dense row-major matrix. Small enough that we do not pull in a full
/// linear-algebra library for the probability kernels used everywhere.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool empty() const { return data.empty(); }
};

/// Rank-4 tensor indexed (s, x, y, shat), row-major in that order.
/// This index order is the canonical layout for cost tensors and joint
/// distributions, including on-disk formats.
struct Tensor4 {
    int nS = 0, nX = 0, nY = 0, nShat = 0;
    Vec data;

    Tensor4() = default;
    Tensor4(int s, int x, int y, int sh, double fill = 0.0)
        : nS(s), nX(x), nY(y), nShat(sh),
          data(static_cast<size_t>(s) * x * y * sh, fill) {}

    size_t index(int s, int x, int y, int sh) const {
        return ((static_cast<size_t>(s) * nX + x) * nY + y) * nShat + sh;
    }
    double& at(int s, int x, int y, int sh) { return data[index(s, x, y, sh)]; }
    double at(int s, int x, int y, int sh) const { return data[index(s, x, y, sh)]; }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool same_shape(const Tensor4& o) const {
        return nS == o.nS && nX == o.nX && nY == o.nY && nShat == o.nShat;
    }
};

inline double sum(const Vec& v) {
    double t = 0.0;
    for (double x : v) t += x;
    return t;
}

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double t = 0.0;
    for (size_t i = 0; i < a.size(); ++i) t += a[i] * b[i];
    return t;
}

inline double l1_distance(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double t = 0.0;
    for (size_t i = 0; i < a.size(); ++i) t += std::abs(a[i] - b[i]);
    return t;
}

// Row r of a matrix as a copy; handy for per-symbol kernels.
inline Vec row_copy(const Mat& m, int r) {
    Vec out(static_cast<size_t>(m.cols));
    for (int c = 0; c < m.cols; ++c) out[c] = m(r, c);
    return out;
}

} // namespace teamrelax
