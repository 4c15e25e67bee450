#ifndef SERMUX_COMMON_HPP
#define SERMUX_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sermux {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Dense row-major f64 matrix. cols == 1 doubles as a vector.
struct Tensor {
    std::vector<double> v;
    int rows = 0;
    int cols = 0;

    Tensor() = default;
    Tensor(int r, int c) : v(static_cast<size_t>(r) * c, 0.0), rows(r), cols(c) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    void fill_normal(Rng& rng, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& x : v) x = dist(rng);
    }
    void fill(double value) {
        for (auto& x : v) x = value;
    }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

/// FNV-1a over bytes; stable across platforms, used for config fingerprints.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace sermux

#endif
