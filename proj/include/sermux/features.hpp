#ifndef SERMUX_FEATURES_HPP
#define SERMUX_FEATURES_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sermux/common.hpp"

namespace sermux {

/// frames x feature_dim matrix of frozen upstream features.
using FrameMatrix = Tensor;

namespace plff {

inline constexpr char kMagic[4] = {'P', 'L', 'F', 'F'};

inline void write_u32(std::ostream& os, uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                          static_cast<unsigned char>((x >> 8) & 0xff),
                          static_cast<unsigned char>((x >> 16) & 0xff),
                          static_cast<unsigned char>((x >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float x) {
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
    uint32_t bits = read_u32(is);
    float x;
    std::memcpy(&x, &bits, 4);
    return x;
}

} // namespace plff

inline void save_frame_features(const FrameMatrix& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open feature file for writing: " + path);
    os.write(plff::kMagic, 4);
    plff::write_u32(os, static_cast<uint32_t>(m.rows));
    plff::write_u32(os, static_cast<uint32_t>(m.cols));
    for (double x : m.v) plff::write_f32(os, static_cast<float>(x));
    if (!os) throw IoError("short write on feature file: " + path);
}

inline FrameMatrix load_frame_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("missing feature file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, plff::kMagic, 4) != 0)
        throw FormatError("bad magic in feature file: " + path);
    uint32_t frames = plff::read_u32(is);
    uint32_t dim = plff::read_u32(is);
    if (!is || frames == 0 || dim == 0)
        throw FormatError("bad header in feature file: " + path);
    FrameMatrix m(static_cast<int>(frames), static_cast<int>(dim));
    for (auto& x : m.v) {
        x = static_cast<double>(plff::read_f32(is));
        if (!is) throw FormatError("truncated payload in feature file: " + path);
    }
    return m;
}

/// Componentwise mean over frames, accumulated in f64.
inline std::vector<double> mean_pool(const FrameMatrix& m) {
    if (m.rows < 1) throw ValidationError("mean_pool: empty frame matrix");
    std::vector<double> out(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        for (int c = 0; c < m.cols; ++c) out[c] += row[c];
    }
    for (auto& x : out) x /= m.rows;
    return out;
}

/// Trainable linear map from pooled feature space into model space.
struct Projector {
    Tensor weight; // model_dim x feature_dim
    Tensor bias;   // model_dim x 1

    Projector() = default;
    Projector(int model_dim, int feature_dim)
        : weight(model_dim, feature_dim), bias(model_dim, 1) {}
};

inline std::vector<double> project(const std::vector<double>& v, const Projector& p) {
    if (static_cast<int>(v.size()) != p.weight.cols)
        throw ValidationError("project: feature dim " + std::to_string(v.size()) +
                              " does not match projector cols " + std::to_string(p.weight.cols));
    std::vector<double> out(p.weight.rows);
    for (int r = 0; r < p.weight.rows; ++r)
        out[r] = dot(p.weight.row(r), v.data(), p.weight.cols) + p.bias.v[r];
    return out;
}

} // namespace sermux

#endif
