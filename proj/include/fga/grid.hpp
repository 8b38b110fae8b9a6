#pragma once

#include "fga/types.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace fga {

// Uniform 1D node set x_i = origin + i * spacing, i = 0..n-1. Quadrature is
// the midpoint rule with weight `spacing` per node.
struct Axis {
    double origin = 0.0;
    double spacing = 1.0;
    int n = 0;

    double operator[](int i) const { return origin + spacing * i; }
    double last() const { return (*this)[n - 1]; }

    // n nodes centred on c with the given spacing
    static Axis centered(double c, double spacing, int n) {
        return {c - 0.5 * spacing * (n - 1), spacing, n};
    }
};

inline bool operator==(const Axis& a, const Axis& b) {
    return a.origin == b.origin && a.spacing == b.spacing && a.n == b.n;
}

// Row-major 3D grid: the last axis varies fastest.
struct Grid3 {
    std::array<Axis, 3> axes{};

    std::size_t size() const {
        return static_cast<std::size_t>(axes[0].n) * axes[1].n * axes[2].n;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * axes[1].n + j) * axes[2].n + k;
    }
    Vec3 point(int i, int j, int k) const { return {axes[0][i], axes[1][j], axes[2][k]}; }
    Vec3 point(std::size_t idx) const {
        const int k = static_cast<int>(idx % axes[2].n);
        const int j = static_cast<int>((idx / axes[2].n) % axes[1].n);
        const int i = static_cast<int>(idx / (static_cast<std::size_t>(axes[2].n) * axes[1].n));
        return point(i, j, k);
    }
    double cell_volume() const { return axes[0].spacing * axes[1].spacing * axes[2].spacing; }
    double max_spacing() const {
        return std::max({axes[0].spacing, axes[1].spacing, axes[2].spacing});
    }

    static Grid3 uniform(const Vec3& origin, double spacing, std::array<int, 3> n) {
        Grid3 g;
        for (int d = 0; d < 3; ++d) g.axes[d] = {origin(d), spacing, n[d]};
        return g;
    }
    static Grid3 centered(const Vec3& c, double spacing, int n) {
        Grid3 g;
        for (int d = 0; d < 3; ++d) g.axes[d] = Axis::centered(c(d), spacing, n);
        return g;
    }
};

inline bool operator==(const Grid3& a, const Grid3& b) { return a.axes == b.axes; }

// Complex 3-vector field, components interleaved per node.
struct VectorField {
    Grid3 grid;
    std::vector<cd> data;

    VectorField() = default;
    explicit VectorField(const Grid3& g) : grid(g), data(3 * g.size(), cd{}) {}

    cd& at(std::size_t node, int c) { return data[3 * node + c]; }
    const cd& at(std::size_t node, int c) const { return data[3 * node + c]; }
    CVec3 vec(std::size_t node) const {
        return {data[3 * node], data[3 * node + 1], data[3 * node + 2]};
    }
    std::vector<cd> component(int c) const {
        std::vector<cd> out(grid.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[3 * i + c];
        return out;
    }
};

}  // namespace fga
