#include "cmf/morphology.hpp"

#include <array>
#include <limits>

namespace cmf {

Grid2 erode2d(const Grid2& g) {
    Grid2 out(g.h, g.w);
    for (int r = 0; r < g.h; ++r)
        for (int c = 0; c < g.w; ++c) {
            if (!g.at(r, c)) continue;
            if (r == 0 || r == g.h - 1 || c == 0 || c == g.w - 1) continue;
            if (g.at(r - 1, c) && g.at(r + 1, c) && g.at(r, c - 1) && g.at(r, c + 1))
                out.at(r, c) = 1;
        }
    return out;
}

namespace {

// Neighbors in Zhang-Suen order: P2..P9 clockwise starting north.
constexpr std::array<std::array<int, 2>, 8> kZsOrder = {
    {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

int zs_neighbor(const Grid2& g, int r, int c, int i) {
    const int nr = r + kZsOrder[std::size_t(i)][0];
    const int nc = c + kZsOrder[std::size_t(i)][1];
    if (nr < 0 || nr >= g.h || nc < 0 || nc >= g.w) return 0;
    return g.at(nr, nc) ? 1 : 0;
}

}  // namespace

Grid2 thin2d(const Grid2& g) {
    Grid2 cur = g;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int phase = 0; phase < 2; ++phase) {
            std::vector<std::pair<int, int>> kill;
            for (int r = 0; r < cur.h; ++r)
                for (int c = 0; c < cur.w; ++c) {
                    if (!cur.at(r, c)) continue;
                    int p[8];
                    int b = 0;
                    for (int i = 0; i < 8; ++i) {
                        p[i] = zs_neighbor(cur, r, c, i);
                        b += p[i];
                    }
                    if (b < 2 || b > 6) continue;
                    int a = 0;
                    for (int i = 0; i < 8; ++i)
                        if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
                    if (a != 1) continue;
                    if (phase == 0) {
                        if (p[0] * p[2] * p[4] != 0) continue;  // P2*P4*P6
                        if (p[2] * p[4] * p[6] != 0) continue;  // P4*P6*P8
                    } else {
                        if (p[0] * p[2] * p[6] != 0) continue;  // P2*P4*P8
                        if (p[0] * p[4] * p[6] != 0) continue;  // P2*P6*P8
                    }
                    kill.emplace_back(r, c);
                }
            for (auto [r, c] : kill) cur.at(r, c) = 0;
            if (!kill.empty()) changed = true;
        }
    }
    return cur;
}

namespace {

constexpr double kInf = 1e30;

// 1D lower envelope of parabolas rooted at (i*scale, f[i]).
void edt_1d(const double* f, double* out, int n, double scale) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    const auto x = [scale](int i) { return double(i) * scale; };
    for (int q = 1; q < n; ++q) {
        double s = 0.0;
        while (true) {
            const int p = v[std::size_t(k)];
            s = ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * x(q) - 2.0 * x(p));
            if (s > z[std::size_t(k)]) break;
            --k;
        }
        ++k;
        v[std::size_t(k)] = q;
        z[std::size_t(k)] = s;
        z[std::size_t(k) + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[std::size_t(k) + 1] < x(q)) ++k;
        const double dx = x(q) - x(v[std::size_t(k)]);
        out[q] = dx * dx + f[v[std::size_t(k)]];
    }
}

}  // namespace

std::vector<double> edt_sq(const std::vector<std::uint8_t>& set_mask, Dims3 dims, Vec3 spacing) {
    std::vector<double> g(set_mask.size());
    for (std::size_t i = 0; i < set_mask.size(); ++i) g[i] = set_mask[i] ? 0.0 : kInf;

    std::vector<double> line_in, line_out;
    const auto pass = [&](int n, std::int64_t stride, std::int64_t count, double scale,
                          auto&& line_base) {
        line_in.resize(std::size_t(n));
        line_out.resize(std::size_t(n));
        for (std::int64_t li = 0; li < count; ++li) {
            const std::int64_t base = line_base(li);
            for (int i = 0; i < n; ++i) line_in[std::size_t(i)] = g[std::size_t(base + i * stride)];
            edt_1d(line_in.data(), line_out.data(), n, scale);
            for (int i = 0; i < n; ++i) g[std::size_t(base + i * stride)] = line_out[std::size_t(i)];
        }
    };

    const std::int64_t hw = std::int64_t(dims.h) * dims.w;
    // along w
    pass(dims.w, 1, std::int64_t(dims.d) * dims.h, spacing.w,
         [&](std::int64_t li) { return li * dims.w; });
    // along h
    pass(dims.h, dims.w, std::int64_t(dims.d) * dims.w, spacing.h, [&](std::int64_t li) {
        const std::int64_t d = li / dims.w;
        const std::int64_t w = li % dims.w;
        return d * hw + w;
    });
    // along d
    pass(dims.d, hw, hw, spacing.d, [&](std::int64_t li) { return li; });
    return g;
}

std::vector<std::uint8_t> boundary6(const std::vector<std::uint8_t>& set_mask, Dims3 dims) {
    std::vector<std::uint8_t> out(set_mask.size(), 0);
    const auto idx = [&](int d, int h, int w) {
        return std::size_t((std::int64_t(d) * dims.h + h) * dims.w + w);
    };
    for (int d = 0; d < dims.d; ++d)
        for (int h = 0; h < dims.h; ++h)
            for (int w = 0; w < dims.w; ++w) {
                if (!set_mask[idx(d, h, w)]) continue;
                const bool edge = d == 0 || d == dims.d - 1 || h == 0 || h == dims.h - 1 ||
                                  w == 0 || w == dims.w - 1;
                if (edge || !set_mask[idx(d - 1, h, w)] || !set_mask[idx(d + 1, h, w)] ||
                    !set_mask[idx(d, h - 1, w)] || !set_mask[idx(d, h + 1, w)] ||
                    !set_mask[idx(d, h, w - 1)] || !set_mask[idx(d, h, w + 1)])
                    out[idx(d, h, w)] = 1;
            }
    return out;
}

}  // namespace cmf
