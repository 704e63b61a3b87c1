#include "cmf/scribble.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

#include "cmf/morphology.hpp"
#include "cmf/rng.hpp"

namespace cmf {

namespace {

// Skeleton pixels of one slice in curve order: BFS from a seeded endpoint.
std::vector<std::pair<int, int>> skeleton_path(const Grid2& skel, Rng& rng) {
    std::vector<std::pair<int, int>> pixels;
    for (int r = 0; r < skel.h; ++r)
        for (int c = 0; c < skel.w; ++c)
            if (skel.at(r, c)) pixels.emplace_back(r, c);
    if (pixels.empty()) return pixels;

    const auto start = pixels[std::size_t(rng.next_below(pixels.size()))];
    Grid2 seen(skel.h, skel.w);
    std::vector<std::pair<int, int>> order;
    std::deque<std::pair<int, int>> queue{start};
    seen.at(start.first, start.second) = 1;
    while (!queue.empty()) {
        const auto [r, c] = queue.front();
        queue.pop_front();
        order.emplace_back(r, c);
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const int nr = r + dr, nc = c + dc;
                if (nr < 0 || nr >= skel.h || nc < 0 || nc >= skel.w) continue;
                if (!skel.at(nr, nc) || seen.at(nr, nc)) continue;
                seen.at(nr, nc) = 1;
                queue.emplace_back(nr, nc);
            }
    }
    // disconnected skeleton components: append in scan order
    if (order.size() < pixels.size())
        for (auto& px : pixels)
            if (!seen.at(px.first, px.second)) order.push_back(px);
    return order;
}

// Random-walk curve inside an allowed set, collecting up to quota new pixels.
std::int64_t walk_curve(const Grid2& allowed, Grid2& taken, std::int64_t quota, Rng& rng) {
    std::vector<std::pair<int, int>> free_px;
    for (int r = 0; r < allowed.h; ++r)
        for (int c = 0; c < allowed.w; ++c)
            if (allowed.at(r, c) && !taken.at(r, c)) free_px.emplace_back(r, c);
    if (free_px.empty() || quota <= 0) return 0;

    constexpr int kDirs[8][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1},
                                 {1, 0},  {1, -1}, {0, -1}, {-1, -1}};
    std::int64_t collected = 0;
    int restarts = 0;
    auto [r, c] = free_px[std::size_t(rng.next_below(free_px.size()))];
    int dir = int(rng.next_below(8));
    while (collected < quota && restarts < 64) {
        if (allowed.at(r, c) && !taken.at(r, c)) {
            taken.at(r, c) = 1;
            ++collected;
        }
        // occasional gentle turn keeps the walk curve-like
        if (rng.next_double() < 0.25) dir = (dir + (rng.next_double() < 0.5 ? 1 : 7)) % 8;
        bool stepped = false;
        for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
            const int cand = (dir + attempt) % 8;
            const int nr = r + kDirs[cand][0], nc = c + kDirs[cand][1];
            if (nr < 0 || nr >= allowed.h || nc < 0 || nc >= allowed.w) continue;
            if (!allowed.at(nr, nc)) continue;
            r = nr;
            c = nc;
            dir = cand;
            stepped = true;
        }
        if (!stepped) {
            ++restarts;
            std::vector<std::pair<int, int>> remaining;
            for (auto& px : free_px)
                if (!taken.at(px.first, px.second)) remaining.push_back(px);
            if (remaining.empty()) break;
            std::tie(r, c) = remaining[std::size_t(rng.next_below(remaining.size()))];
            dir = int(rng.next_below(8));
        }
    }
    return collected;
}

Grid2 axial_slice(const std::vector<std::uint8_t>& mask, Dims3 dims, int d) {
    Grid2 g(dims.h, dims.w);
    const std::size_t base = std::size_t(d) * dims.h * dims.w;
    for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] = mask[base + i];
    return g;
}

}  // namespace

ScribbleMask gen_scribbles(const LabelMask& gt, ScribbleMode mode, std::uint64_t seed,
                           const ScribbleTargets& targets, ScribbleReport* report) {
    gt.validate();
    const double bg_target =
        mode == ScribbleMode::kAutoBg ? targets.auto_background : targets.background;
    if (targets.foreground <= 0.0 || targets.foreground > 0.01 || bg_target <= 0.0 ||
        bg_target > 0.01)
        throw ConfigError("scribble coverage targets must lie in (0, 0.01]");

    const Dims3 dims = gt.dims;
    const std::int64_t total = dims.voxels();
    ScribbleMask out(dims, gt.num_classes, gt.spacing);
    out.origin = gt.origin;
    ScribbleReport rep;
    rep.class_fraction.assign(std::size_t(gt.num_classes), 0.0);

    // --- foreground: per-slice skeletons of the eroded class region ---
    for (int cls = 1; cls < gt.num_classes; ++cls) {
        std::vector<std::uint8_t> region(gt.values.size());
        std::int64_t region_size = 0;
        for (std::size_t i = 0; i < gt.values.size(); ++i) {
            region[i] = gt.values[i] == cls;
            region_size += region[i];
        }
        if (region_size == 0) continue;

        Rng rng(Rng::mix(seed, 0xF00Dull + std::uint64_t(cls)));
        const std::int64_t quota = std::max<std::int64_t>(
            1, std::llround(targets.foreground * double(total)));

        struct SliceSkel {
            int d;
            std::vector<std::pair<int, int>> path;
        };
        std::vector<SliceSkel> skels;
        std::int64_t skel_total = 0;
        for (int d = 0; d < dims.d; ++d) {
            Grid2 slc = axial_slice(region, dims, d);
            Grid2 interior = erode2d(slc);
            Grid2 skel = thin2d(interior);
            auto path = skeleton_path(skel, rng);
            if (!path.empty()) {
                skel_total += std::int64_t(path.size());
                skels.push_back({d, std::move(path)});
            }
        }
        if (skels.empty()) {
            rep.skipped_classes.push_back(cls);
            continue;
        }

        std::int64_t taken = 0;
        for (const auto& s : skels) {
            if (taken >= quota) break;
            std::int64_t share = std::llround(double(quota) * double(s.path.size()) /
                                              double(skel_total));
            share = std::clamp<std::int64_t>(share, 1, std::int64_t(s.path.size()));
            share = std::min(share, quota - taken);
            for (std::int64_t i = 0; i < share; ++i) {
                const auto [r, c] = s.path[std::size_t(i)];
                out.at(s.d, r, c) = std::uint8_t(cls);
            }
            taken += share;
        }
        // top up from the longest skeletons if rounding undershot
        for (auto& s : skels) {
            if (taken >= quota) break;
            for (std::size_t i = 0; i < s.path.size() && taken < quota; ++i) {
                const auto [r, c] = s.path[i];
                if (out.at(s.d, r, c) == ScribbleMask::kIgnore) {
                    out.at(s.d, r, c) = std::uint8_t(cls);
                    ++taken;
                }
            }
        }
        rep.class_fraction[std::size_t(cls)] = double(taken) / double(total);
    }

    // --- background: random-walk curves with clearance from foreground ---
    {
        std::vector<std::uint8_t> fg(gt.values.size());
        for (std::size_t i = 0; i < gt.values.size(); ++i) fg[i] = gt.values[i] != 0;
        const auto dist_sq = edt_sq(fg, dims, {1.0, 1.0, 1.0});
        const double clearance = mode == ScribbleMode::kAutoBg ? kAutoBgRadius : 2.0;

        std::vector<std::uint8_t> allowed3(gt.values.size());
        for (std::size_t i = 0; i < fg.size(); ++i)
            allowed3[i] = dist_sq[i] >= clearance * clearance;

        Rng rng(Rng::mix(seed, 0xB6ull));
        const std::int64_t quota =
            std::max<std::int64_t>(1, std::llround(bg_target * double(total)));
        std::int64_t taken = 0;

        // spread over slices proportional to allowed area
        std::vector<std::int64_t> area(std::size_t(dims.d), 0);
        std::int64_t area_total = 0;
        for (int d = 0; d < dims.d; ++d) {
            const std::size_t base = std::size_t(d) * dims.h * dims.w;
            for (std::size_t i = 0; i < std::size_t(dims.h) * dims.w; ++i)
                area[std::size_t(d)] += allowed3[base + i];
            area_total += area[std::size_t(d)];
        }
        for (int d = 0; d < dims.d && taken < quota && area_total > 0; ++d) {
            if (area[std::size_t(d)] == 0) continue;
            std::int64_t share = std::llround(double(quota) * double(area[std::size_t(d)]) /
                                              double(area_total));
            share = std::min(share, quota - taken);
            if (share <= 0) continue;
            Grid2 allowed(dims.h, dims.w);
            const std::size_t base = std::size_t(d) * dims.h * dims.w;
            for (std::size_t i = 0; i < allowed.v.size(); ++i) allowed.v[i] = allowed3[base + i];
            if (mode == ScribbleMode::kAutoBg) allowed = erode2d(allowed);
            Grid2 taken2(dims.h, dims.w);
            const auto got = walk_curve(allowed, taken2, share, rng);
            for (int r = 0; r < dims.h; ++r)
                for (int c = 0; c < dims.w; ++c)
                    if (taken2.at(r, c)) out.at(d, r, c) = 0;
            taken += got;
        }
        rep.background_fraction = double(taken) / double(total);
    }

    out.validate();
    if (report) *report = std::move(rep);
    return out;
}

std::int64_t count_scribble_violations(const ScribbleMask& scribble, const LabelMask& gt) {
    if (!(scribble.dims == gt.dims)) throw ShapeError("scribble/gt dims mismatch");
    std::int64_t bad = 0;
    for (std::size_t i = 0; i < scribble.values.size(); ++i) {
        const std::uint8_t s = scribble.values[i];
        if (s == ScribbleMask::kIgnore) continue;
        if (s == 0) {
            if (gt.values[i] != 0) ++bad;
        } else if (gt.values[i] != s) {
            ++bad;
        }
    }
    return bad;
}

}  // namespace cmf
