#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's algorithms; only its plain data types are shared.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "holopulse/grid.hpp"

namespace oracle {

using holopulse::BinaryMask;

/// Textbook Zhang-Suen thinning with a zero border, no post-processing.
inline BinaryMask zhang_suen(const BinaryMask& in) {
    const long h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
    std::vector<std::vector<int>> img(h + 2, std::vector<int>(w + 2, 0));
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) img[y + 1][x + 1] = in(y, x) ? 1 : 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int iter = 0; iter < 2; ++iter) {
            std::vector<std::pair<long, long>> del;
            for (long y = 1; y <= h; ++y) {
                for (long x = 1; x <= w; ++x) {
                    if (!img[y][x]) continue;
                    int p[10];
                    p[2] = img[y - 1][x];
                    p[3] = img[y - 1][x + 1];
                    p[4] = img[y][x + 1];
                    p[5] = img[y + 1][x + 1];
                    p[6] = img[y + 1][x];
                    p[7] = img[y + 1][x - 1];
                    p[8] = img[y][x - 1];
                    p[9] = img[y - 1][x - 1];
                    int b = 0;
                    for (int k = 2; k <= 9; ++k) b += p[k];
                    int a = 0;
                    for (int k = 2; k <= 9; ++k) a += (p[k] == 0 && p[k == 9 ? 2 : k + 1] == 1);
                    const bool c1 = b >= 2 && b <= 6 && a == 1;
                    const bool c2 = iter == 0 ? p[2] * p[4] * p[6] == 0 : p[2] * p[4] * p[8] == 0;
                    const bool c3 = iter == 0 ? p[4] * p[6] * p[8] == 0 : p[2] * p[6] * p[8] == 0;
                    if (c1 && c2 && c3) del.emplace_back(y, x);
                }
            }
            for (auto [y, x] : del) img[y][x] = 0;
            changed |= !del.empty();
        }
    }
    BinaryMask out(in.height(), in.width());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) out(y, x) = static_cast<std::uint8_t>(img[y + 1][x + 1]);
    return out;
}

/// 8-connected component count via union-find.
inline std::size_t component_count(const BinaryMask& m) {
    const long h = static_cast<long>(m.height()), w = static_cast<long>(m.width());
    std::vector<long> parent(h * w);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](long i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            if (!m(y, x)) continue;
            for (long dy = -1; dy <= 1; ++dy) {
                for (long dx = -1; dx <= 1; ++dx) {
                    const long ny = y + dy, nx = x + dx;
                    if (ny < 0 || nx < 0 || ny >= h || nx >= w || !m(ny, nx)) continue;
                    parent[find(y * w + x)] = find(ny * w + nx);
                }
            }
        }
    }
    std::size_t n = 0;
    for (long i = 0; i < h * w; ++i) n += m[i] && find(i) == i;
    return n;
}

/// Neighbour count by direct enumeration.
inline int neighbours(const BinaryMask& m, long y, long x) {
    int n = 0;
    for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx)
            if ((dy || dx) && m.contains(y + dy, x + dx) && m(y + dy, x + dx)) ++n;
    return n;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Brute-force nearest distances from every pixel of `from` to `to`.
inline std::vector<double> all_pairs_nearest(const BinaryMask& from, const BinaryMask& to) {
    std::vector<std::pair<long, long>> targets;
    for (long y = 0; y < static_cast<long>(to.height()); ++y)
        for (long x = 0; x < static_cast<long>(to.width()); ++x)
            if (to(y, x)) targets.emplace_back(y, x);
    std::vector<double> out;
    for (long y = 0; y < static_cast<long>(from.height()); ++y) {
        for (long x = 0; x < static_cast<long>(from.width()); ++x) {
            if (!from(y, x)) continue;
            long best = std::numeric_limits<long>::max();
            for (auto [ty, tx] : targets) best = std::min(best, (ty - y) * (ty - y) + (tx - x) * (tx - x));
            out.push_back(std::sqrt(static_cast<double>(best)));
        }
    }
    return out;
}

/// Inclusive linear-interpolated percentile, written out independently.
inline double percentile(std::vector<double> v, double pct) {
    std::sort(v.begin(), v.end());
    const double rank = pct / 100.0 * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(rank);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (rank - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

inline double hd_percentile(const BinaryMask& a, const BinaryMask& b, double pct) {
    return std::max(percentile(all_pairs_nearest(a, b), pct), percentile(all_pairs_nearest(b, a), pct));
}

// ---------------------------------------------------------------- generators

/// Union of a few random filled disks and thick random strokes.
inline BinaryMask random_blobs(std::mt19937_64& rng, std::size_t h, std::size_t w, int shapes = 4) {
    BinaryMask m(h, w);
    std::uniform_real_distribution<double> uy(0, static_cast<double>(h)), ux(0, static_cast<double>(w));
    std::uniform_real_distribution<double> ur(1.0, 5.0), uang(0, 6.283185307179586);
    std::uniform_int_distribution<int> kind(0, 1);
    for (int s = 0; s < shapes; ++s) {
        const double cy = uy(rng), cx = ux(rng), r = ur(rng);
        if (kind(rng) == 0) {
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m(y, x) = 1;
        } else {
            const double a = uang(rng), len = 4.0 + 3.0 * r;
            const double ey = cy + len * std::sin(a), ex = cx + len * std::cos(a);
            const double half = r / 2.0;
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const double dy = ey - cy, dx = ex - cx;
                    double t = ((y - cy) * dy + (x - cx) * dx) / (dy * dy + dx * dx);
                    t = std::clamp(t, 0.0, 1.0);
                    const double py = cy + t * dy - y, px = cx + t * dx - x;
                    if (py * py + px * px <= half * half + 0.25) m(y, x) = 1;
                }
            }
        }
    }
    return m;
}

/// Independent Bernoulli pixels.
inline BinaryMask random_mask(std::mt19937_64& rng, std::size_t h, std::size_t w, double p) {
    BinaryMask m(h, w);
    std::bernoulli_distribution b(p);
    for (auto& v : m) v = b(rng);
    return m;
}

inline holopulse::ClassMask random_class_mask(std::mt19937_64& rng, std::size_t h, std::size_t w) {
    holopulse::ClassMask m(h, w);
    std::uniform_int_distribution<int> d(0, 5);
    for (auto& v : m) {
        const int r = d(rng);
        v = r <= 3 ? holopulse::Label::background : r == 4 ? holopulse::Label::artery : holopulse::Label::vein;
    }
    return m;
}

}  // namespace oracle
