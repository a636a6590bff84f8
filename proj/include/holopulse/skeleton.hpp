#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "holopulse/grid.hpp"

namespace holopulse {

/// Integer label image: 0 is background, components are 1..count.
struct LabeledSegments {
    Grid<std::int32_t> labels;
    std::size_t count = 0;

    friend bool operator==(const LabeledSegments&, const LabeledSegments&) = default;
};

namespace detail {

// Ring order P2..P9 of the classic thinning literature: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::array<std::ptrdiff_t, 8> ring_dy{-1, -1, 0, 1, 1, 1, 0, -1};
inline constexpr std::array<std::ptrdiff_t, 8> ring_dx{0, 1, 1, 1, 0, -1, -1, -1};

inline std::uint8_t ring_pattern(const BinaryMask& m, std::ptrdiff_t y, std::ptrdiff_t x) {
    std::uint8_t bits = 0;
    for (int k = 0; k < 8; ++k) {
        if (m.at_or(y + ring_dy[k], x + ring_dx[k], 0)) bits |= static_cast<std::uint8_t>(1u << k);
    }
    return bits;
}

/// Number of 8-connected groups formed by the set bits of a ring pattern,
/// adjacency taken between ring cells themselves (center excluded).
constexpr int ring_components(std::uint8_t bits) {
    int seen = 0;
    int groups = 0;
    for (int start = 0; start < 8; ++start) {
        if (!(bits >> start & 1) || (seen >> start & 1)) continue;
        ++groups;
        int stack[8] = {};
        int top = 0;
        stack[top++] = start;
        seen |= 1 << start;
        while (top > 0) {
            const int c = stack[--top];
            for (int n = 0; n < 8; ++n) {
                if (!(bits >> n & 1) || (seen >> n & 1)) continue;
                auto dy = ring_dy[c] - ring_dy[n];
                auto dx = ring_dx[c] - ring_dx[n];
                if (dy >= -1 && dy <= 1 && dx >= -1 && dx <= 1) {
                    seen |= 1 << n;
                    stack[top++] = n;
                }
            }
        }
    }
    return groups;
}

inline constexpr auto ring_component_lut = [] {
    std::array<std::uint8_t, 256> lut{};
    for (int b = 0; b < 256; ++b) lut[b] = static_cast<std::uint8_t>(ring_components(static_cast<std::uint8_t>(b)));
    return lut;
}();

inline int popcount8(std::uint8_t b) {
    int n = 0;
    for (; b; b &= static_cast<std::uint8_t>(b - 1)) ++n;
    return n;
}

/// One Zhang-Suen sub-iteration. Deletions are decided on the state at the
/// start of the pass and applied together.
inline bool zhang_suen_pass(BinaryMask& img, bool first) {
    std::vector<std::size_t> doomed;
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (!img(y, x)) continue;
            const auto bits = ring_pattern(img, y, x);
            const int b = popcount8(bits);
            if (b < 2 || b > 6) continue;
            int a = 0;
            for (int k = 0; k < 8; ++k) a += !(bits >> k & 1) && (bits >> ((k + 1) % 8) & 1);
            if (a != 1) continue;
            const bool p2 = bits & 1, p4 = bits & 4, p6 = bits & 16, p8 = bits & 64;
            const bool keep = first ? (p2 && p4 && p6) || (p4 && p6 && p8)
                                    : (p2 && p4 && p8) || (p2 && p6 && p8);
            if (!keep) doomed.push_back(static_cast<std::size_t>(y * w + x));
        }
    }
    for (auto i : doomed) img[i] = 0;
    return !doomed.empty();
}

/// Sequentially removes corner pixels that only duplicate an existing
/// diagonal link, leaving an 8-connected minimal curve. A pixel is removed
/// when it has two perpendicular 4-neighbours, at least two neighbours in
/// total, and its neighbours stay one 8-connected group without it.
inline bool remove_staircase_pixels(BinaryMask& img) {
    bool changed = false;
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (!img(y, x)) continue;
            const auto bits = ring_pattern(img, y, x);
            const bool n = bits & 1, e = bits & 4, s = bits & 16, wst = bits & 64;
            const bool corner = (n && e) || (e && s) || (s && wst) || (wst && n);
            if (!corner || popcount8(bits) < 2 || ring_component_lut[bits] != 1) continue;
            img(y, x) = 0;
            changed = true;
        }
    }
    return changed;
}

}  // namespace detail

/// 8-connected component labeling. Labels follow the row-major order of each
/// component's first pixel.
inline LabeledSegments label_components(const BinaryMask& mask) {
    LabeledSegments out{Grid<std::int32_t>(mask.height(), mask.width(), 0), 0};
    const auto h = static_cast<std::ptrdiff_t>(mask.height());
    const auto w = static_cast<std::ptrdiff_t>(mask.width());
    std::vector<Pixel> queue;
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (!mask(y, x) || out.labels(y, x)) continue;
            const auto label = static_cast<std::int32_t>(++out.count);
            out.labels(y, x) = label;
            queue.assign(1, Pixel{y, x});
            for (std::size_t head = 0; head < queue.size(); ++head) {
                const auto p = queue[head];
                for (int k = 0; k < 8; ++k) {
                    const auto ny = p.y + detail::ring_dy[k];
                    const auto nx = p.x + detail::ring_dx[k];
                    if (mask.at_or(ny, nx, 0) && !out.labels(ny, nx)) {
                        out.labels(ny, nx) = label;
                        queue.push_back({ny, nx});
                    }
                }
            }
        }
    }
    return out;
}

/// Number of 8-neighbours of (y, x) that are set in `m`.
inline int neighbor_count(const BinaryMask& m, std::ptrdiff_t y, std::ptrdiff_t x) {
    return detail::popcount8(detail::ring_pattern(m, y, x));
}

/// Zhang-Suen thinning followed by staircase removal, repeated to a fixed
/// point. Any input component that thinning erases entirely (a 2x2 block,
/// for instance) gets back the pixel nearest to its centroid, so every
/// component keeps at least one skeleton pixel. Idempotent.
inline BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask img(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] != 0;

    for (bool changed = true; changed;) {
        changed = false;
        for (bool zs = true; zs;) {
            const bool a = detail::zhang_suen_pass(img, true);
            const bool b = detail::zhang_suen_pass(img, false);
            zs = a || b;
            changed |= zs;
        }
        changed |= detail::remove_staircase_pixels(img);
    }

    const auto comps = label_components(mask);
    if (comps.count == 0) return img;
    struct Acc {
        double sy = 0, sx = 0;
        std::size_t n = 0;
        bool has_skeleton = false;
    };
    std::vector<Acc> acc(comps.count + 1);
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) {
            const auto l = comps.labels(y, x);
            if (!l) continue;
            auto& a = acc[static_cast<std::size_t>(l)];
            a.sy += static_cast<double>(y);
            a.sx += static_cast<double>(x);
            ++a.n;
            a.has_skeleton |= img(y, x) != 0;
        }
    }
    std::vector<double> best_d(comps.count + 1, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> best_i(comps.count + 1, 0);
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) {
            const auto l = static_cast<std::size_t>(comps.labels(y, x));
            if (!l || acc[l].has_skeleton) continue;
            const double cy = acc[l].sy / static_cast<double>(acc[l].n);
            const double cx = acc[l].sx / static_cast<double>(acc[l].n);
            const double d = (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy) +
                             (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx);
            if (d < best_d[l]) {
                best_d[l] = d;
                best_i[l] = y * mask.width() + x;
            }
        }
    }
    for (std::size_t l = 1; l <= comps.count; ++l) {
        if (!acc[l].has_skeleton) img[best_i[l]] = 1;
    }
    return img;
}

/// Skeleton pixels with three or more skeleton 8-neighbours, row-major.
inline std::vector<Pixel> find_junctions(const BinaryMask& skeleton) {
    std::vector<Pixel> out;
    const auto h = static_cast<std::ptrdiff_t>(skeleton.height());
    const auto w = static_cast<std::ptrdiff_t>(skeleton.width());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (skeleton(y, x) && neighbor_count(skeleton, y, x) >= 3) out.push_back({y, x});
        }
    }
    return out;
}

/// Removes junctions, drops pixels left without neighbours, then labels the
/// remaining simple paths.
inline LabeledSegments label_segments(const BinaryMask& skeleton) {
    BinaryMask pruned(skeleton.height(), skeleton.width());
    for (std::size_t i = 0; i < skeleton.size(); ++i) pruned[i] = skeleton[i] != 0;
    for (const auto& p : find_junctions(skeleton)) pruned(p.y, p.x) = 0;

    BinaryMask kept = pruned;
    const auto h = static_cast<std::ptrdiff_t>(pruned.height());
    const auto w = static_cast<std::ptrdiff_t>(pruned.width());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            if (pruned(y, x) && neighbor_count(pruned, y, x) == 0) kept(y, x) = 0;
        }
    }
    return label_components(kept);
}

/// Pixel count per label; index 0 counts background.
inline std::vector<std::size_t> segment_sizes(const LabeledSegments& segs) {
    std::vector<std::size_t> sizes(segs.count + 1, 0);
    for (auto l : segs.labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

inline LabeledSegments prune_short_segments(const LabeledSegments& segs, std::size_t min_len) {
    if (min_len < 1) throw Error("prune_short_segments: min_len must be >= 1");
    const auto sizes = segment_sizes(segs);
    std::vector<std::int32_t> remap(segs.count + 1, 0);
    std::size_t next = 0;
    for (std::size_t l = 1; l <= segs.count; ++l) {
        if (sizes[l] >= min_len) remap[l] = static_cast<std::int32_t>(++next);
    }
    LabeledSegments out{segs.labels, next};
    for (auto& l : out.labels) l = remap[static_cast<std::size_t>(l)];
    return out;
}

/// Pixels of the given label as a binary mask.
inline BinaryMask segment_mask(const LabeledSegments& segs, std::int32_t label) {
    BinaryMask m(segs.labels.height(), segs.labels.width());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = segs.labels[i] == label;
    return m;
}

}  // namespace holopulse
