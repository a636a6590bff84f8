#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "holopulse/grid.hpp"
#include "holopulse/io.hpp"
#include "holopulse/parallel.hpp"
#include "holopulse/signal.hpp"
#include "holopulse/skeleton.hpp"

namespace holopulse {

/// Frame indices of systolic peaks and diastolic valleys, each sorted.
struct PeakSet {
    std::vector<std::size_t> systolic_peaks;
    std::vector<std::size_t> diastolic_valleys;

    friend bool operator==(const PeakSet&, const PeakSet&) = default;
};

struct SegmentVerdict {
    std::int32_t label = 0;
    bool artery_seed = false;
    double score = 0.0;  // max forward difference of the normalized signal
};

struct ArteryClassification {
    std::vector<SegmentVerdict> segments;  // index i holds label i + 1
    std::vector<std::string> warnings;

    std::size_t seed_count() const {
        return static_cast<std::size_t>(
            std::count_if(segments.begin(), segments.end(), [](const auto& s) { return s.artery_seed; }));
    }
};

/// Mean time series of each segment over its pixels dilated by a square of
/// the given radius (clipped to the image). Returns raw, unnormalized signals
/// in label order.
inline std::vector<PulseSignal> segment_signals(const TemporalStack& stack, const LabeledSegments& segs,
                                                std::size_t dilation_radius) {
    if (!stack.same_frame_shape(segs.labels)) throw Error("segment_signals: segment map and stack dims differ");
    if (segs.count == 0) throw Error("segment_signals: no segments");

    const auto h = static_cast<std::ptrdiff_t>(stack.height());
    const auto w = static_cast<std::ptrdiff_t>(stack.width());
    const auto r = static_cast<std::ptrdiff_t>(dilation_radius);

    std::vector<std::vector<std::size_t>> members(segs.count + 1);
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            const auto l = segs.labels(y, x);
            if (l > 0) members[static_cast<std::size_t>(l)].push_back(static_cast<std::size_t>(y * w + x));
        }
    }

    std::vector<std::int32_t> stamp(stack.frame_size(), 0);
    std::vector<PulseSignal> out(segs.count);
    for (std::size_t l = 1; l <= segs.count; ++l) {
        std::vector<std::size_t> region;
        for (auto idx : members[l]) {
            const auto py = static_cast<std::ptrdiff_t>(idx) / w;
            const auto px = static_cast<std::ptrdiff_t>(idx) % w;
            for (auto y = std::max<std::ptrdiff_t>(0, py - r); y <= std::min(h - 1, py + r); ++y) {
                for (auto x = std::max<std::ptrdiff_t>(0, px - r); x <= std::min(w - 1, px + r); ++x) {
                    const auto j = static_cast<std::size_t>(y * w + x);
                    if (stamp[j] != static_cast<std::int32_t>(l)) {
                        stamp[j] = static_cast<std::int32_t>(l);
                        region.push_back(j);
                    }
                }
            }
        }
        std::sort(region.begin(), region.end());
        auto& sig = out[l - 1].values;
        sig.resize(stack.frames());
        for (std::size_t t = 0; t < stack.frames(); ++t) {
            const auto f = stack.frame(t);
            double s = 0.0;
            for (auto j : region) s += f[j];
            sig[t] = s / static_cast<double>(region.size());
        }
    }
    return out;
}

/// Largest forward difference v[t+1] - v[t].
inline double max_forward_difference(std::span<const double> v) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < v.size(); ++t) best = std::max(best, v[t + 1] - v[t]);
    return best;
}

/// Artery rule: normalize each segment signal, optionally smooth it with a
/// centered moving average, and seed the segment as an artery when its
/// steepest rise exceeds `threshold`. Constant signals are left undecided
/// with a warning.
inline ArteryClassification classify_artery_segments(std::span<const PulseSignal> signals, double threshold,
                                                     std::size_t smoothing_width = 1) {
    if (signals.empty()) throw Error("classify_artery_segments: no signals");
    ArteryClassification cls;
    cls.segments.reserve(signals.size());
    for (std::size_t i = 0; i < signals.size(); ++i) {
        SegmentVerdict v;
        v.label = static_cast<std::int32_t>(i + 1);
        if (is_effectively_constant(mean_std(signals[i].values))) {
            cls.warnings.push_back("segment " + std::to_string(i + 1) + " has a constant signal; left undecided");
            cls.segments.push_back(v);
            continue;
        }
        const auto norm = normalize(signals[i].values);
        const auto smoothed = moving_average(norm.values, smoothing_width);
        v.score = max_forward_difference(smoothed);
        v.artery_seed = v.score > threshold;
        cls.segments.push_back(v);
    }
    return cls;
}

inline BinaryMask artery_seed_mask(const LabeledSegments& segs, const ArteryClassification& cls) {
    if (cls.segments.size() != segs.count) {
        throw Error("artery_seed_mask: classification covers " + std::to_string(cls.segments.size()) +
                    " segments, segment map has " + std::to_string(segs.count));
    }
    BinaryMask m(segs.labels.height(), segs.labels.width());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto l = segs.labels[i];
        m[i] = l > 0 && cls.segments[static_cast<std::size_t>(l - 1)].artery_seed;
    }
    return m;
}

/// Per-frame mean over the seed pixels, normalized.
inline PulseSignal global_pulse(const TemporalStack& stack, const BinaryMask& seed_mask) {
    if (!stack.same_frame_shape(seed_mask)) throw Error("global_pulse: seed mask and stack dims differ");
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < seed_mask.size(); ++i) {
        if (seed_mask[i]) seeds.push_back(i);
    }
    if (seeds.empty()) throw Error("global_pulse: empty artery seed mask");
    std::vector<double> raw(stack.frames());
    for (std::size_t t = 0; t < stack.frames(); ++t) {
        const auto f = stack.frame(t);
        double s = 0.0;
        for (auto i : seeds) s += f[i];
        raw[t] = s / static_cast<double>(seeds.size());
    }
    if (is_effectively_constant(mean_std(raw))) throw Error("global_pulse: mean seed signal is constant");
    return normalize(raw);
}

/// Zero-lag Pearson correlation of every pixel's time series with `pulse`.
/// Constant pixel series give 0. Rows are processed independently and each
/// pixel's sums run in frame order, so the result is bit-identical for any
/// thread count.
inline Image2D correlation_map(const TemporalStack& stack, const PulseSignal& pulse, std::size_t threads = 0) {
    if (pulse.size() != stack.frames()) {
        throw Error("correlation_map: pulse has " + std::to_string(pulse.size()) + " samples, stack has " +
                    std::to_string(stack.frames()) + " frames");
    }
    const auto pulse_ms = mean_std(pulse.values);
    if (is_effectively_constant(pulse_ms)) throw Error("correlation_map: pulse is constant");
    const std::size_t T = stack.frames();
    const std::size_t W = stack.width();
    std::vector<double> pc(T);
    double pss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        pc[t] = pulse[t] - pulse_ms.mean;
        pss += pc[t] * pc[t];
    }

    Image2D out(stack.height(), W, 0.0f);
    parallel_rows(stack.height(), threads, [&](std::size_t y0, std::size_t y1) {
        std::vector<double> mean(W), cross(W), ss(W);
        for (std::size_t y = y0; y < y1; ++y) {
            std::fill(mean.begin(), mean.end(), 0.0);
            std::fill(cross.begin(), cross.end(), 0.0);
            std::fill(ss.begin(), ss.end(), 0.0);
            for (std::size_t t = 0; t < T; ++t) {
                const float* row = stack.frame(t).data() + y * W;
                for (std::size_t x = 0; x < W; ++x) mean[x] += row[x];
            }
            for (std::size_t x = 0; x < W; ++x) mean[x] /= static_cast<double>(T);
            for (std::size_t t = 0; t < T; ++t) {
                const float* row = stack.frame(t).data() + y * W;
                for (std::size_t x = 0; x < W; ++x) {
                    const double d = row[x] - mean[x];
                    cross[x] += d * pc[t];
                    ss[x] += d * d;
                }
            }
            for (std::size_t x = 0; x < W; ++x) {
                const MeanStd ms{mean[x], std::sqrt(ss[x] / static_cast<double>(T))};
                if (is_effectively_constant(ms)) continue;
                const double r = cross[x] / std::sqrt(ss[x] * pss);
                out(y, x) = static_cast<float>(std::clamp(r, -1.0, 1.0));
            }
        }
    });
    return out;
}

namespace detail {

/// Strict local maxima with value > 0; a plateau counts once, at its leftmost
/// index, when both sides drop. Then greedy suppression by descending height.
inline std::vector<std::size_t> pick_maxima(std::span<const double> v, std::size_t min_separation) {
    struct Cand {
        std::size_t t;
        double value;
    };
    std::vector<Cand> cands;
    const std::size_t n = v.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        if (j + 1 < n && v[i] > v[i - 1] && v[i] > v[j + 1] && v[i] > 0.0) cands.push_back({i, v[i]});
        i = j + 1;
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.value > b.value; });
    std::vector<std::size_t> kept;
    for (const auto& c : cands) {
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return (c.t > k ? c.t - k : k - c.t) >= min_separation;
        });
        if (clear) kept.push_back(c.t);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

}  // namespace detail

/// Systolic peaks and diastolic valleys of a pulse. Fails only when the
/// signal has neither.
inline PeakSet detect_peaks(const PulseSignal& pulse, std::size_t min_separation) {
    if (min_separation < 1) throw Error("detect_peaks: min_separation must be >= 1");
    PeakSet ps;
    ps.systolic_peaks = detail::pick_maxima(pulse.values, min_separation);
    std::vector<double> neg(pulse.values.size());
    std::transform(pulse.values.begin(), pulse.values.end(), neg.begin(), [](double x) { return -x; });
    ps.diastolic_valleys = detail::pick_maxima(neg, min_separation);
    if (ps.systolic_peaks.empty() && ps.diastolic_valleys.empty()) {
        throw Error("detect_peaks: no peaks found (flat or monotone pulse)");
    }
    return ps;
}

/// Default peak spacing: an eighth of the sequence, at least one frame.
inline std::size_t default_min_separation(std::size_t frames) { return std::max<std::size_t>(1, frames / 8); }

/// Frames within half_window of any index, each counted once.
inline std::vector<std::size_t> frames_around(std::size_t frames, std::span<const std::size_t> indices,
                                              std::size_t half_window) {
    std::vector<bool> used(frames, false);
    for (auto i : indices) {
        if (i >= frames) throw Error("frame index " + std::to_string(i) + " out of range");
        const auto lo = i >= half_window ? i - half_window : 0;
        const auto hi = std::min(frames - 1, i + std::min(half_window, frames));
        for (auto t = lo; t <= hi; ++t) used[t] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < frames; ++t) {
        if (used[t]) out.push_back(t);
    }
    return out;
}

inline Image2D average_frames_around(const TemporalStack& stack, std::span<const std::size_t> indices,
                                     std::size_t half_window, std::size_t threads = 0) {
    if (indices.empty()) throw Error("average_frames_around: no frame indices");
    const auto sel = frames_around(stack.frames(), indices, half_window);
    const std::size_t W = stack.width();
    Image2D out(stack.height(), W, 0.0f);
    parallel_rows(stack.height(), threads, [&](std::size_t y0, std::size_t y1) {
        std::vector<double> acc(W);
        for (std::size_t y = y0; y < y1; ++y) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (auto t : sel) {
                const float* row = stack.frame(t).data() + y * W;
                for (std::size_t x = 0; x < W; ++x) acc[x] += row[x];
            }
            for (std::size_t x = 0; x < W; ++x) out(y, x) = static_cast<float>(acc[x] / static_cast<double>(sel.size()));
        }
    });
    return out;
}

/// Systolic image minus diastolic image.
inline Image2D diasys(const Image2D& systole, const Image2D& diastole) {
    require_same_shape(systole, diastole, "diasys");
    Image2D out(systole.height(), systole.width());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = systole[i] - diastole[i];
    return out;
}

}  // namespace holopulse
