#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "holopulse/grid.hpp"

namespace holopulse {

/// Length-T time series: one per segment, or the global cardiac pulse.
struct PulseSignal {
    std::vector<double> values;
    bool normalized = false;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t t) const { return values[t]; }

    friend bool operator==(const PulseSignal&, const PulseSignal&) = default;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> v) {
    MeanStd r;
    if (v.empty()) return r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size()));
    return r;
}

/// A series counts as constant when its spread is at float round-off level
/// relative to its magnitude. Stacks are stored as f32, so sums of exactly
/// cancelling pixel series still leave ~1e-7 relative residue.
inline bool is_effectively_constant(const MeanStd& ms) {
    return !(ms.std > 1e-6 * std::max(1.0, std::abs(ms.mean)));
}

/// Zero mean, unit population variance. Throws on a constant series.
inline PulseSignal normalize(std::span<const double> raw) {
    const auto ms = mean_std(raw);
    if (raw.empty() || is_effectively_constant(ms)) {
        throw Error("cannot normalize a constant signal");
    }
    PulseSignal out;
    out.normalized = true;
    out.values.resize(raw.size());
    for (std::size_t t = 0; t < raw.size(); ++t) out.values[t] = (raw[t] - ms.mean) / ms.std;
    return out;
}

/// Linear-interpolated percentile (inclusive definition) of an ascending
/// sequence; `pct` in [0, 100].
inline double percentile_sorted(std::span<const double> sorted, double pct) {
    if (sorted.empty()) throw Error("percentile of an empty set");
    if (!(pct >= 0.0 && pct <= 100.0)) throw Error("percentile must lie in [0, 100]");
    const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Centered moving average; the window is truncated at both ends.
inline std::vector<double> moving_average(std::span<const double> v, std::size_t width) {
    if (width <= 1) return {v.begin(), v.end()};
    const auto n = static_cast<std::ptrdiff_t>(v.size());
    const auto half_lo = static_cast<std::ptrdiff_t>((width - 1) / 2);
    const auto half_hi = static_cast<std::ptrdiff_t>(width / 2);
    std::vector<double> out(v.size());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const auto lo = std::max<std::ptrdiff_t>(0, t - half_lo);
        const auto hi = std::min<std::ptrdiff_t>(n - 1, t + half_hi);
        double s = 0.0;
        for (auto k = lo; k <= hi; ++k) s += v[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(t)] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace holopulse
