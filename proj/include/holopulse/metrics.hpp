#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "holopulse/grid.hpp"
#include "holopulse/signal.hpp"
#include "holopulse/skeleton.hpp"

namespace holopulse {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        c.tp += p && g;
        c.fp += p && !g;
        c.fn += !p && g;
        c.tn += !p && !g;
    }
    return c;
}

/// One-vs-rest counts for `cls`.
inline ConfusionCounts confusion_counts(const ClassMask& pred, const ClassMask& gt, Label cls) {
    return confusion_counts(class_to_binary(pred, cls), class_to_binary(gt, cls));
}

/// TP / (TP + FN); undefined when the ground-truth class is empty.
inline std::optional<double> sensitivity(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// 2TP / (2TP + FP + FN); undefined when both masks are empty.
inline std::optional<double> dice(const ConfusionCounts& c) {
    const auto den = 2 * c.tp + c.fp + c.fn;
    if (den == 0) return std::nullopt;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

/// Centerline Dice: harmonic mean of topology precision |S(pred) & gt| / |S(pred)|
/// and topology sensitivity |S(gt) & pred| / |S(gt)|, S being skeletonize().
/// Empty operands give 0 and append a warning.
inline double cl_dice(const BinaryMask& pred, const BinaryMask& gt, std::vector<std::string>* warnings = nullptr) {
    require_same_shape(pred, gt, "cl_dice");
    if (count_foreground(pred) == 0 || count_foreground(gt) == 0) {
        if (warnings) warnings->push_back("cl_dice: empty mask, reported as 0");
        return 0.0;
    }
    const auto sp = skeletonize(pred);
    const auto sg = skeletonize(gt);
    std::size_t sp_n = 0, sp_hit = 0, sg_n = 0, sg_hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (sp[i]) {
            ++sp_n;
            sp_hit += gt[i] != 0;
        }
        if (sg[i]) {
            ++sg_n;
            sg_hit += pred[i] != 0;
        }
    }
    if (sp_n == 0 || sg_n == 0) return 0.0;
    const double tprec = static_cast<double>(sp_hit) / static_cast<double>(sp_n);
    const double tsens = static_cast<double>(sg_hit) / static_cast<double>(sg_n);
    if (tprec + tsens == 0.0) return 0.0;
    return 2.0 * tprec * tsens / (tprec + tsens);
}

namespace detail {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), exact on
// integer inputs. Infinite samples contribute no parabola.
inline void squared_edt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const std::size_t n = f.size();
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        const double fq = f[q] + static_cast<double>(q) * static_cast<double>(q);
        if (!any) {
            any = true;
            k = 0;
            v[0] = q;
            z[0] = -std::numeric_limits<double>::infinity();
            z[1] = std::numeric_limits<double>::infinity();
            continue;
        }
        for (;;) {
            const auto vk = v[k];
            const double fv = f[vk] + static_cast<double>(vk) * static_cast<double>(vk);
            const double s = (fq - fv) / (2.0 * (static_cast<double>(q) - static_cast<double>(vk)));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            if (s <= z[k]) {
                v[0] = q;
                z[0] = -std::numeric_limits<double>::infinity();
                z[1] = std::numeric_limits<double>::infinity();
                break;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = std::numeric_limits<double>::infinity();
            break;
        }
    }
    if (!any) {
        std::fill(d.begin(), d.end(), std::numeric_limits<double>::infinity());
        return;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < static_cast<double>(q)) ++k;
        const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace detail

/// Exact squared Euclidean distance from every pixel to the nearest set pixel
/// of `target`; +inf everywhere when `target` is empty.
inline Grid<double> squared_distance_transform(const BinaryMask& target) {
    const std::size_t h = target.height(), w = target.width();
    const double inf = std::numeric_limits<double>::infinity();
    Grid<double> g(h, w, inf);
    std::vector<double> f, d;
    f.resize(h);
    d.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t y = 0; y < h; ++y) f[y] = target(y, x) ? 0.0 : inf;
        detail::squared_edt_1d(f, d);
        for (std::size_t y = 0; y < h; ++y) g(y, x) = d[y];
    }
    f.resize(w);
    d.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) f[x] = g(y, x);
        detail::squared_edt_1d(f, d);
        for (std::size_t x = 0; x < w; ++x) g(y, x) = d[x];
    }
    return g;
}

/// Nearest-neighbour distances from each pixel of `from` to the set `to`,
/// in row-major order of `from`.
inline std::vector<double> directed_distances(const BinaryMask& from, const BinaryMask& to) {
    require_same_shape(from, to, "directed_distances");
    const auto dt = squared_distance_transform(to);
    std::vector<double> out;
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i]) out.push_back(std::sqrt(dt[i]));
    }
    return out;
}

/// Symmetric 95th-percentile Hausdorff distance in pixels. +inf when either
/// mask is empty.
inline double hd95(const BinaryMask& pred, const BinaryMask& gt, double pct = 95.0) {
    require_same_shape(pred, gt, "hd95");
    if (count_foreground(pred) == 0 || count_foreground(gt) == 0) return std::numeric_limits<double>::infinity();
    auto a = directed_distances(pred, gt);
    auto b = directed_distances(gt, pred);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return std::max(percentile_sorted(a, pct), percentile_sorted(b, pct));
}

/// Metrics of one class. Undefined (empty ground truth) leaves the optionals
/// empty and hd95 NaN; an empty prediction against a non-empty truth gives
/// hd95 = +inf.
struct ClassMetrics {
    bool defined = false;
    std::optional<double> sensitivity;
    std::optional<double> dice;
    std::optional<double> cl_dice;
    double hd95 = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsReport {
    ClassMetrics vessel;
    ClassMetrics artery;
    ClassMetrics vein;
    ClassMetrics macro_av;  // over artery and vein
    std::vector<std::string> warnings;
};

inline ClassMetrics evaluate_binary(const BinaryMask& pred, const BinaryMask& gt, const std::string& name,
                                    std::vector<std::string>& warnings) {
    ClassMetrics m;
    const auto c = confusion_counts(pred, gt);
    if (c.tp + c.fn == 0) {
        warnings.push_back(name + ": ground truth is empty, metrics undefined");
        return m;
    }
    m.defined = true;
    m.sensitivity = sensitivity(c);
    m.dice = dice(c);
    std::vector<std::string> w;
    m.cl_dice = cl_dice(pred, gt, &w);
    for (auto& s : w) warnings.push_back(name + ": " + s);
    m.hd95 = hd95(pred, gt);
    if (std::isinf(m.hd95)) warnings.push_back(name + ": empty prediction, hd95 = inf (excluded from averages)");
    return m;
}

inline ClassMetrics macro_average(const ClassMetrics& a, const ClassMetrics& b) {
    ClassMetrics out;
    auto avg = [](std::initializer_list<std::optional<double>> xs) -> std::optional<double> {
        double s = 0.0;
        int n = 0;
        for (const auto& x : xs) {
            if (x) {
                s += *x;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return s / n;
    };
    out.defined = a.defined || b.defined;
    out.sensitivity = avg({a.sensitivity, b.sensitivity});
    out.dice = avg({a.dice, b.dice});
    out.cl_dice = avg({a.cl_dice, b.cl_dice});
    auto finite = [](const ClassMetrics& m) -> std::optional<double> {
        if (m.defined && std::isfinite(m.hd95)) return m.hd95;
        return std::nullopt;
    };
    out.hd95 = avg({finite(a), finite(b)}).value_or(std::numeric_limits<double>::quiet_NaN());
    return out;
}

/// Artery, vein, and vessel-union (artery or vein) metrics plus the
/// artery/vein macro average.
inline MetricsReport evaluate(const ClassMask& pred, const ClassMask& gt) {
    require_same_shape(pred, gt, "evaluate");
    MetricsReport r;
    r.vessel = evaluate_binary(vessel_mask(pred), vessel_mask(gt), "vessel", r.warnings);
    r.artery = evaluate_binary(class_to_binary(pred, Label::artery), class_to_binary(gt, Label::artery), "artery",
                               r.warnings);
    r.vein = evaluate_binary(class_to_binary(pred, Label::vein), class_to_binary(gt, Label::vein), "vein", r.warnings);
    r.macro_av = macro_average(r.artery, r.vein);
    return r;
}

inline nlohmann::ordered_json to_json(const ClassMetrics& m) {
    auto num = [](std::optional<double> v) -> nlohmann::ordered_json {
        if (v && std::isfinite(*v)) return *v;
        return nullptr;
    };
    nlohmann::ordered_json j;
    j["sensitivity"] = num(m.sensitivity);
    j["dice"] = num(m.dice);
    j["cl_dice"] = num(m.cl_dice);
    j["hd95"] = num(m.hd95);
    j["defined"] = m.defined;
    return j;
}

/// Non-finite values (undefined metrics, infinite hd95) serialize as null.
inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["vessel"] = to_json(r.vessel);
    j["artery"] = to_json(r.artery);
    j["vein"] = to_json(r.vein);
    j["macro_av"] = to_json(r.macro_av);
    return j;
}

}  // namespace holopulse
