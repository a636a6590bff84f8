#pragma once

// Synthetic pulsatile power Doppler stacks with known artery/vein geometry.
//
// Arterial waveform, phase u = frac((t + phase) / period):
//   rising half (u < 1/2):  u' = (2u)^s / 2      s = upstroke_sharpness
//   falling half:           u' = u
//   a(t) = baseline + pulse_amplitude * (1 - cos(2 pi u')) / 2
// The power law holds the rise back until late in the half period, which
// gives one steep systolic upstroke per beat.
//
// Venous waveform: the arterial pulse delayed by `delay` frames, averaged over
// `smoothing_width` unit-spaced taps centred on the delayed time, and scaled
// by amplitude_ratio around the baseline.
//
// Randomness comes from std::mt19937_64 seeded with rng_seed. Uniform draws
// take the top 53 bits; Gaussian draws use the Box-Muller transform, both
// outputs consumed in order. Geometry is drawn first, then noise in frame,
// row, column order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "holopulse/grid.hpp"
#include "holopulse/io.hpp"

namespace holopulse {

struct ArterialWaveformParams {
    double upstroke_sharpness = 10.0;
    double pulse_amplitude = 1.0;
    double period = 64.0;  // frames
    double phase = 0.0;    // frames

    friend bool operator==(const ArterialWaveformParams&, const ArterialWaveformParams&) = default;
};

struct VenousWaveformParams {
    double amplitude_ratio = 0.4;
    double delay = 16.0;  // frames; a quarter of the default period
    std::size_t smoothing_width = 21;

    friend bool operator==(const VenousWaveformParams&, const VenousWaveformParams&) = default;
};

struct PhantomSpec {
    std::size_t height = 256;
    std::size_t width = 256;
    std::size_t frames = 128;
    std::uint64_t rng_seed = 1;
    std::size_t n_arteries = 4;
    std::size_t n_veins = 4;
    double vessel_width = 5.0;
    ArterialWaveformParams artery_waveform;
    VenousWaveformParams vein_waveform;
    double noise_std = 0.05;
    double baseline = 1.0;

    void validate() const {
        auto bad = [](const std::string& why) { return Error("invalid phantom spec: " + why); };
        if (height < 16 || width < 16) throw bad("height and width must be >= 16");
        if (artery_waveform.period < 8.0) throw bad("period must be >= 8 frames");
        if (static_cast<double>(frames) < 2.0 * artery_waveform.period) throw bad("frames must be >= 2 * period");
        if (!(vein_waveform.amplitude_ratio >= 0.0 && vein_waveform.amplitude_ratio < 1.0)) {
            throw bad("amplitude_ratio must lie in [0, 1)");
        }
        if (!(noise_std >= 0.0)) throw bad("noise_std must be >= 0");
        if (!(artery_waveform.upstroke_sharpness >= 1.0)) throw bad("upstroke_sharpness must be >= 1");
        if (!(artery_waveform.pulse_amplitude >= 0.0)) throw bad("pulse_amplitude must be >= 0");
        if (vein_waveform.smoothing_width < 1) throw bad("smoothing_width must be >= 1");
        if (!(vessel_width >= 1.0)) throw bad("vessel_width must be >= 1");
        for (double v : {artery_waveform.phase, vein_waveform.delay, baseline}) {
            if (!std::isfinite(v)) throw bad("non-finite parameter");
        }
    }

    friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

inline double arterial_waveform(double t, const ArterialWaveformParams& p, double baseline) {
    const double cyc = (t + p.phase) / p.period;
    const double u = cyc - std::floor(cyc);
    const double warped = u < 0.5 ? 0.5 * std::pow(2.0 * u, p.upstroke_sharpness) : u;
    return baseline + p.pulse_amplitude * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * warped));
}

inline double venous_waveform(double t, const ArterialWaveformParams& art, const VenousWaveformParams& ven,
                              double baseline) {
    const auto w = ven.smoothing_width;
    const double centre = static_cast<double>(w - 1) / 2.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
        acc += arterial_waveform(t - ven.delay - static_cast<double>(k) + centre, art, 0.0);
    }
    return baseline + ven.amplitude_ratio * acc / static_cast<double>(w);
}

struct VesselRecord {
    Label cls = Label::artery;
    std::vector<std::array<double, 2>> polyline;  // (y, x) vertices
    std::size_t pixel_count = 0;
    std::vector<double> waveform;  // noise-free series, one value per frame

    friend bool operator==(const VesselRecord&, const VesselRecord&) = default;
};

struct PhantomTruth {
    TemporalStack stack;
    ClassMask gt_mask;
    std::vector<VesselRecord> vessels;

    friend bool operator==(const PhantomTruth&, const PhantomTruth&) = default;
};

namespace detail {

class PhantomRng {
public:
    explicit PhantomRng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double point_segment_distance(double py, double px, const std::array<double, 2>& a,
                                     const std::array<double, 2>& b) {
    const double dy = b[0] - a[0], dx = b[1] - a[1];
    const double len2 = dy * dy + dx * dx;
    double s = len2 > 0.0 ? ((py - a[0]) * dy + (px - a[1]) * dx) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    const double ey = a[0] + s * dy - py, ex = a[1] + s * dx - px;
    return std::sqrt(ey * ey + ex * ex);
}

/// Pixels whose centres lie within width/2 of the polyline.
inline std::vector<std::size_t> rasterize_polyline(const std::vector<std::array<double, 2>>& poly, double width,
                                                   std::size_t h, std::size_t w) {
    const double r = width / 2.0;
    std::set<std::size_t> px;
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[i + 1];
        const auto y0 = static_cast<std::ptrdiff_t>(std::floor(std::min(a[0], b[0]) - r));
        const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(std::max(a[0], b[0]) + r));
        const auto x0 = static_cast<std::ptrdiff_t>(std::floor(std::min(a[1], b[1]) - r));
        const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(std::max(a[1], b[1]) + r));
        for (auto y = std::max<std::ptrdiff_t>(0, y0); y <= std::min<std::ptrdiff_t>(y1, static_cast<std::ptrdiff_t>(h) - 1); ++y) {
            for (auto x = std::max<std::ptrdiff_t>(0, x0); x <= std::min<std::ptrdiff_t>(x1, static_cast<std::ptrdiff_t>(w) - 1); ++x) {
                if (point_segment_distance(static_cast<double>(y), static_cast<double>(x), a, b) <= r) {
                    px.insert(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x));
                }
            }
        }
    }
    return {px.begin(), px.end()};
}

}  // namespace detail

/// Draws the vessel layout and fills the stack. Pure function of the spec.
inline PhantomTruth generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t H = spec.height, W = spec.width, T = spec.frames;
    detail::PhantomRng rng(spec.rng_seed);

    const double margin = spec.vessel_width + 2.0;
    const double step = 8.0;
    const double length = 0.45 * static_cast<double>(std::min(H, W));
    const auto n_steps = std::max<std::size_t>(2, static_cast<std::size_t>(length / step));
    const auto clearance = static_cast<std::ptrdiff_t>(std::ceil(spec.vessel_width)) + 3;
    constexpr int kMaxAttempts = 2000;

    ClassMask mask(H, W, Label::background);
    BinaryMask forbidden(H, W, 0);
    std::vector<VesselRecord> vessels;

    auto place = [&](Label cls, std::size_t ordinal) {
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            std::vector<std::array<double, 2>> poly;
            double y = rng.uniform(margin, static_cast<double>(H) - 1.0 - margin);
            double x = rng.uniform(margin, static_cast<double>(W) - 1.0 - margin);
            double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            poly.push_back({y, x});
            bool inside = true;
            for (std::size_t s = 0; s < n_steps; ++s) {
                angle += rng.uniform(-0.35, 0.35);
                y += step * std::sin(angle);
                x += step * std::cos(angle);
                if (y < margin || x < margin || y > static_cast<double>(H) - 1.0 - margin ||
                    x > static_cast<double>(W) - 1.0 - margin) {
                    inside = false;
                    break;
                }
                poly.push_back({y, x});
            }
            if (!inside) continue;
            const auto pixels = detail::rasterize_polyline(poly, spec.vessel_width, H, W);
            if (std::any_of(pixels.begin(), pixels.end(), [&](std::size_t i) { return forbidden[i] != 0; })) continue;

            for (auto i : pixels) mask[i] = cls;
            for (auto i : pixels) {
                const auto py = static_cast<std::ptrdiff_t>(i / W), px = static_cast<std::ptrdiff_t>(i % W);
                for (auto yy = py - clearance; yy <= py + clearance; ++yy) {
                    for (auto xx = px - clearance; xx <= px + clearance; ++xx) {
                        if (forbidden.contains(yy, xx)) forbidden(yy, xx) = 1;
                    }
                }
            }
            VesselRecord rec;
            rec.cls = cls;
            rec.polyline = std::move(poly);
            rec.pixel_count = pixels.size();
            vessels.push_back(std::move(rec));
            return;
        }
        throw Error(std::string("phantom: could not place ") + (cls == Label::artery ? "artery" : "vein") + " #" +
                    std::to_string(ordinal + 1) + " without overlap after " + std::to_string(kMaxAttempts) +
                    " attempts");
    };
    for (std::size_t i = 0; i < spec.n_arteries; ++i) place(Label::artery, i);
    for (std::size_t i = 0; i < spec.n_veins; ++i) place(Label::vein, i);

    std::vector<double> art(T), ven(T);
    for (std::size_t t = 0; t < T; ++t) {
        art[t] = arterial_waveform(static_cast<double>(t), spec.artery_waveform, spec.baseline);
        ven[t] = venous_waveform(static_cast<double>(t), spec.artery_waveform, spec.vein_waveform, spec.baseline);
    }
    for (auto& v : vessels) v.waveform = v.cls == Label::artery ? art : ven;

    std::vector<float> data(T * H * W);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < H * W; ++i) {
            const double clean = mask[i] == Label::artery ? art[t] : mask[i] == Label::vein ? ven[t] : spec.baseline;
            const double noise = spec.noise_std > 0.0 ? spec.noise_std * rng.normal() : 0.0;
            data[t * H * W + i] = static_cast<float>(clean + noise);
        }
    }
    return PhantomTruth{TemporalStack(T, H, W, std::move(data)), std::move(mask), std::move(vessels)};
}

// ---------------------------------------------------------------- JSON

inline nlohmann::ordered_json to_json(const PhantomSpec& s) {
    nlohmann::ordered_json j;
    j["dims"] = {{"height", s.height}, {"width", s.width}, {"frames", s.frames}};
    j["rng_seed"] = s.rng_seed;
    j["n_arteries"] = s.n_arteries;
    j["n_veins"] = s.n_veins;
    j["vessel_width"] = s.vessel_width;
    j["artery_waveform"] = {{"upstroke_sharpness", s.artery_waveform.upstroke_sharpness},
                            {"pulse_amplitude", s.artery_waveform.pulse_amplitude},
                            {"period", s.artery_waveform.period},
                            {"phase", s.artery_waveform.phase}};
    j["vein_waveform"] = {{"amplitude_ratio", s.vein_waveform.amplitude_ratio},
                          {"delay", s.vein_waveform.delay},
                          {"smoothing_width", s.vein_waveform.smoothing_width}};
    j["noise_std"] = s.noise_std;
    j["baseline"] = s.baseline;
    return j;
}

/// Missing keys keep their defaults, except that an absent vein delay
/// follows the period (a quarter of it). Unknown keys are rejected.
inline PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
    PhantomSpec s;
    auto check_keys = [](const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where) {
        if (!obj.is_object()) throw Error(std::string("phantom spec: '") + where + "' must be an object");
        for (const auto& [key, _] : obj.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                throw Error("phantom spec: unknown key '" + key + "' in " + where);
            }
        }
    };
    try {
        check_keys(j,
                   {"dims", "rng_seed", "n_arteries", "n_veins", "vessel_width", "artery_waveform", "vein_waveform",
                    "noise_std", "baseline"},
                   "spec");
        if (j.contains("dims")) {
            const auto& d = j.at("dims");
            check_keys(d, {"height", "width", "frames"}, "dims");
            s.height = d.value("height", s.height);
            s.width = d.value("width", s.width);
            s.frames = d.value("frames", s.frames);
        }
        s.rng_seed = j.value("rng_seed", s.rng_seed);
        s.n_arteries = j.value("n_arteries", s.n_arteries);
        s.n_veins = j.value("n_veins", s.n_veins);
        s.vessel_width = j.value("vessel_width", s.vessel_width);
        s.noise_std = j.value("noise_std", s.noise_std);
        s.baseline = j.value("baseline", s.baseline);
        if (j.contains("artery_waveform")) {
            const auto& a = j.at("artery_waveform");
            check_keys(a, {"upstroke_sharpness", "pulse_amplitude", "period", "phase"}, "artery_waveform");
            auto& p = s.artery_waveform;
            p.upstroke_sharpness = a.value("upstroke_sharpness", p.upstroke_sharpness);
            p.pulse_amplitude = a.value("pulse_amplitude", p.pulse_amplitude);
            p.period = a.value("period", p.period);
            p.phase = a.value("phase", p.phase);
        }
        s.vein_waveform.delay = s.artery_waveform.period / 4.0;
        if (j.contains("vein_waveform")) {
            const auto& v = j.at("vein_waveform");
            check_keys(v, {"amplitude_ratio", "delay", "smoothing_width"}, "vein_waveform");
            auto& p = s.vein_waveform;
            p.amplitude_ratio = v.value("amplitude_ratio", p.amplitude_ratio);
            p.delay = v.value("delay", p.delay);
            p.smoothing_width = v.value("smoothing_width", p.smoothing_width);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("phantom spec: ") + e.what());
    }
    s.validate();
    return s;
}

inline PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
    try {
        return phantom_spec_from_json(nlohmann::json::parse(detail::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("phantom spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace holopulse
