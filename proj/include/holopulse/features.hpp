#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "holopulse/grid.hpp"
#include "holopulse/io.hpp"
#include "holopulse/parallel.hpp"
#include "holopulse/signal.hpp"

namespace holopulse {

inline constexpr std::array<std::string_view, 3> kChannelOrder{"m0", "corr", "diasys"};

/// Power Doppler (M0) image: per-pixel mean over all frames.
inline Image2D temporal_mean(const TemporalStack& stack, std::size_t threads = 0) {
    const std::size_t W = stack.width();
    Image2D out(stack.height(), W, 0.0f);
    parallel_rows(stack.height(), threads, [&](std::size_t y0, std::size_t y1) {
        std::vector<double> acc(W);
        for (std::size_t y = y0; y < y1; ++y) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t t = 0; t < stack.frames(); ++t) {
                const float* row = stack.frame(t).data() + y * W;
                for (std::size_t x = 0; x < W; ++x) acc[x] += row[x];
            }
            for (std::size_t x = 0; x < W; ++x) {
                out(y, x) = static_cast<float>(acc[x] / static_cast<double>(stack.frames()));
            }
        }
    });
    return out;
}

enum class NormMethod { none, percentile_minmax, zscore };

inline std::string_view to_string(NormMethod m) {
    switch (m) {
        case NormMethod::percentile_minmax: return "percentile_minmax";
        case NormMethod::zscore: return "zscore";
        default: return "none";
    }
}

inline NormMethod norm_method_from_string(std::string_view s) {
    if (s == "none") return NormMethod::none;
    if (s == "percentile_minmax") return NormMethod::percentile_minmax;
    if (s == "zscore") return NormMethod::zscore;
    throw Error("unknown normalization method '" + std::string(s) + "'");
}

/// Requested normalization of one channel.
struct NormSpec {
    NormMethod method = NormMethod::none;
    double p_lo = 1.0;
    double p_hi = 99.0;

    static NormSpec none() { return {}; }
    static NormSpec percentile(double lo, double hi) { return {NormMethod::percentile_minmax, lo, hi}; }
    static NormSpec zscore() { return {NormMethod::zscore}; }

    /// Parses "none", "zscore", "percentile" (1..99) or "percentile:<lo>:<hi>".
    static NormSpec parse(std::string_view text) {
        if (text == "none") return none();
        if (text == "zscore") return zscore();
        if (text == "percentile") return percentile(1.0, 99.0);
        if (text.starts_with("percentile:")) {
            auto rest = text.substr(11);
            auto colon = rest.find(':');
            if (colon == std::string_view::npos) throw Error("expected percentile:<lo>:<hi>, got '" + std::string(text) + "'");
            const auto lo = detail::parse_double(rest.substr(0, colon), "in normalization spec");
            const auto hi = detail::parse_double(rest.substr(colon + 1), "in normalization spec");
            if (!(0.0 <= lo && lo < hi && hi <= 100.0)) throw Error("percentile bounds must satisfy 0 <= lo < hi <= 100");
            return percentile(lo, hi);
        }
        throw Error("unknown normalization '" + std::string(text) + "'");
    }
};

/// Normalization actually applied, with the parameters needed to undo it.
struct NormInfo {
    NormMethod method = NormMethod::none;
    double p_lo = 0.0, p_hi = 0.0;  // requested percentiles
    double lo = 0.0, hi = 0.0;      // intensities at those percentiles
    double mean = 0.0, std = 0.0;   // zscore parameters

    friend bool operator==(const NormInfo&, const NormInfo&) = default;
};

inline nlohmann::ordered_json to_json(const NormInfo& n) {
    nlohmann::ordered_json j;
    j["method"] = to_string(n.method);
    if (n.method == NormMethod::percentile_minmax) {
        j["p_lo"] = n.p_lo;
        j["p_hi"] = n.p_hi;
        j["lo"] = n.lo;
        j["hi"] = n.hi;
    } else if (n.method == NormMethod::zscore) {
        j["mean"] = n.mean;
        j["std"] = n.std;
    }
    return j;
}

inline NormInfo norm_info_from_json(const nlohmann::json& j) {
    NormInfo n;
    n.method = norm_method_from_string(j.at("method").get<std::string>());
    if (n.method == NormMethod::percentile_minmax) {
        n.p_lo = j.at("p_lo").get<double>();
        n.p_hi = j.at("p_hi").get<double>();
        n.lo = j.at("lo").get<double>();
        n.hi = j.at("hi").get<double>();
    } else if (n.method == NormMethod::zscore) {
        n.mean = j.at("mean").get<double>();
        n.std = j.at("std").get<double>();
    }
    return n;
}

struct NormalizedImage {
    Image2D image;
    NormInfo info;
};

/// percentile_minmax clips to the [p_lo, p_hi] percentile intensities and maps
/// that range onto [0, 1] (a degenerate range maps to 0). zscore gives zero
/// mean and unit population deviation.
inline NormalizedImage normalize_channel(const Image2D& img, const NormSpec& spec) {
    NormalizedImage out{img, {}};
    out.info.method = spec.method;
    if (spec.method == NormMethod::none || img.empty()) return out;

    std::vector<double> values(img.begin(), img.end());
    if (spec.method == NormMethod::percentile_minmax) {
        if (!(0.0 <= spec.p_lo && spec.p_lo < spec.p_hi && spec.p_hi <= 100.0)) {
            throw Error("percentile bounds must satisfy 0 <= p_lo < p_hi <= 100");
        }
        std::sort(values.begin(), values.end());
        auto& n = out.info;
        n.p_lo = spec.p_lo;
        n.p_hi = spec.p_hi;
        n.lo = percentile_sorted(values, spec.p_lo);
        n.hi = percentile_sorted(values, spec.p_hi);
        const double range = n.hi - n.lo;
        for (auto& v : out.image) {
            const double c = std::clamp(static_cast<double>(v), n.lo, n.hi);
            v = range > 0.0 ? static_cast<float>((c - n.lo) / range) : 0.0f;
        }
        return out;
    }

    const auto ms = mean_std(values);
    if (is_effectively_constant(ms)) throw Error("zscore normalization of a constant image");
    out.info.mean = ms.mean;
    out.info.std = ms.std;
    for (auto& v : out.image) v = static_cast<float>((static_cast<double>(v) - ms.mean) / ms.std);
    return out;
}

/// Undoes a recorded normalization. Values clipped by percentile_minmax come
/// back as the clip bounds.
inline Image2D denormalize_channel(const Image2D& img, const NormInfo& info) {
    Image2D out = img;
    if (info.method == NormMethod::percentile_minmax) {
        for (auto& v : out) v = static_cast<float>(info.lo + static_cast<double>(v) * (info.hi - info.lo));
    } else if (info.method == NormMethod::zscore) {
        for (auto& v : out) v = static_cast<float>(info.mean + static_cast<double>(v) * info.std);
    }
    return out;
}

struct FeatureNormSpec {
    NormSpec m0 = NormSpec::percentile(1.0, 99.0);
    NormSpec corr = NormSpec::none();
    NormSpec diasys = NormSpec::percentile(1.0, 99.0);
};

struct FeatureChannel {
    std::string name;
    Image2D image;
    NormInfo norm;

    friend bool operator==(const FeatureChannel&, const FeatureChannel&) = default;
};

/// The three-channel segmentation input, always ordered m0, corr, diasys.
class FeatureStack {
public:
    /// Validates the channel set and reorders it canonically.
    static FeatureStack from_channels(std::vector<FeatureChannel> channels) {
        if (channels.size() != kChannelOrder.size()) {
            throw Error("feature stack needs exactly the channels m0, corr, diasys (got " +
                        std::to_string(channels.size()) + ")");
        }
        FeatureStack fs;
        for (auto name : kChannelOrder) {
            auto n = std::count_if(channels.begin(), channels.end(), [&](const auto& c) { return c.name == name; });
            if (n != 1) throw Error("feature stack: channel '" + std::string(name) + "' missing or duplicated");
            auto it = std::find_if(channels.begin(), channels.end(), [&](const auto& c) { return c.name == name; });
            fs.channels_.push_back(std::move(*it));
        }
        for (const auto& c : fs.channels_) require_same_shape(c.image, fs.channels_.front().image, "feature stack");
        return fs;
    }

    const std::vector<FeatureChannel>& channels() const noexcept { return channels_; }
    const FeatureChannel& channel(std::string_view name) const {
        for (const auto& c : channels_) {
            if (c.name == name) return c;
        }
        throw Error("no channel '" + std::string(name) + "'");
    }
    std::size_t height() const { return channels_.front().image.height(); }
    std::size_t width() const { return channels_.front().image.width(); }

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

private:
    std::vector<FeatureChannel> channels_;
};

inline FeatureStack build_feature_stack(const Image2D& m0, const Image2D& corr, const Image2D& diasys_img,
                                        const FeatureNormSpec& spec = {}) {
    require_same_shape(m0, corr, "build_feature_stack");
    require_same_shape(m0, diasys_img, "build_feature_stack");
    std::vector<FeatureChannel> chans;
    for (auto [name, img, ns] : {std::tuple{"m0", &m0, &spec.m0}, std::tuple{"corr", &corr, &spec.corr},
                                 std::tuple{"diasys", &diasys_img, &spec.diasys}}) {
        auto n = normalize_channel(*img, *ns);
        chans.push_back({name, std::move(n.image), n.info});
    }
    return FeatureStack::from_channels(std::move(chans));
}

/// Writes `<dir>/<name>.json|.raw` per channel plus the manifest at
/// `<dir>/<manifest_name>`.
inline void export_feature_stack(const FeatureStack& fs, const std::filesystem::path& dir,
                                 const std::string& manifest_name = "features.json") {
    nlohmann::ordered_json manifest;
    manifest["channels"] = nlohmann::ordered_json::array();
    for (const auto& c : fs.channels()) {
        const auto file = c.name + ".json";
        save_map(c.image, dir / file);
        nlohmann::ordered_json entry;
        entry["name"] = c.name;
        entry["file"] = file;
        entry["norm"] = to_json(c.norm);
        manifest["channels"].push_back(entry);
    }
    manifest["height"] = fs.height();
    manifest["width"] = fs.width();
    detail::write_file(dir / manifest_name, manifest.dump(2) + "\n");
}

inline FeatureStack import_feature_stack(const std::filesystem::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(detail::read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed feature manifest '" + manifest_path.string() + "': " + e.what());
    }
    const auto dir = manifest_path.parent_path();
    std::vector<FeatureChannel> chans;
    try {
        for (const auto& entry : manifest.at("channels")) {
            FeatureChannel c;
            c.name = entry.at("name").get<std::string>();
            c.image = load_map(dir / entry.at("file").get<std::string>());
            c.norm = norm_info_from_json(entry.at("norm"));
            chans.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed feature manifest '" + manifest_path.string() + "': " + e.what());
    }
    auto fs = FeatureStack::from_channels(std::move(chans));
    if (fs.height() != manifest.at("height").get<std::size_t>() || fs.width() != manifest.at("width").get<std::size_t>()) {
        throw Error("feature manifest dims disagree with channel files");
    }
    return fs;
}

}  // namespace holopulse
