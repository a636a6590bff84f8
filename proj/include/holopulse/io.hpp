#pragma once

// On-disk formats:
//   stack / map : <name>.json {height, width, frames, dtype:"f32le", frame_rate?}
//                 + <name>.raw little-endian f32, frame-major, row-major in frame
//   masks       : binary PGM (P5, maxval 255), 0/128/255 = background/vein/artery
//   signals     : CSV, header "frame,value", LF endings

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "holopulse/grid.hpp"
#include "holopulse/signal.hpp"

namespace holopulse {

/// The M0 video: `frames` power Doppler images of height x width.
/// Immutable once constructed; every invariant is checked here.
class TemporalStack {
public:
    TemporalStack(std::size_t frames, std::size_t height, std::size_t width, std::vector<float> data,
                  std::optional<double> frame_rate = std::nullopt)
        : frames_(frames), height_(height), width_(width), frame_rate_(frame_rate), data_(std::move(data)) {
        if (frames_ < 2) throw Error("invalid stack: frames < 2 (got " + std::to_string(frames_) + ")");
        if (height_ == 0 || width_ == 0) throw Error("invalid stack: empty frame");
        if (data_.size() != frames_ * height_ * width_) {
            throw Error("invalid stack: " + std::to_string(data_.size()) + " samples for " +
                        std::to_string(frames_) + "x" + std::to_string(height_) + "x" + std::to_string(width_));
        }
        if (frame_rate_ && !(*frame_rate_ > 0.0 && std::isfinite(*frame_rate_))) {
            throw Error("invalid stack: frame_rate must be > 0");
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                throw Error("invalid stack: non-finite value at sample " + std::to_string(i));
            }
        }
    }

    std::size_t frames() const noexcept { return frames_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t frame_size() const noexcept { return height_ * width_; }
    std::optional<double> frame_rate() const noexcept { return frame_rate_; }

    float operator()(std::size_t t, std::size_t y, std::size_t x) const {
        return data_[(t * height_ + y) * width_ + x];
    }
    std::span<const float> frame(std::size_t t) const {
        return {data_.data() + t * frame_size(), frame_size()};
    }
    std::span<const float> data() const noexcept { return data_; }

    /// Time series of one pixel, in double precision.
    std::vector<double> series(std::size_t y, std::size_t x) const {
        std::vector<double> s(frames_);
        for (std::size_t t = 0; t < frames_; ++t) s[t] = (*this)(t, y, x);
        return s;
    }

    template <class U>
    bool same_frame_shape(const Grid<U>& g) const noexcept {
        return g.height() == height_ && g.width() == width_;
    }

    friend bool operator==(const TemporalStack&, const TemporalStack&) = default;

private:
    std::size_t frames_;
    std::size_t height_;
    std::size_t width_;
    std::optional<double> frame_rate_;
    std::vector<float> data_;
};

namespace detail {

inline std::filesystem::path raw_path_for(const std::filesystem::path& header) {
    auto p = header;
    p.replace_extension(".raw");
    return p;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error("read failure on '" + path.string() + "'");
    return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("write failure on '" + path.string() + "'");
}

inline std::string encode_f32le(std::span<const float> values) {
    std::string buf(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto u = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xFFu);
    }
    return buf;
}

inline std::vector<float> decode_f32le(std::string_view bytes) {
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
            u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        }
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return {buf, end};
}

struct ContainerHeader {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t frames = 0;
    std::optional<double> frame_rate;
};

inline ContainerHeader read_header(const std::filesystem::path& header_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(header_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed header '" + header_path.string() + "': " + e.what());
    }
    ContainerHeader h;
    try {
        h.height = j.at("height").get<std::size_t>();
        h.width = j.at("width").get<std::size_t>();
        h.frames = j.at("frames").get<std::size_t>();
        if (j.value("dtype", std::string("f32le")) != "f32le") {
            throw Error("unsupported dtype '" + j.at("dtype").get<std::string>() + "'");
        }
        if (j.contains("frame_rate") && !j.at("frame_rate").is_null()) {
            h.frame_rate = j.at("frame_rate").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed header '" + header_path.string() + "': " + e.what());
    }
    return h;
}

inline std::vector<float> read_payload(const std::filesystem::path& header_path, const ContainerHeader& h) {
    const auto raw = raw_path_for(header_path);
    if (!std::filesystem::exists(raw)) throw Error("missing payload file '" + raw.string() + "'");
    const auto bytes = read_file(raw);
    const auto expected = h.frames * h.height * h.width * 4;
    if (bytes.size() != expected) {
        throw Error("size mismatch: '" + raw.string() + "' has " + std::to_string(bytes.size()) +
                    " bytes, header declares " + std::to_string(expected));
    }
    return decode_f32le(bytes);
}

inline void write_container(const std::filesystem::path& header_path, std::size_t frames, std::size_t height,
                            std::size_t width, std::optional<double> frame_rate,
                            std::span<const float> payload) {
    nlohmann::ordered_json j;
    j["height"] = height;
    j["width"] = width;
    j["frames"] = frames;
    j["dtype"] = "f32le";
    if (frame_rate) j["frame_rate"] = *frame_rate;
    write_file(raw_path_for(header_path), encode_f32le(payload));
    write_file(header_path, j.dump(2) + "\n");
}

}  // namespace detail

inline TemporalStack load_stack(const std::filesystem::path& header_path) {
    if (!std::filesystem::exists(header_path)) throw Error("missing file '" + header_path.string() + "'");
    const auto h = detail::read_header(header_path);
    if (h.frames < 2) throw Error("invalid stack: frames < 2 (got " + std::to_string(h.frames) + ")");
    auto data = detail::read_payload(header_path, h);
    return TemporalStack(h.frames, h.height, h.width, std::move(data), h.frame_rate);
}

inline void save_stack(const TemporalStack& stack, const std::filesystem::path& header_path) {
    detail::write_container(header_path, stack.frames(), stack.height(), stack.width(), stack.frame_rate(),
                            stack.data());
}

/// Header fields of any float container, stack or map, without reading the payload.
inline detail::ContainerHeader read_container_header(const std::filesystem::path& header_path) {
    if (!std::filesystem::exists(header_path)) throw Error("missing file '" + header_path.string() + "'");
    return detail::read_header(header_path);
}

/// Maps use the stack container with frames = 1.
inline void save_map(const Image2D& img, const std::filesystem::path& header_path) {
    detail::write_container(header_path, 1, img.height(), img.width(), std::nullopt, img.data());
}

inline Image2D load_map(const std::filesystem::path& header_path) {
    if (!std::filesystem::exists(header_path)) throw Error("missing file '" + header_path.string() + "'");
    const auto h = detail::read_header(header_path);
    if (h.frames != 1) throw Error("map container must have frames = 1 (got " + std::to_string(h.frames) + ")");
    auto data = detail::read_payload(header_path, h);
    for (float v : data) {
        if (!std::isfinite(v)) throw Error("map '" + header_path.string() + "' contains a non-finite value");
    }
    return Image2D(h.height, h.width, std::move(data));
}

// ---------------------------------------------------------------- masks

inline Label decode_mask_value(std::uint8_t v) noexcept {
    if (v >= 192) return Label::artery;
    if (v >= 64) return Label::vein;
    return Label::background;
}

inline std::uint8_t encode_mask_value(Label l) noexcept {
    switch (l) {
        case Label::artery: return 255;
        case Label::vein: return 128;
        default: return 0;
    }
}

inline ClassMask parse_pgm(std::string_view bytes, const std::string& name = "<memory>") {
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) -> Error { return Error("malformed PGM '" + name + "': " + why); };
    auto skip_ws_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* field) {
        skip_ws_and_comments();
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
        if (ec != std::errc{}) throw fail(std::string("bad ") + field);
        pos = static_cast<std::size_t>(p - bytes.data());
        return v;
    };

    if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") throw fail("missing P5 magic");
    pos = 2;
    const auto width = read_uint("width");
    const auto height = read_uint("height");
    const auto maxval = read_uint("maxval");
    if (maxval != 255) throw Error("unsupported PGM maxval " + std::to_string(maxval) + " in '" + name + "'");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw fail("missing separator after maxval");
    }
    ++pos;
    if (bytes.size() - pos != width * height) {
        throw fail("expected " + std::to_string(width * height) + " pixel bytes, found " +
                   std::to_string(bytes.size() - pos));
    }
    ClassMask mask(height, width);
    for (std::size_t i = 0; i < width * height; ++i) {
        mask[i] = decode_mask_value(static_cast<std::uint8_t>(bytes[pos + i]));
    }
    return mask;
}

inline ClassMask load_mask(const std::filesystem::path& path) {
    return parse_pgm(detail::read_file(path), path.string());
}

inline std::string encode_pgm(const ClassMask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
    out.reserve(out.size() + mask.size());
    for (auto l : mask) out.push_back(static_cast<char>(encode_mask_value(l)));
    return out;
}

inline void save_mask(const ClassMask& mask, const std::filesystem::path& path) {
    detail::write_file(path, encode_pgm(mask));
}

/// Vessel masks: any artery or vein band reads as foreground.
inline BinaryMask load_binary_mask(const std::filesystem::path& path) { return vessel_mask(load_mask(path)); }

/// Foreground is written as 255.
inline void save_binary_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    ClassMask m(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? Label::artery : Label::background;
    save_mask(m, path);
}

// ---------------------------------------------------------------- signals

inline std::string encode_signal_csv(const PulseSignal& signal) {
    std::string out = "frame,value\n";
    for (std::size_t t = 0; t < signal.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += detail::format_double(signal[t]);
        out += '\n';
    }
    return out;
}

inline void save_signal_csv(const PulseSignal& signal, const std::filesystem::path& path) {
    detail::write_file(path, encode_signal_csv(signal));
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        auto p = line.find(sep, start);
        parts.push_back(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return parts;
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error("bad number '" + std::string(s) + "' " + where);
    return v;
}

inline std::vector<std::vector<std::string_view>> csv_rows(std::string_view text) {
    std::vector<std::vector<std::string_view>> rows;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) rows.push_back(split(line, ','));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return rows;
}

}  // namespace detail

inline PulseSignal load_signal_csv(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    const auto rows = detail::csv_rows(text);
    if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "frame" || rows[0][1] != "value") {
        throw Error("signal CSV '" + path.string() + "' must start with header 'frame,value'");
    }
    PulseSignal s;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto where = "at line " + std::to_string(r + 1) + " of '" + path.string() + "'";
        if (rows[r].size() != 2) throw Error("expected 2 columns " + where);
        if (detail::parse_double(rows[r][0], where) != static_cast<double>(r - 1)) {
            throw Error("frame index out of sequence " + where);
        }
        s.values.push_back(detail::parse_double(rows[r][1], where));
    }
    return s;
}

/// Several equal-length series side by side: header "frame,<name>,<name>,...".
inline void save_signal_table_csv(std::span<const PulseSignal> signals, std::span<const std::string> names,
                                  const std::filesystem::path& path) {
    if (signals.size() != names.size()) throw Error("signal table: one column name per signal required");
    const std::size_t frames = signals.empty() ? 0 : signals.front().size();
    for (const auto& s : signals) {
        if (s.size() != frames) throw Error("signal table: all signals must have the same length");
    }
    std::string out = "frame";
    for (const auto& n : names) out += "," + n;
    out += '\n';
    for (std::size_t t = 0; t < frames; ++t) {
        out += std::to_string(t);
        for (const auto& s : signals) {
            out += ',';
            out += detail::format_double(s[t]);
        }
        out += '\n';
    }
    detail::write_file(path, out);
}

}  // namespace holopulse
