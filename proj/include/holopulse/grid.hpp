#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace holopulse {

/// Raised for every contract violation in the library. Callers at the CLI
/// boundary turn it into a diagnostic and a nonzero exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Pixel {
    std::ptrdiff_t y = 0;
    std::ptrdiff_t x = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2D raster.
template <class T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill) {}
    Grid(std::size_t height, std::size_t width, std::vector<T> data)
        : height_(height), width_(width), data_(std::move(data)) {
        if (data_.size() != height_ * width_) {
            throw Error("grid payload has " + std::to_string(data_.size()) +
                        " samples, expected " + std::to_string(height_ * width_));
        }
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t y, std::size_t x) { return data_[y * width_ + x]; }
    const T& operator()(std::size_t y, std::size_t x) const { return data_[y * width_ + x]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    bool contains(std::ptrdiff_t y, std::ptrdiff_t x) const noexcept {
        return y >= 0 && x >= 0 && static_cast<std::size_t>(y) < height_ &&
               static_cast<std::size_t>(x) < width_;
    }

    /// Value at (y, x), or `outside` when the coordinate falls off the raster.
    T at_or(std::ptrdiff_t y, std::ptrdiff_t x, T outside) const noexcept {
        return contains(y, x) ? data_[static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)]
                              : outside;
    }

    const std::vector<T>& data() const noexcept { return data_; }
    std::vector<T>& data() noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    template <class U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

/// Scalar map: M0 image, correlation map, systole/diastole, diasys.
using Image2D = Grid<float>;

/// Two-label mask. Nonzero means foreground.
using BinaryMask = Grid<std::uint8_t>;

enum class Label : std::uint8_t { background = 0, artery = 1, vein = 2 };

/// Three-label artery/vein mask.
using ClassMask = Grid<Label>;

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()) + ")");
    }
}

inline std::size_t count_foreground(const BinaryMask& m) {
    std::size_t n = 0;
    for (auto v : m) n += v != 0;
    return n;
}

/// Pixels of `m` carrying `label`, as a binary mask.
inline BinaryMask class_to_binary(const ClassMask& m, Label label) {
    BinaryMask out(m.height(), m.width());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] == label;
    return out;
}

/// Artery or vein pixels, as a binary mask.
inline BinaryMask vessel_mask(const ClassMask& m) {
    BinaryMask out(m.height(), m.width());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] != Label::background;
    return out;
}

}  // namespace holopulse
