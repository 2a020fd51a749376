#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reflex {

/// Dense float image, interleaved HxWxC, values nominally in [0,1].
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, float fill = 0.0f);

    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    [[nodiscard]] float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    /// Clamp-to-edge lookup; coordinates outside the grid read the nearest border pixel.
    [[nodiscard]] float clamped(int y, int x, int c) const;

    [[nodiscard]] std::span<float> data() noexcept { return data_; }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }
    [[nodiscard]] bool same_grid(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    [[nodiscard]] double mean() const;
    [[nodiscard]] float max_value() const;
    [[nodiscard]] float min_value() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    [[nodiscard]] std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Single-channel binary support map (values 0 or 1).
class BinaryEdgeMask {
public:
    BinaryEdgeMask() = default;
    BinaryEdgeMask(int height, int width, std::uint8_t fill = 0);

    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }

    [[nodiscard]] bool at(int y, int x) const { return bits_[index(y, x)] != 0; }
    void set(int y, int x, bool on) { bits_[index(y, x)] = on ? 1 : 0; }

    [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    [[nodiscard]] std::size_t count() const noexcept;

    /// True when every set pixel of this mask is also set in `other`.
    [[nodiscard]] bool subset_of(const BinaryEdgeMask& other) const;

    [[nodiscard]] bool same_grid(const Image& img) const noexcept {
        return height_ == img.height() && width_ == img.width();
    }
    [[nodiscard]] bool same_grid(const BinaryEdgeMask& m) const noexcept {
        return height_ == m.height_ && width_ == m.width_;
    }

    friend bool operator==(const BinaryEdgeMask&, const BinaryEdgeMask&) = default;

private:
    [[nodiscard]] std::size_t index(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

/// The eight elements of the dihedral group acting on the pixel grid.
/// Index bits: rotation quarter-turns (counter-clockwise) in bits 0-1, mirror in bit 2.
/// The mirror is applied first (horizontal flip), then the rotation.
struct Orientation {
    int quarter_turns = 0;
    bool mirror = false;

    [[nodiscard]] static Orientation from_index(int idx) { return {idx & 3, (idx & 4) != 0}; }
    [[nodiscard]] int index() const noexcept { return (quarter_turns & 3) | (mirror ? 4 : 0); }
    friend bool operator==(const Orientation&, const Orientation&) = default;
};

[[nodiscard]] Image crop(const Image& img, int y0, int x0, int height, int width);

/// Source pixel (y, x) on an src_h x src_w grid that lands on destination (dst_y, dst_x) under `o`.
[[nodiscard]] std::pair<int, int> source_coordinate(int dst_y, int dst_x, int src_h, int src_w, Orientation o);
[[nodiscard]] Image transform(const Image& img, Orientation o);
[[nodiscard]] BinaryEdgeMask transform(const BinaryEdgeMask& m, Orientation o);

/// Image of the unit displacement vector (+x) under `o`, as (dy, dx) in {-1,0,1}.
[[nodiscard]] std::pair<int, int> transform_direction(int dy, int dx, Orientation o);

[[nodiscard]] Image to_gray3(const Image& rgb);
[[nodiscard]] Image clip01(const Image& img);

/// 8-bit PNG IO. Loading returns RGB (3 channel) or single-channel images in [0,1].
[[nodiscard]] Image load_png(const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);
void save_mask_png(const BinaryEdgeMask& mask, const std::filesystem::path& path);

/// Quantize to the 8-bit grid exactly as save_png would.
[[nodiscard]] Image quantize8(const Image& img);

}  // namespace reflex
