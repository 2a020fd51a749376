#include "reflex/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace reflex {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels <= 0) {
        throw ShapeError("Image: invalid dimensions");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

float Image::clamped(int y, int x, int c) const {
    y = std::clamp(y, 0, height_ - 1);
    x = std::clamp(x, 0, width_ - 1);
    return at(y, x, c);
}

double Image::mean() const {
    if (data_.empty()) return 0.0;
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

float Image::max_value() const {
    return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

float Image::min_value() const {
    return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

BinaryEdgeMask::BinaryEdgeMask(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ShapeError("BinaryEdgeMask: invalid dimensions");
    bits_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t BinaryEdgeMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryEdgeMask::subset_of(const BinaryEdgeMask& other) const {
    if (!same_grid(other)) throw ShapeError("BinaryEdgeMask::subset_of: grid mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                         std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                         std::to_string(b.channels()) + ")");
    }
}

Image crop(const Image& img, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || height <= 0 || width <= 0 || y0 + height > img.height() ||
        x0 + width > img.width()) {
        throw ShapeError("crop: window outside image");
    }
    Image out(height, width, img.channels());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

namespace {

// Source coordinate for destination pixel (y, x) of the transformed grid.
struct SourceIndex {
    int src_h, src_w;
    Orientation o;

    [[nodiscard]] std::pair<int, int> operator()(int y, int x) const {
        // Invert rotation: destination was produced by rotating the mirrored image CCW.
        int my = y, mx = x;
        int h = (o.quarter_turns & 1) ? src_w : src_h;
        int w = (o.quarter_turns & 1) ? src_h : src_w;
        for (int t = 0; t < (o.quarter_turns & 3); ++t) {
            // CCW forward map on an (h' x w') grid: (r, c) -> (w'-1-c, r). Inverse: (r, c) -> (c, w'-1-r)
            // where w' is the width of the pre-rotation grid, i.e. the current height.
            const int prev_w = h;
            const int ny = mx;
            const int nx = prev_w - 1 - my;
            my = ny;
            mx = nx;
            std::swap(h, w);
        }
        if (o.mirror) mx = src_w - 1 - mx;
        return {my, mx};
    }
};

}  // namespace

std::pair<int, int> source_coordinate(int dst_y, int dst_x, int src_h, int src_w, Orientation o) {
    return SourceIndex{src_h, src_w, o}(dst_y, dst_x);
}

Image transform(const Image& img, Orientation o) {
    const bool swap = (o.quarter_turns & 1) != 0;
    const int h = swap ? img.width() : img.height();
    const int w = swap ? img.height() : img.width();
    Image out(h, w, img.channels());
    const SourceIndex src{img.height(), img.width(), o};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto [sy, sx] = src(y, x);
            for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    return out;
}

BinaryEdgeMask transform(const BinaryEdgeMask& m, Orientation o) {
    const bool swap = (o.quarter_turns & 1) != 0;
    const int h = swap ? m.width() : m.height();
    const int w = swap ? m.height() : m.width();
    BinaryEdgeMask out(h, w);
    const SourceIndex src{m.height(), m.width(), o};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto [sy, sx] = src(y, x);
            out.set(y, x, m.at(sy, sx));
        }
    return out;
}

std::pair<int, int> transform_direction(int dy, int dx, Orientation o) {
    if (o.mirror) dx = -dx;
    for (int t = 0; t < (o.quarter_turns & 3); ++t) {
        const int ny = -dx;
        const int nx = dy;
        dy = ny;
        dx = nx;
    }
    return {dy, dx};
}

Image to_gray3(const Image& rgb) {
    if (rgb.channels() != 3) throw ShapeError("to_gray3: expected 3 channels");
    Image out(rgb.height(), rgb.width(), 3);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            const float l = 0.299f * rgb.at(y, x, 0) + 0.587f * rgb.at(y, x, 1) + 0.114f * rgb.at(y, x, 2);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = l;
        }
    return out;
}

Image clip01(const Image& img) {
    Image out = img;
    for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

Image quantize8(const Image& img) {
    Image out = img;
    for (float& v : out.data()) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
    return out;
}

Image load_png(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw std::runtime_error("load_png: cannot read " + path.string());
    if (raw.depth() != CV_8U) throw std::runtime_error("load_png: expected 8-bit image " + path.string());
    cv::Mat rgb;
    if (raw.channels() == 1) {
        rgb = raw;
    } else if (raw.channels() == 3) {
        cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
    } else if (raw.channels() == 4) {
        cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB);
    } else {
        throw std::runtime_error("load_png: unsupported channel count in " + path.string());
    }
    Image out(rgb.rows, rgb.cols, rgb.channels());
    for (int y = 0; y < rgb.rows; ++y) {
        const auto* row = rgb.ptr<std::uint8_t>(y);
        for (int x = 0; x < rgb.cols; ++x)
            for (int c = 0; c < rgb.channels(); ++c)
                out.at(y, x, c) = static_cast<float>(row[x * rgb.channels() + c]) / 255.0f;
    }
    return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw ShapeError("save_png: only 1- or 3-channel images can be written");
    }
    cv::Mat mat(img.height(), img.width(), img.channels() == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                row[x * img.channels() + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(img.at(y, x, c), 0.0f, 1.0f) * 255.0f));
    }
    if (img.channels() == 3) cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), mat)) throw std::runtime_error("save_png: cannot write " + path.string());
}

void save_mask_png(const BinaryEdgeMask& mask, const std::filesystem::path& path) {
    cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) mat.at<std::uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    if (!cv::imwrite(path.string(), mat)) throw std::runtime_error("save_mask_png: cannot write " + path.string());
}

}  // namespace reflex
