#include "reflex/edge_ops.hpp"

#include <algorithm>
#include <cmath>

namespace reflex {

namespace {

// Sobel magnitude of channel c at (y, x), divided by 4.
float sobel_at(const Image& img, int y, int x, int c) {
    const float gx = (img.clamped(y - 1, x + 1, c) + 2.0f * img.clamped(y, x + 1, c) + img.clamped(y + 1, x + 1, c)) -
                     (img.clamped(y - 1, x - 1, c) + 2.0f * img.clamped(y, x - 1, c) + img.clamped(y + 1, x - 1, c));
    const float gy = (img.clamped(y + 1, x - 1, c) + 2.0f * img.clamped(y + 1, x, c) + img.clamped(y + 1, x + 1, c)) -
                     (img.clamped(y - 1, x - 1, c) + 2.0f * img.clamped(y - 1, x, c) + img.clamped(y - 1, x + 1, c));
    return 0.25f * std::sqrt(gx * gx + gy * gy);
}

void require_grid(const BinaryEdgeMask& m, const Image& img, const char* what) {
    if (!m.same_grid(img)) throw ShapeError(std::string(what) + ": mask/image grid mismatch");
}

void require_grid(const BinaryEdgeMask& a, const BinaryEdgeMask& b, const char* what) {
    if (!a.same_grid(b)) throw ShapeError(std::string(what) + ": mask grid mismatch");
}

}  // namespace

Image luminance(const Image& rgb) {
    if (rgb.channels() == 1) return rgb;
    if (rgb.channels() != 3) throw ShapeError("luminance: expected 1 or 3 channels");
    Image out(rgb.height(), rgb.width(), 1);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x)
            out.at(y, x, 0) = 0.299f * rgb.at(y, x, 0) + 0.587f * rgb.at(y, x, 1) + 0.114f * rgb.at(y, x, 2);
    return out;
}

GradientMap gradient_map(const Image& image) {
    const Image lum = luminance(image);
    Image out(lum.height(), lum.width(), 1);
    for (int y = 0; y < lum.height(); ++y)
        for (int x = 0; x < lum.width(); ++x) out.at(y, x, 0) = sobel_at(lum, y, x, 0);
    return {std::move(out)};
}

EdgeImage edge_image(const Image& image) {
    Image out(image.height(), image.width(), image.channels());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = sobel_at(image, y, x, c);
    return {std::move(out)};
}

BinaryEdgeMask binarize_edges(const EdgeImage& e, float sigma) {
    if (!(sigma > 0.0f)) throw std::invalid_argument("binarize_edges: sigma must be positive");
    const Image& v = e.values;
    BinaryEdgeMask mask(v.height(), v.width());
    for (int y = 0; y < v.height(); ++y)
        for (int x = 0; x < v.width(); ++x) {
            float m = 0.0f;
            for (int c = 0; c < v.channels(); ++c) m = std::max(m, v.at(y, x, c));
            mask.set(y, x, m >= sigma);
        }
    return mask;
}

BinaryEdgeMask residual_mask(const BinaryEdgeMask& m_edges, const BinaryEdgeMask& m_background) {
    require_grid(m_edges, m_background, "residual_mask");
    BinaryEdgeMask out(m_edges.height(), m_edges.width());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out.set(y, x, m_edges.at(y, x) && !m_background.at(y, x));
    return out;
}

MaskedInputs masked_inputs(const Image& reference, const BinaryEdgeMask& m_background,
                           const BinaryEdgeMask& m_reflection) {
    require_grid(m_background, reference, "masked_inputs");
    require_grid(m_reflection, reference, "masked_inputs");
    MaskedInputs out{Image(reference.height(), reference.width(), reference.channels()),
                     Image(reference.height(), reference.width(), reference.channels())};
    for (int y = 0; y < reference.height(); ++y)
        for (int x = 0; x < reference.width(); ++x) {
            const bool keep = !m_reflection.at(y, x);
            const bool bg = m_background.at(y, x);
            for (int c = 0; c < reference.channels(); ++c) {
                const float v = reference.at(y, x, c);
                out.without_reflection_edges.at(y, x, c) = keep ? v : 0.0f;
                out.background_edges.at(y, x, c) = bg ? v : 0.0f;
            }
        }
    return out;
}

EdgeImage mask_out(const EdgeImage& e, const BinaryEdgeMask& mask) {
    require_grid(mask, e.values, "mask_out");
    EdgeImage out = e;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(y, x))
                for (int c = 0; c < out.values.channels(); ++c) out.values.at(y, x, c) = 0.0f;
    return out;
}

EdgeImage mask_in(const EdgeImage& e, const BinaryEdgeMask& mask) {
    require_grid(mask, e.values, "mask_in");
    EdgeImage out = e;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (!mask.at(y, x))
                for (int c = 0; c < out.values.channels(); ++c) out.values.at(y, x, c) = 0.0f;
    return out;
}

BinaryEdgeMask mask_union(const BinaryEdgeMask& a, const BinaryEdgeMask& b) {
    require_grid(a, b, "mask_union");
    BinaryEdgeMask out(a.height(), a.width());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) out.set(y, x, a.at(y, x) || b.at(y, x));
    return out;
}

BinaryEdgeMask mask_intersection(const BinaryEdgeMask& a, const BinaryEdgeMask& b) {
    require_grid(a, b, "mask_intersection");
    BinaryEdgeMask out(a.height(), a.width());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) out.set(y, x, a.at(y, x) && b.at(y, x));
    return out;
}

BinaryEdgeMask without_border(const BinaryEdgeMask& m, int border) {
    BinaryEdgeMask out = m;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (y < border || x < border || y >= m.height() - border || x >= m.width() - border) out.set(y, x, false);
    return out;
}

}  // namespace reflex
