#pragma once

#include "reflex/image.hpp"

namespace reflex {

/// Default edge threshold on [0,1] images with the unit-step Sobel normalization below.
inline constexpr float kDefaultSigma = 0.05f;

/// Per-channel gradient magnitudes (nonnegative), same grid as the source image.
struct EdgeImage {
    Image values;
};

/// Scalar (channel-pooled) gradient magnitude per pixel.
struct GradientMap {
    Image values;  // single channel
};

/// Rec.601 luminance, single channel.
[[nodiscard]] Image luminance(const Image& rgb);

/// 3x3 Sobel magnitude of the luminance, scaled by 1/4 so that a unit step reads 1.
/// Borders use clamp-to-edge.
[[nodiscard]] GradientMap gradient_map(const Image& image);

/// Per-channel Sobel magnitude with the same normalization as gradient_map.
[[nodiscard]] EdgeImage edge_image(const Image& image);

/// 1 where the channel maximum of `e` reaches sigma.
[[nodiscard]] BinaryEdgeMask binarize_edges(const EdgeImage& e, float sigma = kDefaultSigma);

/// max(m_E - m_B, 0): edges of the mixture not explained by the background edge map.
[[nodiscard]] BinaryEdgeMask residual_mask(const BinaryEdgeMask& m_edges, const BinaryEdgeMask& m_background);

struct MaskedInputs {
    Image without_reflection_edges;  // I_c * (1 - m_R)
    Image background_edges;          // I_c * m_B
};

/// Both masks broadcast over channels.
[[nodiscard]] MaskedInputs masked_inputs(const Image& reference, const BinaryEdgeMask& m_background,
                                         const BinaryEdgeMask& m_reflection);

/// e * (1 - mask), broadcast over channels.
[[nodiscard]] EdgeImage mask_out(const EdgeImage& e, const BinaryEdgeMask& mask);

/// e * mask, broadcast over channels.
[[nodiscard]] EdgeImage mask_in(const EdgeImage& e, const BinaryEdgeMask& mask);

[[nodiscard]] BinaryEdgeMask mask_union(const BinaryEdgeMask& a, const BinaryEdgeMask& b);
[[nodiscard]] BinaryEdgeMask mask_intersection(const BinaryEdgeMask& a, const BinaryEdgeMask& b);

/// Zero out a band of `border` pixels along every side.
[[nodiscard]] BinaryEdgeMask without_border(const BinaryEdgeMask& m, int border);

}  // namespace reflex
