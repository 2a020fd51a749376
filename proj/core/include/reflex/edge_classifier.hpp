#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "reflex/depth_estimator.hpp"
#include "reflex/edge_ops.hpp"

namespace reflex {

struct DepthThresholds {
    double k1 = 0.0;
    double k2 = 0.0;  // k2 > k1
};

/// Raised when the edge depths carry no usable cluster structure; callers should treat
/// every edge as SHARED.
class DegenerateDepthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Globally optimal 1-D k-means (minimum within-cluster sum of squares over contiguous
/// partitions of the sorted values). Returns the cluster index of every input value, with
/// clusters numbered by increasing centroid.
struct Clustering1D {
    std::vector<int> assignment;
    std::vector<double> centroids;  // ascending
    double cost = 0.0;
};
[[nodiscard]] Clustering1D kmeans_1d(std::span<const double> values, int k);

/// Three-cluster k-means on edge depths; thresholds are midpoints between adjacent centroids.
[[nodiscard]] DepthThresholds kmeans_thresholds(std::span<const double> depths);

enum class EdgeLayer : std::uint8_t { None = 0, Reflection = 1, Shared = 2, Background = 3 };

struct EdgeLayerLabels {
    int height = 0;
    int width = 0;
    std::vector<EdgeLayer> labels;

    [[nodiscard]] EdgeLayer at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    [[nodiscard]] std::size_t count(EdgeLayer l) const;
    [[nodiscard]] BinaryEdgeMask mask(EdgeLayer l) const;
};

/// Depth values read from the map at every valid pixel (interior only when border > 0).
[[nodiscard]] std::vector<double> edge_depths(const EdgeDepthMap& d, int border = 0);

/// bg_is_far: the background sits behind the reflection, i.e. has the smaller disparity, so
/// values below k1 are BACKGROUND and values above k2 are REFLECTION. With bg_is_far false the
/// two roles swap. Values in [k1, k2] are SHARED; pixels off the valid mask are NONE.
[[nodiscard]] EdgeLayerLabels classify_edges(const EdgeDepthMap& d, const DepthThresholds& t, bool bg_is_far);

/// Two-cluster variant (no shared layer): each edge pixel goes to the nearer centroid.
[[nodiscard]] EdgeLayerLabels classify_edges_two_cluster(const EdgeDepthMap& d, bool bg_is_far);

struct InitialEdges {
    EdgeImage background;   // E on BACKGROUND pixels
    EdgeImage reflection;   // E on REFLECTION pixels
    BinaryEdgeMask background_mask;
};

[[nodiscard]] InitialEdges initial_edge_estimates(const EdgeImage& edges, const EdgeLayerLabels& labels);

/// Indexed-colour debug rendering: none black, reflection red, shared yellow, background blue.
void save_labels_png(const EdgeLayerLabels& labels, const std::filesystem::path& path);

}  // namespace reflex
