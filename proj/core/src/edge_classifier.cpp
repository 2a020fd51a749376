#include "reflex/edge_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace reflex {

namespace {

// Within-cluster sum of squares of sorted[i..j] (inclusive) from prefix sums.
struct SegmentCost {
    std::vector<double> s1, s2;

    explicit SegmentCost(const std::vector<double>& sorted) : s1(sorted.size() + 1, 0.0), s2(sorted.size() + 1, 0.0) {
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            s1[i + 1] = s1[i] + sorted[i];
            s2[i + 1] = s2[i] + sorted[i] * sorted[i];
        }
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        const double n = static_cast<double>(j - i + 1);
        const double sum = s1[j + 1] - s1[i];
        return std::max(0.0, (s2[j + 1] - s2[i]) - sum * sum / n);
    }
};

// One DP layer: best[j] = min_{i<=j} prev[i-1] + cost(i, j), split points are monotone in j so
// divide and conquer keeps each layer at O(n log n).
void dp_layer(const SegmentCost& cost, const std::vector<double>& prev, std::vector<double>& best,
              std::vector<std::size_t>& arg, std::size_t lo, std::size_t hi, std::size_t opt_lo, std::size_t opt_hi,
              std::size_t min_start) {
    if (lo > hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_i = std::max(opt_lo, min_start);
    for (std::size_t i = std::max(opt_lo, min_start); i <= std::min(mid, opt_hi); ++i) {
        const double v = prev[i - 1] + cost(i, mid);
        if (v < best_val) {
            best_val = v;
            best_i = i;
        }
    }
    best[mid] = best_val;
    arg[mid] = best_i;
    if (mid > lo) dp_layer(cost, prev, best, arg, lo, mid - 1, opt_lo, best_i, min_start);
    dp_layer(cost, prev, best, arg, mid + 1, hi, best_i, opt_hi, min_start);
}

}  // namespace

Clustering1D kmeans_1d(std::span<const double> values, int k) {
    if (k < 1) throw std::invalid_argument("kmeans_1d: k must be >= 1");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw std::invalid_argument("kmeans_1d: non-finite value");
    }
    std::sort(sorted.begin(), sorted.end());
    std::size_t n_distinct = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (i == 0 || sorted[i] != sorted[i - 1]) ++n_distinct;
    if (n_distinct < static_cast<std::size_t>(k)) {
        throw DegenerateDepthError("kmeans_1d: fewer distinct values than clusters; treat all edges as SHARED");
    }

    const std::size_t n = sorted.size();
    const SegmentCost cost(sorted);
    // layers[m][j]: best cost of splitting sorted[0..j] into m+1 clusters.
    std::vector<std::vector<double>> layers(static_cast<std::size_t>(k), std::vector<double>(n));
    std::vector<std::vector<std::size_t>> starts(static_cast<std::size_t>(k), std::vector<std::size_t>(n, 0));
    for (std::size_t j = 0; j < n; ++j) layers[0][j] = cost(0, j);
    for (std::size_t m = 1; m < static_cast<std::size_t>(k); ++m) {
        dp_layer(cost, layers[m - 1], layers[m], starts[m], m, n - 1, m, n - 1, m);
    }

    // Backtrack cluster boundaries on the sorted sequence.
    std::vector<std::size_t> first(static_cast<std::size_t>(k));
    std::size_t end = n - 1;
    for (std::size_t m = static_cast<std::size_t>(k); m-- > 0;) {
        first[m] = m == 0 ? 0 : starts[m][end];
        if (m > 0) end = first[m] - 1;
    }

    Clustering1D out;
    out.cost = layers[static_cast<std::size_t>(k) - 1][n - 1];
    out.centroids.resize(static_cast<std::size_t>(k));
    for (std::size_t m = 0; m < static_cast<std::size_t>(k); ++m) {
        const std::size_t a = first[m];
        const std::size_t b = m + 1 < static_cast<std::size_t>(k) ? first[m + 1] - 1 : n - 1;
        out.centroids[m] = (cost.s1[b + 1] - cost.s1[a]) / static_cast<double>(b - a + 1);
    }
    // Map each original value to its cluster via the sorted boundaries. Equal values always share a cluster
    // because the boundary lookup is by value.
    out.assignment.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto pos = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
        int cluster = 0;
        for (std::size_t m = 1; m < static_cast<std::size_t>(k); ++m)
            if (pos >= first[m]) cluster = static_cast<int>(m);
        out.assignment[i] = cluster;
    }
    return out;
}

DepthThresholds kmeans_thresholds(std::span<const double> depths) {
    const Clustering1D c = kmeans_1d(depths, 3);
    return {(c.centroids[0] + c.centroids[1]) / 2.0, (c.centroids[1] + c.centroids[2]) / 2.0};
}

std::size_t EdgeLayerLabels::count(EdgeLayer l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

BinaryEdgeMask EdgeLayerLabels::mask(EdgeLayer l) const {
    BinaryEdgeMask m(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) m.set(y, x, at(y, x) == l);
    return m;
}

std::vector<double> edge_depths(const EdgeDepthMap& d, int border) {
    std::vector<double> out;
    for (int y = border; y < d.valid.height() - border; ++y)
        for (int x = border; x < d.valid.width() - border; ++x)
            if (d.valid.at(y, x)) out.push_back(d.values.at(y, x, 0));
    return out;
}

EdgeLayerLabels classify_edges(const EdgeDepthMap& d, const DepthThresholds& t, bool bg_is_far) {
    if (!(t.k2 > t.k1)) throw std::invalid_argument("classify_edges: thresholds must satisfy k2 > k1");
    if (!d.valid.same_grid(d.values)) throw ShapeError("classify_edges: valid mask grid mismatch");
    const EdgeLayer low = bg_is_far ? EdgeLayer::Background : EdgeLayer::Reflection;
    const EdgeLayer high = bg_is_far ? EdgeLayer::Reflection : EdgeLayer::Background;
    EdgeLayerLabels out{d.values.height(), d.values.width(), {}};
    out.labels.assign(static_cast<std::size_t>(out.height) * out.width, EdgeLayer::None);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!d.valid.at(y, x)) continue;
            const double v = d.values.at(y, x, 0);
            out.labels[static_cast<std::size_t>(y) * out.width + x] = v < t.k1 ? low : v > t.k2 ? high : EdgeLayer::Shared;
        }
    return out;
}

EdgeLayerLabels classify_edges_two_cluster(const EdgeDepthMap& d, bool bg_is_far) {
    const std::vector<double> depths = edge_depths(d);
    const Clustering1D c = kmeans_1d(depths, 2);
    const EdgeLayer low = bg_is_far ? EdgeLayer::Background : EdgeLayer::Reflection;
    const EdgeLayer high = bg_is_far ? EdgeLayer::Reflection : EdgeLayer::Background;
    EdgeLayerLabels out{d.values.height(), d.values.width(), {}};
    out.labels.assign(static_cast<std::size_t>(out.height) * out.width, EdgeLayer::None);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!d.valid.at(y, x)) continue;
            const double v = d.values.at(y, x, 0);
            const bool nearer_low = std::abs(v - c.centroids[0]) <= std::abs(v - c.centroids[1]);
            out.labels[static_cast<std::size_t>(y) * out.width + x] = nearer_low ? low : high;
        }
    return out;
}

InitialEdges initial_edge_estimates(const EdgeImage& edges, const EdgeLayerLabels& labels) {
    if (edges.values.height() != labels.height || edges.values.width() != labels.width) {
        throw ShapeError("initial_edge_estimates: label grid mismatch");
    }
    InitialEdges out;
    out.background_mask = labels.mask(EdgeLayer::Background);
    out.background = mask_in(edges, out.background_mask);
    out.reflection = mask_in(edges, labels.mask(EdgeLayer::Reflection));
    return out;
}

void save_labels_png(const EdgeLayerLabels& labels, const std::filesystem::path& path) {
    static constexpr float palette[4][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 0, 1}};
    Image img(labels.height, labels.width, 3);
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            const auto idx = static_cast<std::size_t>(labels.at(y, x));
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = palette[idx][c];
        }
    save_png(img, path);
}

}  // namespace reflex
