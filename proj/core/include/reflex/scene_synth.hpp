#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflex/image.hpp"

namespace reflex {

inline constexpr int kNumViews = 5;
inline constexpr int kReferenceView = 2;
/// Pixels along every side excluded from losses and metrics.
inline constexpr int kBorder = 4;

/// Fronto-parallel (possibly slanted) disparity field d(y, x) = offset + slope_x * x + slope_y * y,
/// in pixels per unit baseline.
struct DisparityPlane {
    double offset = 0.0;
    double slope_x = 0.0;
    double slope_y = 0.0;

    [[nodiscard]] double at(double y, double x) const noexcept { return offset + slope_x * x + slope_y * y; }
    [[nodiscard]] bool constant() const noexcept { return slope_x == 0.0 && slope_y == 0.0; }
    /// Extremes over an h x w grid.
    [[nodiscard]] std::pair<double, double> range(int h, int w) const;

    friend bool operator==(const DisparityPlane&, const DisparityPlane&) = default;
};

struct DisparityRange {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool empty() const noexcept { return hi < lo; }
    /// Overlap with another range; empty (hi < lo) when disjoint.
    [[nodiscard]] DisparityRange intersect(const DisparityRange& o) const noexcept;

    friend bool operator==(const DisparityRange&, const DisparityRange&) = default;
};

enum class BaselineAxis { Horizontal, Vertical };

struct LayerScene {
    Image background;
    Image reflection;
    DisparityPlane bg_disparity;
    DisparityPlane refl_disparity;
    double w_background = 0.6;
    double w_reflection = 0.4;
};

/// Five co-registered views, reference in the middle with baseline 0. View n relates to the
/// reference by view_n(p) = ref(p + baselines[n] * d(p) * axis).
struct MultiViewStack {
    std::array<Image, kNumViews> views;
    std::array<double, kNumViews> baselines{-2.0, -1.0, 0.0, 1.0, 2.0};
    int reference_index = kReferenceView;
    BaselineAxis axis = BaselineAxis::Horizontal;

    [[nodiscard]] const Image& reference() const { return views[static_cast<std::size_t>(reference_index)]; }
    [[nodiscard]] int height() const { return views[0].height(); }
    [[nodiscard]] int width() const { return views[0].width(); }
    /// Throws std::invalid_argument when the stack breaks its invariants.
    void validate() const;
};

struct MixtureSample {
    MultiViewStack stack;
    Image gt_background;
    Image gt_reflection;
    DisparityPlane gt_bg_disparity;
    DisparityPlane gt_refl_disparity;
    double w_background = 0.6;
    double w_reflection = 0.4;
    std::uint64_t seed = 0;
    double clip_fraction = 0.0;
};

struct MixResult {
    Image image;
    double clip_fraction = 0.0;  // fraction of elements that fell outside [0,1] before clipping
};

/// Weighted sum without clipping.
[[nodiscard]] Image mix_linear(const Image& bg, const Image& refl, double w_bg, double w_refl);

/// Additive reflection model: w_bg * bg + w_refl * refl, clipped to [0,1].
[[nodiscard]] MixResult mix_images(const Image& bg, const Image& refl, double w_bg, double w_refl);

/// Resample `layer` at p + baseline * d(p) along `axis` with bilinear interpolation and
/// clamp-to-edge borders.
[[nodiscard]] Image shift_layer(const Image& layer, const DisparityPlane& disparity, double baseline,
                                BaselineAxis axis = BaselineAxis::Horizontal);

[[nodiscard]] MultiViewStack render_views(const LayerScene& scene, std::span<const double> baselines,
                                          BaselineAxis axis = BaselineAxis::Horizontal);

/// Every orientation in the dihedral group (identity first).
[[nodiscard]] std::vector<Orientation> all_orientations();

/// Crop every view and apply an orientation; baselines and axis follow the displacement direction.
[[nodiscard]] MultiViewStack crop_and_orient(const MultiViewStack& s, int y0, int x0, int crop, Orientation o);

/// Crop a sample and apply an orientation; ground truth, disparity planes and baselines are
/// transformed consistently.
[[nodiscard]] MixtureSample crop_and_orient(const MixtureSample& s, int y0, int x0, int crop, Orientation o);

/// Every aligned crop position (row-major) times every orientation in `orientations`.
[[nodiscard]] std::vector<MixtureSample> augment(const MixtureSample& sample, int crop, int stride,
                                                 const std::vector<Orientation>& orientations = all_orientations());

[[nodiscard]] int crop_positions_per_axis(int extent, int crop, int stride);

/// Smooth-gradient background plus soft discs and gaussian blobs.
[[nodiscard]] Image procedural_texture(int height, int width, std::mt19937_64& rng);

struct SynthConfig {
    int count = 8;
    int height = 64;
    int width = 64;
    DisparityRange bg_disparity{1.0, 3.0};
    DisparityRange refl_disparity{2.0, 5.0};
    double max_slope = 0.0;  // pixels of disparity per pixel of image extent
    double w_background = 0.6;
    double w_reflection = 0.4;
    std::array<double, kNumViews> baselines{-2.0, -1.0, 0.0, 1.0, 2.0};
    double max_clip_fraction = 0.05;
    std::optional<std::filesystem::path> texture_dir;  // natural photographs; procedural when unset
};

[[nodiscard]] nlohmann::json to_json(const SynthConfig& cfg);
[[nodiscard]] SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Deterministic per-sample seed derived from the dataset seed and sample index.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Generate one sample in memory (same generator synth_dataset uses).
[[nodiscard]] MixtureSample synth_sample(const SynthConfig& cfg, std::uint64_t sample_seed,
                                         const std::vector<Image>& photo_textures = {});

struct DatasetSummary {
    std::filesystem::path root;
    std::vector<std::string> sample_dirs;
    DisparityRange shared_range;
    bool bg_is_far = true;
    int rejected = 0;
};

/// Writes sample_NNNN/{view_0..4.png, gt_background.png, gt_reflection.png, meta.json}
/// plus manifest.json at the root.
DatasetSummary synth_dataset(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir);

[[nodiscard]] nlohmann::json sample_meta(const MixtureSample& s);
void write_sample(const MixtureSample& s, const std::filesystem::path& dir);
[[nodiscard]] MixtureSample load_sample(const std::filesystem::path& dir);

/// On-disk dataset opened through its manifest.
class Dataset {
public:
    explicit Dataset(std::filesystem::path root);

    [[nodiscard]] std::size_t size() const noexcept { return sample_dirs_.size(); }
    [[nodiscard]] MixtureSample load(std::size_t i) const;
    [[nodiscard]] std::vector<MixtureSample> load_all() const;
    [[nodiscard]] const nlohmann::json& manifest() const noexcept { return manifest_; }
    [[nodiscard]] bool bg_is_far() const;

private:
    std::filesystem::path root_;
    nlohmann::json manifest_;
    std::vector<std::string> sample_dirs_;
};

/// Per-pixel layer ownership from the ground-truth layers of the reference view:
/// 1 where the weighted background edge dominates, 2 where the reflection does, 0 where
/// neither layer has an edge of strength sigma.
[[nodiscard]] std::vector<std::uint8_t> layer_ownership(const MixtureSample& s, float sigma);

}  // namespace reflex
