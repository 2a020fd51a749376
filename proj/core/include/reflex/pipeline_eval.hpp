#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflex/bg_extractor.hpp"
#include "reflex/depth_estimator.hpp"
#include "reflex/edge_classifier.hpp"
#include "reflex/edge_regen.hpp"
#include "reflex/scene_synth.hpp"

namespace reflex {

// ---------------------------------------------------------------------------------------------
// Metrics

/// Returned for zero mean squared error.
inline constexpr double kPsnrCap = 99.0;

/// Shift `result` so its mean equals the mean of `gt`, clip to [0,1], then PSNR with peak 1.
[[nodiscard]] double psnr_mean_normalized(const Image& result, const Image& gt);

/// Exact 1-Wasserstein distance between two empirical distributions.
[[nodiscard]] double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// |pred & truth| / |truth| over the interior (border pixels ignored). NaN when truth is empty.
[[nodiscard]] double mask_recall(const BinaryEdgeMask& pred, const BinaryEdgeMask& truth, int border = kBorder);

/// Every strictly positive element of an edge image.
[[nodiscard]] std::vector<double> nonzero_values(const EdgeImage& e);

struct Histogram {
    std::vector<double> edges;   // bins + 1 ascending bin boundaries
    std::vector<long> counts;

    [[nodiscard]] long total() const;
};

/// Equal-width bins over [lo, hi]; values outside are clamped into the end bins.
[[nodiscard]] Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi);

struct DistributionSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double skewness = 0.0;  // population skewness; 0 when the variance is zero
};

[[nodiscard]] DistributionSummary summarize(std::span<const double> values);

/// Intensity histograms over edge points: mixtures at their own edges against backgrounds at theirs.
struct EdgeHistogramReport {
    Histogram mixture;
    Histogram background;
    DistributionSummary mixture_stats;
    DistributionSummary background_stats;
};

/// Intensity is luminance; edge points are binarize(edge_image(image), sigma) away from the border.
[[nodiscard]] std::vector<double> edge_point_intensities(const Image& image, float sigma = kDefaultSigma);

[[nodiscard]] EdgeHistogramReport edge_histogram_report(const std::vector<Image>& images,
                                                        const std::vector<Image>& gt_backgrounds, int bins = 32,
                                                        float sigma = kDefaultSigma);

/// CSV columns bin_lo, bin_hi, mixture, background.
void write_histogram_csv(const EdgeHistogramReport& r, const std::filesystem::path& path);
/// Two overlaid step plots, rendered to PNG.
void render_histogram_png(const EdgeHistogramReport& r, const std::filesystem::path& path);

// ---------------------------------------------------------------------------------------------
// Configuration

struct Ablation {
    bool no_regen = false;
    bool no_discriminators = false;
    bool no_I_MR = false;
    bool no_I_MB = false;

    [[nodiscard]] std::string name() const;  // "full" or the active flags joined by '+'
};

struct PipelineConfig {
    std::filesystem::path dataset_dir = "data";
    std::filesystem::path checkpoint_dir = "checkpoints";
    std::filesystem::path output_dir = "out";

    std::uint64_t seed = 1;
    SynthConfig synth;
    /// Trailing samples of the dataset held out for evaluation.
    int holdout = 10;

    DepthNetConfig depth_net;
    DepthTrainConfig depth_train;
    GeneratorConfig regen_generator = default_regen_generator_config();
    CriticConfig critic;
    RegenTrainConfig regen_train;
    ExtractorConfig extractor;
    PerceptualConfig perceptual;
    ExtractTrainConfig extract_train;

    float sigma = kDefaultSigma;
    /// Unset: read from the dataset manifest.
    std::optional<bool> bg_is_far;
    Ablation ablation;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults; unknown top-level keys are rejected.
[[nodiscard]] PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Stable hex digest of the serialized configuration.
[[nodiscard]] std::string config_fingerprint(const PipelineConfig& c);

/// Every stage seed is derive_seed(global seed, stage id) with ids
/// synth 1, depth 2, regen 3, extract 4, perceptual 5. Network initialisation uses the
/// stage seed and the training stream uses derive_seed(stage seed, 1).
enum class Stage : std::uint64_t { Synth = 1, Depth = 2, Regen = 3, Extract = 4, Perceptual = 5 };
[[nodiscard]] std::uint64_t stage_seed(std::uint64_t global, Stage s);

/// Checkpoint locations for the variant selected by the ablation flags.
struct CheckpointPaths {
    std::filesystem::path depth;
    std::filesystem::path regen_dir;
    std::filesystem::path extractor;
};
[[nodiscard]] CheckpointPaths checkpoint_paths(const PipelineConfig& c);

// ---------------------------------------------------------------------------------------------
// Stages

/// Depth, thresholds, labels and initial edges for one view stack.
struct EdgeAnalysis {
    EdgeImage edges;
    BinaryEdgeMask edge_mask;
    EdgeDepthMap depth;
    std::optional<DepthThresholds> thresholds;  // unset when clustering was degenerate
    EdgeLayerLabels labels;
    InitialEdges initial;
};

[[nodiscard]] EdgeAnalysis analyze_edges(DepthNet& depth, const MultiViewStack& stack, float sigma, bool bg_is_far);

/// Ground-truth edge images of the weighted layers.
[[nodiscard]] EdgeImage gt_background_edges(const MixtureSample& s);
[[nodiscard]] EdgeImage gt_reflection_edges(const MixtureSample& s);

[[nodiscard]] bool resolve_bg_is_far(const PipelineConfig& c, const std::optional<Dataset>& ds = std::nullopt);

struct StageReport {
    std::filesystem::path checkpoint;
    std::filesystem::path history_csv;
    double seconds = 0.0;
    double first_loss = 0.0;
    double last_loss = 0.0;
};

StageReport train_depth_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train);
StageReport train_regen_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train, bool bg_is_far);
StageReport train_extract_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train);

struct PipelineModels {
    DepthNet depth{nullptr};
    UNet generator{nullptr};  // null when the variant skips regeneration
    Extractor extractor{nullptr};
};

/// Throws std::runtime_error naming the stage whose checkpoint is missing.
[[nodiscard]] PipelineModels load_pipeline_models(const PipelineConfig& c);

struct PipelineResult {
    Image background;
    Image residual;
    Image residual_display;
    EdgeAnalysis analysis;
    EdgeImage background_edges;      // regenerated, or E on the 2-cluster background pixels
    BinaryEdgeMask background_mask;  // mask handed to the extractor
    std::vector<std::string> stage_log;
    std::map<std::string, double> stage_seconds;
};

[[nodiscard]] PipelineResult run_pipeline(PipelineModels& m, const PipelineConfig& c, const MultiViewStack& stack,
                                          bool bg_is_far);

/// Writes depth.png, labels.png, bg_edges.png, bg_mask.png, background.png, residual.png and
/// residual_raw.png (float residual shifted by +0.5).
void dump_intermediates(const PipelineResult& r, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------------------------
// Evaluation

struct SampleScore {
    std::string id;
    double psnr_input = 0.0;
    double psnr_output = 0.0;
};

struct EvalReport {
    std::string variant;
    std::string fingerprint;
    std::vector<SampleScore> samples;
    double mean_psnr_input = 0.0;
    double mean_psnr_output = 0.0;
    std::map<std::string, double> stage_seconds;  // mean per sample

    void write_csv(const std::filesystem::path& path) const;
    [[nodiscard]] std::string summary() const;
};

[[nodiscard]] EvalReport evaluate(PipelineModels& m, const PipelineConfig& c, const std::vector<MixtureSample>& test,
                                  bool bg_is_far);

/// Background-edge quality before and after regeneration against the ground-truth edges.
struct RegenQuality {
    double recall_initial = 0.0;
    double recall_regen = 0.0;
    double w1_initial = 0.0;
    double w1_regen = 0.0;
    std::size_t samples = 0;
};

[[nodiscard]] RegenQuality regen_quality(DepthNet& depth, UNet& g, const std::vector<MixtureSample>& test,
                                         float sigma, bool bg_is_far);

struct TimingReport {
    std::vector<std::string> stages;
    std::vector<double> mean_seconds;  // aligned with stages
    double mean_total = 0.0;
    double cv_total = 0.0;             // std / mean of the per-run totals
    int runs = 0;
    std::string hardware;

    void write_csv(const std::filesystem::path& path) const;
    [[nodiscard]] std::string summary() const;
};

[[nodiscard]] TimingReport timing_report(PipelineModels& m, const PipelineConfig& c,
                                         const std::vector<MultiViewStack>& inputs, bool bg_is_far, int repeats = 3);

/// Split helper: (train, test) where test is the trailing `holdout` samples.
[[nodiscard]] std::pair<std::vector<MixtureSample>, std::vector<MixtureSample>> split_holdout(
    std::vector<MixtureSample> all, int holdout);

}  // namespace reflex
