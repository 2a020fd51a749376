#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "reflex/edge_ops.hpp"
#include "reflex/unet.hpp"

namespace reflex {

/// Frozen feature map for the perceptual term. Layers follow the VGG-16 feature stack and are
/// counted as conv and activation layers (pooling not counted), so layer 14 ends at relu3_3.
struct PerceptualConfig {
    int layer = 14;
    /// Divides every VGG width; 1 keeps the reference architecture.
    int width_divisor = 1;
    /// Optional torch archive with parameters named conv<i>.weight / conv<i>.bias. Empty or
    /// missing file selects the random frozen stack.
    std::string weights_path;
    /// Per-channel normalization applied to [0,1] inputs before the first layer.
    std::array<double, 3> input_mean{0.485, 0.456, 0.406};
    std::array<double, 3> input_std{0.229, 0.224, 0.225};
    std::uint64_t seed = 7;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const PerceptualConfig& c);
[[nodiscard]] PerceptualConfig perceptual_config_from_json(const nlohmann::json& j);

class PerceptualExtractorImpl : public torch::nn::Module {
public:
    explicit PerceptualExtractorImpl(PerceptualConfig cfg);

    torch::Tensor forward(const torch::Tensor& x);

    /// "pretrained" or "random".
    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    /// Spatial reduction factor of the output.
    [[nodiscard]] int downsample() const noexcept { return downsample_; }
    [[nodiscard]] const PerceptualConfig& config() const noexcept { return cfg_; }

private:
    PerceptualConfig cfg_;
    torch::nn::Sequential features_;
    std::string source_ = "random";
    int downsample_ = 1;
};
TORCH_MODULE(PerceptualExtractor);

struct ExtractorConfig {
    GeneratorConfig net;
    /// Ablation switches: feed zeros in place of I_{M_R} / I_{M_B}, in training and inference alike.
    bool zero_without_reflection = false;
    bool zero_background_edges = false;

    ExtractorConfig();
    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const ExtractorConfig& c);
[[nodiscard]] ExtractorConfig extractor_config_from_json(const nlohmann::json& j);

class ExtractorImpl : public torch::nn::Module {
public:
    explicit ExtractorImpl(ExtractorConfig cfg);

    /// [N,6,H,W] -> [N,3,H,W] in [0,1]; ablated channel groups are zeroed here.
    torch::Tensor forward(const torch::Tensor& x);

    [[nodiscard]] const ExtractorConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] bool trained() const noexcept { return trained_; }
    void mark_trained() noexcept { trained_ = true; }

private:
    ExtractorConfig cfg_;
    UNet net_{nullptr};
    bool trained_ = false;
};
TORCH_MODULE(Extractor);

[[nodiscard]] Extractor build_extractor(const ExtractorConfig& cfg, std::uint64_t seed);

/// [I_{M_R} | I_{M_B}] as a [6,H,W] tensor, from the reference image and the two edge masks.
[[nodiscard]] torch::Tensor extractor_input(const Image& reference, const BinaryEdgeMask& m_edges,
                                            const BinaryEdgeMask& m_background);

struct ExtractionLosses {
    torch::Tensor reconstruction;
    torch::Tensor perceptual;
    torch::Tensor total;
};

[[nodiscard]] ExtractionLosses extraction_losses(const torch::Tensor& output, const torch::Tensor& target,
                                                 PerceptualExtractor& v, double lambda2);

struct ExtractTrainConfig {
    double lambda2 = 1.25;
    double learning_rate = 2e-4;
    int batch_size = 4;
    int epochs = 10;
    bool augment_orientations = true;
    std::uint64_t seed = 1;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const ExtractTrainConfig& c);
[[nodiscard]] ExtractTrainConfig extract_train_config_from_json(const nlohmann::json& j);

struct ExtractExample {
    Image reference;
    BinaryEdgeMask edges;            // M_E of the reference
    BinaryEdgeMask background_mask;  // background edge mask used to build the inputs
    Image gt_background;
};

struct ExtractTensors {
    torch::Tensor inputs;   // [N,6,H,W]
    torch::Tensor targets;  // [N,3,H,W]

    [[nodiscard]] int64_t size() const { return inputs.defined() ? inputs.size(0) : 0; }
};

[[nodiscard]] ExtractTensors make_extract_tensors(const std::vector<ExtractExample>& examples);

struct ExtractHistory {
    std::vector<double> step_loss;    // total loss per optimizer step
    std::vector<double> step_rec;
    std::vector<double> epoch_loss;   // mean total loss per epoch

    void write_csv(const std::filesystem::path& path) const;
};

using ExtractStepCallback = std::function<void(long step, double total)>;

ExtractHistory train_extractor(Extractor& model, PerceptualExtractor& v, const ExtractTensors& data,
                               const ExtractTrainConfig& cfg, const ExtractStepCallback& on_step = {});

struct ExtractionResult {
    Image background;        // in [0,1]
    Image residual;          // reference - background
    Image residual_display;  // residual shifted so its mean equals the reference mean, clipped
};

/// Throws std::logic_error when the model has not been trained or loaded from a checkpoint.
[[nodiscard]] ExtractionResult extract_background(Extractor& model, const Image& reference,
                                                  const BinaryEdgeMask& background_mask,
                                                  const BinaryEdgeMask& edges);

void save_extractor(Extractor& model, const PerceptualExtractor& v, const std::filesystem::path& path);
[[nodiscard]] Extractor load_extractor(const std::filesystem::path& path);

}  // namespace reflex
