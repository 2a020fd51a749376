#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "reflex/edge_ops.hpp"
#include "reflex/image.hpp"
#include "reflex/scene_synth.hpp"

namespace reflex {

struct DepthNetConfig {
    /// Output channels per convolution; the last entry must be 1.
    std::vector<int> channels{256, 128, 128, 128, 128, 128, 128, 1};
    int kernel = 5;
    int input_channels = 3 * kNumViews;
    /// Initial value of the output bias (disparity the untrained net predicts).
    double init_disparity = 0.0;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const DepthNetConfig& c);
[[nodiscard]] DepthNetConfig depth_net_config_from_json(const nlohmann::json& j);

/// Plain stack of same-padded convolutions, batch-norm + ReLU after all but the last.
class DepthNetImpl : public torch::nn::Module {
public:
    explicit DepthNetImpl(DepthNetConfig cfg);

    /// [N, 15, H, W] in [0,1] -> [N, 1, H, W] disparity.
    torch::Tensor forward(const torch::Tensor& stacked_views);

    [[nodiscard]] const DepthNetConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] int num_conv_layers() const noexcept { return static_cast<int>(convs_.size()); }

private:
    DepthNetConfig cfg_;
    std::vector<torch::nn::Conv2d> convs_;
    std::vector<torch::nn::BatchNorm2d> norms_;
};
TORCH_MODULE(DepthNet);

/// Fresh network with parameters drawn from `seed`.
[[nodiscard]] DepthNet build_depth_net(const DepthNetConfig& cfg, std::uint64_t seed);
[[nodiscard]] std::int64_t parameter_count(const torch::nn::Module& m);

/// Dense disparity (pixels per unit baseline); only meaningful where valid is set.
struct EdgeDepthMap {
    Image values;  // single channel
    BinaryEdgeMask valid;
};

/// Bilinear resampling of `image` at x + baseline * d(x) along the width axis, clamp-to-edge.
/// image: [N,C,H,W], disparity: [N,1,H,W], baseline: [N] (or a 0-dim tensor).
/// Differentiable with respect to the disparity.
[[nodiscard]] torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity,
                                 const torch::Tensor& baseline);
[[nodiscard]] torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity, double baseline);
[[nodiscard]] torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity, double baseline,
                                 BaselineAxis axis);

/// Batched view stacks in tensor form. Views are [N,5,3,H,W], weights (scalar gradient
/// magnitude per view) [N,5,1,H,W], baselines [N,5] (float64).
struct StackBatch {
    torch::Tensor views;
    torch::Tensor weights;
    torch::Tensor baselines;
    std::vector<BaselineAxis> axes;
    int reference_index = kReferenceView;

    /// [N,15,H,W] network input.
    [[nodiscard]] torch::Tensor network_input() const;
    [[nodiscard]] std::int64_t size() const { return views.size(0); }
};

[[nodiscard]] StackBatch make_batch(const std::vector<const MultiViewStack*>& stacks);
[[nodiscard]] StackBatch make_batch(const MultiViewStack& stack);

/// Gradient-weighted warping loss summed over non-reference views and interior pixels
/// (kBorder band excluded), divided by the number of (view, pixel) pairs with nonzero weight.
[[nodiscard]] torch::Tensor depth_loss(const StackBatch& batch, const torch::Tensor& disparity);
[[nodiscard]] double depth_loss(const MultiViewStack& stack, const Image& disparity);

struct DepthTrainConfig {
    double learning_rate = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch_size = 4;
    int steps = 1000;
    int patch = 128;
    /// Apply random dihedral orientations to training patches.
    bool augment_orientations = true;
    std::uint64_t seed = 1;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const DepthTrainConfig& c);
[[nodiscard]] DepthTrainConfig depth_train_config_from_json(const nlohmann::json& j);

struct TrainHistory {
    std::vector<double> loss;  // one entry per optimizer step
};

using StepCallback = std::function<void(long step, double loss)>;

/// Unsupervised training on view stacks; no disparity labels are read.
TrainHistory train_depth_net(DepthNet& model, const std::vector<MultiViewStack>& data, const DepthTrainConfig& cfg,
                             const StepCallback& on_step = {});

/// Dense disparity for the reference view; valid = binarize_edges(edge_image(reference), sigma).
[[nodiscard]] EdgeDepthMap infer_edge_depth(DepthNet& model, const MultiViewStack& stack,
                                            float sigma = kDefaultSigma);

inline constexpr const char* kDepthCheckpointKind = "edge_depth_net";
void save_depth_net(DepthNet& model, const std::filesystem::path& path);
[[nodiscard]] DepthNet load_depth_net(const std::filesystem::path& path);

}  // namespace reflex
