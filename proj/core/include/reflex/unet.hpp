#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace reflex {

enum class NormKind { Batch, Instance };
enum class OutputHead { Relu, Sigmoid };

/// Initial bias of a rectified output layer.
inline constexpr double kReluHeadBias = 0.1;

/// Encoder/decoder with mirrored skip connections. Stage i of the encoder has
/// min(base_channels * 2^i, max_channels) channels; every stage halves the resolution.
struct GeneratorConfig {
    int in_channels = 9;
    int out_channels = 3;
    int depth = 6;
    int base_channels = 64;
    int max_channels = 512;
    NormKind norm = NormKind::Batch;
    OutputHead head = OutputHead::Relu;

    void validate() const;
    [[nodiscard]] int stage_channels(int stage) const;
};

[[nodiscard]] nlohmann::json to_json(const GeneratorConfig& c);
[[nodiscard]] GeneratorConfig generator_config_from_json(const nlohmann::json& j);

class UNetImpl : public torch::nn::Module {
public:
    explicit UNetImpl(GeneratorConfig cfg);

    /// [N, in, H, W] -> [N, out, H, W]. Inputs whose sides are not multiples of 2^depth are
    /// edge-padded internally and the output is cropped back.
    torch::Tensor forward(const torch::Tensor& x);

    [[nodiscard]] const GeneratorConfig& config() const noexcept { return cfg_; }

private:
    GeneratorConfig cfg_;
    std::vector<torch::nn::Conv2d> down_;
    std::vector<torch::nn::AnyModule> down_norm_;  // empty slot for the outermost and innermost stages
    std::vector<torch::nn::ConvTranspose2d> up_;
    std::vector<torch::nn::AnyModule> up_norm_;
};
TORCH_MODULE(UNet);

/// Replicate-pad [N,C,H,W] so both sides are multiples of `multiple`.
[[nodiscard]] torch::Tensor pad_to_multiple(const torch::Tensor& x, int multiple);

}  // namespace reflex
