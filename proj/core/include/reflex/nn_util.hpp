#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "reflex/image.hpp"

namespace reflex {

/// Raised when a training loop sees a non-finite objective.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single-threaded, deterministic CPU execution with a seeded global generator.
void set_deterministic(std::uint64_t seed);

/// HxWxC image -> [C,H,W] float tensor.
[[nodiscard]] torch::Tensor to_tensor(const Image& img);
/// HxW mask -> [1,H,W] float tensor of 0/1.
[[nodiscard]] torch::Tensor to_tensor(const BinaryEdgeMask& mask);
/// [C,H,W] (or [1,C,H,W]) tensor -> image.
[[nodiscard]] Image to_image(const torch::Tensor& t);

/// Detached copies of every trainable parameter, for before/after comparisons.
[[nodiscard]] std::vector<torch::Tensor> snapshot_parameters(const torch::nn::Module& m);
[[nodiscard]] bool parameters_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b);
[[nodiscard]] double max_abs_parameter(const torch::nn::Module& m);

/// Versioned checkpoint: module state plus a JSON config string and a kind tag.
void save_checkpoint(const torch::nn::Module& m, const std::string& kind, const nlohmann::json& config,
                     const std::filesystem::path& path);
/// Reads only the config; throws if the file is missing or of a different kind.
[[nodiscard]] nlohmann::json read_checkpoint_config(const std::filesystem::path& path, const std::string& kind);
void load_checkpoint_state(torch::nn::Module& m, const std::string& kind, const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

/// Throws TrainingDiverged naming the stage when `value` is not finite.
void check_finite(double value, const char* stage, long step);

/// Loss-history CSV with a header row; values printed with round-trip precision.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace reflex
