#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "reflex/edge_ops.hpp"
#include "reflex/unet.hpp"

namespace reflex {

/// Channel layout of the generator input: [E | E_B^0 | E_R^0], three channels each.
inline constexpr int kRegenInputChannels = 9;

[[nodiscard]] torch::Tensor regen_input(const EdgeImage& edges, const EdgeImage& initial_bg,
                                        const EdgeImage& initial_refl);

/// Edge generator defaults: 9 -> 3 channels with a rectified head.
[[nodiscard]] GeneratorConfig default_regen_generator_config();

struct CriticConfig {
    int in_channels = 3;
    int stages = 6;
    int base_channels = 64;
    int max_channels = 512;
    double clip = 0.01;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const CriticConfig& c);
[[nodiscard]] CriticConfig critic_config_from_json(const nlohmann::json& j);

/// Strided convolutions with leaky ReLU, global average pooling and a linear scalar head.
/// The output is unbounded.
class CriticImpl : public torch::nn::Module {
public:
    explicit CriticImpl(CriticConfig cfg);

    /// [N, C, H, W] -> [N]
    torch::Tensor forward(const torch::Tensor& x);
    /// Clamp every parameter into [-clip, clip].
    void clip_weights();

    [[nodiscard]] const CriticConfig& config() const noexcept { return cfg_; }

private:
    CriticConfig cfg_;
    std::vector<torch::nn::Conv2d> convs_;
    torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Critic);

struct RegenTrainConfig {
    double lambda1 = 2.5e-3;
    double generator_lr = 2e-4;
    double critic_lr = 2e-5;
    int batch_size = 8;
    int iterations = 1000;
    int critic_steps = 1;
    /// Off reproduces the plain regression generator (no critic term, critics left untouched).
    bool adversarial = true;
    bool augment_orientations = true;
    std::uint64_t seed = 1;

    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const RegenTrainConfig& c);
[[nodiscard]] RegenTrainConfig regen_train_config_from_json(const nlohmann::json& j);

/// One training tuple. Ground truths are edge images of the weighted layers.
struct RegenExample {
    EdgeImage edges;
    EdgeImage initial_bg;
    EdgeImage initial_refl;
    EdgeImage gt_bg;
    EdgeImage gt_refl;
};

struct RegenTensors {
    torch::Tensor z;           // [N,9,H,W]
    torch::Tensor edges;       // [N,3,H,W]
    torch::Tensor gt_bg;       // [N,3,H,W]
    torch::Tensor gt_refl;     // [N,3,H,W]

    [[nodiscard]] int64_t size() const { return z.defined() ? z.size(0) : 0; }
    [[nodiscard]] RegenTensors select(const torch::Tensor& idx) const;
};

[[nodiscard]] RegenTensors make_regen_tensors(const std::vector<RegenExample>& examples);

struct GeneratorObjective {
    torch::Tensor total;
    torch::Tensor data;         // batch mean of per-sample squared L2
    torch::Tensor adversarial;  // batch mean of D_B(G(z)) + D_R(E - G(z))
};

[[nodiscard]] GeneratorObjective generator_objective(UNet& g, Critic& d_b, Critic& d_r, const torch::Tensor& z,
                                                     const torch::Tensor& edges, const torch::Tensor& gt_bg,
                                                     double lambda1);

/// Wasserstein estimates to be ascended: mean D(real) - mean D(fake) for each critic.
/// The generator output is detached.
struct CriticObjectives {
    torch::Tensor background;
    torch::Tensor reflection;
};

[[nodiscard]] CriticObjectives critic_objectives(Critic& d_b, Critic& d_r, UNet& g, const torch::Tensor& z,
                                                 const torch::Tensor& edges, const torch::Tensor& gt_bg,
                                                 const torch::Tensor& gt_refl);

struct RegenModels {
    UNet generator{nullptr};
    Critic critic_bg{nullptr};
    Critic critic_refl{nullptr};
};

[[nodiscard]] RegenModels build_regen_models(const GeneratorConfig& g, const CriticConfig& c, std::uint64_t seed);

struct RegenHistoryRow {
    double gen_obj = 0.0;
    double db_obj = 0.0;
    double dr_obj = 0.0;
    double max_critic_param = 0.0;  // largest |param| seen after any clip in this iteration
};

struct RegenHistory {
    std::vector<RegenHistoryRow> rows;

    void write_csv(const std::filesystem::path& path) const;
};

/// Called after each critic update (post-clip) with the largest critic |param|.
using CriticStepCallback = std::function<void(long iteration, int critic_step, double max_abs_param)>;

/// Alternating updates: critic steps on freshly drawn batches, then one generator step.
RegenHistory train_regen(RegenModels& models, const RegenTensors& data, const RegenTrainConfig& cfg,
                         const CriticStepCallback& on_critic_step = {});

struct RegeneratedEdges {
    EdgeImage background;            // G(z)
    EdgeImage reflection;            // E with the background mask removed
    BinaryEdgeMask background_mask;  // binarize(G(z), sigma)
};

[[nodiscard]] RegeneratedEdges regenerate_edges(UNet& g, const EdgeImage& edges, const EdgeImage& initial_bg,
                                                const EdgeImage& initial_refl, float sigma = kDefaultSigma);
/// Applies the mask/complement step to an already generated background edge image.
[[nodiscard]] RegeneratedEdges split_regenerated(const EdgeImage& edges, EdgeImage generated, float sigma);

/// Writes generator.pt, critic_bg.pt and critic_refl.pt into `dir`.
void save_regen_models(RegenModels& m, const std::filesystem::path& dir);
[[nodiscard]] RegenModels load_regen_models(const std::filesystem::path& dir);
[[nodiscard]] UNet load_regen_generator(const std::filesystem::path& dir);

}  // namespace reflex
