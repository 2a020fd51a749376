#include "reflex/edge_regen.hpp"

#include <algorithm>
#include <random>

#include "reflex/nn_util.hpp"

namespace reflex {

using nlohmann::json;

namespace {

constexpr const char* kGeneratorKind = "regen_generator";
constexpr const char* kCriticKind = "regen_critic";

}  // namespace

torch::Tensor regen_input(const EdgeImage& edges, const EdgeImage& initial_bg, const EdgeImage& initial_refl) {
    require_same_shape(edges.values, initial_bg.values, "regen_input");
    require_same_shape(edges.values, initial_refl.values, "regen_input");
    if (edges.values.channels() != 3) throw ShapeError("regen_input: edge images must have 3 channels");
    return torch::cat({to_tensor(edges.values), to_tensor(initial_bg.values), to_tensor(initial_refl.values)}, 0);
}

GeneratorConfig default_regen_generator_config() {
    GeneratorConfig c;
    c.in_channels = kRegenInputChannels;
    c.out_channels = 3;
    c.head = OutputHead::Relu;
    return c;
}

void CriticConfig::validate() const {
    if (in_channels <= 0 || stages < 1 || base_channels <= 0 || max_channels < base_channels) {
        throw std::invalid_argument("CriticConfig: bad channel or stage counts");
    }
    if (!(clip > 0.0)) throw std::invalid_argument("CriticConfig: clip must be > 0");
}

json to_json(const CriticConfig& c) {
    return {{"in_channels", c.in_channels},
            {"stages", c.stages},
            {"base_channels", c.base_channels},
            {"max_channels", c.max_channels},
            {"clip", c.clip}};
}

CriticConfig critic_config_from_json(const json& j) {
    CriticConfig c;
    c.in_channels = j.value("in_channels", c.in_channels);
    c.stages = j.value("stages", c.stages);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.max_channels = j.value("max_channels", c.max_channels);
    c.clip = j.value("clip", c.clip);
    c.validate();
    return c;
}

CriticImpl::CriticImpl(CriticConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    int in = cfg_.in_channels;
    int ch = cfg_.base_channels;
    for (int i = 0; i < cfg_.stages; ++i) {
        convs_.push_back(register_module("conv" + std::to_string(i),
                                         torch::nn::Conv2d(torch::nn::Conv2dOptions(in, ch, 4).stride(2).padding(1))));
        in = ch;
        ch = std::min(ch * 2, cfg_.max_channels);
    }
    head_ = register_module("head", torch::nn::Linear(in, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& input) {
    torch::Tensor x = pad_to_multiple(input, 1 << cfg_.stages);
    for (auto& conv : convs_) x = torch::leaky_relu(conv->forward(x), 0.2);
    x = x.mean({2, 3});
    return head_->forward(x).squeeze(1);
}

void CriticImpl::clip_weights() {
    torch::NoGradGuard no_grad;
    for (auto& p : parameters()) p.clamp_(-cfg_.clip, cfg_.clip);
}

void RegenTrainConfig::validate() const {
    if (!(lambda1 > 0.0)) throw std::invalid_argument("RegenTrainConfig: lambda1 must be > 0");
    if (!(generator_lr >= 0.0) || !(critic_lr >= 0.0)) {
        throw std::invalid_argument("RegenTrainConfig: learning rates must be >= 0");
    }
    if (batch_size < 1 || iterations < 0 || critic_steps < 0) {
        throw std::invalid_argument("RegenTrainConfig: bad batch size, iteration or critic step count");
    }
}

json to_json(const RegenTrainConfig& c) {
    return {{"lambda1", c.lambda1},         {"generator_lr", c.generator_lr}, {"critic_lr", c.critic_lr},
            {"batch_size", c.batch_size},   {"iterations", c.iterations},     {"critic_steps", c.critic_steps},
            {"adversarial", c.adversarial}, {"augment_orientations", c.augment_orientations},
            {"seed", c.seed}};
}

RegenTrainConfig regen_train_config_from_json(const json& j) {
    RegenTrainConfig c;
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.generator_lr = j.value("generator_lr", c.generator_lr);
    c.critic_lr = j.value("critic_lr", c.critic_lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.iterations = j.value("iterations", c.iterations);
    c.critic_steps = j.value("critic_steps", c.critic_steps);
    c.adversarial = j.value("adversarial", c.adversarial);
    c.augment_orientations = j.value("augment_orientations", c.augment_orientations);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

RegenTensors RegenTensors::select(const torch::Tensor& idx) const {
    return {z.index_select(0, idx), edges.index_select(0, idx), gt_bg.index_select(0, idx),
            gt_refl.index_select(0, idx)};
}

RegenTensors make_regen_tensors(const std::vector<RegenExample>& examples) {
    if (examples.empty()) throw std::invalid_argument("make_regen_tensors: no examples");
    std::vector<torch::Tensor> z, e, b, r;
    for (const auto& ex : examples) {
        require_same_shape(ex.edges.values, ex.gt_bg.values, "make_regen_tensors");
        require_same_shape(ex.edges.values, ex.gt_refl.values, "make_regen_tensors");
        require_same_shape(ex.edges.values, examples.front().edges.values, "make_regen_tensors");
        z.push_back(regen_input(ex.edges, ex.initial_bg, ex.initial_refl));
        e.push_back(to_tensor(ex.edges.values));
        b.push_back(to_tensor(ex.gt_bg.values));
        r.push_back(to_tensor(ex.gt_refl.values));
    }
    return {torch::stack(z), torch::stack(e), torch::stack(b), torch::stack(r)};
}

GeneratorObjective generator_objective(UNet& g, Critic& d_b, Critic& d_r, const torch::Tensor& z,
                                       const torch::Tensor& edges, const torch::Tensor& gt_bg, double lambda1) {
    const auto fake = g->forward(z);
    const auto data = (fake - gt_bg).pow(2).sum({1, 2, 3}).mean();
    const auto adv = (d_b->forward(fake) + d_r->forward(edges - fake)).mean();
    return {data - lambda1 * adv, data, adv};
}

CriticObjectives critic_objectives(Critic& d_b, Critic& d_r, UNet& g, const torch::Tensor& z,
                                   const torch::Tensor& edges, const torch::Tensor& gt_bg,
                                   const torch::Tensor& gt_refl) {
    torch::Tensor fake;
    {
        torch::NoGradGuard no_grad;
        fake = g->forward(z);
    }
    return {d_b->forward(gt_bg).mean() - d_b->forward(fake).mean(),
            d_r->forward(gt_refl).mean() - d_r->forward(edges - fake).mean()};
}

RegenModels build_regen_models(const GeneratorConfig& g, const CriticConfig& c, std::uint64_t seed) {
    torch::manual_seed(seed);
    RegenModels m;
    m.generator = UNet(g);
    m.critic_bg = Critic(c);
    m.critic_refl = Critic(c);
    m.critic_bg->clip_weights();
    m.critic_refl->clip_weights();
    return m;
}

void RegenHistory::write_csv(const std::filesystem::path& path) const {
    std::vector<std::vector<double>> table;
    table.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        table.push_back({static_cast<double>(i), r.gen_obj, r.db_obj, r.dr_obj});
    }
    reflex::write_csv(path, {"step", "gen_obj", "dB_obj", "dR_obj"}, table);
}

namespace {

// Epoch-shuffled index stream with optional per-sample dihedral augmentation.
class BatchSampler {
public:
    BatchSampler(const RegenTensors& data, const RegenTrainConfig& cfg) : data_(data), cfg_(cfg), rng_(cfg.seed) {
        order_.resize(static_cast<std::size_t>(data.size()));
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int64_t>(i);
        reshuffle();
    }

    RegenTensors next() {
        std::vector<int64_t> idx;
        for (int b = 0; b < cfg_.batch_size; ++b) {
            if (cursor_ == order_.size()) reshuffle();
            idx.push_back(order_[cursor_++]);
        }
        RegenTensors batch = data_.select(torch::tensor(idx, torch::kLong));
        if (!cfg_.augment_orientations) return batch;
        for (int64_t i = 0; i < batch.size(); ++i) {
            const int o = std::uniform_int_distribution<int>(0, 7)(rng_);
            for (torch::Tensor* t : {&batch.z, &batch.edges, &batch.gt_bg, &batch.gt_refl}) {
                auto s = (*t)[i];
                if (o & 4) s = s.flip({2});
                s = s.rot90(o & 3, {1, 2});
                (*t)[i].copy_(s.contiguous());
            }
        }
        return batch;
    }

private:
    void reshuffle() {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
    }

    const RegenTensors& data_;
    const RegenTrainConfig& cfg_;
    std::mt19937_64 rng_;
    std::vector<int64_t> order_;
    std::size_t cursor_ = 0;
};

}  // namespace

RegenHistory train_regen(RegenModels& m, const RegenTensors& data, const RegenTrainConfig& cfg,
                         const CriticStepCallback& on_critic_step) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train_regen: empty dataset");
    if (data.z.size(2) != data.z.size(3) && cfg.augment_orientations) {
        throw std::invalid_argument("train_regen: orientation augmentation needs square samples");
    }
    auto& g = m.generator;
    auto& db = m.critic_bg;
    auto& dr = m.critic_refl;
    g->train();
    db->train();
    dr->train();
    torch::optim::RMSprop g_opt(g->parameters(), torch::optim::RMSpropOptions(cfg.generator_lr));
    torch::optim::RMSprop db_opt(db->parameters(), torch::optim::RMSpropOptions(cfg.critic_lr));
    torch::optim::RMSprop dr_opt(dr->parameters(), torch::optim::RMSpropOptions(cfg.critic_lr));
    BatchSampler sampler(data, cfg);
    RegenHistory hist;
    hist.rows.reserve(static_cast<std::size_t>(cfg.iterations));

    for (long it = 0; it < cfg.iterations; ++it) {
        RegenHistoryRow row;
        if (cfg.adversarial) {
            for (int k = 0; k < cfg.critic_steps; ++k) {
                const RegenTensors batch = sampler.next();
                db_opt.zero_grad();
                dr_opt.zero_grad();
                const auto obj = critic_objectives(db, dr, g, batch.z, batch.edges, batch.gt_bg, batch.gt_refl);
                row.db_obj = obj.background.item<double>();
                row.dr_obj = obj.reflection.item<double>();
                check_finite(row.db_obj, "train_regen/critic_bg", it);
                check_finite(row.dr_obj, "train_regen/critic_refl", it);
                (-(obj.background + obj.reflection)).backward();
                db_opt.step();
                dr_opt.step();
                db->clip_weights();
                dr->clip_weights();
                const double worst = std::max(max_abs_parameter(*db), max_abs_parameter(*dr));
                row.max_critic_param = std::max(row.max_critic_param, worst);
                if (on_critic_step) on_critic_step(it, k, worst);
            }
        }
        const RegenTensors batch = sampler.next();
        g_opt.zero_grad();
        torch::Tensor loss;
        if (cfg.adversarial) {
            const auto obj = generator_objective(g, db, dr, batch.z, batch.edges, batch.gt_bg, cfg.lambda1);
            loss = obj.total;
        } else {
            loss = (g->forward(batch.z) - batch.gt_bg).pow(2).sum({1, 2, 3}).mean();
        }
        row.gen_obj = loss.item<double>();
        check_finite(row.gen_obj, "train_regen/generator", it);
        loss.backward();
        g_opt.step();
        hist.rows.push_back(row);
    }
    g->eval();
    db->eval();
    dr->eval();
    return hist;
}

RegeneratedEdges split_regenerated(const EdgeImage& edges, EdgeImage generated, float sigma) {
    require_same_shape(edges.values, generated.values, "split_regenerated");
    RegeneratedEdges out;
    out.background_mask = binarize_edges(generated, sigma);
    out.reflection = mask_out(edges, out.background_mask);
    out.background = std::move(generated);
    return out;
}

RegeneratedEdges regenerate_edges(UNet& g, const EdgeImage& edges, const EdgeImage& initial_bg,
                                  const EdgeImage& initial_refl, float sigma) {
    torch::NoGradGuard no_grad;
    g->eval();
    const auto z = regen_input(edges, initial_bg, initial_refl).unsqueeze(0);
    return split_regenerated(edges, EdgeImage{to_image(g->forward(z)[0])}, sigma);
}

void save_regen_models(RegenModels& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_checkpoint(*m.generator, kGeneratorKind, to_json(m.generator->config()), dir / "generator.pt");
    save_checkpoint(*m.critic_bg, kCriticKind, to_json(m.critic_bg->config()), dir / "critic_bg.pt");
    save_checkpoint(*m.critic_refl, kCriticKind, to_json(m.critic_refl->config()), dir / "critic_refl.pt");
}

UNet load_regen_generator(const std::filesystem::path& dir) {
    const auto path = dir / "generator.pt";
    UNet g(generator_config_from_json(read_checkpoint_config(path, kGeneratorKind)));
    load_checkpoint_state(*g, kGeneratorKind, path);
    g->eval();
    return g;
}

RegenModels load_regen_models(const std::filesystem::path& dir) {
    RegenModels m;
    m.generator = load_regen_generator(dir);
    for (auto [name, slot] : {std::pair{"critic_bg.pt", &m.critic_bg}, std::pair{"critic_refl.pt", &m.critic_refl}}) {
        const auto path = dir / name;
        *slot = Critic(critic_config_from_json(read_checkpoint_config(path, kCriticKind)));
        load_checkpoint_state(**slot, kCriticKind, path);
        (*slot)->eval();
    }
    return m;
}

}  // namespace reflex
