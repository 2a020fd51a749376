#include "reflex/depth_estimator.hpp"

#include <algorithm>
#include <random>

#include "reflex/nn_util.hpp"

namespace reflex {

using nlohmann::json;

void DepthNetConfig::validate() const {
    if (channels.empty()) throw std::invalid_argument("DepthNetConfig: no layers");
    if (channels.back() != 1) throw std::invalid_argument("DepthNetConfig: last layer must have 1 output channel");
    for (int c : channels) {
        if (c <= 0) throw std::invalid_argument("DepthNetConfig: channel counts must be positive");
    }
    if (kernel <= 0 || kernel % 2 == 0) throw std::invalid_argument("DepthNetConfig: kernel must be odd and positive");
    if (input_channels <= 0) throw std::invalid_argument("DepthNetConfig: input channels must be positive");
}

json to_json(const DepthNetConfig& c) {
    return {{"channels", c.channels},
            {"kernel", c.kernel},
            {"input_channels", c.input_channels},
            {"init_disparity", c.init_disparity}};
}

DepthNetConfig depth_net_config_from_json(const json& j) {
    DepthNetConfig c;
    if (j.contains("channels")) c.channels = j["channels"].get<std::vector<int>>();
    c.kernel = j.value("kernel", c.kernel);
    c.input_channels = j.value("input_channels", c.input_channels);
    c.init_disparity = j.value("init_disparity", c.init_disparity);
    c.validate();
    return c;
}

DepthNetImpl::DepthNetImpl(DepthNetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    int in = cfg_.input_channels;
    for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
        const int out = cfg_.channels[i];
        auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, cfg_.kernel).padding(cfg_.kernel / 2));
        convs_.push_back(register_module("conv" + std::to_string(i), conv));
        if (i + 1 < cfg_.channels.size()) {
            norms_.push_back(register_module("bn" + std::to_string(i), torch::nn::BatchNorm2d(out)));
        }
        in = out;
    }
    torch::NoGradGuard no_grad;
    convs_.back()->bias.fill_(cfg_.init_disparity);
}

torch::Tensor DepthNetImpl::forward(const torch::Tensor& stacked_views) {
    torch::Tensor x = stacked_views - 0.5;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        x = convs_[i]->forward(x);
        if (i < norms_.size()) x = torch::relu(norms_[i]->forward(x));
    }
    return x;
}

DepthNet build_depth_net(const DepthNetConfig& cfg, std::uint64_t seed) {
    torch::manual_seed(seed);
    return DepthNet(cfg);
}

std::int64_t parameter_count(const torch::nn::Module& m) {
    std::int64_t n = 0;
    for (const auto& p : m.parameters()) n += p.numel();
    return n;
}

torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity, const torch::Tensor& baseline) {
    TORCH_CHECK(image.dim() == 4 && disparity.dim() == 4, "warp: expected [N,C,H,W] image and [N,1,H,W] disparity");
    TORCH_CHECK(disparity.size(1) == 1, "warp: disparity must have one channel");
    TORCH_CHECK(image.size(0) == disparity.size(0) && image.size(2) == disparity.size(2) &&
                    image.size(3) == disparity.size(3),
                "warp: image and disparity grids differ");
    const auto n = image.size(0), c = image.size(1), h = image.size(2), w = image.size(3);
    const auto dtype = disparity.scalar_type();
    auto b = baseline.to(dtype);
    b = b.dim() == 0 ? b.view({1, 1, 1, 1}) : b.view({-1, 1, 1, 1});
    const auto xs = torch::arange(w, torch::TensorOptions().dtype(dtype)).view({1, 1, 1, w});
    const auto pos = (xs + b * disparity).clamp(0.0, static_cast<double>(w - 1));
    const auto left = pos.detach().floor().clamp(0.0, static_cast<double>(std::max<int64_t>(w - 2, 0)));
    const auto frac = (pos - left).to(image.scalar_type());
    const auto idx0 = left.to(torch::kLong).expand({n, c, h, w});
    const auto idx1 = (idx0 + 1).clamp_max(w - 1);
    const auto v0 = image.gather(3, idx0);
    const auto v1 = image.gather(3, idx1);
    return v0 + frac * (v1 - v0);
}

torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity, double baseline) {
    return warp(image, disparity, torch::tensor(baseline, torch::kFloat64));
}

torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& disparity, double baseline, BaselineAxis axis) {
    if (axis == BaselineAxis::Horizontal) return warp(image, disparity, baseline);
    return warp(image.transpose(2, 3), disparity.transpose(2, 3), baseline).transpose(2, 3);
}

torch::Tensor StackBatch::network_input() const {
    return views.flatten(1, 2);
}

StackBatch make_batch(const std::vector<const MultiViewStack*>& stacks) {
    if (stacks.empty()) throw std::invalid_argument("make_batch: empty batch");
    std::vector<torch::Tensor> views, weights;
    auto baselines = torch::empty({static_cast<int64_t>(stacks.size()), kNumViews}, torch::kFloat64);
    StackBatch batch;
    batch.reference_index = stacks.front()->reference_index;
    for (std::size_t i = 0; i < stacks.size(); ++i) {
        const MultiViewStack& s = *stacks[i];
        s.validate();
        if (s.reference_index != batch.reference_index) throw std::invalid_argument("make_batch: mixed reference views");
        if (s.height() != stacks.front()->height() || s.width() != stacks.front()->width()) {
            throw ShapeError("make_batch: stacks differ in size");
        }
        std::vector<torch::Tensor> v, a;
        for (const auto& view : s.views) {
            v.push_back(to_tensor(view));
            a.push_back(to_tensor(gradient_map(view).values));
        }
        views.push_back(torch::stack(v));
        weights.push_back(torch::stack(a));
        for (int n = 0; n < kNumViews; ++n) baselines[static_cast<int64_t>(i)][n] = s.baselines[static_cast<std::size_t>(n)];
        batch.axes.push_back(s.axis);
    }
    batch.views = torch::stack(views);
    batch.weights = torch::stack(weights);
    batch.baselines = baselines;
    return batch;
}

StackBatch make_batch(const MultiViewStack& stack) { return make_batch(std::vector<const MultiViewStack*>{&stack}); }

torch::Tensor depth_loss(const StackBatch& batch, const torch::Tensor& disparity) {
    TORCH_CHECK(disparity.dim() == 4 && disparity.size(0) == batch.size(), "depth_loss: disparity must be [N,1,H,W]");
    const int c = batch.reference_index;
    std::vector<int64_t> others;
    for (int n = 0; n < kNumViews; ++n)
        if (n != c) others.push_back(n);
    const auto other_idx = torch::tensor(others, torch::kLong);
    const auto dtype = disparity.scalar_type();

    torch::Tensor total = torch::zeros({}, torch::TensorOptions().dtype(dtype));
    double count = 0.0;
    for (int64_t i = 0; i < batch.size(); ++i) {
        auto views = batch.views[i].to(dtype);     // [5,3,H,W]
        auto weights = batch.weights[i].to(dtype); // [5,1,H,W]
        auto d = disparity[i].unsqueeze(0);        // [1,1,H,W]
        if (batch.axes[static_cast<std::size_t>(i)] == BaselineAxis::Vertical) {
            views = views.transpose(2, 3);
            weights = weights.transpose(2, 3);
            d = d.transpose(2, 3);
        }
        const auto k = static_cast<int64_t>(others.size());
        const auto h = views.size(2), w = views.size(3);
        const auto ref = views[c].unsqueeze(0).expand({k, views.size(1), h, w});
        const auto warped = warp(ref, d.expand({k, 1, h, w}), batch.baselines[i].index_select(0, other_idx));
        const auto sel = views.index_select(0, other_idx);
        const auto a = weights.index_select(0, other_idx);
        namespace I = torch::indexing;
        const auto interior = I::Slice(kBorder, -kBorder);
        const auto resid = (a * sel - a * warped).index({I::Slice(), I::Slice(), interior, interior});
        total = total + resid.pow(2).sum();
        count += a.index({I::Slice(), I::Slice(), interior, interior}).gt(0).sum().item<double>();
    }
    return count > 0.0 ? total / count : total;
}

double depth_loss(const MultiViewStack& stack, const Image& disparity) {
    if (disparity.height() != stack.height() || disparity.width() != stack.width() || disparity.channels() != 1) {
        throw ShapeError("depth_loss: disparity must be single-channel on the reference grid");
    }
    const StackBatch batch = make_batch(stack);
    const auto d = to_tensor(disparity).unsqueeze(0).to(torch::kFloat64);
    return depth_loss(batch, d).item<double>();
}

void DepthTrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("DepthTrainConfig: learning rate must be >= 0");
    if (batch_size < 1 || steps < 0 || patch < 2 * kBorder + 1) {
        throw std::invalid_argument("DepthTrainConfig: bad batch size, step count or patch size");
    }
}

json to_json(const DepthTrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2},
            {"batch_size", c.batch_size},       {"steps", c.steps}, {"patch", c.patch},
            {"augment_orientations", c.augment_orientations}, {"seed", c.seed}};
}

DepthTrainConfig depth_train_config_from_json(const json& j) {
    DepthTrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.patch = j.value("patch", c.patch);
    c.augment_orientations = j.value("augment_orientations", c.augment_orientations);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

namespace {

// Deterministic patch sampler: epoch-wise shuffled sample order, random crop and orientation.
class PatchSampler {
public:
    PatchSampler(const std::vector<MultiViewStack>& data, const DepthTrainConfig& cfg)
        : data_(data), cfg_(cfg), rng_(cfg.seed) {
        order_.resize(data.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        reshuffle();
    }

    MultiViewStack next() {
        if (cursor_ == order_.size()) reshuffle();
        const MultiViewStack& s = data_[order_[cursor_++]];
        const int crop = std::min({cfg_.patch, s.height(), s.width()});
        std::uniform_int_distribution<int> py(0, s.height() - crop), px(0, s.width() - crop);
        const int y0 = py(rng_), x0 = px(rng_);
        Orientation o;
        if (cfg_.augment_orientations) o = Orientation::from_index(std::uniform_int_distribution<int>(0, 7)(rng_));
        return crop_and_orient(s, y0, x0, crop, o);
    }

private:
    void reshuffle() {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
    }

    const std::vector<MultiViewStack>& data_;
    const DepthTrainConfig& cfg_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

}  // namespace

TrainHistory train_depth_net(DepthNet& model, const std::vector<MultiViewStack>& data, const DepthTrainConfig& cfg,
                             const StepCallback& on_step) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train_depth_net: empty dataset");
    model->train();
    torch::optim::Adam opt(model->parameters(),
                           torch::optim::AdamOptions(cfg.learning_rate).betas({cfg.beta1, cfg.beta2}));
    PatchSampler sampler(data, cfg);
    TrainHistory hist;
    hist.loss.reserve(static_cast<std::size_t>(cfg.steps));
    for (long step = 0; step < cfg.steps; ++step) {
        std::vector<MultiViewStack> patches;
        patches.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) patches.push_back(sampler.next());
        std::vector<const MultiViewStack*> ptrs;
        for (const auto& p : patches) ptrs.push_back(&p);
        const StackBatch batch = make_batch(ptrs);

        opt.zero_grad();
        const auto disparity = model->forward(batch.network_input());
        // Non-finite disparities would become garbage gather indices inside the warp.
        if (!torch::isfinite(disparity).all().item<bool>()) check_finite(std::nan(""), "train_depth_net", step);
        const auto loss = depth_loss(batch, disparity);
        const double value = loss.item<double>();
        check_finite(value, "train_depth_net", step);
        loss.backward();
        opt.step();
        hist.loss.push_back(value);
        if (on_step) on_step(step, value);
    }
    model->eval();
    return hist;
}

EdgeDepthMap infer_edge_depth(DepthNet& model, const MultiViewStack& stack, float sigma) {
    stack.validate();
    torch::NoGradGuard no_grad;
    model->eval();
    const StackBatch batch = make_batch(stack);
    const auto d = model->forward(batch.network_input());
    return {to_image(d[0]), binarize_edges(edge_image(stack.reference()), sigma)};
}

void save_depth_net(DepthNet& model, const std::filesystem::path& path) {
    save_checkpoint(*model, kDepthCheckpointKind, to_json(model->config()), path);
}

DepthNet load_depth_net(const std::filesystem::path& path) {
    const auto cfg = depth_net_config_from_json(read_checkpoint_config(path, kDepthCheckpointKind));
    DepthNet model(cfg);
    load_checkpoint_state(*model, kDepthCheckpointKind, path);
    model->eval();
    return model;
}

}  // namespace reflex
