#include "reflex/bg_extractor.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "reflex/nn_util.hpp"

namespace reflex {

using nlohmann::json;

namespace {

constexpr const char* kExtractorKind = "background_extractor";
// VGG-16 feature widths; 0 marks a 2x2 max pool.
constexpr int kVggPlan[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0};

}  // namespace

void PerceptualConfig::validate() const {
    if (layer < 1 || layer > 26) throw std::invalid_argument("PerceptualConfig: layer must be in [1, 26]");
    if (width_divisor < 1 || width_divisor > 64) throw std::invalid_argument("PerceptualConfig: bad width divisor");
    for (double s : input_std)
        if (!(s > 0.0)) throw std::invalid_argument("PerceptualConfig: input_std must be > 0");
}

json to_json(const PerceptualConfig& c) {
    return {{"layer", c.layer},           {"width_divisor", c.width_divisor}, {"weights_path", c.weights_path},
            {"input_mean", c.input_mean}, {"input_std", c.input_std},         {"seed", c.seed}};
}

PerceptualConfig perceptual_config_from_json(const json& j) {
    PerceptualConfig c;
    c.layer = j.value("layer", c.layer);
    c.width_divisor = j.value("width_divisor", c.width_divisor);
    c.weights_path = j.value("weights_path", c.weights_path);
    c.input_mean = j.value("input_mean", c.input_mean);
    c.input_std = j.value("input_std", c.input_std);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

PerceptualExtractorImpl::PerceptualExtractorImpl(PerceptualConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    torch::manual_seed(cfg_.seed);
    int counted = 0, in = 3, conv_index = 0;
    for (int width : kVggPlan) {
        if (counted >= cfg_.layer) break;
        if (width == 0) {
            features_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2)));
            downsample_ *= 2;
            continue;
        }
        const int out = std::max(1, width / cfg_.width_divisor);
        auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1));
        features_->push_back("conv" + std::to_string(conv_index++), conv);
        in = out;
        if (++counted >= cfg_.layer) break;
        features_->push_back(torch::nn::ReLU());
        ++counted;
    }
    register_module("features", features_);
    if (!cfg_.weights_path.empty() && std::filesystem::exists(cfg_.weights_path)) {
        torch::serialize::InputArchive archive;
        archive.load_from(cfg_.weights_path);
        torch::NoGradGuard no_grad;
        for (auto& item : features_->named_parameters()) {
            torch::Tensor t;
            archive.read(item.key(), t);
            item.value().copy_(t);
        }
        source_ = "pretrained";
    }
    for (auto& p : parameters()) p.set_requires_grad(false);
    eval();
}

torch::Tensor PerceptualExtractorImpl::forward(const torch::Tensor& x) {
    const auto opts = torch::TensorOptions().dtype(x.dtype());
    const auto mean = torch::tensor(std::vector<double>(cfg_.input_mean.begin(), cfg_.input_mean.end()), opts)
                          .view({1, 3, 1, 1});
    const auto stdv = torch::tensor(std::vector<double>(cfg_.input_std.begin(), cfg_.input_std.end()), opts)
                          .view({1, 3, 1, 1});
    return features_->forward((x - mean) / stdv);
}

ExtractorConfig::ExtractorConfig() {
    net.in_channels = 6;
    net.out_channels = 3;
    net.head = OutputHead::Sigmoid;
}

void ExtractorConfig::validate() const {
    net.validate();
    if (net.in_channels != 6 || net.out_channels != 3) {
        throw std::invalid_argument("ExtractorConfig: network must map 6 channels to 3");
    }
    if (net.head != OutputHead::Sigmoid) throw std::invalid_argument("ExtractorConfig: output head must be bounded");
}

json to_json(const ExtractorConfig& c) {
    return {{"net", to_json(c.net)},
            {"zero_without_reflection", c.zero_without_reflection},
            {"zero_background_edges", c.zero_background_edges}};
}

ExtractorConfig extractor_config_from_json(const json& j) {
    ExtractorConfig c;
    if (j.contains("net")) {
        json net = to_json(c.net);
        net.update(j.at("net"));
        c.net = generator_config_from_json(net);
    }
    c.zero_without_reflection = j.value("zero_without_reflection", c.zero_without_reflection);
    c.zero_background_edges = j.value("zero_background_edges", c.zero_background_edges);
    c.validate();
    return c;
}

ExtractorImpl::ExtractorImpl(ExtractorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    net_ = register_module("net", UNet(cfg_.net));
}

torch::Tensor ExtractorImpl::forward(const torch::Tensor& x) {
    if (!cfg_.zero_without_reflection && !cfg_.zero_background_edges) return net_->forward(x);
    namespace I = torch::indexing;
    auto in = x.clone();
    if (cfg_.zero_without_reflection) in.index_put_({I::Slice(), I::Slice(0, 3)}, 0.0);
    if (cfg_.zero_background_edges) in.index_put_({I::Slice(), I::Slice(3, 6)}, 0.0);
    return net_->forward(in);
}

Extractor build_extractor(const ExtractorConfig& cfg, std::uint64_t seed) {
    torch::manual_seed(seed);
    return Extractor(cfg);
}

torch::Tensor extractor_input(const Image& reference, const BinaryEdgeMask& m_edges,
                              const BinaryEdgeMask& m_background) {
    const MaskedInputs in = masked_inputs(reference, m_background, residual_mask(m_edges, m_background));
    return torch::cat({to_tensor(in.without_reflection_edges), to_tensor(in.background_edges)}, 0);
}

ExtractionLosses extraction_losses(const torch::Tensor& output, const torch::Tensor& target, PerceptualExtractor& v,
                                   double lambda2) {
    if (output.sizes() != target.sizes()) throw ShapeError("extraction_losses: output/target shape mismatch");
    const auto rec = (output - target).pow(2).mean();
    const auto perc = (v->forward(output) - v->forward(target)).pow(2).mean();
    return {rec, perc, rec + lambda2 * perc};
}

void ExtractTrainConfig::validate() const {
    if (!(lambda2 >= 0.0)) throw std::invalid_argument("ExtractTrainConfig: lambda2 must be >= 0");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("ExtractTrainConfig: learning rate must be >= 0");
    if (batch_size < 1 || epochs < 0) throw std::invalid_argument("ExtractTrainConfig: bad batch size or epochs");
}

json to_json(const ExtractTrainConfig& c) {
    return {{"lambda2", c.lambda2}, {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},   {"augment_orientations", c.augment_orientations}, {"seed", c.seed}};
}

ExtractTrainConfig extract_train_config_from_json(const json& j) {
    ExtractTrainConfig c;
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.augment_orientations = j.value("augment_orientations", c.augment_orientations);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

ExtractTensors make_extract_tensors(const std::vector<ExtractExample>& examples) {
    if (examples.empty()) throw std::invalid_argument("make_extract_tensors: no examples");
    std::vector<torch::Tensor> in, out;
    for (const auto& ex : examples) {
        require_same_shape(ex.reference, ex.gt_background, "make_extract_tensors");
        require_same_shape(ex.reference, examples.front().reference, "make_extract_tensors");
        in.push_back(extractor_input(ex.reference, ex.edges, ex.background_mask));
        out.push_back(to_tensor(ex.gt_background));
    }
    return {torch::stack(in), torch::stack(out)};
}

void ExtractHistory::write_csv(const std::filesystem::path& path) const {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) rows.push_back({static_cast<double>(i), epoch_loss[i]});
    reflex::write_csv(path, {"epoch", "loss"}, rows);
}

ExtractHistory train_extractor(Extractor& model, PerceptualExtractor& v, const ExtractTensors& data,
                               const ExtractTrainConfig& cfg, const ExtractStepCallback& on_step) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train_extractor: empty dataset");
    const bool square = data.inputs.size(2) == data.inputs.size(3);
    model->train();
    v->eval();
    torch::optim::RMSprop opt(model->parameters(), torch::optim::RMSpropOptions(cfg.learning_rate));
    std::mt19937_64 rng(cfg.seed);
    std::vector<int64_t> order(static_cast<std::size_t>(data.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

    ExtractHistory hist;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const auto idx = torch::tensor(std::vector<int64_t>(order.begin() + static_cast<long>(start),
                                                                order.begin() + static_cast<long>(end)),
                                           torch::kLong);
            auto x = data.inputs.index_select(0, idx);
            auto y = data.targets.index_select(0, idx);
            if (cfg.augment_orientations) {
                for (int64_t i = 0; i < x.size(0); ++i) {
                    const int o = std::uniform_int_distribution<int>(0, square ? 7 : 1)(rng);
                    for (torch::Tensor* t : {&x, &y}) {
                        auto s = (*t)[i];
                        if (o & 4 || (!square && o == 1)) s = s.flip({2});
                        if (square) s = s.rot90(o & 3, {1, 2});
                        (*t)[i].copy_(s.contiguous());
                    }
                }
            }
            opt.zero_grad();
            const auto losses = extraction_losses(model->forward(x), y, v, cfg.lambda2);
            const double value = losses.total.item<double>();
            check_finite(value, "train_extractor", step);
            losses.total.backward();
            opt.step();
            hist.step_loss.push_back(value);
            hist.step_rec.push_back(losses.reconstruction.item<double>());
            if (on_step) on_step(step, value);
            sum += value;
            ++batches;
            ++step;
        }
        hist.epoch_loss.push_back(sum / batches);
    }
    model->eval();
    model->mark_trained();
    return hist;
}

ExtractionResult extract_background(Extractor& model, const Image& reference, const BinaryEdgeMask& background_mask,
                                    const BinaryEdgeMask& edges) {
    if (!model->trained()) {
        throw std::logic_error("extract_background: extractor has not been trained; run train-extract first");
    }
    torch::NoGradGuard no_grad;
    model->eval();
    const auto x = extractor_input(reference, edges, background_mask).unsqueeze(0);
    ExtractionResult r;
    r.background = to_image(model->forward(x)[0]);
    r.residual = Image(reference.height(), reference.width(), reference.channels());
    auto out = r.residual.data();
    const auto in = reference.data();
    const auto bg = r.background.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] - bg[i];
    r.residual_display = r.residual;
    const float shift = static_cast<float>(reference.mean() - r.residual.mean());
    for (float& value : r.residual_display.data()) value += shift;
    r.residual_display = clip01(r.residual_display);
    return r;
}

void save_extractor(Extractor& model, const PerceptualExtractor& v, const std::filesystem::path& path) {
    json cfg = to_json(model->config());
    cfg["trained"] = model->trained();
    cfg["perceptual"] = to_json(v->config());
    cfg["perceptual_source"] = v->source();
    save_checkpoint(*model, kExtractorKind, cfg, path);
}

Extractor load_extractor(const std::filesystem::path& path) {
    const json cfg = read_checkpoint_config(path, kExtractorKind);
    Extractor model(extractor_config_from_json(cfg));
    load_checkpoint_state(*model, kExtractorKind, path);
    if (cfg.value("trained", false)) model->mark_trained();
    model->eval();
    return model;
}

}  // namespace reflex
