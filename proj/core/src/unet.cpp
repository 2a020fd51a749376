#include "reflex/unet.hpp"

#include <algorithm>

namespace reflex {

using nlohmann::json;

void GeneratorConfig::validate() const {
    if (in_channels <= 0 || out_channels <= 0) throw std::invalid_argument("GeneratorConfig: channel counts must be positive");
    if (depth < 1 || depth > 10) throw std::invalid_argument("GeneratorConfig: depth must be in [1, 10]");
    if (base_channels <= 0 || max_channels < base_channels) {
        throw std::invalid_argument("GeneratorConfig: need 0 < base_channels <= max_channels");
    }
}

int GeneratorConfig::stage_channels(int stage) const {
    long c = base_channels;
    for (int i = 0; i < stage; ++i) c *= 2;
    return static_cast<int>(std::min<long>(c, max_channels));
}

json to_json(const GeneratorConfig& c) {
    return {{"in_channels", c.in_channels},
            {"out_channels", c.out_channels},
            {"depth", c.depth},
            {"base_channels", c.base_channels},
            {"max_channels", c.max_channels},
            {"norm", c.norm == NormKind::Batch ? "batch" : "instance"},
            {"head", c.head == OutputHead::Relu ? "relu" : "sigmoid"}};
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig c;
    c.in_channels = j.value("in_channels", c.in_channels);
    c.out_channels = j.value("out_channels", c.out_channels);
    c.depth = j.value("depth", c.depth);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.max_channels = j.value("max_channels", c.max_channels);
    const std::string norm = j.value("norm", std::string("batch"));
    if (norm != "batch" && norm != "instance") throw std::invalid_argument("GeneratorConfig: norm must be batch|instance");
    c.norm = norm == "batch" ? NormKind::Batch : NormKind::Instance;
    const std::string head = j.value("head", std::string("relu"));
    if (head != "relu" && head != "sigmoid") throw std::invalid_argument("GeneratorConfig: head must be relu|sigmoid");
    c.head = head == "relu" ? OutputHead::Relu : OutputHead::Sigmoid;
    c.validate();
    return c;
}

namespace {

torch::nn::AnyModule make_norm(NormKind kind, int channels) {
    if (kind == NormKind::Batch) return torch::nn::AnyModule(torch::nn::BatchNorm2d(channels));
    return torch::nn::AnyModule(torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(channels).affine(true)));
}

}  // namespace

UNetImpl::UNetImpl(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int d = cfg_.depth;
    int in = cfg_.in_channels;
    for (int i = 0; i < d; ++i) {
        const int out = cfg_.stage_channels(i);
        down_.push_back(register_module("down" + std::to_string(i),
                                        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1))));
        if (i > 0 && i < d - 1) {
            down_norm_.push_back(make_norm(cfg_.norm, out));
            register_module("down_norm" + std::to_string(i), down_norm_.back().ptr());
        } else {
            down_norm_.emplace_back();
        }
        in = out;
    }
    // up_[j] maps decoder level j+1 back to level j (full resolution is level 0).
    up_.resize(static_cast<std::size_t>(d), nullptr);
    up_norm_.resize(static_cast<std::size_t>(d));
    for (int j = d - 1; j >= 0; --j) {
        const int in_ch = j == d - 1 ? cfg_.stage_channels(d - 1) : 2 * cfg_.stage_channels(j);
        const int out_ch = j == 0 ? cfg_.out_channels : cfg_.stage_channels(j - 1);
        up_[static_cast<std::size_t>(j)] = register_module(
            "up" + std::to_string(j),
            torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in_ch, out_ch, 4).stride(2).padding(1)));
        if (j > 0) {
            up_norm_[static_cast<std::size_t>(j)] = make_norm(cfg_.norm, out_ch);
            register_module("up_norm" + std::to_string(j), up_norm_[static_cast<std::size_t>(j)].ptr());
        }
    }
    // pix2pix-style init. The default fan-in init makes the first RMSprop steps push most
    // rectified outputs below zero, where they never recover; the small positive head bias
    // starts every output pixel in the active region.
    torch::NoGradGuard no_grad;
    for (auto& c : down_) {
        c->weight.normal_(0.0, 0.02);
        c->bias.zero_();
    }
    for (auto& c : up_) {
        c->weight.normal_(0.0, 0.02);
        c->bias.zero_();
    }
    if (cfg_.head == OutputHead::Relu) up_[0]->bias.fill_(kReluHeadBias);
}

torch::Tensor pad_to_multiple(const torch::Tensor& x, int multiple) {
    const auto h = x.size(2), w = x.size(3);
    const auto ph = (multiple - h % multiple) % multiple;
    const auto pw = (multiple - w % multiple) % multiple;
    if (ph == 0 && pw == 0) return x;
    namespace F = torch::nn::functional;
    return F::pad(x, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& input) {
    const auto h = input.size(2), w = input.size(3);
    torch::Tensor x = pad_to_multiple(input, 1 << cfg_.depth);

    std::vector<torch::Tensor> skips;
    for (std::size_t i = 0; i < down_.size(); ++i) {
        x = down_[i]->forward(x);
        if (!down_norm_[i].is_empty()) x = down_norm_[i].forward(x);
        x = torch::leaky_relu(x, 0.2);
        skips.push_back(x);
    }
    for (std::size_t j = up_.size(); j-- > 0;) {
        if (j + 1 < up_.size()) x = torch::cat({x, skips[j]}, 1);
        x = up_[j]->forward(x);
        if (j > 0) {
            x = torch::relu(up_norm_[j].forward(x));
        }
    }
    x = cfg_.head == OutputHead::Relu ? torch::relu(x) : torch::sigmoid(x);
    namespace I = torch::indexing;
    return x.index({I::Slice(), I::Slice(), I::Slice(0, h), I::Slice(0, w)});
}

}  // namespace reflex
