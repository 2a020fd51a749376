#include "reflex/pipeline_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "reflex/nn_util.hpp"

namespace reflex {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Metrics

double psnr_mean_normalized(const Image& result, const Image& gt) {
    require_same_shape(result, gt, "psnr_mean_normalized");
    const double shift = gt.mean() - result.mean();
    const auto r = result.data();
    const auto g = gt.data();
    double se = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = std::clamp(static_cast<double>(r[i]) + shift, 0.0, 1.0);
        const double d = v - g[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(r.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty distribution");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // Integrate |F_a - F_b| between consecutive support points of the merged sample.
    std::vector<double> xs;
    xs.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(xs));
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        while (ia < a.size() && a[ia] <= xs[k]) ++ia;
        while (ib < b.size() && b[ib] <= xs[k]) ++ib;
        total += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (xs[k + 1] - xs[k]);
    }
    return total;
}

double mask_recall(const BinaryEdgeMask& pred, const BinaryEdgeMask& truth, int border) {
    if (!pred.same_grid(truth)) throw ShapeError("mask_recall: grid mismatch");
    long hit = 0, total = 0;
    for (int y = border; y < truth.height() - border; ++y)
        for (int x = border; x < truth.width() - border; ++x) {
            if (!truth.at(y, x)) continue;
            ++total;
            if (pred.at(y, x)) ++hit;
        }
    return total == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(hit) / total;
}

std::vector<double> nonzero_values(const EdgeImage& e) {
    std::vector<double> out;
    for (float v : e.values.data())
        if (v > 0.0f) out.push_back(v);
    return out;
}

long Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

Histogram make_histogram(std::span<const double> values, int bins, double lo, double hi) {
    if (bins < 1 || !(hi > lo)) throw std::invalid_argument("make_histogram: need bins >= 1 and hi > lo");
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        const int b = std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)), 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

DistributionSummary summarize(std::span<const double> values) {
    DistributionSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return s;
}

std::vector<double> edge_point_intensities(const Image& image, float sigma) {
    const BinaryEdgeMask m = binarize_edges(edge_image(image), sigma);
    const Image lum = luminance(image);
    std::vector<double> out;
    for (int y = kBorder; y < image.height() - kBorder; ++y)
        for (int x = kBorder; x < image.width() - kBorder; ++x)
            if (m.at(y, x)) out.push_back(lum.at(y, x, 0));
    return out;
}

EdgeHistogramReport edge_histogram_report(const std::vector<Image>& images, const std::vector<Image>& gt_backgrounds,
                                          int bins, float sigma) {
    if (images.size() != gt_backgrounds.size()) {
        throw std::invalid_argument("edge_histogram_report: image and background sets differ in size");
    }
    std::vector<double> mix, bg;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto a = edge_point_intensities(images[i], sigma);
        auto b = edge_point_intensities(gt_backgrounds[i], sigma);
        mix.insert(mix.end(), a.begin(), a.end());
        bg.insert(bg.end(), b.begin(), b.end());
    }
    if (mix.empty() || bg.empty()) throw std::invalid_argument("edge_histogram_report: no edge points");
    EdgeHistogramReport r;
    r.mixture = make_histogram(mix, bins, 0.0, 1.0);
    r.background = make_histogram(bg, bins, 0.0, 1.0);
    r.mixture_stats = summarize(mix);
    r.background_stats = summarize(bg);
    return r;
}

void write_histogram_csv(const EdgeHistogramReport& r, const std::filesystem::path& path) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.mixture.counts.size(); ++i) {
        rows.push_back({r.mixture.edges[i], r.mixture.edges[i + 1], static_cast<double>(r.mixture.counts[i]),
                        static_cast<double>(r.background.counts[i])});
    }
    write_csv(path, {"bin_lo", "bin_hi", "mixture", "background"}, rows);
}

void render_histogram_png(const EdgeHistogramReport& r, const std::filesystem::path& path) {
    constexpr int kW = 640, kH = 360, kPad = 40;
    cv::Mat canvas(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
    const auto density = [](const Histogram& h) {
        std::vector<double> d(h.counts.size());
        const double total = std::max<long>(1, h.total());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = h.counts[i] / total;
        return d;
    };
    const auto dm = density(r.mixture), db = density(r.background);
    const double peak = std::max(*std::max_element(dm.begin(), dm.end()), *std::max_element(db.begin(), db.end()));
    const int bins = static_cast<int>(dm.size());
    const auto draw = [&](const std::vector<double>& d, const cv::Scalar& colour) {
        cv::Point prev;
        for (int i = 0; i < bins; ++i) {
            const int x0 = kPad + (kW - 2 * kPad) * i / bins;
            const int x1 = kPad + (kW - 2 * kPad) * (i + 1) / bins;
            const int y = kH - kPad - static_cast<int>((kH - 2 * kPad) * (peak > 0 ? d[static_cast<std::size_t>(i)] / peak : 0));
            if (i > 0) cv::line(canvas, prev, {x0, y}, colour, 2);
            cv::line(canvas, {x0, y}, {x1, y}, colour, 2);
            prev = {x1, y};
        }
    };
    cv::rectangle(canvas, {kPad, kPad}, {kW - kPad, kH - kPad}, cv::Scalar(0, 0, 0), 1);
    draw(db, cv::Scalar(60, 160, 60));   // background: green
    draw(dm, cv::Scalar(200, 90, 30));   // mixture: blue (BGR)
    cv::putText(canvas, "edge-point intensity (0..1)", {kPad, kH - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(0, 0, 0), 1);
    cv::putText(canvas, "background", {kW - 170, kPad + 18}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(60, 160, 60), 1);
    cv::putText(canvas, "with reflection", {kW - 170, kPad + 36}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(200, 90, 30), 1);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), canvas)) throw std::runtime_error("render_histogram_png: cannot write " + path.string());
}

// ---------------------------------------------------------------------------------------------
// Configuration

std::string Ablation::name() const {
    std::string out;
    const auto add = [&](bool on, const char* n) {
        if (!on) return;
        if (!out.empty()) out += '+';
        out += n;
    };
    add(no_regen, "no_regen");
    add(no_discriminators, "no_discriminators");
    add(no_I_MR, "no_I_MR");
    add(no_I_MB, "no_I_MB");
    return out.empty() ? "full" : out;
}

void PipelineConfig::validate() const {
    if (holdout < 0) throw std::invalid_argument("PipelineConfig: holdout must be >= 0");
    if (!(sigma > 0.0f)) throw std::invalid_argument("PipelineConfig: sigma must be > 0");
    depth_net.validate();
    depth_train.validate();
    regen_generator.validate();
    critic.validate();
    regen_train.validate();
    extractor.validate();
    perceptual.validate();
    extract_train.validate();
    if (regen_generator.in_channels != kRegenInputChannels || regen_generator.out_channels != 3) {
        throw std::invalid_argument("PipelineConfig: regeneration generator must map 9 channels to 3");
    }
}

json to_json(const PipelineConfig& c) {
    json j;
    j["dataset_dir"] = c.dataset_dir.string();
    j["checkpoint_dir"] = c.checkpoint_dir.string();
    j["output_dir"] = c.output_dir.string();
    j["seed"] = c.seed;
    j["synth"] = to_json(c.synth);
    j["holdout"] = c.holdout;
    j["depth_net"] = to_json(c.depth_net);
    j["depth_train"] = to_json(c.depth_train);
    j["regen_generator"] = to_json(c.regen_generator);
    j["critic"] = to_json(c.critic);
    j["regen_train"] = to_json(c.regen_train);
    j["extractor"] = to_json(c.extractor);
    j["perceptual"] = to_json(c.perceptual);
    j["extract_train"] = to_json(c.extract_train);
    j["sigma"] = c.sigma;
    j["bg_is_far"] = c.bg_is_far ? json(*c.bg_is_far) : json(nullptr);
    j["ablation"] = {{"no_regen", c.ablation.no_regen},
                     {"no_discriminators", c.ablation.no_discriminators},
                     {"no_I_MR", c.ablation.no_I_MR},
                     {"no_I_MB", c.ablation.no_I_MB}};
    return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
    static const std::vector<std::string> known = {
        "dataset_dir", "checkpoint_dir", "output_dir",      "seed",       "synth",      "holdout",
        "depth_net",   "depth_train",    "regen_generator", "critic",     "regen_train", "extractor",
        "perceptual",  "extract_train",  "sigma",           "bg_is_far",  "ablation"};
    if (!j.is_object()) throw std::invalid_argument("pipeline config: top level must be an object");
    for (const auto& item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw std::invalid_argument("pipeline config: unknown key '" + item.key() + "'");
        }
    }
    PipelineConfig c;
    c.dataset_dir = j.value("dataset_dir", c.dataset_dir.string());
    c.checkpoint_dir = j.value("checkpoint_dir", c.checkpoint_dir.string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.seed = j.value("seed", c.seed);
    c.holdout = j.value("holdout", c.holdout);
    const json empty = json::object();
    const auto block = [&](const char* key) -> const json& { return j.contains(key) ? j.at(key) : empty; };
    c.synth = synth_config_from_json(block("synth"));
    c.depth_net = depth_net_config_from_json(block("depth_net"));
    c.depth_train = depth_train_config_from_json(block("depth_train"));
    {
        json g = to_json(c.regen_generator);
        g.update(block("regen_generator"));
        c.regen_generator = generator_config_from_json(g);
    }
    c.critic = critic_config_from_json(block("critic"));
    c.regen_train = regen_train_config_from_json(block("regen_train"));
    c.extractor = extractor_config_from_json(block("extractor"));
    c.perceptual = perceptual_config_from_json(block("perceptual"));
    c.extract_train = extract_train_config_from_json(block("extract_train"));
    c.sigma = j.value("sigma", c.sigma);
    if (j.contains("bg_is_far") && !j.at("bg_is_far").is_null()) c.bg_is_far = j.at("bg_is_far").get<bool>();
    const json& a = block("ablation");
    c.ablation.no_regen = a.value("no_regen", false);
    c.ablation.no_discriminators = a.value("no_discriminators", false);
    c.ablation.no_I_MR = a.value("no_I_MR", false);
    c.ablation.no_I_MB = a.value("no_I_MB", false);
    c.validate();
    return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config file " + path.string() + ": " + e.what());
    }
    return pipeline_config_from_json(j);
}

std::string config_fingerprint(const PipelineConfig& c) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(to_json(c).dump());
    return os.str();
}

std::uint64_t stage_seed(std::uint64_t global, Stage s) { return derive_seed(global, static_cast<std::uint64_t>(s)); }

CheckpointPaths checkpoint_paths(const PipelineConfig& c) {
    CheckpointPaths p;
    p.depth = c.checkpoint_dir / "depth.pt";
    p.regen_dir = c.checkpoint_dir / (c.ablation.no_discriminators ? "regen_no_disc" : "regen");
    std::string name = "extractor";
    if (c.ablation.no_I_MR) name += "_no_imr";
    if (c.ablation.no_I_MB) name += "_no_imb";
    p.extractor = c.checkpoint_dir / (name + ".pt");
    return p;
}

// ---------------------------------------------------------------------------------------------
// Stages

namespace {

EdgeLayerLabels all_shared(const EdgeDepthMap& d) {
    EdgeLayerLabels l{d.values.height(), d.values.width(), {}};
    l.labels.assign(static_cast<std::size_t>(l.height) * l.width, EdgeLayer::None);
    for (int y = 0; y < l.height; ++y)
        for (int x = 0; x < l.width; ++x)
            if (d.valid.at(y, x)) l.labels[static_cast<std::size_t>(y) * l.width + x] = EdgeLayer::Shared;
    return l;
}

EdgeLayerLabels three_layer_labels(const EdgeDepthMap& d, bool bg_is_far, std::optional<DepthThresholds>& t) {
    try {
        t = kmeans_thresholds(edge_depths(d, kBorder));
        return classify_edges(d, *t, bg_is_far);
    } catch (const DegenerateDepthError&) {
        t.reset();
        return all_shared(d);
    }
}

EdgeLayerLabels two_layer_labels(const EdgeDepthMap& d, bool bg_is_far) {
    try {
        return classify_edges_two_cluster(d, bg_is_far);
    } catch (const DegenerateDepthError&) {
        return all_shared(d);
    }
}

void require_checkpoint(const std::filesystem::path& p, const char* stage) {
    if (!std::filesystem::exists(p)) {
        throw std::runtime_error(std::string("missing checkpoint for stage '") + stage + "': " + p.string());
    }
}

std::vector<MultiViewStack> stacks_of(const std::vector<MixtureSample>& samples) {
    std::vector<MultiViewStack> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.stack);
    return out;
}

}  // namespace

EdgeAnalysis analyze_edges(DepthNet& depth, const MultiViewStack& stack, float sigma, bool bg_is_far) {
    EdgeAnalysis a;
    a.edges = edge_image(stack.reference());
    a.edge_mask = binarize_edges(a.edges, sigma);
    a.depth = infer_edge_depth(depth, stack, sigma);
    a.labels = three_layer_labels(a.depth, bg_is_far, a.thresholds);
    a.initial = initial_edge_estimates(a.edges, a.labels);
    return a;
}

namespace {

Image scaled(const Image& img, double w) {
    Image out = img;
    for (float& v : out.data()) v = static_cast<float>(v * w);
    return out;
}

}  // namespace

EdgeImage gt_background_edges(const MixtureSample& s) { return edge_image(scaled(s.gt_background, s.w_background)); }
EdgeImage gt_reflection_edges(const MixtureSample& s) { return edge_image(scaled(s.gt_reflection, s.w_reflection)); }

bool resolve_bg_is_far(const PipelineConfig& c, const std::optional<Dataset>& ds) {
    if (c.bg_is_far) return *c.bg_is_far;
    if (ds) return ds->bg_is_far();
    const auto& b = c.synth.bg_disparity;
    const auto& r = c.synth.refl_disparity;
    return b.lo + b.hi <= r.lo + r.hi;
}

StageReport train_depth_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train) {
    const auto t0 = Clock::now();
    const std::uint64_t seed = stage_seed(c.seed, Stage::Depth);
    DepthTrainConfig tc = c.depth_train;
    tc.seed = derive_seed(seed, 1);
    set_deterministic(seed);
    DepthNet net = build_depth_net(c.depth_net, seed);
    const TrainHistory h = train_depth_net(net, stacks_of(train), tc);
    const CheckpointPaths p = checkpoint_paths(c);
    save_depth_net(net, p.depth);
    StageReport r;
    r.checkpoint = p.depth;
    r.history_csv = c.checkpoint_dir / "depth_loss.csv";
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < h.loss.size(); ++i) rows.push_back({static_cast<double>(i), h.loss[i]});
    write_csv(r.history_csv, {"step", "loss"}, rows);
    if (!h.loss.empty()) {
        r.first_loss = h.loss.front();
        r.last_loss = h.loss.back();
    }
    r.seconds = seconds_since(t0);
    return r;
}

StageReport train_regen_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train, bool bg_is_far) {
    const auto t0 = Clock::now();
    const CheckpointPaths p = checkpoint_paths(c);
    require_checkpoint(p.depth, "depth");
    DepthNet depth = load_depth_net(p.depth);
    std::vector<RegenExample> examples;
    examples.reserve(train.size());
    for (const auto& s : train) {
        const EdgeAnalysis a = analyze_edges(depth, s.stack, c.sigma, bg_is_far);
        examples.push_back({a.edges, a.initial.background, a.initial.reflection, gt_background_edges(s),
                            gt_reflection_edges(s)});
    }
    const RegenTensors data = make_regen_tensors(examples);

    const std::uint64_t seed = stage_seed(c.seed, Stage::Regen);
    RegenTrainConfig tc = c.regen_train;
    tc.seed = derive_seed(seed, 1);
    tc.adversarial = tc.adversarial && !c.ablation.no_discriminators;
    set_deterministic(seed);
    RegenModels m = build_regen_models(c.regen_generator, c.critic, seed);
    const RegenHistory h = train_regen(m, data, tc);
    save_regen_models(m, p.regen_dir);
    StageReport r;
    r.checkpoint = p.regen_dir;
    r.history_csv = p.regen_dir / "history.csv";
    h.write_csv(r.history_csv);
    if (!h.rows.empty()) {
        r.first_loss = h.rows.front().gen_obj;
        r.last_loss = h.rows.back().gen_obj;
    }
    r.seconds = seconds_since(t0);
    return r;
}

StageReport train_extract_stage(const PipelineConfig& c, const std::vector<MixtureSample>& train) {
    const auto t0 = Clock::now();
    std::vector<ExtractExample> examples;
    examples.reserve(train.size());
    for (const auto& s : train) {
        const Image& ref = s.stack.reference();
        examples.push_back({ref, binarize_edges(edge_image(ref), c.sigma),
                            binarize_edges(gt_background_edges(s), c.sigma), s.gt_background});
    }
    const ExtractTensors data = make_extract_tensors(examples);

    const std::uint64_t seed = stage_seed(c.seed, Stage::Extract);
    ExtractorConfig ec = c.extractor;
    ec.zero_without_reflection = ec.zero_without_reflection || c.ablation.no_I_MR;
    ec.zero_background_edges = ec.zero_background_edges || c.ablation.no_I_MB;
    PerceptualConfig pc = c.perceptual;
    pc.seed = stage_seed(c.seed, Stage::Perceptual);
    ExtractTrainConfig tc = c.extract_train;
    tc.seed = derive_seed(seed, 1);
    set_deterministic(seed);
    PerceptualExtractor v(pc);
    Extractor model = build_extractor(ec, seed);
    const ExtractHistory h = train_extractor(model, v, data, tc);
    const CheckpointPaths p = checkpoint_paths(c);
    save_extractor(model, v, p.extractor);
    StageReport r;
    r.checkpoint = p.extractor;
    r.history_csv = p.extractor.parent_path() / (p.extractor.stem().string() + "_loss.csv");
    h.write_csv(r.history_csv);
    if (!h.step_loss.empty()) {
        r.first_loss = h.step_loss.front();
        r.last_loss = h.step_loss.back();
    }
    r.seconds = seconds_since(t0);
    return r;
}

PipelineModels load_pipeline_models(const PipelineConfig& c) {
    const CheckpointPaths p = checkpoint_paths(c);
    PipelineModels m;
    require_checkpoint(p.depth, "depth");
    m.depth = load_depth_net(p.depth);
    if (!c.ablation.no_regen) {
        require_checkpoint(p.regen_dir / "generator.pt", "regen");
        m.generator = load_regen_generator(p.regen_dir);
    }
    require_checkpoint(p.extractor, "extract");
    m.extractor = load_extractor(p.extractor);
    return m;
}

PipelineResult run_pipeline(PipelineModels& m, const PipelineConfig& c, const MultiViewStack& stack, bool bg_is_far) {
    stack.validate();
    if (!m.depth || !m.extractor) throw std::invalid_argument("run_pipeline: depth and extractor models are required");
    if (!c.ablation.no_regen && !m.generator) throw std::invalid_argument("run_pipeline: regeneration model missing");
    PipelineResult r;
    auto timed = [&](const char* name, auto&& fn) {
        const auto t0 = Clock::now();
        fn();
        r.stage_seconds[name] += seconds_since(t0);
        r.stage_log.emplace_back(name);
    };

    EdgeAnalysis& a = r.analysis;
    timed("depth", [&] {
        a.edges = edge_image(stack.reference());
        a.edge_mask = binarize_edges(a.edges, c.sigma);
        a.depth = infer_edge_depth(m.depth, stack, c.sigma);
    });
    if (c.ablation.no_regen) {
        timed("classify", [&] {
            a.labels = two_layer_labels(a.depth, bg_is_far);
            a.initial = initial_edge_estimates(a.edges, a.labels);
            r.background_edges = a.initial.background;
            r.background_mask = a.initial.background_mask;
        });
    } else {
        timed("classify", [&] {
            a.labels = three_layer_labels(a.depth, bg_is_far, a.thresholds);
            a.initial = initial_edge_estimates(a.edges, a.labels);
        });
        timed("regen", [&] {
            RegeneratedEdges g = regenerate_edges(m.generator, a.edges, a.initial.background, a.initial.reflection,
                                                  c.sigma);
            r.background_edges = std::move(g.background);
            r.background_mask = std::move(g.background_mask);
        });
    }
    timed("extract", [&] {
        ExtractionResult e = extract_background(m.extractor, stack.reference(), r.background_mask, a.edge_mask);
        r.background = std::move(e.background);
        r.residual = std::move(e.residual);
        r.residual_display = std::move(e.residual_display);
    });
    return r;
}

void dump_intermediates(const PipelineResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Image& d = r.analysis.depth.values;
    Image depth_vis(d.height(), d.width(), 1);
    const double lo = d.min_value(), hi = d.max_value();
    for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x)
            depth_vis.at(y, x, 0) = hi > lo ? static_cast<float>((d.at(y, x, 0) - lo) / (hi - lo)) : 0.0f;
    save_png(depth_vis, dir / "depth.png");
    save_labels_png(r.analysis.labels, dir / "labels.png");
    save_png(clip01(r.background_edges.values), dir / "bg_edges.png");
    save_mask_png(r.background_mask, dir / "bg_mask.png");
    save_png(r.background, dir / "background.png");
    save_png(r.residual_display, dir / "residual.png");
    Image raw = r.residual;
    for (float& v : raw.data()) v += 0.5f;
    save_png(clip01(raw), dir / "residual_raw.png");
}

// ---------------------------------------------------------------------------------------------
// Evaluation

void EvalReport::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "sample,psnr_input,psnr_output\n";
    for (const auto& s : samples) out << s.id << ',' << s.psnr_input << ',' << s.psnr_output << '\n';
    out << "mean," << mean_psnr_input << ',' << mean_psnr_output << '\n';
}

std::string EvalReport::summary() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "variant " << variant << " (config " << fingerprint << ")\n";
    os << "  samples:            " << samples.size() << '\n';
    os << "  mean PSNR input:    " << mean_psnr_input << " dB\n";
    os << "  mean PSNR output:   " << mean_psnr_output << " dB\n";
    os << "  gain:               " << mean_psnr_output - mean_psnr_input << " dB\n";
    for (const auto& [stage, secs] : stage_seconds) os << "  " << stage << " time: " << secs << " s/sample\n";
    return os.str();
}

EvalReport evaluate(PipelineModels& m, const PipelineConfig& c, const std::vector<MixtureSample>& test,
                    bool bg_is_far) {
    if (test.empty()) throw std::invalid_argument("evaluate: no test samples");
    EvalReport rep;
    rep.variant = c.ablation.name();
    rep.fingerprint = config_fingerprint(c);
    for (const auto& s : test) {
        const PipelineResult r = run_pipeline(m, c, s.stack, bg_is_far);
        rep.samples.push_back({std::to_string(s.seed), psnr_mean_normalized(s.stack.reference(), s.gt_background),
                               psnr_mean_normalized(r.background, s.gt_background)});
        for (const auto& [stage, secs] : r.stage_seconds) rep.stage_seconds[stage] += secs / test.size();
    }
    for (const auto& s : rep.samples) {
        rep.mean_psnr_input += s.psnr_input / rep.samples.size();
        rep.mean_psnr_output += s.psnr_output / rep.samples.size();
    }
    return rep;
}

RegenQuality regen_quality(DepthNet& depth, UNet& g, const std::vector<MixtureSample>& test, float sigma,
                           bool bg_is_far) {
    RegenQuality q;
    std::vector<double> gt_vals, init_vals, regen_vals;
    double recall_init = 0.0, recall_regen = 0.0;
    for (const auto& s : test) {
        const EdgeAnalysis a = analyze_edges(depth, s.stack, sigma, bg_is_far);
        const RegeneratedEdges r = regenerate_edges(g, a.edges, a.initial.background, a.initial.reflection, sigma);
        const EdgeImage gt = gt_background_edges(s);
        const BinaryEdgeMask gt_mask = binarize_edges(gt, sigma);
        const double ri = mask_recall(a.initial.background_mask, gt_mask);
        const double rr = mask_recall(r.background_mask, gt_mask);
        if (std::isnan(ri) || std::isnan(rr)) continue;
        recall_init += ri;
        recall_regen += rr;
        ++q.samples;
        for (auto [src, dst] : {std::pair{&gt, &gt_vals}, std::pair{&a.initial.background, &init_vals},
                                std::pair{&r.background, &regen_vals}}) {
            const auto v = nonzero_values(*src);
            dst->insert(dst->end(), v.begin(), v.end());
        }
    }
    if (q.samples == 0) throw std::invalid_argument("regen_quality: no sample has background edges");
    q.recall_initial = recall_init / q.samples;
    q.recall_regen = recall_regen / q.samples;
    const double inf = std::numeric_limits<double>::infinity();
    q.w1_initial = init_vals.empty() ? inf : wasserstein_1d(init_vals, gt_vals);
    q.w1_regen = regen_vals.empty() ? inf : wasserstein_1d(regen_vals, gt_vals);
    return q;
}

namespace {

std::string hardware_description() {
    std::string model = "unknown cpu";
    std::ifstream in("/proc/cpuinfo");
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) model = line.substr(colon + 2);
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads, torch threads " +
           std::to_string(torch::get_num_threads());
}

}  // namespace

void TimingReport::write_csv(const std::filesystem::path& path) const {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < stages.size(); ++i) rows.push_back({static_cast<double>(i), mean_seconds[i]});
    rows.push_back({static_cast<double>(stages.size()), mean_total});
    reflex::write_csv(path, {"stage_index", "mean_seconds"}, rows);
}

std::string TimingReport::summary() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "timing over " << runs << " runs on " << hardware << '\n';
    for (std::size_t i = 0; i < stages.size(); ++i) os << "  " << i << ' ' << stages[i] << ": " << mean_seconds[i] << " s\n";
    os << "  " << stages.size() << " total: " << mean_total << " s (cv " << cv_total << ")\n";
    return os.str();
}

TimingReport timing_report(PipelineModels& m, const PipelineConfig& c, const std::vector<MultiViewStack>& inputs,
                           bool bg_is_far, int repeats) {
    if (inputs.empty() || repeats < 1) throw std::invalid_argument("timing_report: need inputs and repeats >= 1");
    TimingReport t;
    t.hardware = hardware_description();
    std::map<std::string, double> sums;
    std::vector<double> totals;
    for (int rep = 0; rep < repeats; ++rep)
        for (const auto& s : inputs) {
            const PipelineResult r = run_pipeline(m, c, s, bg_is_far);
            if (t.stages.empty()) t.stages = r.stage_log;
            double total = 0.0;
            for (const auto& [stage, secs] : r.stage_seconds) {
                sums[stage] += secs;
                total += secs;
            }
            totals.push_back(total);
        }
    t.runs = static_cast<int>(totals.size());
    for (const auto& stage : t.stages) t.mean_seconds.push_back(sums[stage] / t.runs);
    const DistributionSummary s = summarize(totals);
    t.mean_total = s.mean;
    double var = 0.0;
    for (double v : totals) var += (v - s.mean) * (v - s.mean);
    var /= t.runs;
    t.cv_total = s.mean > 0.0 ? std::sqrt(var) / s.mean : 0.0;
    return t;
}

std::pair<std::vector<MixtureSample>, std::vector<MixtureSample>> split_holdout(std::vector<MixtureSample> all,
                                                                                int holdout) {
    if (holdout < 0 || static_cast<std::size_t>(holdout) >= all.size()) {
        throw std::invalid_argument("split_holdout: holdout must leave at least one training sample");
    }
    std::vector<MixtureSample> test(std::make_move_iterator(all.end() - holdout), std::make_move_iterator(all.end()));
    all.resize(all.size() - static_cast<std::size_t>(holdout));
    return {std::move(all), std::move(test)};
}

}  // namespace reflex
