// reflex: command-line driver for the three-stage reflection removal pipeline.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "reflex/nn_util.hpp"
#include "reflex/pipeline_eval.hpp"

namespace fs = std::filesystem;
using namespace reflex;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool no_regen = false;
    bool no_discriminators = false;
    bool no_imr = false;
    bool no_imb = false;
};

PipelineConfig resolve(const Options& o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    // Relative data and checkpoint locations live under the output directory.
    if (c.dataset_dir.is_relative()) c.dataset_dir = c.output_dir / c.dataset_dir;
    if (c.checkpoint_dir.is_relative()) c.checkpoint_dir = c.output_dir / c.checkpoint_dir;
    c.ablation.no_regen |= o.no_regen;
    c.ablation.no_discriminators |= o.no_discriminators;
    c.ablation.no_I_MR |= o.no_imr;
    c.ablation.no_I_MB |= o.no_imb;
    c.validate();
    fs::create_directories(c.output_dir);
    fs::create_directories(c.checkpoint_dir);
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Prints the summary and keeps a copy next to the CSVs.
void report(const fs::path& path, const std::string& text) {
    std::cout << text;
    write_text(path, text);
}

struct Data {
    std::vector<MixtureSample> train;
    std::vector<MixtureSample> test;
    bool bg_is_far = true;
};

Data load_data(const PipelineConfig& c) {
    if (!fs::exists(c.dataset_dir / "manifest.json")) {
        throw std::runtime_error("no dataset at " + c.dataset_dir.string() + "; run `reflex synth` first");
    }
    const Dataset ds(c.dataset_dir);
    Data d;
    d.bg_is_far = resolve_bg_is_far(c, ds);
    std::tie(d.train, d.test) = split_holdout(ds.load_all(), c.holdout);
    if (d.train.empty()) throw std::runtime_error("holdout leaves no training samples");
    return d;
}

std::string stage_text(const char* stage, const StageReport& r) {
    std::ostringstream os;
    os << stage << ": " << r.seconds << " s, loss " << r.first_loss << " -> " << r.last_loss << '\n'
       << "  checkpoint " << r.checkpoint.string() << '\n'
       << "  history    " << r.history_csv.string() << '\n';
    return os.str();
}

int cmd_synth(const PipelineConfig& c) {
    const DatasetSummary s = synth_dataset(c.synth, stage_seed(c.seed, Stage::Synth), c.dataset_dir);
    std::ostringstream os;
    os << "wrote " << s.sample_dirs.size() << " samples to " << s.root.string() << '\n'
       << "  shared disparity range [" << s.shared_range.lo << ", " << s.shared_range.hi << "]\n"
       << "  background is " << (s.bg_is_far ? "far" : "near") << ", rejected draws " << s.rejected << '\n';
    report(c.output_dir / "synth_summary.txt", os.str());
    return 0;
}

int cmd_train_depth(const PipelineConfig& c) {
    const Data d = load_data(c);
    report(c.output_dir / "train_depth.txt", stage_text("depth", train_depth_stage(c, d.train)));
    return 0;
}

int cmd_train_regen(const PipelineConfig& c) {
    if (c.ablation.no_regen) throw std::runtime_error("train-regen makes no sense with --no-regen");
    const Data d = load_data(c);
    report(c.output_dir / "train_regen.txt", stage_text("regen", train_regen_stage(c, d.train, d.bg_is_far)));
    return 0;
}

int cmd_train_extract(const PipelineConfig& c) {
    const Data d = load_data(c);
    report(c.output_dir / "train_extract.txt", stage_text("extract", train_extract_stage(c, d.train)));
    return 0;
}

MultiViewStack stack_from_pngs(const std::vector<std::string>& views) {
    if (views.size() != static_cast<std::size_t>(kNumViews)) throw std::runtime_error("--views needs exactly 5 images");
    MultiViewStack s;
    for (int i = 0; i < kNumViews; ++i) s.views[static_cast<std::size_t>(i)] = load_png(views[static_cast<std::size_t>(i)]);
    s.validate();
    return s;
}

int cmd_infer(const PipelineConfig& c, const std::vector<std::string>& views, std::optional<int> sample) {
    PipelineModels m = load_pipeline_models(c);
    MultiViewStack stack;
    std::string id;
    bool bg_is_far = true;
    if (!views.empty()) {
        stack = stack_from_pngs(views);
        id = "input";
        bg_is_far = resolve_bg_is_far(c);
    } else {
        const Dataset ds(c.dataset_dir);
        const int i = sample.value_or(static_cast<int>(ds.size()) - 1);
        if (i < 0 || static_cast<std::size_t>(i) >= ds.size()) throw std::runtime_error("--sample out of range");
        stack = ds.load(static_cast<std::size_t>(i)).stack;
        id = "sample_" + std::to_string(i);
        bg_is_far = resolve_bg_is_far(c, ds);
    }
    const PipelineResult r = run_pipeline(m, c, stack, bg_is_far);
    const fs::path dir = c.output_dir / "infer" / c.ablation.name() / id;
    dump_intermediates(r, dir);
    std::ostringstream os;
    os << "inferred " << id << " (" << c.ablation.name() << ") -> " << dir.string() << '\n';
    for (const auto& stage : r.stage_log) os << "  " << stage << ' ' << r.stage_seconds.at(stage) << " s\n";
    report(dir / "summary.txt", os.str());
    return 0;
}

void edge_histograms(const PipelineConfig& c, const std::vector<MixtureSample>& test) {
    std::vector<Image> mixtures, backgrounds;
    for (const auto& s : test) {
        mixtures.push_back(s.stack.reference());
        backgrounds.push_back(s.gt_background);
    }
    const EdgeHistogramReport h = edge_histogram_report(mixtures, backgrounds, 32, c.sigma);
    write_histogram_csv(h, c.output_dir / "edge_hist.csv");
    render_histogram_png(h, c.output_dir / "edge_hist.png");
    std::ostringstream os;
    os << "edge intensity over " << test.size() << " held-out samples\n"
       << "  mixture:    n " << h.mixture_stats.count << " mean " << h.mixture_stats.mean << " skew "
       << h.mixture_stats.skewness << '\n'
       << "  background: n " << h.background_stats.count << " mean " << h.background_stats.mean << " skew "
       << h.background_stats.skewness << '\n';
    report(c.output_dir / "edge_hist.txt", os.str());
}

void regen_histograms(const PipelineConfig& c, PipelineModels& m, const Data& d) {
    const RegenQuality q = regen_quality(m.depth, m.generator, d.test, c.sigma, d.bg_is_far);
    write_csv(c.output_dir / "regen_quality.csv", {"recall_initial", "recall_regen", "w1_initial", "w1_regen"},
              {{q.recall_initial, q.recall_regen, q.w1_initial, q.w1_regen}});
    std::ostringstream os;
    os << "background edges over " << q.samples << " samples\n"
       << "  recall  initial " << q.recall_initial << "  regenerated " << q.recall_regen << '\n'
       << "  W1      initial " << q.w1_initial << "  regenerated " << q.w1_regen << '\n';
    report(c.output_dir / "regen_quality.txt", os.str());
}

int cmd_eval(const PipelineConfig& c) {
    const Data d = load_data(c);
    PipelineModels m = load_pipeline_models(c);
    const EvalReport rep = evaluate(m, c, d.test, d.bg_is_far);
    rep.write_csv(c.output_dir / ("eval_" + rep.variant + ".csv"));
    report(c.output_dir / ("eval_" + rep.variant + ".txt"), rep.summary());
    edge_histograms(c, d.test);
    if (!c.ablation.no_regen) regen_histograms(c, m, d);
    return 0;
}

// Trains whatever the variant is missing, reusing shared checkpoints.
void ensure_trained(const PipelineConfig& c, const Data& d) {
    const CheckpointPaths p = checkpoint_paths(c);
    if (!fs::exists(p.depth)) std::cout << stage_text("depth", train_depth_stage(c, d.train));
    if (!c.ablation.no_regen && !fs::exists(p.regen_dir / "generator.pt")) {
        std::cout << stage_text("regen", train_regen_stage(c, d.train, d.bg_is_far));
    }
    if (!fs::exists(p.extractor)) std::cout << stage_text("extract", train_extract_stage(c, d.train));
}

int cmd_ablate(const PipelineConfig& base) {
    const Data d = load_data(base);
    std::vector<Ablation> variants(5);
    variants[1].no_regen = true;
    variants[2].no_discriminators = true;
    variants[3].no_I_MR = true;
    variants[4].no_I_MB = true;
    std::vector<std::vector<double>> rows;
    std::ostringstream os;
    os << "ablation over " << d.test.size() << " held-out samples (mean-normalized PSNR, dB)\n";
    for (std::size_t i = 0; i < variants.size(); ++i) {
        PipelineConfig c = base;
        c.ablation = variants[i];
        ensure_trained(c, d);
        PipelineModels m = load_pipeline_models(c);
        const EvalReport rep = evaluate(m, c, d.test, d.bg_is_far);
        rep.write_csv(c.output_dir / ("eval_" + rep.variant + ".csv"));
        rows.push_back({static_cast<double>(i), rep.mean_psnr_input, rep.mean_psnr_output});
        os << "  " << i << ' ' << rep.variant << ": " << rep.mean_psnr_output << " (input " << rep.mean_psnr_input
           << ")\n";
    }
    write_csv(base.output_dir / "ablation.csv", {"variant_index", "psnr_input", "psnr_output"}, rows);
    report(base.output_dir / "ablation.txt", os.str());
    return 0;
}

int cmd_timing(const PipelineConfig& c, int repeats) {
    const Data d = load_data(c);
    PipelineModels m = load_pipeline_models(c);
    std::vector<MultiViewStack> stacks;
    for (const auto& s : d.test) stacks.push_back(s.stack);
    const TimingReport t = timing_report(m, c, stacks, d.bg_is_far, repeats);
    t.write_csv(c.output_dir / "timing.csv");
    report(c.output_dir / "timing.txt", t.summary());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view reflection removal: synthesis, training, inference and evaluation"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON pipeline configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Global seed (overrides the config)");
    app.add_option("--out-dir", o.out_dir, "Output directory (overrides the config)");
    app.add_flag("--no-regen", o.no_regen, "Skip edge regeneration; 2-cluster k-means instead");
    app.add_flag("--no-discriminators", o.no_discriminators, "Train the edge generator without critics");
    app.add_flag("--no-imr", o.no_imr, "Zero the reflection-edge-masked image input");
    app.add_flag("--no-imb", o.no_imb, "Zero the background-edge image input");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic multi-view dataset");
    auto* train_depth = app.add_subcommand("train-depth", "Train the edge depth network");
    auto* train_regen = app.add_subcommand("train-regen", "Train the edge generator and critics");
    auto* train_extract = app.add_subcommand("train-extract", "Train the background extractor");
    auto* infer = app.add_subcommand("infer", "Run the pipeline on one input and dump intermediates");
    std::vector<std::string> views;
    std::optional<int> sample;
    infer->add_option("--views", views, "Five view PNGs, reference in the middle")->expected(kNumViews);
    infer->add_option("--sample", sample, "Dataset sample index (default: last)");
    auto* eval = app.add_subcommand("eval", "Evaluate on the held-out samples");
    auto* ablate = app.add_subcommand("ablate", "Train and evaluate every ablation variant");
    auto* timing = app.add_subcommand("timing", "Per-stage inference timing");
    int repeats = 3;
    timing->add_option("--repeats", repeats, "Passes over the held-out samples")->check(CLI::PositiveNumber);
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    try {
        const PipelineConfig c = resolve(o);
        set_deterministic(c.seed);
        write_text(c.output_dir / "config.json", to_json(c).dump(2) + "\n");
        if (*synth) return cmd_synth(c);
        if (*train_depth) return cmd_train_depth(c);
        if (*train_regen) return cmd_train_regen(c);
        if (*train_extract) return cmd_train_extract(c);
        if (*infer) return cmd_infer(c, views, sample);
        if (*eval) return cmd_eval(c);
        if (*ablate) return cmd_ablate(c);
        if (*timing) return cmd_timing(c, repeats);
    } catch (const std::exception& e) {
        std::cerr << "reflex: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
