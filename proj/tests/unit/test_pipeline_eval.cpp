#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "reflex/nn_util.hpp"
#include "reflex/pipeline_eval.hpp"
#include "test_util.hpp"

using namespace reflex;

namespace {

PipelineModels tiny_models(const PipelineConfig& c) {
    PipelineModels m;
    DepthNetConfig dn;
    dn.channels = {8, 1};
    dn.init_disparity = 2.0;
    m.depth = build_depth_net(dn, 1);
    m.depth->eval();
    GeneratorConfig g = default_regen_generator_config();
    g.depth = 3;
    g.base_channels = 8;
    g.max_channels = 16;
    m.generator = build_regen_models(g, CriticConfig{}, 2).generator;
    ExtractorConfig e = c.extractor;
    e.net.depth = 3;
    e.net.base_channels = 8;
    e.net.max_channels = 16;
    m.extractor = build_extractor(e, 3);
    m.extractor->mark_trained();
    return m;
}

SynthConfig small_synth() {
    SynthConfig s;
    s.height = 32;
    s.width = 32;
    return s;
}

}  // namespace

TEST(Psnr, IdenticalImagesHitTheCap) {
    std::mt19937_64 rng(1);
    const Image a = fixtures::random_image(8, 8, 3, rng);
    EXPECT_EQ(psnr_mean_normalized(a, a), kPsnrCap);
}

TEST(Psnr, ConstantBiasIsRemovedBeforeScoring) {
    std::mt19937_64 rng(2);
    const Image gt = fixtures::random_image(8, 8, 3, rng, 0.2f, 0.8f);
    Image biased = gt;
    for (float& v : biased.data()) v += 0.1f;
    EXPECT_EQ(psnr_mean_normalized(biased, gt), kPsnrCap);
}

TEST(Psnr, KnownErrorGivesTwentyDecibels) {
    // Alternating +-0.1 around a flat gt: zero-mean error with MSE 0.01.
    const Image gt(4, 4, 1, 0.5f);
    Image r = gt;
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] += (i % 2 == 0) ? 0.1f : -0.1f;
    EXPECT_NEAR(psnr_mean_normalized(r, gt), 20.0, 1e-5);
}

TEST(Psnr, InvariantToBiasOfTheResult) {
    std::mt19937_64 rng(3);
    const Image gt = fixtures::random_image(8, 8, 3, rng, 0.3f, 0.7f);
    const Image r = fixtures::random_image(8, 8, 3, rng, 0.3f, 0.7f);
    Image shifted = r;
    for (float& v : shifted.data()) v -= 0.05f;
    EXPECT_NEAR(psnr_mean_normalized(r, gt), psnr_mean_normalized(shifted, gt), 1e-4);
}

TEST(Wasserstein, EqualSizesReduceToSortedDifferences) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(30), b(30);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = 0.5 + 2 * n(rng);
        auto sa = a, sb = b;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        double oracle = 0;
        for (std::size_t i = 0; i < sa.size(); ++i) oracle += std::abs(sa[i] - sb[i]);
        EXPECT_NEAR(wasserstein_1d(a, b), oracle / 30.0, 1e-12);
    }
}

TEST(Wasserstein, ShiftAndIdentity) {
    const std::vector<double> a{0.1, 0.4, 0.2, 0.9};
    EXPECT_NEAR(wasserstein_1d(a, a), 0.0, 1e-15);
    std::vector<double> b;
    for (double v : a) b.push_back(v + 0.3);
    EXPECT_NEAR(wasserstein_1d(a, b), 0.3, 1e-12);
    EXPECT_NEAR(wasserstein_1d({0.0}, {0.0, 1.0}), 0.5, 1e-12);
    EXPECT_THROW((void)wasserstein_1d({}, {1.0}), std::invalid_argument);
}

TEST(Recall, CountsInteriorTruthPixels) {
    BinaryEdgeMask truth(12, 12), pred(12, 12);
    truth.set(5, 5, true);
    truth.set(6, 6, true);
    truth.set(0, 0, true);  // border, ignored
    pred.set(5, 5, true);
    EXPECT_DOUBLE_EQ(mask_recall(pred, truth), 0.5);
    EXPECT_TRUE(std::isnan(mask_recall(pred, BinaryEdgeMask(12, 12))));
}

TEST(Histogram, ConservesCounts) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    std::vector<double> v(1000);
    for (auto& x : v) x = u(rng);
    const Histogram h = make_histogram(v, 17, 0.0, 1.0);
    EXPECT_EQ(h.total(), 1000);
    EXPECT_EQ(h.edges.size(), 18u);
}

TEST(Histogram, IdenticalSetsGiveIdenticalReports) {
    std::mt19937_64 rng(6);
    std::vector<Image> imgs{procedural_texture(32, 32, rng), procedural_texture(32, 32, rng)};
    const EdgeHistogramReport r = edge_histogram_report(imgs, imgs);
    EXPECT_EQ(r.mixture.counts, r.background.counts);
    EXPECT_DOUBLE_EQ(r.mixture_stats.mean, r.background_stats.mean);
}

TEST(Histogram, FlatImagesHaveNoEdgePoints) {
    const std::vector<Image> flat{Image(16, 16, 3, 0.5f)};
    EXPECT_THROW((void)edge_histogram_report(flat, flat), std::invalid_argument);
}

TEST(Histogram, AddedReflectionLightRaisesEdgeIntensity) {
    // Purely additive light: the background keeps full weight and the reflection adds on top.
    SynthConfig s = small_synth();
    s.height = s.width = 64;
    std::vector<Image> mix, bg;
    for (std::uint64_t i = 0; i < 12; ++i) {
        const MixtureSample m = synth_sample(s, derive_seed(9, i));
        mix.push_back(mix_images(m.gt_background, m.gt_reflection, 1.0, 0.4).image);
        bg.push_back(m.gt_background);
    }
    const EdgeHistogramReport r = edge_histogram_report(mix, bg);
    EXPECT_GT(r.mixture_stats.mean, r.background_stats.mean);
}

TEST(Histogram, SummaryMatchesDirectComputation) {
    std::mt19937_64 rng(8);
    const std::vector<Image> imgs{procedural_texture(32, 32, rng)};
    const std::vector<Image> bgs{procedural_texture(32, 32, rng)};
    const EdgeHistogramReport r = edge_histogram_report(imgs, bgs);
    const BinaryEdgeMask m = binarize_edges(edge_image(imgs[0]));
    double sum = 0;
    long n = 0;
    for (int y = kBorder; y < 32 - kBorder; ++y)
        for (int x = kBorder; x < 32 - kBorder; ++x)
            if (m.at(y, x)) {
                const Image& im = imgs[0];
                sum += 0.299 * im.at(y, x, 0) + 0.587 * im.at(y, x, 1) + 0.114 * im.at(y, x, 2);
                ++n;
            }
    ASSERT_GT(n, 0);
    EXPECT_EQ(r.mixture.total(), n);
    EXPECT_NEAR(r.mixture_stats.mean, sum / n, 1e-6);
}

TEST(Histogram, CsvAndPngAreWritten) {
    std::mt19937_64 rng(7);
    std::vector<Image> imgs{procedural_texture(32, 32, rng)};
    const EdgeHistogramReport r = edge_histogram_report(imgs, imgs, 8);
    const auto dir = std::filesystem::temp_directory_path() / "reflex_hist_test";
    std::filesystem::create_directories(dir);
    write_histogram_csv(r, dir / "h.csv");
    render_histogram_png(r, dir / "h.png");
    std::ifstream in(dir / "h.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "bin_lo,bin_hi,mixture,background");
    EXPECT_GT(std::filesystem::file_size(dir / "h.png"), 0u);
    std::filesystem::remove_all(dir);
}

TEST(Config, JsonRoundTrip) {
    PipelineConfig c;
    c.seed = 42;
    c.holdout = 3;
    c.ablation.no_I_MB = true;
    c.bg_is_far = false;
    c.depth_train.steps = 17;
    const PipelineConfig back = pipeline_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(config_fingerprint(back), config_fingerprint(c));
    c.seed = 43;
    EXPECT_NE(config_fingerprint(back), config_fingerprint(c));
}

TEST(Config, UnknownKeysAreRejected) {
    nlohmann::json j = to_json(PipelineConfig{});
    j["learning_rate_typo"] = 1;
    EXPECT_THROW((void)pipeline_config_from_json(j), std::invalid_argument);
}

TEST(Config, PartialJsonKeepsDefaults) {
    const PipelineConfig c = pipeline_config_from_json(nlohmann::json{{"seed", 5}});
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.regen_train.lambda1, 2.5e-3);
    EXPECT_EQ(c.extract_train.lambda2, 1.25);
}

TEST(Config, StageSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (auto s : {Stage::Synth, Stage::Depth, Stage::Regen, Stage::Extract, Stage::Perceptual})
        seen.insert(stage_seed(1, s));
    EXPECT_EQ(seen.size(), 5u);
    EXPECT_NE(stage_seed(1, Stage::Depth), stage_seed(2, Stage::Depth));
}

TEST(Config, CheckpointPathsFollowTheAblation) {
    PipelineConfig c;
    c.checkpoint_dir = "ck";
    EXPECT_EQ(checkpoint_paths(c).extractor, std::filesystem::path("ck/extractor.pt"));
    c.ablation.no_I_MR = true;
    c.ablation.no_discriminators = true;
    EXPECT_EQ(checkpoint_paths(c).extractor, std::filesystem::path("ck/extractor_no_imr.pt"));
    EXPECT_EQ(checkpoint_paths(c).regen_dir, std::filesystem::path("ck/regen_no_disc"));
    EXPECT_EQ(c.ablation.name(), "no_discriminators+no_I_MR");
    EXPECT_EQ(Ablation{}.name(), "full");
}

TEST(Pipeline, MissingCheckpointNamesTheStage) {
    PipelineConfig c;
    c.checkpoint_dir = std::filesystem::temp_directory_path() / "reflex_no_such_dir";
    try {
        (void)load_pipeline_models(c);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("stage 'depth'"), std::string::npos) << e.what();
    }
}

TEST(Pipeline, RunsEachStageOnceInOrder) {
    PipelineConfig c;
    PipelineModels m = tiny_models(c);
    const MixtureSample s = synth_sample(small_synth(), 11);
    const PipelineResult r = run_pipeline(m, c, s.stack, true);
    EXPECT_EQ(r.stage_log, (std::vector<std::string>{"depth", "classify", "regen", "extract"}));
    EXPECT_TRUE(r.background.same_shape(s.stack.reference()));
    EXPECT_EQ(r.stage_seconds.size(), 4u);

    c.ablation.no_regen = true;
    const PipelineResult r2 = run_pipeline(m, c, s.stack, true);
    EXPECT_EQ(r2.stage_log, (std::vector<std::string>{"depth", "classify", "extract"}));
    EXPECT_EQ(r2.analysis.labels.count(EdgeLayer::Shared) == 0 ||
                  r2.analysis.labels.count(EdgeLayer::Shared) == r2.analysis.edge_mask.count(),
              true);
}

TEST(Pipeline, IsDeterministic) {
    PipelineConfig c;
    PipelineModels m = tiny_models(c);
    const MixtureSample s = synth_sample(small_synth(), 12);
    EXPECT_EQ(run_pipeline(m, c, s.stack, true).background, run_pipeline(m, c, s.stack, true).background);
}

TEST(Pipeline, NoBackgroundEdgeInputIgnoresThoseChannels) {
    PipelineConfig c;
    c.extractor.zero_background_edges = true;
    PipelineModels m = tiny_models(c);
    const MixtureSample s = synth_sample(small_synth(), 13);
    const PipelineResult full = run_pipeline(m, c, s.stack, true);
    const BinaryEdgeMask me = binarize_edges(edge_image(s.stack.reference()));
    const auto x1 = extractor_input(s.stack.reference(), me, full.background_mask);
    auto x2 = x1.clone();
    x2.slice(0, 3, 6).zero_();
    m.extractor->eval();
    EXPECT_TRUE(torch::equal(m.extractor->forward(x1.unsqueeze(0)), m.extractor->forward(x2.unsqueeze(0))));
}

TEST(Eval, ReportMeansAndCsv) {
    PipelineConfig c;
    PipelineModels m = tiny_models(c);
    std::vector<MixtureSample> test{synth_sample(small_synth(), 21), synth_sample(small_synth(), 22)};
    const EvalReport rep = evaluate(m, c, test, true);
    ASSERT_EQ(rep.samples.size(), 2u);
    EXPECT_NEAR(rep.mean_psnr_output, (rep.samples[0].psnr_output + rep.samples[1].psnr_output) / 2, 1e-12);
    EXPECT_NEAR(rep.mean_psnr_input, (rep.samples[0].psnr_input + rep.samples[1].psnr_input) / 2, 1e-12);
    EXPECT_EQ(rep.variant, "full");
    EXPECT_NE(rep.summary().find("mean PSNR output"), std::string::npos);
}

TEST(Eval, TimingTotalIsTheSumOfStages) {
    PipelineConfig c;
    PipelineModels m = tiny_models(c);
    const std::vector<MultiViewStack> in{synth_sample(small_synth(), 31).stack};
    const TimingReport t = timing_report(m, c, in, true, 2);
    EXPECT_EQ(t.runs, 2);
    ASSERT_EQ(t.stages.size(), 4u);
    double sum = 0;
    for (double v : t.mean_seconds) sum += v;
    EXPECT_NEAR(t.mean_total, sum, 1e-9);
}

TEST(Eval, HoldoutTakesTrailingSamples) {
    std::vector<MixtureSample> all(5);
    for (std::uint64_t i = 0; i < 5; ++i) all[i].seed = i;
    const auto [train, test] = split_holdout(all, 2);
    ASSERT_EQ(train.size(), 3u);
    ASSERT_EQ(test.size(), 2u);
    EXPECT_EQ(test[0].seed, 3u);
    EXPECT_EQ(test[1].seed, 4u);
}
