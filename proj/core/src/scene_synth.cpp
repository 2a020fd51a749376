#include "reflex/scene_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "reflex/edge_ops.hpp"

namespace reflex {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<double, double> DisparityPlane::range(int h, int w) const {
    const double corners[4] = {at(0, 0), at(0, w - 1), at(h - 1, 0), at(h - 1, w - 1)};
    return {*std::min_element(corners, corners + 4), *std::max_element(corners, corners + 4)};
}

DisparityRange DisparityRange::intersect(const DisparityRange& o) const noexcept {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
}

void MultiViewStack::validate() const {
    if (reference_index < 0 || reference_index >= kNumViews) {
        throw std::invalid_argument("MultiViewStack: reference index out of range");
    }
    if (baselines[static_cast<std::size_t>(reference_index)] != 0.0) {
        throw std::invalid_argument("MultiViewStack: reference baseline must be 0");
    }
    for (const auto& v : views) {
        if (!v.same_shape(views[0]) || v.empty()) {
            throw std::invalid_argument("MultiViewStack: views must be non-empty and share dimensions");
        }
    }
}

Image mix_linear(const Image& bg, const Image& refl, double w_bg, double w_refl) {
    require_same_shape(bg, refl, "mix_images");
    Image out(bg.height(), bg.width(), bg.channels());
    auto o = out.data();
    auto b = bg.data();
    auto r = refl.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = static_cast<float>(w_bg * b[i] + w_refl * r[i]);
    }
    return out;
}

MixResult mix_images(const Image& bg, const Image& refl, double w_bg, double w_refl) {
    if (w_bg < 0.0 || w_refl < 0.0 || (w_bg == 0.0 && w_refl == 0.0)) {
        throw std::invalid_argument("mix_images: weights must be nonnegative and not both zero");
    }
    MixResult res{mix_linear(bg, refl, w_bg, w_refl), 0.0};
    std::size_t clipped = 0;
    for (float& v : res.image.data()) {
        if (v < 0.0f || v > 1.0f) {
            ++clipped;
            v = std::clamp(v, 0.0f, 1.0f);
        }
    }
    res.clip_fraction = res.image.size() ? static_cast<double>(clipped) / static_cast<double>(res.image.size()) : 0.0;
    return res;
}

Image shift_layer(const Image& layer, const DisparityPlane& disparity, double baseline, BaselineAxis axis) {
    Image out(layer.height(), layer.width(), layer.channels());
    const bool horiz = axis == BaselineAxis::Horizontal;
    const int extent = horiz ? layer.width() : layer.height();
    for (int y = 0; y < layer.height(); ++y)
        for (int x = 0; x < layer.width(); ++x) {
            const double offset = baseline * disparity.at(y, x);
            const double pos = std::clamp((horiz ? x : y) + offset, 0.0, static_cast<double>(extent - 1));
            const int i0 = std::min(static_cast<int>(std::floor(pos)), extent - 2 < 0 ? 0 : extent - 2);
            const double frac = pos - i0;
            const int i1 = std::min(i0 + 1, extent - 1);
            for (int c = 0; c < layer.channels(); ++c) {
                const float a = horiz ? layer.at(y, i0, c) : layer.at(i0, x, c);
                const float b = horiz ? layer.at(y, i1, c) : layer.at(i1, x, c);
                out.at(y, x, c) = frac == 0.0 ? a : static_cast<float>((1.0 - frac) * a + frac * b);
            }
        }
    return out;
}

MultiViewStack render_views(const LayerScene& scene, std::span<const double> baselines, BaselineAxis axis) {
    require_same_shape(scene.background, scene.reflection, "render_views");
    if (baselines.size() != kNumViews) throw std::invalid_argument("render_views: exactly 5 baselines required");
    if (baselines[kReferenceView] != 0.0) throw std::invalid_argument("render_views: reference baseline must be 0");
    const int h = scene.background.height();
    const int w = scene.background.width();
    const int extent = axis == BaselineAxis::Horizontal ? w : h;
    for (const auto* plane : {&scene.bg_disparity, &scene.refl_disparity}) {
        const auto [lo, hi] = plane->range(h, w);
        if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("render_views: non-finite disparity");
        for (double b : baselines) {
            if (std::max(std::abs(b * lo), std::abs(b * hi)) >= extent) {
                throw std::invalid_argument("render_views: disparity x baseline exceeds image extent");
            }
        }
    }
    MultiViewStack stack;
    stack.axis = axis;
    for (int n = 0; n < kNumViews; ++n) {
        const double b = baselines[static_cast<std::size_t>(n)];
        stack.baselines[static_cast<std::size_t>(n)] = b;
        const Image bg = shift_layer(scene.background, scene.bg_disparity, b, axis);
        const Image rf = shift_layer(scene.reflection, scene.refl_disparity, b, axis);
        stack.views[static_cast<std::size_t>(n)] = mix_images(bg, rf, scene.w_background, scene.w_reflection).image;
    }
    return stack;
}

std::vector<Orientation> all_orientations() {
    std::vector<Orientation> out;
    for (int i = 0; i < 8; ++i) out.push_back(Orientation::from_index(i));
    return out;
}

int crop_positions_per_axis(int extent, int crop, int stride) {
    if (stride < 1) throw std::invalid_argument("augment: stride must be >= 1");
    if (crop < 1 || crop > extent) throw std::invalid_argument("augment: crop larger than image");
    return (extent - crop) / stride + 1;
}

namespace {

// Plane re-expressed on the cropped and transformed grid. Exact because the map is affine.
DisparityPlane transform_plane(const DisparityPlane& p, int y0, int x0, int crop, Orientation o) {
    auto source_of = [&](int y, int x) {
        const auto [sy, sx] = source_coordinate(y, x, crop, crop, o);
        return std::pair<double, double>{sy + y0, sx + x0};
    };
    const auto [sy00, sx00] = source_of(0, 0);
    const auto [sy01, sx01] = source_of(0, 1);
    const auto [sy10, sx10] = source_of(1, 0);
    const double d00 = p.at(sy00, sx00);
    return {d00, p.at(sy01, sx01) - d00, p.at(sy10, sx10) - d00};
}

}  // namespace

MultiViewStack crop_and_orient(const MultiViewStack& s, int y0, int x0, int crop, Orientation o) {
    MultiViewStack out;
    for (int n = 0; n < kNumViews; ++n) {
        const auto i = static_cast<std::size_t>(n);
        out.views[i] = transform(reflex::crop(s.views[i], y0, x0, crop, crop), o);
    }
    // The displacement direction rotates with the grid; its sign is folded into the baselines.
    const auto [dy, dx] = s.axis == BaselineAxis::Horizontal ? std::pair{0, 1} : std::pair{1, 0};
    const auto [ny, nx] = transform_direction(dy, dx, o);
    out.axis = nx != 0 ? BaselineAxis::Horizontal : BaselineAxis::Vertical;
    const double sign = (nx != 0 ? nx : ny) > 0 ? 1.0 : -1.0;
    for (int n = 0; n < kNumViews; ++n) {
        const auto i = static_cast<std::size_t>(n);
        out.baselines[i] = s.baselines[i] == 0.0 ? 0.0 : sign * s.baselines[i];
    }
    out.reference_index = s.reference_index;
    return out;
}

MixtureSample crop_and_orient(const MixtureSample& s, int y0, int x0, int crop, Orientation o) {
    MixtureSample out;
    out.stack = crop_and_orient(s.stack, y0, x0, crop, o);
    out.gt_background = transform(reflex::crop(s.gt_background, y0, x0, crop, crop), o);
    out.gt_reflection = transform(reflex::crop(s.gt_reflection, y0, x0, crop, crop), o);
    out.gt_bg_disparity = transform_plane(s.gt_bg_disparity, y0, x0, crop, o);
    out.gt_refl_disparity = transform_plane(s.gt_refl_disparity, y0, x0, crop, o);
    out.w_background = s.w_background;
    out.w_reflection = s.w_reflection;
    out.seed = s.seed;
    out.clip_fraction = s.clip_fraction;
    return out;
}

std::vector<MixtureSample> augment(const MixtureSample& sample, int crop, int stride,
                                   const std::vector<Orientation>& orientations) {
    const int ny = crop_positions_per_axis(sample.stack.height(), crop, stride);
    const int nx = crop_positions_per_axis(sample.stack.width(), crop, stride);
    std::vector<MixtureSample> out;
    out.reserve(static_cast<std::size_t>(ny) * nx * orientations.size());
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            for (const Orientation& o : orientations) out.push_back(crop_and_orient(sample, iy * stride, ix * stride, crop, o));
    return out;
}

Image procedural_texture(int height, int width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    Image img(height, width, 3);
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = uni(0.1, 0.9);
        c1[c] = uni(0.1, 0.9);
    }
    const double angle = uni(0.0, 2.0 * M_PI);
    const double gx = std::cos(angle) / width, gy = std::sin(angle) / height;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double t = std::clamp(0.5 + (x - width / 2.0) * gx + (y - height / 2.0) * gy, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(c0[c] + (c1[c] - c0[c]) * t);
        }

    const double scale = std::min(height, width) / 64.0;
    std::uniform_int_distribution<int> n_blobs(2, 4);
    const int blobs = n_blobs(rng);
    for (int b = 0; b < blobs; ++b) {
        const double cy = uni(0, height), cx = uni(0, width), s = uni(5.0, 12.0) * scale;
        double amp[3];
        for (double& a : amp) a = uni(-0.25, 0.25);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double g = std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2.0 * s * s));
                for (int c = 0; c < 3; ++c) img.at(y, x, c) += static_cast<float>(amp[c] * g);
            }
    }

    std::uniform_int_distribution<int> n_discs(4, 8);
    const int discs = n_discs(rng);
    for (int d = 0; d < discs; ++d) {
        const double cy = uni(0, height), cx = uni(0, width);
        const double r = uni(4.0, 14.0) * scale, soft = uni(1.0, 2.5);
        double col[3];
        for (double& v : col) v = uni(0.0, 1.0);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dist = std::hypot(y - cy, x - cx);
                const double a = std::clamp(0.5 + (r - dist) / (2.0 * soft), 0.0, 1.0);
                if (a <= 0.0) continue;
                for (int c = 0; c < 3; ++c)
                    img.at(y, x, c) = static_cast<float>((1.0 - a) * img.at(y, x, c) + a * col[c]);
            }
    }
    return clip01(img);
}

json to_json(const SynthConfig& cfg) {
    json j;
    j["count"] = cfg.count;
    j["height"] = cfg.height;
    j["width"] = cfg.width;
    j["bg_disparity"] = {cfg.bg_disparity.lo, cfg.bg_disparity.hi};
    j["refl_disparity"] = {cfg.refl_disparity.lo, cfg.refl_disparity.hi};
    j["max_slope"] = cfg.max_slope;
    j["w_background"] = cfg.w_background;
    j["w_reflection"] = cfg.w_reflection;
    j["baselines"] = cfg.baselines;
    j["max_clip_fraction"] = cfg.max_clip_fraction;
    j["texture_dir"] = cfg.texture_dir ? json(cfg.texture_dir->string()) : json(nullptr);
    return j;
}

SynthConfig synth_config_from_json(const json& j) {
    SynthConfig cfg;
    cfg.count = j.value("count", cfg.count);
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    if (j.contains("bg_disparity")) cfg.bg_disparity = {j["bg_disparity"][0], j["bg_disparity"][1]};
    if (j.contains("refl_disparity")) cfg.refl_disparity = {j["refl_disparity"][0], j["refl_disparity"][1]};
    cfg.max_slope = j.value("max_slope", cfg.max_slope);
    cfg.w_background = j.value("w_background", cfg.w_background);
    cfg.w_reflection = j.value("w_reflection", cfg.w_reflection);
    if (j.contains("baselines")) cfg.baselines = j["baselines"].get<std::array<double, kNumViews>>();
    cfg.max_clip_fraction = j.value("max_clip_fraction", cfg.max_clip_fraction);
    if (j.contains("texture_dir") && j["texture_dir"].is_string()) cfg.texture_dir = j["texture_dir"].get<std::string>();
    if (cfg.count < 0 || cfg.height < 8 || cfg.width < 8) throw std::invalid_argument("synth config: bad size or count");
    if (cfg.bg_disparity.empty() || cfg.refl_disparity.empty()) {
        throw std::invalid_argument("synth config: disparity ranges must satisfy lo <= hi");
    }
    return cfg;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    auto splitmix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return splitmix(seed ^ splitmix(index + 0x632be59bd9b4e019ULL));
}

namespace {

std::vector<Image> load_photo_textures(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".PNG" || ext == ".JPG") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Image> out;
    for (const auto& f : files) {
        cv::Mat m = cv::imread(f.string(), cv::IMREAD_COLOR);
        if (m.empty()) continue;
        cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
        Image img(m.rows, m.cols, 3);
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = m.at<cv::Vec3b>(y, x)[c] / 255.0f;
        out.push_back(std::move(img));
    }
    if (out.empty()) throw std::runtime_error("synth: no readable photographs in " + dir.string());
    return out;
}

Image photo_patch(const std::vector<Image>& photos, int h, int w, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, photos.size() - 1);
    const Image& src = photos[pick(rng)];
    cv::Mat m(src.height(), src.width(), CV_32FC3, const_cast<float*>(src.data().data()));
    const double s = std::max(static_cast<double>(h) / src.height(), static_cast<double>(w) / src.width());
    cv::Mat scaled;
    if (s > 1.0) {
        cv::resize(m, scaled, cv::Size(), s, s, cv::INTER_AREA);
    } else {
        scaled = m;
    }
    std::uniform_int_distribution<int> oy(0, scaled.rows - h), ox(0, scaled.cols - w);
    const int y0 = oy(rng), x0 = ox(rng);
    Image out(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = scaled.at<cv::Vec3f>(y0 + y, x0 + x)[c];
    return out;
}

DisparityPlane random_plane(const DisparityRange& range, double max_slope, int h, int w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double center = range.lo + (range.hi - range.lo) * u01(rng);
    double sx = max_slope * (2.0 * u01(rng) - 1.0);
    double sy = max_slope * (2.0 * u01(rng) - 1.0);
    // Keep the whole plane inside the requested range by shrinking the slope.
    const double half_extent = std::abs(sx) * (w - 1) / 2.0 + std::abs(sy) * (h - 1) / 2.0;
    const double room = std::min(center - range.lo, range.hi - center);
    if (half_extent > room && half_extent > 0.0) {
        const double k = room / half_extent;
        sx *= k;
        sy *= k;
    }
    return {center - sx * (w - 1) / 2.0 - sy * (h - 1) / 2.0, sx, sy};
}

}  // namespace

MixtureSample synth_sample(const SynthConfig& cfg, std::uint64_t sample_seed, const std::vector<Image>& photos) {
    for (int attempt = 0;; ++attempt) {
        if (attempt > 64) throw std::runtime_error("synth: could not produce a sample under the clipping limit");
        std::mt19937_64 rng(derive_seed(sample_seed, static_cast<std::uint64_t>(attempt)));
        LayerScene scene;
        scene.background = photos.empty() ? procedural_texture(cfg.height, cfg.width, rng)
                                          : photo_patch(photos, cfg.height, cfg.width, rng);
        scene.reflection = photos.empty() ? procedural_texture(cfg.height, cfg.width, rng)
                                          : photo_patch(photos, cfg.height, cfg.width, rng);
        scene.bg_disparity = random_plane(cfg.bg_disparity, cfg.max_slope, cfg.height, cfg.width, rng);
        scene.refl_disparity = random_plane(cfg.refl_disparity, cfg.max_slope, cfg.height, cfg.width, rng);
        scene.w_background = cfg.w_background;
        scene.w_reflection = cfg.w_reflection;

        const MixResult ref = mix_images(scene.background, scene.reflection, cfg.w_background, cfg.w_reflection);
        if (ref.clip_fraction > cfg.max_clip_fraction) continue;

        MixtureSample s;
        s.stack = render_views(scene, cfg.baselines);
        s.gt_background = scene.background;
        s.gt_reflection = scene.reflection;
        s.gt_bg_disparity = scene.bg_disparity;
        s.gt_refl_disparity = scene.refl_disparity;
        s.w_background = cfg.w_background;
        s.w_reflection = cfg.w_reflection;
        s.seed = sample_seed;
        s.clip_fraction = ref.clip_fraction;
        return s;
    }
}

namespace {

json plane_json(const DisparityPlane& p) { return {{"offset", p.offset}, {"slope_x", p.slope_x}, {"slope_y", p.slope_y}}; }

DisparityPlane plane_from(const json& j) {
    return {j.at("offset").get<double>(), j.at("slope_x").get<double>(), j.at("slope_y").get<double>()};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    return json::parse(f);
}

}  // namespace

json sample_meta(const MixtureSample& s) {
    json j;
    j["w_background"] = s.w_background;
    j["w_reflection"] = s.w_reflection;
    j["bg_disparity"] = plane_json(s.gt_bg_disparity);
    j["refl_disparity"] = plane_json(s.gt_refl_disparity);
    j["baselines"] = s.stack.baselines;
    j["reference_index"] = s.stack.reference_index;
    j["axis"] = s.stack.axis == BaselineAxis::Horizontal ? "horizontal" : "vertical";
    j["seed"] = s.seed;
    j["clip_fraction"] = s.clip_fraction;
    j["height"] = s.stack.height();
    j["width"] = s.stack.width();
    return j;
}

void write_sample(const MixtureSample& s, const fs::path& dir) {
    fs::create_directories(dir);
    for (int n = 0; n < kNumViews; ++n) {
        save_png(s.stack.views[static_cast<std::size_t>(n)], dir / ("view_" + std::to_string(n) + ".png"));
    }
    save_png(s.gt_background, dir / "gt_background.png");
    save_png(s.gt_reflection, dir / "gt_reflection.png");
    write_text(dir / "meta.json", sample_meta(s).dump(2) + "\n");
}

MixtureSample load_sample(const fs::path& dir) {
    const json meta = read_json(dir / "meta.json");
    MixtureSample s;
    for (int n = 0; n < kNumViews; ++n) {
        s.stack.views[static_cast<std::size_t>(n)] = load_png(dir / ("view_" + std::to_string(n) + ".png"));
    }
    s.gt_background = load_png(dir / "gt_background.png");
    s.gt_reflection = load_png(dir / "gt_reflection.png");
    s.gt_bg_disparity = plane_from(meta.at("bg_disparity"));
    s.gt_refl_disparity = plane_from(meta.at("refl_disparity"));
    s.stack.baselines = meta.at("baselines").get<std::array<double, kNumViews>>();
    s.stack.reference_index = meta.value("reference_index", kReferenceView);
    s.stack.axis = meta.value("axis", std::string("horizontal")) == "vertical" ? BaselineAxis::Vertical
                                                                              : BaselineAxis::Horizontal;
    s.w_background = meta.at("w_background").get<double>();
    s.w_reflection = meta.at("w_reflection").get<double>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.clip_fraction = meta.value("clip_fraction", 0.0);
    s.stack.validate();
    return s;
}

DatasetSummary synth_dataset(const SynthConfig& cfg, std::uint64_t seed, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw std::runtime_error("synth: cannot create output directory " + out_dir.string());
    }
    {
        const fs::path probe = out_dir / ".write_probe";
        std::ofstream f(probe);
        if (!f) throw std::runtime_error("synth: output directory is not writable: " + out_dir.string());
        f.close();
        fs::remove(probe, ec);
    }

    const std::vector<Image> photos = cfg.texture_dir ? load_photo_textures(*cfg.texture_dir) : std::vector<Image>{};

    DatasetSummary summary;
    summary.root = out_dir;
    summary.shared_range = cfg.bg_disparity.intersect(cfg.refl_disparity);
    summary.bg_is_far = (cfg.bg_disparity.lo + cfg.bg_disparity.hi) <= (cfg.refl_disparity.lo + cfg.refl_disparity.hi);

    json samples = json::array();
    for (int i = 0; i < cfg.count; ++i) {
        const std::uint64_t sample_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        const MixtureSample s = synth_sample(cfg, sample_seed, photos);
        std::ostringstream name;
        name << "sample_" << std::setw(4) << std::setfill('0') << i;
        write_sample(s, out_dir / name.str());
        summary.sample_dirs.push_back(name.str());
        json entry = sample_meta(s);
        entry["dir"] = name.str();
        samples.push_back(std::move(entry));
    }

    json manifest;
    manifest["format"] = "reflex-dataset";
    manifest["version"] = 1;
    manifest["seed"] = seed;
    manifest["config"] = to_json(cfg);
    manifest["bg_disparity_range"] = {cfg.bg_disparity.lo, cfg.bg_disparity.hi};
    manifest["refl_disparity_range"] = {cfg.refl_disparity.lo, cfg.refl_disparity.hi};
    manifest["shared_range"] = summary.shared_range.empty() ? json(nullptr)
                                                           : json{summary.shared_range.lo, summary.shared_range.hi};
    manifest["bg_is_far"] = summary.bg_is_far;
    manifest["samples"] = std::move(samples);
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

Dataset::Dataset(fs::path root) : root_(std::move(root)) {
    manifest_ = read_json(root_ / "manifest.json");
    for (const auto& s : manifest_.at("samples")) sample_dirs_.push_back(s.at("dir").get<std::string>());
}

MixtureSample Dataset::load(std::size_t i) const { return load_sample(root_ / sample_dirs_.at(i)); }

std::vector<MixtureSample> Dataset::load_all() const {
    std::vector<MixtureSample> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(load(i));
    return out;
}

bool Dataset::bg_is_far() const { return manifest_.value("bg_is_far", true); }

std::vector<std::uint8_t> layer_ownership(const MixtureSample& s, float sigma) {
    const Image bg = mix_linear(s.gt_background, s.gt_background, s.w_background, 0.0);
    const Image rf = mix_linear(s.gt_reflection, s.gt_reflection, s.w_reflection, 0.0);
    const EdgeImage eb = edge_image(bg);
    const EdgeImage er = edge_image(rf);
    std::vector<std::uint8_t> own(static_cast<std::size_t>(bg.height()) * bg.width(), 0);
    for (int y = 0; y < bg.height(); ++y)
        for (int x = 0; x < bg.width(); ++x) {
            float mb = 0.0f, mr = 0.0f;
            for (int c = 0; c < 3; ++c) {
                mb = std::max(mb, eb.values.at(y, x, c));
                mr = std::max(mr, er.values.at(y, x, c));
            }
            if (std::max(mb, mr) < sigma) continue;
            own[static_cast<std::size_t>(y) * bg.width() + x] = mb >= mr ? 1 : 2;
        }
    return own;
}

}  // namespace reflex
