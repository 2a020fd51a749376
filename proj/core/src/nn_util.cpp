#include "reflex/nn_util.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace reflex {

void set_deterministic(std::uint64_t seed) {
    torch::set_num_threads(1);
    at::globalContext().setDeterministicAlgorithms(true, false);
    torch::manual_seed(seed);
}

torch::Tensor to_tensor(const Image& img) {
    auto t = torch::empty({img.channels(), img.height(), img.width()}, torch::kFloat32);
    auto acc = t.accessor<float, 3>();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) acc[c][y][x] = img.at(y, x, c);
    return t;
}

torch::Tensor to_tensor(const BinaryEdgeMask& mask) {
    auto t = torch::empty({1, mask.height(), mask.width()}, torch::kFloat32);
    auto acc = t.accessor<float, 3>();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) acc[0][y][x] = mask.at(y, x) ? 1.0f : 0.0f;
    return t;
}

Image to_image(const torch::Tensor& t_in) {
    torch::Tensor t = t_in.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    if (t.dim() == 4) {
        if (t.size(0) != 1) throw ShapeError("to_image: batched tensor with N != 1");
        t = t[0];
    }
    if (t.dim() != 3) throw ShapeError("to_image: expected [C,H,W]");
    Image img(static_cast<int>(t.size(1)), static_cast<int>(t.size(2)), static_cast<int>(t.size(0)));
    auto acc = t.accessor<float, 3>();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) img.at(y, x, c) = acc[c][y][x];
    return img;
}

std::vector<torch::Tensor> snapshot_parameters(const torch::nn::Module& m) {
    std::vector<torch::Tensor> out;
    for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
    return out;
}

bool parameters_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!torch::equal(a[i], b[i])) return false;
    }
    return true;
}

double max_abs_parameter(const torch::nn::Module& m) {
    double best = 0.0;
    for (const auto& p : m.parameters()) {
        if (p.numel() == 0) continue;
        best = std::max(best, p.detach().abs().max().item<double>());
    }
    return best;
}

void save_checkpoint(const torch::nn::Module& m, const std::string& kind, const nlohmann::json& config,
                     const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    torch::serialize::OutputArchive archive;
    archive.write("reflex.version", c10::IValue(static_cast<int64_t>(kCheckpointVersion)));
    archive.write("reflex.kind", c10::IValue(kind));
    archive.write("reflex.config", c10::IValue(config.dump()));
    torch::serialize::OutputArchive state;
    m.save(state);
    archive.write("state", state);
    archive.save_to(path.string());
}

namespace {

torch::serialize::InputArchive open_checkpoint(const std::filesystem::path& path, const std::string& kind) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing checkpoint: " + path.string());
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    c10::IValue version, stored_kind;
    archive.read("reflex.version", version);
    archive.read("reflex.kind", stored_kind);
    if (version.toInt() != kCheckpointVersion) {
        throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " +
                                 std::to_string(version.toInt()));
    }
    if (stored_kind.toStringRef() != kind) {
        throw std::runtime_error("checkpoint " + path.string() + " holds a '" + stored_kind.toStringRef() +
                                 "' model, expected '" + kind + "'");
    }
    return archive;
}

}  // namespace

nlohmann::json read_checkpoint_config(const std::filesystem::path& path, const std::string& kind) {
    auto archive = open_checkpoint(path, kind);
    c10::IValue cfg;
    archive.read("reflex.config", cfg);
    return nlohmann::json::parse(cfg.toStringRef());
}

void load_checkpoint_state(torch::nn::Module& m, const std::string& kind, const std::filesystem::path& path) {
    auto archive = open_checkpoint(path, kind);
    torch::serialize::InputArchive state;
    archive.read("state", state);
    m.load(state);
}

void check_finite(double value, const char* stage, long step) {
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << stage << ": non-finite objective (" << value << ") at step " << step
            << "; lower the learning rate or check the input data for NaN";
        throw TrainingDiverged(msg.str());
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << "\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << "\n";
    }
}

}  // namespace reflex
