#include "aeromtl/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aeromtl/checkpoint.hpp"
#include "aeromtl/errors.hpp"

namespace aeromtl {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
    fail(ErrorCode::config, "invalid value '" + std::string(value) + "' for '" + std::string(key) + "' (expected " +
                                expected + ")");
}

std::size_t parse_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    try {
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
    bad_value(key, v, "a number");
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require(bool ok, const std::string& message) {
    if (!ok) fail(ErrorCode::config, message);
}

}  // namespace

Resolution parse_resolution(std::string_view name) {
    if (name == "vhr") return Resolution::vhr;
    if (name == "lr") return Resolution::lr;
    fail(ErrorCode::config, "unknown resolution strategy '" + std::string(name) + "' (expected vhr or lr)");
}

std::string_view to_string(Resolution resolution) { return resolution == Resolution::vhr ? "vhr" : "lr"; }

TrainTasks parse_train_tasks(std::string_view name) {
    if (name == "both") return TrainTasks::both;
    if (name == "height") return TrainTasks::height;
    if (name == "semantics") return TrainTasks::semantics;
    fail(ErrorCode::config, "unknown tasks '" + std::string(name) + "' (expected both, height or semantics)");
}

std::string_view to_string(TrainTasks tasks) {
    switch (tasks) {
    case TrainTasks::both: return "both";
    case TrainTasks::height: return "height";
    case TrainTasks::semantics: return "semantics";
    }
    return "unknown";
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "in_channels", "num_classes",      "encoder_depth", "base_channels",  "skip_connections",
        "shared_decoder_blocks", "dropout_p", "seed",         "balancing",      "gradnorm_alpha",
        "gradnorm_lr",  "tasks",            "lr",            "crop_size",      "iterations",
        "batch_size",   "checkpoint_every", "manifest",      "out_dir",        "resolution",
        "resolution_factor", "window",      "stride",        "sigma",          "mc_samples"};
    return k;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    value = trim(value);
    if (key == "in_channels") model.in_channels = parse_size(key, value);
    else if (key == "num_classes") model.num_classes = parse_size(key, value);
    else if (key == "encoder_depth") model.encoder_depth = parse_size(key, value);
    else if (key == "base_channels") model.base_channels = parse_size(key, value);
    else if (key == "skip_connections") model.skip_connections = parse_bool(key, value);
    else if (key == "shared_decoder_blocks") model.shared_decoder_blocks = parse_size(key, value);
    else if (key == "dropout_p") model.dropout_p = static_cast<float>(parse_double(key, value));
    else if (key == "seed") model.seed = parse_u64(key, value);
    else if (key == "balancing") balancing = parse_strategy(value);
    else if (key == "gradnorm_alpha") gradnorm_alpha = parse_double(key, value);
    else if (key == "gradnorm_lr") gradnorm_lr = parse_double(key, value);
    else if (key == "tasks") tasks = parse_train_tasks(value);
    else if (key == "lr") lr = static_cast<float>(parse_double(key, value));
    else if (key == "crop_size") crop_size = parse_size(key, value);
    else if (key == "iterations") iterations = parse_size(key, value);
    else if (key == "batch_size") batch_size = parse_size(key, value);
    else if (key == "checkpoint_every") checkpoint_every = parse_size(key, value);
    else if (key == "manifest") manifest = std::string(value);
    else if (key == "out_dir") out_dir = std::string(value);
    else if (key == "resolution") resolution = parse_resolution(value);
    else if (key == "resolution_factor") resolution_factor = parse_size(key, value);
    else if (key == "window") window = parse_size(key, value);
    else if (key == "stride") stride = parse_size(key, value);
    else if (key == "sigma") sigma = parse_double(key, value);
    else if (key == "mc_samples") mc_samples = parse_size(key, value);
    else fail(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    model.validate();
    require(gradnorm_alpha >= 0.0, "gradnorm_alpha must be >= 0");
    require(gradnorm_lr > 0.0, "gradnorm_lr must be > 0");
    require(lr > 0.0f && std::isfinite(lr), "lr must be positive");
    require(crop_size > 0 && crop_size % model.spatial_multiple() == 0,
            "crop_size must be a positive multiple of " + std::to_string(model.spatial_multiple()));
    require(iterations > 0, "iterations must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(checkpoint_every > 0, "checkpoint_every must be positive");
    require(resolution_factor > 0, "resolution_factor must be positive");
    require(window > 0 && window % model.spatial_multiple() == 0,
            "window must be a positive multiple of " + std::to_string(model.spatial_multiple()));
    require(stride > 0 && stride <= window, "stride must be in [1, window]");
    require(sigma >= 0.0, "sigma must be >= 0");
    require(mc_samples > 0, "mc_samples must be positive");
    require(!out_dir.empty(), "out_dir must not be empty");
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "in_channels = " << model.in_channels << "\n"
        << "num_classes = " << model.num_classes << "\n"
        << "encoder_depth = " << model.encoder_depth << "\n"
        << "base_channels = " << model.base_channels << "\n"
        << "skip_connections = " << (model.skip_connections ? "true" : "false") << "\n"
        << "shared_decoder_blocks = " << model.shared_decoder_blocks << "\n"
        << "dropout_p = " << fmt_float(model.dropout_p) << "\n"
        << "seed = " << model.seed << "\n"
        << "balancing = " << to_string(balancing) << "\n"
        << "gradnorm_alpha = " << fmt_double(gradnorm_alpha) << "\n"
        << "gradnorm_lr = " << fmt_double(gradnorm_lr) << "\n"
        << "tasks = " << to_string(tasks) << "\n"
        << "lr = " << fmt_float(lr) << "\n"
        << "crop_size = " << crop_size << "\n"
        << "iterations = " << iterations << "\n"
        << "batch_size = " << batch_size << "\n"
        << "checkpoint_every = " << checkpoint_every << "\n"
        << "manifest = " << manifest << "\n"
        << "out_dir = " << out_dir << "\n"
        << "resolution = " << to_string(resolution) << "\n"
        << "resolution_factor = " << resolution_factor << "\n"
        << "window = " << window << "\n"
        << "stride = " << stride << "\n"
        << "sigma = " << fmt_double(sigma) << "\n"
        << "mc_samples = " << mc_samples << "\n";
    return out.str();
}

RunConfig RunConfig::parse(std::string_view text, std::string_view source) {
    RunConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) fail(ErrorCode::config, where + "expected 'key = value'");
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }

}  // namespace aeromtl
