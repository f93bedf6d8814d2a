#include "aeromtl/commands.hpp"

#include <algorithm>

#include "aeromtl/checkpoint.hpp"
#include "aeromtl/dataset.hpp"
#include "aeromtl/errors.hpp"
#include "aeromtl/inference.hpp"
#include "aeromtl/log.hpp"
#include "aeromtl/metrics.hpp"
#include "aeromtl/raster_io.hpp"
#include "aeromtl/render.hpp"
#include "aeromtl/synth.hpp"
#include "aeromtl/trainer.hpp"

namespace aeromtl {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::filesystem::path with_suffix(const std::string& prefix, const std::string& suffix) {
    return std::filesystem::path(prefix + suffix);
}

void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

GaussianWindow window_for(const RunConfig& cfg, std::optional<std::size_t> window, std::optional<std::size_t> stride) {
    const std::size_t w = window.value_or(cfg.window);
    const std::size_t s = stride.value_or(std::min(cfg.stride, w));
    if (w % cfg.model.spatial_multiple() != 0) {
        fail(ErrorCode::invalid_argument, "window " + std::to_string(w) + " must be a multiple of " +
                                              std::to_string(cfg.model.spatial_multiple()));
    }
    return GaussianWindow(w, s, w == cfg.window ? cfg.sigma : 0.0);
}

// Input imagery at the resolution the model was trained on.
Raster model_input(const RunConfig& cfg, const std::filesystem::path& rgb_path) {
    Raster rgb = read_raster(rgb_path, RasterKind::rgb);
    if (cfg.resolution == Resolution::lr && cfg.resolution_factor != 1) {
        rgb = resample(rgb, 1, cfg.resolution_factor, ResamplePolicy::bilinear);
    }
    return rgb;
}

// Predictions at ground-truth resolution.
Raster to_output_resolution(const RunConfig& cfg, const Raster& map) {
    if (cfg.resolution == Resolution::vhr && cfg.resolution_factor != 1) {
        return resample(map, 1, cfg.resolution_factor);
    }
    return map;
}

void write_render(const Rendering& r, const std::string& prefix, std::vector<std::filesystem::path>& written) {
    write_raster(r.image, with_suffix(prefix, ".ppm"));
    write_text(with_suffix(prefix, ".legend.txt"), r.legend);
    written.push_back(with_suffix(prefix, ".ppm"));
    written.push_back(with_suffix(prefix, ".legend.txt"));
}

}  // namespace

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path,
                         const std::map<std::string, std::string>& overrides) {
    RunConfig cfg = config_path ? RunConfig::load(*config_path) : RunConfig{};
    for (const auto& [key, value] : overrides) {
        try {
            cfg.set(key, value);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("--") + key + ": " + e.what());
        }
    }
    if (config_path && !cfg.manifest.empty() && std::filesystem::path(cfg.manifest).is_relative() &&
        !overrides.contains("manifest")) {
        cfg.manifest = (config_path->parent_path() / cfg.manifest).lexically_normal().string();
    }
    cfg.validate();
    return cfg;
}

TrainSummary cmd_train(const std::optional<std::filesystem::path>& config_path,
                       const std::map<std::string, std::string>& overrides) {
    const RunConfig cfg = resolve_config(config_path, overrides);
    if (cfg.manifest.empty()) fail(ErrorCode::config, "train needs a manifest (key 'manifest')");
    Trainer trainer(cfg, load_tiles(cfg.manifest, cfg.resolution, cfg.resolution_factor));
    const std::filesystem::path out_dir(cfg.out_dir);
    trainer.run(out_dir);
    TrainSummary s;
    s.checkpoint = out_dir / "model.ckpt";
    s.loss_log = out_dir / "loss_log.csv";
    s.iterations = trainer.iteration();
    s.first_loss = trainer.log().front().combined();
    s.final_loss = trainer.log().back().combined();
    return s;
}

std::pair<RunConfig, MtlModel> load_checkpoint_model(const std::filesystem::path& checkpoint) {
    const Checkpoint ckpt = read_checkpoint(checkpoint);
    RunConfig cfg;
    try {
        cfg = RunConfig::parse(ckpt.config_text, checkpoint.string());
        cfg.validate();
    } catch (const Error& e) {
        fail(ErrorCode::corrupt_checkpoint, std::string("embedded configuration is invalid: ") + e.what());
    }
    MtlModel model = build_model(cfg.model);
    load_parameters(model, ckpt);
    return {std::move(cfg), std::move(model)};
}

std::vector<std::filesystem::path> cmd_predict(const PredictArgs& args) {
    auto [cfg, model] = load_checkpoint_model(args.checkpoint);
    const GaussianWindow window = window_for(cfg, args.window, args.stride);
    const Raster rgb = model_input(cfg, args.rgb);
    const TiledPrediction pred = tiled_predict(model, rgb, window);
    const Raster height = to_output_resolution(cfg, pred.height);
    const Raster labels = to_output_resolution(cfg, pred.labels);

    ensure_parent(args.out_prefix + "_");
    std::vector<std::filesystem::path> written;
    write_raster(height, with_suffix(args.out_prefix, "_height.pfm"));
    write_raster(labels, with_suffix(args.out_prefix, "_labels.pgm"));
    written.push_back(with_suffix(args.out_prefix, "_height.pfm"));
    written.push_back(with_suffix(args.out_prefix, "_labels.pgm"));
    write_render(render_scalar(height, RenderRange{0.0f, kBuildingMaxHeight}, "height"),
                 args.out_prefix + "_height", written);
    write_render(render_labels(labels, default_palette(), cfg.model.num_classes), args.out_prefix + "_labels",
                 written);
    return written;
}

std::string cmd_evaluate(const EvaluateArgs& args) {
    const bool has_h = args.pred_height || args.gt_height;
    const bool has_l = args.pred_labels || args.gt_labels;
    if (has_h && !(args.pred_height && args.gt_height)) {
        fail(ErrorCode::invalid_argument, "height evaluation needs both --pred-height and --gt-height");
    }
    if (has_l && !(args.pred_labels && args.gt_labels)) {
        fail(ErrorCode::invalid_argument, "label evaluation needs both --pred-labels and --gt-labels");
    }
    if (!has_h && !has_l) fail(ErrorCode::invalid_argument, "nothing to evaluate");

    std::optional<RegressionReport> regression;
    if (has_h) {
        regression = regression_metrics(read_raster(*args.pred_height, RasterKind::height),
                                        read_raster(*args.gt_height, RasterKind::height));
    }
    std::optional<ConfusionMatrix> cm;
    if (has_l) {
        cm.emplace(args.num_classes);
        cm->accumulate(read_raster(*args.pred_labels, RasterKind::labels),
                       read_raster(*args.gt_labels, RasterKind::labels));
    }
    const std::string report = format_report(regression, cm ? &*cm : nullptr);
    if (args.out) {
        ensure_parent(*args.out);
        write_text(*args.out, report);
    }
    return report;
}

std::vector<std::filesystem::path> cmd_uncertainty(const UncertaintyArgs& args) {
    auto [cfg, model] = load_checkpoint_model(args.checkpoint);
    const GaussianWindow window = window_for(cfg, args.window, args.stride);
    const Raster rgb = model_input(cfg, args.rgb);
    Rng rng = derive_rng(args.seed, 0x3c);
    const UncertaintyResult u = mc_dropout_uncertainty(model, rgb, window, args.samples.value_or(cfg.mc_samples), rng);
    const Raster std_map = to_output_resolution(cfg, u.std_height);
    const Raster mean_map = to_output_resolution(cfg, u.mean_height);

    ensure_parent(args.out_prefix + "_");
    std::vector<std::filesystem::path> written;
    write_raster(std_map, with_suffix(args.out_prefix, "_std.pfm"));
    write_raster(mean_map, with_suffix(args.out_prefix, "_mean.pfm"));
    written.push_back(with_suffix(args.out_prefix, "_std.pfm"));
    written.push_back(with_suffix(args.out_prefix, "_mean.pfm"));
    write_render(render_scalar(std_map, std::nullopt, "std"), args.out_prefix + "_std", written);
    return written;
}

void cmd_make_height(const std::filesystem::path& dsm, const std::filesystem::path& dem,
                     const std::filesystem::path& out, bool clamp_negative) {
    const Raster h = height_from_dsm_dem(read_raster(dsm, RasterKind::dsm), read_raster(dem, RasterKind::dem),
                                         clamp_negative);
    ensure_parent(out);
    write_raster(h, out);
}

std::filesystem::path cmd_synth(std::uint64_t seed, std::size_t count, std::size_t size, std::size_t num_classes,
                                const std::filesystem::path& out_dir) {
    if (count == 0) fail(ErrorCode::invalid_argument, "synth: count must be positive");
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t s = seed + i;
        const SynthScene scene = synth_scene(s, size, num_classes);
        const std::string stem = "scene_" + std::to_string(s);
        ManifestEntry e{stem + "_rgb.ppm", stem + "_height.pfm", stem + "_labels.pgm"};
        write_raster(scene.rgb, out_dir / e.rgb);
        write_raster(scene.height, out_dir / e.height);
        write_raster(scene.labels, out_dir / e.labels);
        entries.push_back(e);
    }
    const auto manifest = out_dir / "manifest.txt";
    write_text(manifest, format_manifest(entries));
    return manifest;
}

}  // namespace aeromtl
