#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "aeromtl/commands.hpp"
#include "aeromtl/errors.hpp"

namespace {

using aeromtl::Error;

std::string flag_name(const std::string& key) {
    std::string f = key;
    for (char& c : f) {
        if (c == '_') c = '-';
    }
    return f;
}

template <typename T>
std::optional<T> opt(CLI::Option* option, const T& value) {
    return option->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task height and semantics estimation for aerial images"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Train a model and write a checkpoint plus loss log");
    std::string train_config;
    train->add_option("config", train_config, "Run configuration file")->check(CLI::ExistingFile);
    std::map<std::string, std::string> overrides;
    for (const auto& key : aeromtl::RunConfig::keys()) {
        train->add_option_function<std::string>(
            "--" + flag_name(key), [&overrides, key](const std::string& v) { overrides[key] = v; },
            "Override config key " + key);
    }

    // predict
    auto* predict = app.add_subcommand("predict", "Tiled prediction of height and labels for one image");
    aeromtl::PredictArgs pargs;
    std::size_t p_window = 0, p_stride = 0;
    predict->add_option("checkpoint", pargs.checkpoint, "Model checkpoint")->required();
    predict->add_option("rgb", pargs.rgb, "Input image (PPM)")->required();
    predict->add_option("out_prefix", pargs.out_prefix, "Output path prefix")->required();
    auto* p_window_opt = predict->add_option("--window", p_window, "Window size");
    auto* p_stride_opt = predict->add_option("--stride", p_stride, "Window stride");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Height and label metrics against ground truth");
    aeromtl::EvaluateArgs eargs;
    std::string e_ph, e_gh, e_pl, e_gl, e_out;
    auto* e_ph_opt = evaluate->add_option("--pred-height", e_ph, "Predicted height (PFM)");
    auto* e_gh_opt = evaluate->add_option("--gt-height", e_gh, "Ground-truth height (PFM)");
    auto* e_pl_opt = evaluate->add_option("--pred-labels", e_pl, "Predicted labels (PGM)");
    auto* e_gl_opt = evaluate->add_option("--gt-labels", e_gl, "Ground-truth labels (PGM)");
    evaluate->add_option("--num-classes", eargs.num_classes, "Number of classes")->capture_default_str();
    auto* e_out_opt = evaluate->add_option("--out", e_out, "Also write the report here");

    // uncertainty
    auto* uncertainty = app.add_subcommand("uncertainty", "MC-dropout standard deviation of predicted height");
    aeromtl::UncertaintyArgs uargs;
    std::size_t u_samples = 0, u_window = 0, u_stride = 0;
    uncertainty->add_option("checkpoint", uargs.checkpoint, "Model checkpoint")->required();
    uncertainty->add_option("rgb", uargs.rgb, "Input image (PPM)")->required();
    uncertainty->add_option("out_prefix", uargs.out_prefix, "Output path prefix")->required();
    auto* u_samples_opt = uncertainty->add_option("--samples", u_samples, "Number of dropout samples");
    auto* u_window_opt = uncertainty->add_option("--window", u_window, "Window size");
    auto* u_stride_opt = uncertainty->add_option("--stride", u_stride, "Window stride");
    uncertainty->add_option("--seed", uargs.seed, "Dropout seed")->capture_default_str();

    // make-height
    auto* make_height = app.add_subcommand("make-height", "Height map as DSM minus DEM");
    std::string dsm, dem, height_out;
    bool keep_negative = false;
    make_height->add_option("dsm", dsm, "Surface model (PFM)")->required();
    make_height->add_option("dem", dem, "Terrain model (PFM)")->required();
    make_height->add_option("out", height_out, "Output height (PFM)")->required();
    make_height->add_flag("--keep-negative", keep_negative, "Do not clamp negative heights to zero");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate synthetic scenes and a manifest");
    std::uint64_t s_seed = 0;
    std::size_t s_count = 1, s_size = 256, s_classes = 6;
    std::string s_out;
    synth->add_option("out_dir", s_out, "Output directory")->required();
    synth->add_option("--seed", s_seed, "First scene seed")->capture_default_str();
    synth->add_option("--count", s_count, "Number of scenes")->capture_default_str();
    synth->add_option("--size", s_size, "Scene width and height")->capture_default_str();
    synth->add_option("--num-classes", s_classes, "Number of classes")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(aeromtl::ErrorCode::invalid_argument);
    }

    try {
        if (*train) {
            const auto config = train_config.empty() ? std::nullopt
                                                     : std::optional<std::filesystem::path>(train_config);
            const auto s = aeromtl::cmd_train(config, overrides);
            std::cout << "iterations=" << s.iterations << "\nfirst_loss=" << s.first_loss
                      << "\nfinal_loss=" << s.final_loss << "\ncheckpoint=" << s.checkpoint.string()
                      << "\nloss_log=" << s.loss_log.string() << "\n";
        } else if (*predict) {
            pargs.window = opt(p_window_opt, p_window);
            pargs.stride = opt(p_stride_opt, p_stride);
            for (const auto& p : aeromtl::cmd_predict(pargs)) std::cout << p.string() << "\n";
        } else if (*evaluate) {
            eargs.pred_height = opt<std::filesystem::path>(e_ph_opt, e_ph);
            eargs.gt_height = opt<std::filesystem::path>(e_gh_opt, e_gh);
            eargs.pred_labels = opt<std::filesystem::path>(e_pl_opt, e_pl);
            eargs.gt_labels = opt<std::filesystem::path>(e_gl_opt, e_gl);
            eargs.out = opt<std::filesystem::path>(e_out_opt, e_out);
            std::cout << aeromtl::cmd_evaluate(eargs);
        } else if (*uncertainty) {
            uargs.samples = opt(u_samples_opt, u_samples);
            uargs.window = opt(u_window_opt, u_window);
            uargs.stride = opt(u_stride_opt, u_stride);
            for (const auto& p : aeromtl::cmd_uncertainty(uargs)) std::cout << p.string() << "\n";
        } else if (*make_height) {
            aeromtl::cmd_make_height(dsm, dem, height_out, !keep_negative);
            std::cout << height_out << "\n";
        } else if (*synth) {
            std::cout << aeromtl::cmd_synth(s_seed, s_count, s_size, s_classes, s_out).string() << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error [" << aeromtl::to_string(e.code()) << "]: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error [io]: " << e.what() << "\n";
        return static_cast<int>(aeromtl::ErrorCode::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
