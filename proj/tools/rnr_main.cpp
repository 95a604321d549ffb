// Batch front end: degrade, diagnose, restore, train, eval.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 partial
// failure (some inputs processed, some not).

#include <cctype>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "rnr/dataset.hpp"
#include "rnr/diagnose.hpp"
#include "rnr/grpo.hpp"
#include "rnr/metrics.hpp"
#include "rnr/restore.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitPartial = 3;

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

std::vector<std::string> collect_images(const std::string& input) {
    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input)) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (ext == ".png") files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(input);
    }
    return files;
}

rnr::GeneratorConfig load_generator_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open --config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    // Reuse the manifest schema for the config file: a manifest's "config"
    // object is exactly what --config accepts.
    json j = json::parse(ss.str());
    rnr::GeneratorConfig cfg;
    if (j.contains("dataset_name")) cfg.dataset_name = j["dataset_name"].get<std::string>();
    if (j.contains("split")) cfg.split = j["split"].get<std::string>();
    if (j.contains("snapshots")) {
        const std::string m = j["snapshots"].get<std::string>();
        if (m == "on")
            cfg.snapshots = rnr::SnapshotMode::kOn;
        else if (m == "off")
            cfg.snapshots = rnr::SnapshotMode::kOff;
        else if (m == "auto")
            cfg.snapshots = rnr::SnapshotMode::kAuto;
        else
            throw std::invalid_argument("--config snapshots must be auto|on|off");
    }
    if (j.contains("inclusion_prob"))
        cfg.sampler.inclusion_prob = j["inclusion_prob"].get<std::array<double, 4>>();
    auto range = [&](const char* key, double& lo, double& hi) {
        if (j.contains(key)) {
            lo = j[key].at(0).get<double>();
            hi = j[key].at(1).get<double>();
        }
    };
    range("atmos", cfg.sampler.atmos_lo, cfg.sampler.atmos_hi);
    range("beta", cfg.sampler.beta_lo, cfg.sampler.beta_hi);
    range("density", cfg.sampler.density_lo, cfg.sampler.density_hi);
    range("slant", cfg.sampler.slant_lo, cfg.sampler.slant_hi);
    range("rain_len", cfg.sampler.rain_len_lo, cfg.sampler.rain_len_hi);
    range("rain_width", cfg.sampler.rain_width_lo, cfg.sampler.rain_width_hi);
    range("opacity", cfg.sampler.opacity_lo, cfg.sampler.opacity_hi);
    range("noise_k", cfg.sampler.noise_k_lo, cfg.sampler.noise_k_hi);
    range("noise_b", cfg.sampler.noise_b_lo, cfg.sampler.noise_b_hi);
    if (j.contains("steps")) {
        cfg.sampler.steps_lo = j["steps"].at(0).get<int>();
        cfg.sampler.steps_hi = j["steps"].at(1).get<int>();
    }
    if (j.contains("canvas_radius")) cfg.sampler.canvas_radius = j["canvas_radius"].get<int>();
    return cfg;
}

json report_to_json(const rnr::DiagnosticReport& r) {
    json j;
    j["schema"] = "rnr-report v1";
    j["present"] = {{"fog", r.present[rnr::kFog]},
                    {"blur", r.present[rnr::kShake]},
                    {"rain", r.present[rnr::kRain]},
                    {"noise", r.present[rnr::kNoise]}};
    j["severity"] = r.severity;
    j["fog"] = {{"atmospheric_light", r.fog.atmospheric_light}, {"t_mean", r.fog.t_mean}};
    j["blur"] = {{"direction", r.blur.direction}, {"effective_length", r.blur.effective_length}};
    j["rain"] = {{"coverage", r.rain.coverage}, {"slant", r.rain.slant}};
    j["noise"] = {{"sigma", r.noise.sigma}};
    if (!r.scene_description.empty()) j["scene_description"] = r.scene_description;
    return j;
}

struct SharedOpts {
    std::uint64_t seed = 0;
    int jobs = 0;
};

int cmd_degrade(const std::string& clean_dir, const std::string& out_dir,
                const std::optional<std::string>& config_path, std::uint64_t seed) {
    rnr::GeneratorConfig cfg;
    if (config_path) cfg = load_generator_config(*config_path);
    if (!fs::is_directory(clean_dir)) {
        std::cerr << "--clean: '" << clean_dir << "' is not a directory\n";
        return kExitConfig;
    }
    const rnr::Manifest manifest = rnr::generate_dataset(clean_dir, out_dir, cfg, seed);
    std::cout << "dataset " << manifest.dataset_name << " split " << manifest.split << " seed " << seed
              << "\nrecords " << manifest.record_paths.size() << " skipped " << manifest.skipped.size()
              << "\nconfig_hash " << manifest.config_hash << "\nmanifest " << out_dir << "/manifest.json\n";
    for (const std::string& s : manifest.skipped) std::cerr << "skipped " << s << "\n";
    return kExitOk;
}

int cmd_diagnose(const std::string& input, const std::string& format) {
    const std::vector<std::string> files = collect_images(input);
    std::cout << "file\tfog\tblur\train\tnoise\n";
    int failed = 0;
    for (const std::string& file : files) {
        try {
            const rnr::Image img = rnr::read_png(file);
            const rnr::DiagnosticReport report = rnr::diagnose(img);
            std::string out_path;
            if (format == "record") {
                out_path = file + ".report.json";
                std::ofstream out(out_path, std::ios::binary);
                out << report_to_json(report).dump(2) << "\n";
            } else {
                out_path = file + ".report.txt";
                std::ofstream out(out_path, std::ios::binary);
                out << rnr::render_report(report);
            }
            std::printf("%s\t%.1f\t%.1f\t%.1f\t%.1f\n", fs::path(file).filename().c_str(),
                        report.severity[0], report.severity[1], report.severity[2], report.severity[3]);
        } catch (const std::exception& e) {
            std::cerr << file << ": " << e.what() << "\n";
            ++failed;
        }
    }
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_restore(const std::string& input, const std::string& out_dir,
                const std::optional<std::string>& checkpoint_path) {
    std::optional<rnr::RestorationParams> checkpoint_params;
    if (checkpoint_path) {
        const rnr::TrainState state = rnr::read_checkpoint(*checkpoint_path);
        checkpoint_params = state.policy.mean_params();
    } else {
        std::cerr << "warning: no --checkpoint given, using report-seeded parameters per image\n";
    }

    fs::create_directories(out_dir);
    const std::vector<std::string> files = collect_images(input);
    int failed = 0;
    for (const std::string& file : files) {
        try {
            const rnr::Image img = rnr::read_png(file);
            rnr::RestorationParams params;
            if (checkpoint_params) {
                params = *checkpoint_params;
            } else {
                const rnr::DiagnosticReport report = rnr::diagnose(img);
                params = rnr::init_policy(report).mean_params();
            }
            const rnr::Image restored = rnr::restore(img, params);
            const std::string out_path =
                (fs::path(out_dir) / fs::path(file).filename().replace_extension(".png")).string();
            rnr::write_png(out_path, restored);
            std::cout << fs::path(file).filename().string() << " -> " << out_path << "\n";
        } catch (const std::exception& e) {
            std::cerr << file << ": " << e.what() << "\n";
            ++failed;
        }
    }
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_train(const std::string& dataset_root, const std::string& out_dir, const rnr::TrainConfig& cfg) {
    const rnr::Manifest manifest = rnr::read_manifest(dataset_root + "/manifest.json");
    std::vector<rnr::TrainItem> items;
    items.reserve(manifest.record_paths.size());
    for (const std::string& rel : manifest.record_paths) {
        const rnr::AnnotationRecord record = rnr::read_annotation(dataset_root + "/" + rel);
        rnr::TrainItem item;
        item.degraded = rnr::read_png(dataset_root + "/" + record.degraded_path);
        item.clean = rnr::read_png(dataset_root + "/" + record.clean_path);
        item.input_report = rnr::diagnose(item.degraded);
        items.push_back(std::move(item));
    }

    const rnr::TrainState state = rnr::train(items, cfg);

    fs::create_directories(out_dir);
    const std::string ckpt_path = out_dir + "/checkpoint.txt";
    const std::string tmp_path = ckpt_path + ".tmp";
    rnr::write_checkpoint(tmp_path, state);
    fs::rename(tmp_path, ckpt_path); // an interrupted run never clobbers a complete checkpoint

    std::ofstream log(out_dir + "/train_log.tsv", std::ios::binary);
    log << rnr::format_train_log(state.history);

    if (!state.history.empty()) {
        const rnr::StepLog& last = state.history.back();
        std::cout << "trained " << state.step << " steps; final loss " << last.loss << " mean_reward "
                  << last.mean_reward << " mean_psnr " << last.mean_psnr << "\n";
    }
    std::cout << "checkpoint " << ckpt_path << "\nlog " << out_dir << "/train_log.tsv\n";
    return kExitOk;
}

int cmd_eval(const std::string& dataset_root, const std::string& restored_dir) {
    const rnr::Manifest manifest = rnr::read_manifest(dataset_root + "/manifest.json");
    const rnr::EvalResult result = rnr::evaluate(dataset_root, manifest, restored_dir);
    std::cout << rnr::format_metrics_table(result);
    if (!result.complete) {
        std::cerr << "evaluation incomplete: some restored images are missing\n";
        return kExitPartial;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional image degradation, diagnosis, and policy-tuned restoration"};
    app.require_subcommand(1);

    SharedOpts shared;
    app.add_option("--jobs", shared.jobs, "worker thread count (0 = library default)")
        ->envname("REASON_RESTORE_JOBS");

    // degrade
    auto* degrade = app.add_subcommand("degrade", "generate a degraded dataset from clean images");
    std::string clean_dir, out_dir;
    std::optional<std::string> config_path;
    degrade->add_option("--clean", clean_dir, "directory of clean images")->required();
    degrade->add_option("--out", out_dir, "output dataset root")->required();
    degrade->add_option("--config", config_path, "generator config JSON");
    degrade->add_option("--seed", shared.seed, "master seed");

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "estimate degradations and write reports");
    std::string diag_input;
    std::string format = "text";
    diagnose->add_option("input", diag_input, "image file or directory")->required();
    diagnose->add_option("--format", format, "report format")->check(CLI::IsMember({"text", "record"}));

    // restore
    auto* restore = app.add_subcommand("restore", "restore images with diagnostic or checkpoint parameters");
    std::string restore_input, restore_out;
    std::optional<std::string> checkpoint_path;
    restore->add_option("input", restore_input, "image file or directory")->required();
    restore->add_option("--out", restore_out, "output directory")->required();
    restore->add_option("--checkpoint", checkpoint_path, "trained policy checkpoint");

    // train
    auto* train = app.add_subcommand("train", "tune the restoration policy on a generated dataset");
    std::string train_dataset, train_out = "run";
    rnr::TrainConfig train_cfg;
    std::string tau_arg = "adaptive";
    train->add_option("--dataset", train_dataset, "dataset root (with manifest.json)")->required();
    train->add_option("--out", train_out, "output directory for checkpoint and log");
    train->add_option("--steps", train_cfg.max_steps, "training steps");
    train->add_option("--group", train_cfg.group_size, "candidates per group (N)");
    train->add_option("--tau", tau_arg, "softmax temperature: adaptive or a fixed value");
    train->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train->add_option("--seed", train_cfg.seed, "training seed");
    train->add_flag("--seed-from-reports", train_cfg.seed_policy_from_reports,
                    "start from the mean of per-image diagnostic seeds");

    // eval
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM table of restored images against clean references");
    std::string eval_dataset, eval_restored;
    eval->add_option("--dataset", eval_dataset, "dataset root")->required();
    eval->add_option("--restored", eval_restored, "directory of restored images named <id>.png")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    apply_jobs(shared.jobs);

    try {
        if (degrade->parsed()) return cmd_degrade(clean_dir, out_dir, config_path, shared.seed);
        if (diagnose->parsed()) return cmd_diagnose(diag_input, format);
        if (restore->parsed()) return cmd_restore(restore_input, restore_out, checkpoint_path);
        if (train->parsed()) {
            if (train_cfg.group_size < 2) {
                std::cerr << "--group must be >= 2\n";
                return kExitConfig;
            }
            if (train_cfg.learning_rate < 0.0) {
                std::cerr << "--lr must be >= 0\n";
                return kExitConfig;
            }
            if (tau_arg == "adaptive") {
                train_cfg.tau_rule = rnr::TauRule::kAdaptive;
            } else {
                train_cfg.tau_rule = rnr::TauRule::kFixed;
                try {
                    train_cfg.tau_fixed = std::stod(tau_arg);
                } catch (const std::exception&) {
                    std::cerr << "--tau must be 'adaptive' or a number, got '" << tau_arg << "'\n";
                    return kExitConfig;
                }
                if (train_cfg.tau_fixed <= 0.0) {
                    std::cerr << "--tau must be > 0\n";
                    return kExitConfig;
                }
            }
            return cmd_train(train_dataset, train_out, train_cfg);
        }
        if (eval->parsed()) return cmd_eval(eval_dataset, eval_restored);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}
