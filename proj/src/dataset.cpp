#include "rnr/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rnr/image.hpp"
#include "rnr/metrics.hpp"

namespace rnr {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json recipe_to_json(const DegradationRecipe& recipe) {
    json j;
    j["seed"] = recipe.seed;
    j["severity"] = recipe.severity;
    if (recipe.present[kFog] && recipe.fog) {
        // Transmission maps are regenerable from the seed; only stats are kept.
        j["fog"] = {{"atmospheric_light", recipe.fog->atmospheric_light},
                    {"beta", recipe.fog->beta},
                    {"t_mean", recipe.fog->t_mean}};
    }
    if (recipe.present[kShake] && recipe.blur) {
        j["blur"] = {{"side", recipe.blur->side},
                     {"weights", recipe.blur->weights},
                     {"direction", recipe.blur->direction},
                     {"effective_length", recipe.blur->effective_length},
                     {"energy", recipe.blur->energy},
                     {"r_rms", recipe.blur->r_rms},
                     {"r_max", recipe.blur->r_max},
                     {"clipped", recipe.blur->clipped}};
    }
    if (recipe.present[kRain] && recipe.rain) {
        j["rain"] = {{"density", recipe.rain->density},
                     {"slant", recipe.rain->slant},
                     {"streak_length", recipe.rain->streak_length},
                     {"streak_width", recipe.rain->streak_width},
                     {"opacity", recipe.rain->opacity},
                     {"color", recipe.rain->color},
                     {"coverage", recipe.rain->coverage}};
    }
    if (recipe.present[kNoise] && recipe.noise) {
        j["noise"] = {{"k", recipe.noise->k}, {"b", recipe.noise->b}, {"sigma_bar", recipe.noise->sigma_bar}};
    }
    if (!recipe.warning.empty()) j["warning"] = recipe.warning;
    return j;
}

DegradationRecipe recipe_from_json(const json& j) {
    DegradationRecipe recipe;
    recipe.seed = j.at("seed").get<std::uint64_t>();
    const auto sev = j.at("severity");
    if (!sev.is_array() || sev.size() != 4)
        throw std::invalid_argument("recipe severity must be a 4-vector");
    for (int i = 0; i < 4; ++i) {
        recipe.severity[i] = sev[i].get<double>();
        if (recipe.severity[i] < 1.0 || recipe.severity[i] > 100.0)
            throw std::invalid_argument("recipe severity out of [1,100]: " +
                                        std::to_string(recipe.severity[i]));
    }
    if (j.contains("fog")) {
        recipe.present[kFog] = true;
        FogParams fog;
        fog.atmospheric_light = j["fog"].at("atmospheric_light").get<std::array<double, 3>>();
        fog.beta = j["fog"].at("beta").get<double>();
        fog.t_mean = j["fog"].at("t_mean").get<double>();
        recipe.fog = std::move(fog);
    }
    if (j.contains("blur")) {
        recipe.present[kShake] = true;
        BlurKernel blur;
        blur.side = j["blur"].at("side").get<int>();
        blur.weights = j["blur"].at("weights").get<std::vector<double>>();
        blur.direction = j["blur"].at("direction").get<double>();
        blur.effective_length = j["blur"].at("effective_length").get<double>();
        blur.energy = j["blur"].at("energy").get<double>();
        blur.r_rms = j["blur"].at("r_rms").get<double>();
        blur.r_max = j["blur"].at("r_max").get<double>();
        blur.clipped = j["blur"].at("clipped").get<bool>();
        if (blur.weights.size() != static_cast<std::size_t>(blur.side) * blur.side)
            throw std::invalid_argument("blur kernel weights do not match side");
        recipe.blur = std::move(blur);
    }
    if (j.contains("rain")) {
        recipe.present[kRain] = true;
        RainParams rain;
        rain.density = j["rain"].at("density").get<double>();
        rain.slant = j["rain"].at("slant").get<double>();
        rain.streak_length = j["rain"].at("streak_length").get<double>();
        rain.streak_width = j["rain"].at("streak_width").get<double>();
        rain.opacity = j["rain"].at("opacity").get<double>();
        rain.color = j["rain"].at("color").get<std::array<double, 3>>();
        rain.coverage = j["rain"].at("coverage").get<double>();
        recipe.rain = std::move(rain);
    }
    if (j.contains("noise")) {
        recipe.present[kNoise] = true;
        NoiseParams noise;
        noise.k = j["noise"].at("k").get<double>();
        noise.b = j["noise"].at("b").get<double>();
        noise.sigma_bar = j["noise"].at("sigma_bar").get<double>();
        recipe.noise = noise;
    }
    if (j.contains("warning")) recipe.warning = j["warning"].get<std::string>();
    return recipe;
}

json sampler_to_json(const SamplerConfig& s) {
    json j;
    j["inclusion_prob"] = s.inclusion_prob;
    j["atmos"] = {s.atmos_lo, s.atmos_hi};
    j["beta"] = {s.beta_lo, s.beta_hi};
    j["steps"] = {s.steps_lo, s.steps_hi};
    j["canvas_radius"] = s.canvas_radius;
    j["density"] = {s.density_lo, s.density_hi};
    j["slant"] = {s.slant_lo, s.slant_hi};
    j["rain_len"] = {s.rain_len_lo, s.rain_len_hi};
    j["rain_width"] = {s.rain_width_lo, s.rain_width_hi};
    j["opacity"] = {s.opacity_lo, s.opacity_hi};
    j["noise_k"] = {s.noise_k_lo, s.noise_k_hi};
    j["noise_b"] = {s.noise_b_lo, s.noise_b_hi};
    return j;
}

SamplerConfig sampler_from_json(const json& j) {
    SamplerConfig s;
    s.inclusion_prob = j.at("inclusion_prob").get<std::array<double, 4>>();
    auto pair = [&](const char* key, double& lo, double& hi) {
        const auto& v = j.at(key);
        lo = v.at(0).get<double>();
        hi = v.at(1).get<double>();
    };
    pair("atmos", s.atmos_lo, s.atmos_hi);
    pair("beta", s.beta_lo, s.beta_hi);
    s.steps_lo = j.at("steps").at(0).get<int>();
    s.steps_hi = j.at("steps").at(1).get<int>();
    s.canvas_radius = j.at("canvas_radius").get<int>();
    pair("density", s.density_lo, s.density_hi);
    pair("slant", s.slant_lo, s.slant_hi);
    pair("rain_len", s.rain_len_lo, s.rain_len_hi);
    pair("rain_width", s.rain_width_lo, s.rain_width_hi);
    pair("opacity", s.opacity_lo, s.opacity_hi);
    pair("noise_k", s.noise_k_lo, s.noise_k_hi);
    pair("noise_b", s.noise_b_lo, s.noise_b_hi);
    return s;
}

const char* snapshot_mode_name(SnapshotMode m) {
    switch (m) {
        case SnapshotMode::kOn: return "on";
        case SnapshotMode::kOff: return "off";
        default: return "auto";
    }
}

SnapshotMode snapshot_mode_from(const std::string& s) {
    if (s == "on") return SnapshotMode::kOn;
    if (s == "off") return SnapshotMode::kOff;
    if (s == "auto") return SnapshotMode::kAuto;
    throw std::invalid_argument("snapshot mode must be auto|on|off, got '" + s + "'");
}

json config_to_json(const GeneratorConfig& c) {
    json j;
    j["dataset_name"] = c.dataset_name;
    j["split"] = c.split;
    j["snapshots"] = snapshot_mode_name(c.snapshots);
    j["sampler"] = sampler_to_json(c.sampler);
    return j;
}

GeneratorConfig config_from_json(const json& j) {
    GeneratorConfig c;
    c.dataset_name = j.at("dataset_name").get<std::string>();
    c.split = j.at("split").get<std::string>();
    c.snapshots = snapshot_mode_from(j.at("snapshots").get<std::string>());
    c.sampler = sampler_from_json(j.at("sampler"));
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path);
}

json parse_checked(const std::string& text, const char* expected_schema) {
    json j = json::parse(text); // parse errors carry the byte offset
    const std::string schema = j.value("schema", std::string());
    if (schema != expected_schema)
        throw std::invalid_argument("unsupported schema '" + schema + "'; expected '" + expected_schema +
                                    "'");
    return j;
}

} // namespace

std::string annotation_to_text(const AnnotationRecord& record) {
    json j;
    j["schema"] = kAnnotationSchema;
    j["id"] = record.id;
    j["source"] = record.source;
    j["seed"] = record.seed;
    json paths;
    paths["clean"] = record.clean_path;
    paths["degraded"] = record.degraded_path;
    if (!record.stage_paths.empty()) paths["stages"] = record.stage_paths;
    j["paths"] = std::move(paths);
    j["recipe"] = recipe_to_json(record.recipe);
    return j.dump(2) + "\n";
}

AnnotationRecord annotation_from_text(const std::string& text) {
    const json j = parse_checked(text, kAnnotationSchema);
    AnnotationRecord record;
    record.id = j.at("id").get<std::string>();
    record.source = j.at("source").get<std::string>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.clean_path = j.at("paths").at("clean").get<std::string>();
    record.degraded_path = j.at("paths").at("degraded").get<std::string>();
    if (j.at("paths").contains("stages"))
        record.stage_paths = j.at("paths").at("stages").get<std::map<std::string, std::string>>();
    record.recipe = recipe_from_json(j.at("recipe"));
    return record;
}

std::string manifest_to_text(const Manifest& manifest) {
    json j;
    j["schema"] = kManifestSchema;
    j["name"] = manifest.dataset_name;
    j["split"] = manifest.split;
    j["master_seed"] = manifest.master_seed;
    j["config_hash"] = manifest.config_hash;
    j["config"] = config_to_json(manifest.config);
    j["record_count"] = manifest.record_paths.size();
    j["records"] = manifest.record_paths;
    j["skipped"] = manifest.skipped;
    return j.dump(2) + "\n";
}

Manifest manifest_from_text(const std::string& text) {
    const json j = parse_checked(text, kManifestSchema);
    Manifest m;
    m.dataset_name = j.at("name").get<std::string>();
    m.split = j.at("split").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = config_from_json(j.at("config"));
    m.record_paths = j.at("records").get<std::vector<std::string>>();
    m.skipped = j.at("skipped").get<std::vector<std::string>>();
    if (j.at("record_count").get<std::size_t>() != m.record_paths.size())
        throw std::invalid_argument("manifest record_count does not match its record list");
    return m;
}

void write_annotation(const std::string& path, const AnnotationRecord& record) {
    spit(path, annotation_to_text(record));
}

AnnotationRecord read_annotation(const std::string& path) { return annotation_from_text(slurp(path)); }

void write_manifest(const std::string& path, const Manifest& manifest) {
    spit(path, manifest_to_text(manifest));
}

Manifest read_manifest(const std::string& path) { return manifest_from_text(slurp(path)); }

std::string config_hash(const GeneratorConfig& config) {
    const std::string canonical = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a:") + buf;
}

Manifest generate_dataset(const std::string& clean_dir, const std::string& out_dir,
                          const GeneratorConfig& config, std::uint64_t master_seed) {
    std::vector<std::string> inputs;
    for (const auto& entry : fs::directory_iterator(clean_dir))
        if (entry.is_regular_file()) inputs.push_back(entry.path().string());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw std::invalid_argument("clean directory '" + clean_dir + "' has no files");

    for (const char* sub : {"", "/clean", "/degraded", "/annotations"})
        fs::create_directories(out_dir + sub);
    if (config.snapshots_enabled()) fs::create_directories(out_dir + "/stages");

    Manifest manifest;
    manifest.dataset_name = config.dataset_name;
    manifest.split = config.split;
    manifest.master_seed = master_seed;
    manifest.config = config;
    manifest.config_hash = config_hash(config);

    const Rng master(master_seed);
    int accepted = 0;
    for (const std::string& input : inputs) {
        Image clean;
        try {
            clean = read_png(input);
        } catch (const std::exception& e) {
            manifest.skipped.push_back(fs::path(input).filename().string() + ": " + e.what());
            continue;
        }

        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "%05d", accepted);
        const std::string id = idbuf;
        const Rng img_rng = master.fork(static_cast<std::uint64_t>(accepted));

        DegradationRecipe recipe = sample_recipe(img_rng.fork(0), config.sampler);
        DegradeResult result = degrade(clean, recipe, img_rng.fork(1));

        AnnotationRecord record;
        record.id = id;
        record.source = fs::path(input).filename().string();
        record.seed = result.recipe.seed;
        record.clean_path = "clean/" + id + ".png";
        record.degraded_path = "degraded/" + id + ".png";
        write_png(out_dir + "/" + record.clean_path, clean);
        write_png(out_dir + "/" + record.degraded_path, result.degraded);
        if (config.snapshots_enabled()) {
            for (const auto& [stage, snap] : result.snapshots) {
                const std::string rel = "stages/" + id + "_" + stage + ".png";
                write_png(out_dir + "/" + rel, snap);
                record.stage_paths[stage] = rel;
            }
        }
        record.recipe = std::move(result.recipe);
        if (record.recipe.fog) record.recipe.fog->transmission = Plane(); // stats only in annotations

        const std::string ann_rel = "annotations/" + id + ".json";
        write_annotation(out_dir + "/" + ann_rel, record);
        manifest.record_paths.push_back(ann_rel);
        ++accepted;
    }

    write_manifest(out_dir + "/manifest.json", manifest);
    return manifest;
}

EvalResult evaluate(const std::string& dataset_root, const Manifest& manifest,
                    const std::string& restored_dir) {
    EvalResult result;
    double sum_psnr = 0.0, sum_ssim = 0.0;
    int counted = 0;
    for (const std::string& rel : manifest.record_paths) {
        const AnnotationRecord record = read_annotation(dataset_root + "/" + rel);
        EvalRow row;
        row.id = record.id;
        const std::string restored_path = restored_dir + "/" + record.id + ".png";
        if (!fs::exists(restored_path)) {
            row.missing = true;
            result.complete = false;
            result.rows.push_back(row);
            continue;
        }
        const Image clean = read_png(dataset_root + "/" + record.clean_path);
        const Image restored = read_png(restored_path);
        row.psnr_db = psnr(restored, clean);
        row.ssim = ssim(restored, clean);
        sum_psnr += row.psnr_db;
        sum_ssim += row.ssim;
        ++counted;
        result.rows.push_back(row);
    }
    if (counted > 0) {
        result.mean_psnr = sum_psnr / counted;
        result.mean_ssim = sum_ssim / counted;
    }
    return result;
}

std::string format_metrics_table(const EvalResult& result) {
    std::string out = "id\tpsnr_db\tssim\n";
    char buf[64];
    for (const EvalRow& row : result.rows) {
        if (row.missing) {
            out += row.id + "\tMISSING\tMISSING\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\n", row.id.c_str(), row.psnr_db, row.ssim);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "MEAN\t%.4f\t%.4f\n", result.mean_psnr, result.mean_ssim);
    out += buf;
    return out;
}

} // namespace rnr
