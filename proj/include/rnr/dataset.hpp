#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rnr/degrade.hpp"

namespace rnr {

inline constexpr const char* kAnnotationSchema = "rnr-annotation v1";
inline constexpr const char* kManifestSchema = "rnr-manifest v1";

/// Per-sample ground truth: file paths plus the finalized recipe.
struct AnnotationRecord {
    std::string id;
    std::string source;                        // original clean filename
    std::uint64_t seed = 0;
    std::string clean_path;                    // relative to the dataset root
    std::string degraded_path;
    std::map<std::string, std::string> stage_paths; // stage name -> path
    DegradationRecipe recipe;
};

enum class SnapshotMode { kAuto, kOn, kOff }; // auto: on for test splits only

struct GeneratorConfig {
    std::string dataset_name = "dataset";
    std::string split = "train";
    SamplerConfig sampler;
    SnapshotMode snapshots = SnapshotMode::kAuto;

    bool snapshots_enabled() const {
        return snapshots == SnapshotMode::kOn || (snapshots == SnapshotMode::kAuto && split == "test");
    }
};

struct Manifest {
    std::string dataset_name;
    std::string split;
    std::uint64_t master_seed = 0;
    std::string config_hash;
    GeneratorConfig config;
    std::vector<std::string> record_paths; // relative annotation paths
    std::vector<std::string> skipped;      // undecodable inputs, "file: reason"
};

/// Serialization: one structured-text object per file, UTF-8, stable key
/// order. Unknown schema versions and out-of-range severities are rejected.
std::string annotation_to_text(const AnnotationRecord& record);
AnnotationRecord annotation_from_text(const std::string& text);
std::string manifest_to_text(const Manifest& manifest);
Manifest manifest_from_text(const std::string& text);

void write_annotation(const std::string& path, const AnnotationRecord& record);
AnnotationRecord read_annotation(const std::string& path);
void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

/// FNV-1a hash of the canonical config serialization, hex-encoded.
std::string config_hash(const GeneratorConfig& config);

/// Degrades every decodable image under clean_dir into
/// out_dir/{clean,degraded,stages,annotations}/ plus a manifest at the
/// root. Deterministic in master_seed, byte for byte. Undecodable inputs
/// are skipped and listed in the manifest.
Manifest generate_dataset(const std::string& clean_dir, const std::string& out_dir,
                          const GeneratorConfig& config, std::uint64_t master_seed);

struct EvalRow {
    std::string id;
    double psnr_db = 0.0;
    double ssim = 0.0;
    bool missing = false;
};

struct EvalResult {
    std::vector<EvalRow> rows;
    double mean_psnr = 0.0; // over non-missing rows
    double mean_ssim = 0.0;
    bool complete = true;
};

/// PSNR/SSIM of restored_dir/<id>.png against each record's clean image.
/// Missing restorations are flagged and excluded from the means.
EvalResult evaluate(const std::string& dataset_root, const Manifest& manifest,
                    const std::string& restored_dir);

/// Tab-separated table: header, one row per record, final MEAN row.
std::string format_metrics_table(const EvalResult& result);

} // namespace rnr
