// End-to-end driver for the rnr binary. Takes the binary path as argv[1],
// exercises every subcommand in a temp workspace, and checks the exit-code
// contract: 0 success, 1 config, 2 I/O, 3 partial failure.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rnr/grpo.hpp"
#include "rnr/image.hpp"
#include "rnr/metrics.hpp"
#include "rnr/rng.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_binary;
fs::path g_root;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::printf("ok: %s\n", what.c_str());
    } else {
        std::printf("FAIL: %s\n", what.c_str());
        ++g_failures;
    }
}

int run_cmd(const std::string& args, const std::string& log_name) {
    const std::string log = (g_root / (log_name + ".log")).string();
    const std::string cmd = g_binary + " " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_integration <path-to-rnr>\n");
        return 2;
    }
    g_binary = argv[1];
    g_root = fs::temp_directory_path() / "rnr_cli_it";
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    // Workspace: a few clean images plus one broken file.
    const fs::path clean = g_root / "clean";
    fs::create_directories(clean);
    for (int i = 0; i < 4; ++i)
        rnr::write_png((clean / ("scene" + std::to_string(i) + ".png")).string(),
                       testimg::synthetic_scene(rnr::Rng(40 + i), 48, 48));

    // Fog-only generator config for the train path.
    const fs::path cfg_path = g_root / "fog_only.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << "{\"split\": \"test\", \"inclusion_prob\": [1.0, 0.0, 0.0, 0.0]}\n";
    }

    // --- degrade ---
    check(run_cmd("degrade --clean " + clean.string() + " --out " + (g_root / "ds").string() +
                      " --seed 7 --config " + cfg_path.string(),
                  "degrade") == 0,
          "degrade exits 0 on the happy path");
    check(fs::exists(g_root / "ds/manifest.json"), "degrade writes a manifest");

    check(run_cmd("degrade --out " + (g_root / "ds_x").string(), "degrade_missing") == 1,
          "degrade without --clean exits 1");
    check(slurp(g_root / "degrade_missing.log").find("--clean") != std::string::npos,
          "the error names the missing flag");

    run_cmd("degrade --clean " + clean.string() + " --out " + (g_root / "ds2").string() +
                " --seed 7 --config " + cfg_path.string(),
            "degrade_again");
    check(slurp(g_root / "ds/manifest.json") == slurp(g_root / "ds2/manifest.json") &&
              slurp(g_root / "ds/degraded/00000.png") == slurp(g_root / "ds2/degraded/00000.png"),
          "rerunning the same degrade command is byte-identical");

    // --- diagnose ---
    check(run_cmd("diagnose " + (g_root / "ds/degraded").string(), "diagnose") == 0,
          "diagnose exits 0 over a directory");
    check(fs::exists(g_root / "ds/degraded/00000.png.report.txt"),
          "diagnose writes a report beside each image");
    {
        const std::string table = slurp(g_root / "diagnose.log");
        int rows = 0;
        for (char c : table)
            if (c == '\n') ++rows;
        check(rows == 5, "diagnose prints a header and one row per image");
    }
    check(run_cmd("diagnose " + (g_root / "ds/degraded/00000.png").string() + " --format record",
                  "diagnose_record") == 0,
          "diagnose --format record exits 0");
    check(fs::exists(g_root / "ds/degraded/00000.png.report.json"),
          "record format emits a structured parameter block");

    {
        const fs::path mixed = g_root / "mixed";
        fs::create_directories(mixed);
        fs::copy_file(clean / "scene0.png", mixed / "fine.png");
        std::ofstream bad(mixed / "broken.png", std::ios::binary);
        bad << "junk";
        bad.close();
        check(run_cmd("diagnose " + mixed.string(), "diagnose_mixed") == 3,
              "diagnose with an undecodable input exits 3 and continues");
        check(fs::exists(mixed / "fine.png.report.txt"), "good inputs are still processed");
    }

    // --- restore without checkpoint (report-seeded) ---
    check(run_cmd("restore " + (clean / "scene0.png").string() + " --out " +
                      (g_root / "restored_clean").string(),
                  "restore_clean") == 0,
          "restore exits 0 without a checkpoint");
    check(slurp(g_root / "restore_clean.log").find("warning") != std::string::npos,
          "missing checkpoint falls back with a warning");
    {
        const rnr::Image in = rnr::read_png((clean / "scene0.png").string());
        const rnr::Image out = rnr::read_png((g_root / "restored_clean/scene0.png").string());
        check(rnr::psnr(out, in) >= 35.0, "clean input passes through nearly untouched (>= 35 dB)");
    }

    // --- train ---
    check(run_cmd("train --dataset " + (g_root / "ds").string() + " --out " + (g_root / "run").string() +
                      " --steps 3 --group 4 --seed 7 --lr 0.01",
                  "train") == 0,
          "train exits 0");
    check(fs::exists(g_root / "run/checkpoint.txt"), "train writes a checkpoint");
    {
        const std::string log = slurp(g_root / "run/train_log.tsv");
        int lines = 0;
        for (char c : log)
            if (c == '\n') ++lines;
        check(lines == 3, "train log has one line per step");
    }

    run_cmd("train --dataset " + (g_root / "ds").string() + " --out " + (g_root / "run_b").string() +
                " --steps 3 --group 4 --seed 7 --lr 0.01",
            "train_again");
    check(slurp(g_root / "run/train_log.tsv") == slurp(g_root / "run_b/train_log.tsv"),
          "identical train invocations produce identical logs");

    run_cmd("train --dataset " + (g_root / "ds").string() + " --out " + (g_root / "run_lr0").string() +
                " --steps 3 --group 4 --seed 7 --lr 0",
            "train_lr0");
    {
        const rnr::TrainState state = rnr::read_checkpoint((g_root / "run_lr0/checkpoint.txt").string());
        check(state.policy.mean == rnr::RestorationParams{}.flat(),
              "--lr 0 leaves the policy mean at its initial value");
    }

    check(run_cmd("train --dataset " + (g_root / "ds").string() + " --group 1", "train_bad_group") == 1,
          "--group below 2 exits 1");
    check(run_cmd("train --dataset " + (g_root / "ds").string() + " --tau bogus", "train_bad_tau") == 1,
          "--tau neither adaptive nor a number exits 1");

    // --- restore with checkpoint ---
    check(run_cmd("restore " + (g_root / "ds/degraded").string() + " --out " +
                      (g_root / "restored").string() + " --checkpoint " +
                      (g_root / "run/checkpoint.txt").string(),
                  "restore_ckpt") == 0,
          "restore with a checkpoint exits 0");

    {
        std::string ckpt = slurp(g_root / "run/checkpoint.txt");
        ckpt.replace(ckpt.find("v1"), 2, "v9");
        std::ofstream bad(g_root / "bad_ckpt.txt", std::ios::binary);
        bad << ckpt;
        bad.close();
        check(run_cmd("restore " + (clean / "scene0.png").string() + " --out " +
                          (g_root / "restored_bad").string() + " --checkpoint " +
                          (g_root / "bad_ckpt.txt").string(),
                      "restore_bad_ckpt") == 1,
              "a checkpoint with an unknown version exits 1");
        check(slurp(g_root / "restore_bad_ckpt.log").find("v9") != std::string::npos,
              "the error names the version found");
    }

    // --- eval ---
    {
        // Perfect restorations: copy the clean images under record ids.
        const fs::path perfect = g_root / "perfect";
        fs::create_directories(perfect);
        for (int i = 0; i < 4; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "%05d.png", i);
            fs::copy_file(g_root / "ds/clean" / id, perfect / id);
        }
        check(run_cmd("eval --dataset " + (g_root / "ds").string() + " --restored " + perfect.string(),
                      "eval_perfect") == 0,
              "eval exits 0 when every restoration is present");
        const std::string table = slurp(g_root / "eval_perfect.log");
        check(table.find("MEAN\t99.0000\t1.0000") != std::string::npos,
              "perfect restorations hit the PSNR cap and SSIM 1.0");

        check(run_cmd("eval --dataset " + (g_root / "ds").string() + " --restored " +
                          (g_root / "ds/degraded").string(),
                      "eval_inputs") == 0,
              "eval runs on the degraded copies");
        const std::string inputs = slurp(g_root / "eval_inputs.log");
        check(inputs.find("MEAN\t99.0000") == std::string::npos,
              "degraded copies score strictly below the perfect case");

        fs::remove(perfect / "00002.png");
        check(run_cmd("eval --dataset " + (g_root / "ds").string() + " --restored " + perfect.string(),
                      "eval_partial") == 3,
              "a missing restoration makes eval exit 3");
    }

    // --- jobs flag determinism ---
    run_cmd("--jobs 1 diagnose " + (g_root / "ds/degraded/00000.png").string(), "diag_j1");
    run_cmd("--jobs 2 diagnose " + (g_root / "ds/degraded/00000.png").string(), "diag_j2");
    check(slurp(g_root / "ds/degraded/00000.png.report.txt") != "" &&
              slurp(g_root / "diag_j1.log") == slurp(g_root / "diag_j2.log"),
          "results are identical across --jobs settings");

    if (g_failures == 0) {
        std::printf("cli integration: all checks passed\n");
        fs::remove_all(g_root);
        return 0;
    }
    std::printf("cli integration: %d check(s) failed (workspace kept at %s)\n", g_failures,
                g_root.string().c_str());
    return 1;
}
