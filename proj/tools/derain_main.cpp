#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "derainkit/pipeline.hpp"
#include "derainkit/synth.hpp"
#include "derainkit/temporal.hpp"

namespace fs = std::filesystem;
using namespace derainkit;

namespace {

struct SynthOpts {
    std::string out;
    std::string library;
    int scenes = 5;
    int height = 64;
    int width = 64;
    int frames = 31;
    double density = 0.05;
    int streak_length = 7;
    double streak_intensity = 0.25;
    std::vector<double> gain{1.0};
    std::vector<double> offset{0.0};
    std::vector<double> gain_range;
    std::vector<double> offset_range;
    double restored_blend = -1.0;  // < 0 disables restored-frame output
    double restored_noise = 0.01;
    std::uint64_t seed = 1;
};

std::array<double, 3> expand_triple(const std::vector<double>& v, const char* what) {
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw Error(std::string(what) + " takes 1 or 3 values");
}

int run_synth(const SynthOpts& opts) {
    std::mt19937_64 meta_rng(opts.seed ^ 0x5eedf00dULL);
    std::vector<RainSceneSpec> specs;
    for (int i = 0; i < opts.scenes; ++i) {
        RainSceneSpec spec;
        spec.height = opts.height;
        spec.width = opts.width;
        spec.frame_count = opts.frames;
        spec.rain_density = opts.density;
        spec.streak_length = opts.streak_length;
        spec.streak_intensity = opts.streak_intensity;
        spec.seed = opts.seed + static_cast<std::uint64_t>(i);
        spec.brightness_gain = expand_triple(opts.gain, "--gain");
        spec.brightness_offset = expand_triple(opts.offset, "--offset");
        if (opts.gain_range.size() == 2) {
            std::uniform_real_distribution<double> d(opts.gain_range[0], opts.gain_range[1]);
            for (int c = 0; c < 3; ++c) spec.brightness_gain[c] = d(meta_rng);
        }
        if (opts.offset_range.size() == 2) {
            std::uniform_real_distribution<double> d(opts.offset_range[0], opts.offset_range[1]);
            for (int c = 0; c < 3; ++c) spec.brightness_offset[c] = d(meta_rng);
        }
        specs.push_back(spec);
    }

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const GeneratedScene scene = generate_scene(specs[i]);
        const std::string id = synth_scene_id(i);
        const fs::path scene_dir = fs::path(opts.out) / id;
        fs::create_directories(scene_dir / "rainy");
        for (int t = 0; t < scene.rainy.frame_count(); ++t) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04d.png", t);
            save_image(scene.rainy.frames[t], scene_dir / "rainy" / name, 16);
        }
        save_image(scene.clean, scene_dir / "clean.png", 16);

        if (opts.restored_blend >= 0.0) {
            const SceneStack restored = synthesize_restored_frames(
                scene, opts.restored_blend, opts.restored_noise,
                specs[i].seed ^ 0x7e5707edULL);
            fs::create_directories(scene_dir / "restored");
            for (int t = 0; t < restored.frame_count(); ++t) {
                char name[32];
                std::snprintf(name, sizeof(name), "frame_%04d.png", t);
                save_image(restored.frames[t], scene_dir / "restored" / name, 16);
            }
        }

        std::ofstream truth(scene_dir / "truth.txt");
        const char* names[3] = {"r", "g", "b"};
        truth << "scene_id: " << id << "\n";
        for (int c = 0; c < 3; ++c) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.12g", specs[i].brightness_gain[c]);
            truth << "gain_" << names[c] << ": " << buf << "\n";
        }
        for (int c = 0; c < 3; ++c) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.12g", specs[i].brightness_offset[c]);
            truth << "offset_" << names[c] << ": " << buf << "\n";
        }
        std::printf("wrote %s (%dx%d, T=%d)\n", scene_dir.string().c_str(), opts.width,
                    opts.height, opts.frames);
    }

    if (!opts.library.empty()) {
        generate_reference_library(specs, opts.library);
        std::printf("wrote reference library %s (%zu pairs)\n", opts.library.c_str(),
                    specs.size());
    }
    return 0;
}

int finish_run(const PipelineConfig& cfg, const PipelineResult& result, bool write_csv) {
    print_metrics_table(result, std::cout);
    if (write_csv) {
        const fs::path csv_path = cfg.output_root / "metrics.csv";
        std::ofstream csv(csv_path);
        write_metrics_csv(result, csv);
        std::printf("wrote %s\n", csv_path.string().c_str());
    }
    for (const auto& scene : result.scenes) {
        if (!scene.ok)
            std::fprintf(stderr, "scene %s failed: %s\n", scene.scene_id.c_str(),
                         scene.error.c_str());
        else if (scene.fit_sets_skipped > 0)
            std::fprintf(stderr, "scene %s: %d of %d sample sets degenerate, skipped\n",
                         scene.scene_id.c_str(), scene.fit_sets_skipped,
                         scene.fit_sets_used + scene.fit_sets_skipped);
    }
    return result.all_ok() ? 0 : 1;
}

int run_tune_weight(const PipelineConfig& cfg, double step) {
    if (!fs::is_directory(cfg.dataset_root))
        throw Error("dataset root not found: " + cfg.dataset_root.string());
    std::vector<WeightTuneInput> inputs;
    std::vector<fs::path> scene_dirs;
    for (const auto& entry : fs::directory_iterator(cfg.dataset_root))
        if (entry.is_directory() && fs::is_directory(entry.path() / "rainy"))
            scene_dirs.push_back(entry.path());
    std::sort(scene_dirs.begin(), scene_dirs.end());
    for (const auto& dir : scene_dirs) {
        if (!fs::is_regular_file(dir / "clean.png")) {
            std::fprintf(stderr, "tune-weight: skipping %s (no clean.png)\n",
                         dir.string().c_str());
            continue;
        }
        const SceneStack rainy = load_scene(dir / "rainy");
        const fs::path restored_dir = cfg.restored_root.empty()
                                          ? dir / "restored"
                                          : cfg.restored_root / dir.filename();
        const SceneStack restored = provide_restored(rainy, cfg.provider, restored_dir);
        inputs.push_back({temporal_mean(restored), temporal_median(rainy),
                          load_image(dir / "clean.png")});
    }
    if (inputs.empty()) throw Error("tune-weight: no scenes with ground truth");

    const auto sweep = sweep_weights(inputs, step);
    std::printf("w,mean_psnr\n");
    for (const auto& p : sweep) std::printf("%.2f,%.6f\n", p.w, p.mean_psnr);
    const auto best = best_weight(sweep);
    std::printf("best weight: %.2f (mean PSNR %.6f dB over %zu scenes)\n", best.w,
                best.mean_psnr, inputs.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-frame deraining: temporal median, restored-frame ensembling and "
                 "least-squares brightness correction"};
    app.require_subcommand(1);

    SynthOpts synth_opts;
    CLI::App* synth = app.add_subcommand("synth", "Generate a ground-truthed synthetic dataset");
    synth->add_option("--out", synth_opts.out, "Dataset output directory")->required();
    synth->add_option("--library", synth_opts.library,
                      "Also write a (median,clean) reference library here");
    synth->add_option("--scenes", synth_opts.scenes, "Number of scenes");
    synth->add_option("--height", synth_opts.height, "Frame height");
    synth->add_option("--width", synth_opts.width, "Frame width");
    synth->add_option("--frames", synth_opts.frames, "Frames per scene");
    synth->add_option("--density", synth_opts.density,
                      "Expected fraction of pixels struck per frame, < 0.5");
    synth->add_option("--streak-length", synth_opts.streak_length, "Streak length in pixels");
    synth->add_option("--streak-intensity", synth_opts.streak_intensity,
                      "Additive streak brightness");
    synth->add_option("--gain", synth_opts.gain, "Brightness gain (1 or 3 values)")
        ->expected(1, 3);
    synth->add_option("--offset", synth_opts.offset, "Brightness offset (1 or 3 values)")
        ->expected(1, 3);
    synth->add_option("--gain-range", synth_opts.gain_range,
                      "Draw per-channel gains uniformly from [lo, hi]")
        ->expected(2);
    synth->add_option("--offset-range", synth_opts.offset_range,
                      "Draw per-channel offsets uniformly from [lo, hi]")
        ->expected(2);
    synth->add_option("--restored-blend", synth_opts.restored_blend,
                      "Write stand-in restored frames moved this fraction toward clean");
    synth->add_option("--restored-noise", synth_opts.restored_noise,
                      "Per-frame noise sigma of the stand-in restored frames");
    synth->add_option("--seed", synth_opts.seed, "Base RNG seed");

    PipelineConfig cfg;
    std::string provider_name = "identity";
    std::string match_query_name = "median";
    std::vector<std::string> stage_names;
    double tune_step = 0.01;
    std::string results_dir;
    std::string csv_out;

    auto add_dataset_opts = [&](CLI::App* cmd, bool need_out) {
        cmd->add_option("--dataset", cfg.dataset_root, "Dataset root directory")->required();
        auto* out = cmd->add_option("--out", cfg.output_root, "Output directory");
        if (need_out) out->required();
        cmd->add_option("--jobs", cfg.jobs, "Parallel scene workers (0 = auto)");
        cmd->add_option("--seed", cfg.seed, "Base RNG seed for pixel sampling");
    };
    auto add_provider_opts = [&](CLI::App* cmd) {
        cmd->add_option("--provider", provider_name,
                        "Restored-frames provider: identity | from-directory");
        cmd->add_option("--restored-dir", cfg.restored_root,
                        "External restored tree (<dir>/<scene_id>/*.png); default "
                        "<dataset>/<scene_id>/restored");
    };
    auto add_postprocess_opts = [&](CLI::App* cmd) {
        cmd->add_option("--library", cfg.library_dir,
                        "Reference library of <scene>/median.png + clean.png");
        cmd->add_option("--samples-k", cfg.samples_k, "Pixel samples per index set");
        cmd->add_option("--num-sets", cfg.num_sets, "Index sets averaged by the stabilized fit");
        cmd->add_option("--patch-size", cfg.patch.patch_size, "Odd patch size for matching");
        cmd->add_option("--top-m", cfg.patch.top_m, "Most-similar patches averaged per estimate");
        cmd->add_option("--stride", cfg.patch.search_stride, "Candidate grid stride");
        cmd->add_option("--match-query", match_query_name,
                        "Patch-match query image: median | ensemble");
    };

    CLI::App* median_cmd = app.add_subcommand("median", "Temporal median per scene");
    add_dataset_opts(median_cmd, true);

    CLI::App* mean_cmd = app.add_subcommand("mean", "Temporal mean of restored frames per scene");
    add_dataset_opts(mean_cmd, true);
    add_provider_opts(mean_cmd);

    CLI::App* ensemble_cmd =
        app.add_subcommand("ensemble", "Weighted average of mean and median images");
    add_dataset_opts(ensemble_cmd, true);
    add_provider_opts(ensemble_cmd);
    ensemble_cmd->add_option("--weight", cfg.weight, "Ensemble weight w in [0,1]");

    CLI::App* post_cmd =
        app.add_subcommand("postprocess", "Full chain ending in brightness correction");
    add_dataset_opts(post_cmd, true);
    add_provider_opts(post_cmd);
    post_cmd->add_option("--weight", cfg.weight, "Ensemble weight w in [0,1]");
    add_postprocess_opts(post_cmd);

    CLI::App* pipeline_cmd = app.add_subcommand("pipeline", "Run the full per-scene dataflow");
    add_dataset_opts(pipeline_cmd, true);
    add_provider_opts(pipeline_cmd);
    pipeline_cmd->add_option("--weight", cfg.weight, "Ensemble weight w in [0,1]");
    add_postprocess_opts(pipeline_cmd);
    pipeline_cmd->add_option("--stages", stage_names,
                             "Subset of median,mean,ensemble,postprocess,postprocess_plus,"
                             "evaluate (dependencies added automatically)")
        ->delimiter(',');
    pipeline_cmd->add_flag("--quantize-8bit", cfg.metrics_on_8bit,
                           "Score metrics on the 8-bit lattice");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a results tree against ground truth");
    eval_cmd->add_option("--dataset", cfg.dataset_root, "Dataset root with <scene>/clean.png")
        ->required();
    eval_cmd->add_option("--results", results_dir, "Results tree produced by a pipeline run")
        ->required();
    eval_cmd->add_option("--csv", csv_out, "Write the CSV table to this path");
    eval_cmd->add_flag("--quantize-8bit", cfg.metrics_on_8bit,
                       "Score metrics on the 8-bit lattice");

    CLI::App* tune_cmd =
        app.add_subcommand("tune-weight", "Grid-search the ensemble weight against ground truth");
    tune_cmd->add_option("--dataset", cfg.dataset_root, "Dataset root directory")->required();
    add_provider_opts(tune_cmd);
    tune_cmd->add_option("--step", tune_step, "Grid step over [0,1]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(synth_opts);

        cfg.provider = provider_kind_from_string(provider_name);
        if (match_query_name == "median") cfg.match_query = MatchQuery::median_image;
        else if (match_query_name == "ensemble") cfg.match_query = MatchQuery::ensemble_image;
        else throw Error("unknown --match-query: " + match_query_name);

        if (median_cmd->parsed()) {
            cfg.stages = {Stage::median};
            return finish_run(cfg, run_pipeline(cfg), false);
        }
        if (mean_cmd->parsed()) {
            cfg.stages = {Stage::mean};
            return finish_run(cfg, run_pipeline(cfg), false);
        }
        if (ensemble_cmd->parsed()) {
            cfg.stages = {Stage::ensemble};
            return finish_run(cfg, run_pipeline(cfg), false);
        }
        if (post_cmd->parsed()) {
            cfg.stages = {cfg.num_sets > 1 ? Stage::postprocess_plus : Stage::postprocess};
            return finish_run(cfg, run_pipeline(cfg), false);
        }
        if (pipeline_cmd->parsed()) {
            for (const auto& name : stage_names) cfg.stages.insert(stage_from_string(name));
            const PipelineResult result = run_pipeline(cfg);
            const bool evaluated = normalize_stages(cfg.stages).count(Stage::evaluate) != 0;
            return finish_run(cfg, result, evaluated);
        }
        if (eval_cmd->parsed()) {
            const PipelineResult result =
                evaluate_results(cfg.dataset_root, results_dir, cfg.metrics_on_8bit);
            print_metrics_table(result, std::cout);
            if (!csv_out.empty()) {
                std::ofstream csv(csv_out);
                write_metrics_csv(result, csv);
            } else {
                write_metrics_csv(result, std::cout);
            }
            return result.all_ok() ? 0 : 1;
        }
        if (tune_cmd->parsed()) return run_tune_weight(cfg, tune_step);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
