#include "derainkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "derainkit/temporal.hpp"

namespace fs = std::filesystem;

namespace derainkit {
namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_value(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string csv_row(const std::string& scene, const std::string& stage, const MetricReport& r) {
    return scene + "," + stage + "," + format_value(r.psnr, "%.6f") + "," +
           format_value(r.ssim, "%.6f") + "," + format_value(r.mse, "%.8e") + "\n";
}

MetricReport scored(const Image& result, const Image& clean, bool on_8bit) {
    if (on_8bit) return evaluate_scene(quantize_to_8bit(result), quantize_to_8bit(clean));
    return evaluate_scene(result, clean);
}

struct StageAverage {
    std::string stage;
    double psnr = 0.0, ssim = 0.0, mse = 0.0;
    int count = 0;
};

std::vector<StageAverage> stage_averages(const PipelineResult& result) {
    std::vector<StageAverage> averages;
    for (const auto& scene : result.scenes)
        for (const auto& row : scene.metrics) {
            auto it = std::find_if(averages.begin(), averages.end(),
                                   [&](const StageAverage& a) { return a.stage == row.stage; });
            if (it == averages.end()) {
                averages.push_back({row.stage});
                it = averages.end() - 1;
            }
            it->psnr += row.report.psnr;
            it->ssim += row.report.ssim;
            it->mse += row.report.mse;
            ++it->count;
        }
    for (auto& a : averages) {
        a.psnr /= a.count;
        a.ssim /= a.count;
        a.mse /= a.count;
    }
    return averages;
}

struct SceneJob {
    std::string scene_id;
    fs::path scene_dir;
};

SceneOutcome process_scene(const PipelineConfig& cfg, const SceneJob& job,
                           const std::set<Stage>& stages,
                           const std::vector<ReferencePair>& library) {
    SceneOutcome outcome;
    outcome.scene_id = job.scene_id;
    try {
        const fs::path out_dir = cfg.output_root / job.scene_id;
        fs::create_directories(out_dir);

        const SceneStack rainy = load_scene(job.scene_dir / "rainy");

        Image median_img, mean_img, ensemble_img, final_img;
        const bool want_mean = stages.count(Stage::mean) != 0;
        const bool want_median = stages.count(Stage::median) != 0;
        const bool want_ensemble = stages.count(Stage::ensemble) != 0;
        const bool want_plus = stages.count(Stage::postprocess_plus) != 0;
        const bool want_post = want_plus || stages.count(Stage::postprocess) != 0;

        if (want_median) {
            median_img = temporal_median(rainy);
            save_image(median_img, out_dir / "median.png", 16);
        }
        if (want_mean) {
            const fs::path restored_dir = cfg.restored_root.empty()
                                              ? job.scene_dir / "restored"
                                              : cfg.restored_root / job.scene_id;
            const SceneStack restored = provide_restored(rainy, cfg.provider, restored_dir);
            mean_img = temporal_mean(restored);
            save_image(mean_img, out_dir / "mean.png", 16);
        }
        if (want_ensemble) {
            ensemble_img = weighted_average(mean_img, median_img, cfg.weight);
            save_image(ensemble_img, out_dir / "ensemble.png", 16);
        }
        if (want_post) {
            const int n_sets = want_plus ? cfg.num_sets : 1;
            const Image* query =
                cfg.match_query == MatchQuery::median_image ? &median_img : &ensemble_img;
            const std::uint64_t scene_seed = cfg.seed ^ fnv1a(job.scene_id);
            const FitPlusResult fit = fit_affine_plus(ensemble_img, n_sets, cfg.samples_k,
                                                      scene_seed, library, cfg.patch, query);
            outcome.coeffs = fit.coeffs;
            outcome.has_coeffs = true;
            outcome.fit_sets_used = fit.sets_used;
            outcome.fit_sets_skipped = fit.sets_skipped;
            final_img = apply_affine(ensemble_img, fit.coeffs);
            save_image(final_img, out_dir / "final.png", 16);

            std::ofstream sidecar(out_dir / "coeffs.txt");
            sidecar << "scene_id: " << job.scene_id << "\n"
                    << "samples_k: " << cfg.samples_k << "\n"
                    << "num_sets: " << n_sets << "\n"
                    << "sets_used: " << fit.sets_used << "\n"
                    << "sets_skipped: " << fit.sets_skipped << "\n";
            const char* names[3] = {"r", "g", "b"};
            for (int c = 0; c < 3; ++c)
                sidecar << "gain_" << names[c] << ": "
                        << format_value(fit.coeffs.gain[c], "%.12g") << "\n";
            for (int c = 0; c < 3; ++c)
                sidecar << "offset_" << names[c] << ": "
                        << format_value(fit.coeffs.offset[c], "%.12g") << "\n";
        }

        if (stages.count(Stage::evaluate) != 0) {
            const fs::path clean_path = job.scene_dir / "clean.png";
            if (fs::is_regular_file(clean_path)) {
                const Image clean = load_image(clean_path);
                if (want_median)
                    outcome.metrics.push_back(
                        {"median", scored(median_img, clean, cfg.metrics_on_8bit)});
                if (want_mean)
                    outcome.metrics.push_back(
                        {"mean", scored(mean_img, clean, cfg.metrics_on_8bit)});
                if (want_ensemble)
                    outcome.metrics.push_back(
                        {"ensemble", scored(ensemble_img, clean, cfg.metrics_on_8bit)});
                if (want_post)
                    outcome.metrics.push_back({want_plus ? "postprocess_plus" : "postprocess",
                                               scored(final_img, clean, cfg.metrics_on_8bit)});
            }
        }
        outcome.ok = true;
    } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace

Stage stage_from_string(const std::string& name) {
    if (name == "median") return Stage::median;
    if (name == "mean") return Stage::mean;
    if (name == "ensemble") return Stage::ensemble;
    if (name == "postprocess") return Stage::postprocess;
    if (name == "postprocess_plus" || name == "postprocess+") return Stage::postprocess_plus;
    if (name == "evaluate") return Stage::evaluate;
    throw Error("unknown stage: " + name);
}

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::median: return "median";
        case Stage::mean: return "mean";
        case Stage::ensemble: return "ensemble";
        case Stage::postprocess: return "postprocess";
        case Stage::postprocess_plus: return "postprocess_plus";
        case Stage::evaluate: return "evaluate";
    }
    return "?";
}

std::set<Stage> normalize_stages(std::set<Stage> stages) {
    if (stages.empty())
        stages = {Stage::median, Stage::mean,           Stage::ensemble,
                  Stage::postprocess_plus, Stage::evaluate};
    if (stages.count(Stage::postprocess_plus) != 0) stages.erase(Stage::postprocess);
    if (stages.count(Stage::postprocess) != 0 || stages.count(Stage::postprocess_plus) != 0)
        stages.insert(Stage::ensemble);
    if (stages.count(Stage::ensemble) != 0) {
        stages.insert(Stage::median);
        stages.insert(Stage::mean);
    }
    return stages;
}

bool PipelineResult::all_ok() const {
    return std::all_of(scenes.begin(), scenes.end(),
                       [](const SceneOutcome& s) { return s.ok; });
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.output_root.empty()) throw Error("pipeline: output directory not set");
    if (!(cfg.weight >= 0.0 && cfg.weight <= 1.0))
        throw Error("pipeline: ensemble weight must lie in [0,1]");
    const std::set<Stage> stages = normalize_stages(cfg.stages);

    if (!fs::is_directory(cfg.dataset_root))
        throw Error("dataset root not found: " + cfg.dataset_root.string());
    std::vector<SceneJob> jobs;
    for (const auto& entry : fs::directory_iterator(cfg.dataset_root))
        if (entry.is_directory() && fs::is_directory(entry.path() / "rainy"))
            jobs.push_back({entry.path().filename().string(), entry.path()});
    std::sort(jobs.begin(), jobs.end(),
              [](const SceneJob& a, const SceneJob& b) { return a.scene_id < b.scene_id; });
    if (jobs.empty())
        throw Error("no scenes found under " + cfg.dataset_root.string() +
                    " (expected <scene_id>/rainy/*.png)");

    const bool want_post = stages.count(Stage::postprocess) != 0 ||
                           stages.count(Stage::postprocess_plus) != 0;
    std::vector<ReferencePair> library;
    if (want_post) {
        if (cfg.library_dir.empty())
            throw Error("pipeline: the postprocess stages need --library");
        library = load_reference_library(cfg.library_dir);
        if (library.empty())
            throw Error("pipeline: reference library " + cfg.library_dir.string() + " is empty");
    }

    fs::create_directories(cfg.output_root);

    PipelineResult result;
    result.scenes.resize(jobs.size());
    int n_jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::thread::hardware_concurrency());
    n_jobs = std::max(1, std::min<int>(n_jobs, static_cast<int>(jobs.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
            result.scenes[i] = process_scene(cfg, jobs[i], stages, library);
    };
    if (n_jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_jobs);
        for (int i = 0; i < n_jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return result;
}

PipelineResult evaluate_results(const fs::path& dataset_root, const fs::path& results_root,
                                bool metrics_on_8bit) {
    if (!fs::is_directory(results_root))
        throw Error("results directory not found: " + results_root.string());

    std::vector<fs::path> scene_dirs;
    for (const auto& entry : fs::directory_iterator(results_root))
        if (entry.is_directory()) scene_dirs.push_back(entry.path());
    std::sort(scene_dirs.begin(), scene_dirs.end());

    static const std::pair<const char*, const char*> kStageFiles[] = {
        {"median.png", "median"},
        {"mean.png", "mean"},
        {"ensemble.png", "ensemble"},
        {"final.png", "final"},
    };

    PipelineResult result;
    for (const auto& dir : scene_dirs) {
        SceneOutcome outcome;
        outcome.scene_id = dir.filename().string();
        try {
            const fs::path clean_path = dataset_root / outcome.scene_id / "clean.png";
            if (fs::is_regular_file(clean_path)) {
                const Image clean = load_image(clean_path);
                for (const auto& [file, stage] : kStageFiles) {
                    const fs::path img_path = dir / file;
                    if (!fs::is_regular_file(img_path)) continue;
                    outcome.metrics.push_back(
                        {stage, scored(load_image(img_path), clean, metrics_on_8bit)});
                }
            }
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.error = e.what();
        }
        result.scenes.push_back(std::move(outcome));
    }
    return result;
}

void write_metrics_csv(const PipelineResult& result, std::ostream& out) {
    out << "scene,stage,psnr,ssim,mse\n";
    for (const auto& scene : result.scenes)
        for (const auto& row : scene.metrics) out << csv_row(scene.scene_id, row.stage, row.report);
    for (const auto& a : stage_averages(result))
        out << csv_row("average", a.stage, {a.psnr, a.ssim, a.mse});
}

void print_metrics_table(const PipelineResult& result, std::ostream& out) {
    out << std::left << std::setw(20) << "scene" << std::setw(18) << "stage" << std::right
        << std::setw(12) << "psnr" << std::setw(12) << "ssim" << std::setw(16) << "mse" << "\n";
    auto line = [&](const std::string& scene, const std::string& stage, const MetricReport& r) {
        out << std::left << std::setw(20) << scene << std::setw(18) << stage << std::right
            << std::setw(12) << format_value(r.psnr, "%.3f") << std::setw(12)
            << format_value(r.ssim, "%.4f") << std::setw(16) << format_value(r.mse, "%.3e")
            << "\n";
    };
    for (const auto& scene : result.scenes) {
        if (!scene.ok) {
            out << std::left << std::setw(20) << scene.scene_id << "FAILED: " << scene.error
                << "\n";
            continue;
        }
        for (const auto& row : scene.metrics) line(scene.scene_id, row.stage, row.report);
    }
    for (const auto& a : stage_averages(result)) line("average", a.stage, {a.psnr, a.ssim, a.mse});
}

}  // namespace derainkit
