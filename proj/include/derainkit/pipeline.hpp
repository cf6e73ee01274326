#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "derainkit/brightness.hpp"
#include "derainkit/ensemble.hpp"
#include "derainkit/metrics.hpp"
#include "derainkit/provider.hpp"

namespace derainkit {

enum class Stage { median, mean, ensemble, postprocess, postprocess_plus, evaluate };

Stage stage_from_string(const std::string& name);
std::string to_string(Stage stage);

/// Image used as the patch-match query: the scene's temporal median (the
/// default) or the ensemble output itself.
enum class MatchQuery { median_image, ensemble_image };

struct PipelineConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path output_root;
    std::filesystem::path library_dir;   // needed by the postprocess stages
    std::filesystem::path restored_root; // optional external restored tree
    ProviderKind provider = ProviderKind::identity;
    double weight = kDefaultEnsembleWeight;
    int samples_k = 10;
    int num_sets = 10;
    PatchMatchConfig patch;
    std::uint64_t seed = 0;
    std::set<Stage> stages;              // empty selects every stage
    MatchQuery match_query = MatchQuery::median_image;
    int jobs = 0;                        // 0 picks hardware concurrency
    bool metrics_on_8bit = false;
};

struct StageMetricRow {
    std::string stage;
    MetricReport report;
};

struct SceneOutcome {
    std::string scene_id;
    bool ok = false;
    std::string error;
    std::vector<StageMetricRow> metrics;
    bool has_coeffs = false;
    ChannelAffine coeffs;
    int fit_sets_used = 0;
    int fit_sets_skipped = 0;
};

struct PipelineResult {
    std::vector<SceneOutcome> scenes;

    bool all_ok() const;
};

/// Expands stage dependencies (ensemble pulls in median+mean, the postprocess
/// stages pull in ensemble) and lets postprocess_plus supersede postprocess.
std::set<Stage> normalize_stages(std::set<Stage> stages);

/// Runs the per-scene chain (load -> restored frames -> median/mean ->
/// weighted average -> brightness correction -> save/evaluate) over every
/// scene in the dataset. Scene failures are isolated; global configuration
/// problems throw.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Metric rows for stage images already present in a results tree, compared
/// against the dataset's ground truth.
PipelineResult evaluate_results(const std::filesystem::path& dataset_root,
                                const std::filesystem::path& results_root,
                                bool metrics_on_8bit = false);

/// CSV with header scene,stage,psnr,ssim,mse: one row per scene and stage
/// plus one "average" row per stage.
void write_metrics_csv(const PipelineResult& result, std::ostream& out);

/// Human-readable version of the same table.
void print_metrics_table(const PipelineResult& result, std::ostream& out);

}  // namespace derainkit
