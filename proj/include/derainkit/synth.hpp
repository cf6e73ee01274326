#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "derainkit/scene_io.hpp"

namespace derainkit {

/// Parameters of a ground-truthed synthetic rainy scene. The clean background
/// is a smooth random gradient; every frame is the brightness-degraded
/// background plus additive rain streaks at per-frame random positions.
struct RainSceneSpec {
    int height = 64;
    int width = 64;
    int frame_count = 31;
    double rain_density = 0.05;    // expected fraction of pixels struck per frame, < 0.5
    int streak_length = 7;
    double streak_intensity = 0.25;
    std::array<double, 3> brightness_gain{1.0, 1.0, 1.0};
    std::array<double, 3> brightness_offset{0.0, 0.0, 0.0};
    std::uint64_t seed = 1;

    void validate() const;
};

struct GeneratedScene {
    SceneStack rainy;
    Image clean;
    /// gain * clean + offset, before clamping and rain; in [0,1] by
    /// construction because the clean gradient stays inside a safe band.
    Image degraded_background;
    /// Frames in which each pixel was rain-struck; always < ceil(T/2).
    std::vector<int> strike_counts;
};

/// Deterministic in spec.seed. Throws when the density constraint cannot be
/// met (every pixel must be struck in fewer than ceil(T/2) frames).
GeneratedScene generate_scene(const RainSceneSpec& spec);

/// Writes `<dir>/scene_<i>/median.png` + `clean.png` for each spec, the
/// layout consumed by load_reference_library.
void generate_reference_library(const std::vector<RainSceneSpec>& specs,
                                const std::filesystem::path& dir);

/// Stand-in for an external per-frame restorer, used to exercise the ensemble
/// stage at desk scale: each restored frame moves the degraded background a
/// fraction `blend` toward the clean image and adds per-frame Gaussian noise.
SceneStack synthesize_restored_frames(const GeneratedScene& scene, double blend,
                                      double noise_sigma, std::uint64_t seed);

/// Scene directory name used by the synthetic dataset writer: scene_000, ...
std::string synth_scene_id(std::size_t index);

}  // namespace derainkit
