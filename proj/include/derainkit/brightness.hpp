#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "derainkit/scene_io.hpp"

namespace derainkit {

/// Patch-similarity search settings for reference-value estimation.
/// The similarity measure is the sum of squared differences over all patch
/// pixels and channels.
struct PatchMatchConfig {
    int patch_size = 9;     // odd, >= 3
    int top_m = 1;          // most-similar patches to average
    int search_stride = 1;  // candidate grid step in the library images

    void validate() const;
};

/// Regression data for the per-channel affine fit: K sampled pixel positions
/// with their observed values and patch-match estimated reference values.
struct PixelSampleSet {
    std::vector<PixelPos> positions;
    std::vector<std::array<double, 3>> observed;
    std::vector<std::array<double, 3>> estimated;

    int sample_count() const { return static_cast<int>(positions.size()); }
};

/// Per-channel gain/offset of the global brightness correction.
struct ChannelAffine {
    std::array<double, 3> gain{1.0, 1.0, 1.0};
    std::array<double, 3> offset{0.0, 0.0, 0.0};
};

struct FitPlusResult {
    ChannelAffine coeffs;
    int sets_used = 0;
    int sets_skipped = 0;
};

/// Estimated clean value of the pixel at `pos`: the query patch around it is
/// matched against every candidate patch in the library's median images, and
/// the per-channel spatial means of the clean patches co-located with the
/// top_m best matches are averaged. Patch centers closer than patch_size/2 to
/// a border are shifted inward so the patch stays inside the image.
std::array<double, 3> estimate_pixel(const Image& query_img, PixelPos pos,
                                     const std::vector<ReferencePair>& library,
                                     const PatchMatchConfig& cfg);

/// Draws K distinct pixel positions uniformly (deterministic in rng_seed),
/// reading observed values from `observed_img` and estimating reference
/// values by patch matching. When `match_query` is given, patches are matched
/// on that image (e.g. the scene median) while observed values still come
/// from `observed_img`; both images must have identical dimensions.
/// Positions that leave some channel's observed column all-identical are
/// redrawn up to an internal retry cap.
PixelSampleSet draw_sample_set(const Image& observed_img, int k, std::uint64_t rng_seed,
                               const std::vector<ReferencePair>& library,
                               const PatchMatchConfig& cfg, const Image* match_query = nullptr);

/// Closed-form per-channel ordinary least squares of estimated on observed.
ChannelAffine fit_affine(const PixelSampleSet& samples);

/// out = gain * in + offset per channel, clamped to [0,1].
Image apply_affine(const Image& img, const ChannelAffine& coeffs);

/// Stabilized fit: draws N sample sets with seeds base_seed..base_seed+N-1,
/// fits each, and returns the per-channel mean of the gains and offsets.
/// Degenerate sets are skipped; at least one fit must succeed.
FitPlusResult fit_affine_plus(const Image& observed_img, int n_sets, int k,
                              std::uint64_t base_seed, const std::vector<ReferencePair>& library,
                              const PatchMatchConfig& cfg, const Image* match_query = nullptr);

}  // namespace derainkit
