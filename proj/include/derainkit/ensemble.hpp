#pragma once

#include <vector>

#include "derainkit/image.hpp"

namespace derainkit {

/// Default convex-combination weight between the mean of restored frames and
/// the temporal median.
constexpr double kDefaultEnsembleWeight = 0.9;

/// Per-pixel convex combination: w * mean_img + (1 - w) * median_img.
Image weighted_average(const Image& mean_img, const Image& median_img, double w);

struct WeightSweepPoint {
    double w = 0.0;
    double mean_psnr = 0.0;
};

struct WeightTuneInput {
    Image mean_img;
    Image median_img;
    Image clean;
};

/// PSNR against ground truth for every weight on a [0,1] grid, averaged over
/// the given scenes.
std::vector<WeightSweepPoint> sweep_weights(const std::vector<WeightTuneInput>& scenes,
                                            double step = 0.01);

/// Grid weight with the highest mean PSNR; the lowest such weight on ties.
WeightSweepPoint best_weight(const std::vector<WeightSweepPoint>& sweep);

}  // namespace derainkit
