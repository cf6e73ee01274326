#include "derainkit/ensemble.hpp"

#include <cmath>

#include "derainkit/metrics.hpp"

namespace derainkit {

Image weighted_average(const Image& mean_img, const Image& median_img, double w) {
    if (!(w >= 0.0 && w <= 1.0))
        throw Error("ensemble weight must lie in [0,1], got " + std::to_string(w));
    require_same_size(mean_img, median_img, "weighted_average");
    if (w == 1.0) return mean_img;
    if (w == 0.0) return median_img;

    Image out(mean_img.height, mean_img.width);
    const std::size_t n = out.value_count();
    // median + w*(mean - median) rather than the two-product form: equal
    // inputs pass through bit-exactly and the result cannot leave the
    // [min, max] interval of its inputs by a rounding ulp.
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = median_img.data[i] + w * (mean_img.data[i] - median_img.data[i]);
    return out;
}

std::vector<WeightSweepPoint> sweep_weights(const std::vector<WeightTuneInput>& scenes,
                                            double step) {
    if (scenes.empty()) throw Error("sweep_weights: no scenes with ground truth");
    if (!(step > 0.0 && step <= 1.0)) throw Error("sweep_weights: step must lie in (0,1]");
    for (const auto& s : scenes) {
        require_same_size(s.mean_img, s.median_img, "sweep_weights");
        require_same_size(s.mean_img, s.clean, "sweep_weights");
    }

    std::vector<WeightSweepPoint> sweep;
    const int steps = static_cast<int>(std::round(1.0 / step));
    sweep.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        const double w = std::min(1.0, i * step);
        double total = 0.0;
        for (const auto& s : scenes) total += psnr(weighted_average(s.mean_img, s.median_img, w), s.clean);
        sweep.push_back({w, total / scenes.size()});
    }
    return sweep;
}

WeightSweepPoint best_weight(const std::vector<WeightSweepPoint>& sweep) {
    if (sweep.empty()) throw Error("best_weight: empty sweep");
    WeightSweepPoint best = sweep.front();
    for (const auto& p : sweep)
        if (p.mean_psnr > best.mean_psnr) best = p;
    return best;
}

}  // namespace derainkit
