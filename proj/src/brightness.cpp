#include "derainkit/brightness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace derainkit {
namespace {

constexpr int kSampleRedrawCap = 64;

int clamp_int(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct PatchMatch {
    double ssd;
    std::size_t pair_index;
    int cy;
    int cx;
};

// Sparse Fisher-Yates over the flattened pixel index space; yields a
// uniform-without-replacement stream of positions.
class PositionDrawer {
public:
    PositionDrawer(int height, int width, std::uint64_t seed)
        : height_(height), width_(width), total_(static_cast<std::size_t>(height) * width),
          rng_(seed) {}

    std::size_t remaining() const { return total_ - drawn_; }

    PixelPos next() {
        std::uniform_int_distribution<std::size_t> dist(drawn_, total_ - 1);
        const std::size_t r = dist(rng_);
        const std::size_t value = lookup(r);
        perm_[r] = lookup(drawn_);
        ++drawn_;
        return {static_cast<int>(value / width_), static_cast<int>(value % width_)};
    }

private:
    std::size_t lookup(std::size_t i) const {
        auto it = perm_.find(i);
        return it == perm_.end() ? i : it->second;
    }

    int height_;
    int width_;
    std::size_t total_;
    std::size_t drawn_ = 0;
    std::mt19937_64 rng_;
    std::unordered_map<std::size_t, std::size_t> perm_;
};

bool channel_degenerate(const std::vector<std::array<double, 3>>& observed, int c) {
    for (std::size_t j = 1; j < observed.size(); ++j)
        if (observed[j][c] != observed[0][c]) return false;
    return true;
}

}  // namespace

void PatchMatchConfig::validate() const {
    if (patch_size < 3 || patch_size % 2 == 0)
        throw Error("patch size must be odd and >= 3, got " + std::to_string(patch_size));
    if (top_m < 1) throw Error("top_m must be >= 1, got " + std::to_string(top_m));
    if (search_stride < 1)
        throw Error("search stride must be >= 1, got " + std::to_string(search_stride));
}

std::array<double, 3> estimate_pixel(const Image& query_img, PixelPos pos,
                                     const std::vector<ReferencePair>& library,
                                     const PatchMatchConfig& cfg) {
    cfg.validate();
    if (library.empty()) throw Error("estimate_pixel: empty reference library");
    const int p = cfg.patch_size;
    const int half = p / 2;
    if (query_img.height < p || query_img.width < p)
        throw Error("estimate_pixel: query patch larger than image (" +
                    std::to_string(query_img.height) + "x" + std::to_string(query_img.width) +
                    " vs patch " + std::to_string(p) + ")");

    const int qy = clamp_int(pos.y, half, query_img.height - 1 - half);
    const int qx = clamp_int(pos.x, half, query_img.width - 1 - half);

    // Query patch, contiguous copy so the SSD inner loop is a flat scan.
    std::vector<double> patch(static_cast<std::size_t>(p) * p * 3);
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            for (int c = 0; c < 3; ++c)
                patch[((dy + half) * p + (dx + half)) * 3 + c] = query_img.at(qy + dy, qx + dx, c);

    // Best matches in scan order (library, then y, then x); strict comparison
    // keeps the earliest candidate on ties.
    std::vector<PatchMatch> best;
    best.reserve(cfg.top_m + 1);
    for (std::size_t li = 0; li < library.size(); ++li) {
        const Image& median = library[li].median_image;
        if (median.height < p || median.width < p) continue;
        for (int cy = half; cy <= median.height - 1 - half; cy += cfg.search_stride) {
            for (int cx = half; cx <= median.width - 1 - half; cx += cfg.search_stride) {
                double ssd = 0.0;
                std::size_t k = 0;
                for (int dy = -half; dy <= half; ++dy) {
                    const double* row = &median.data[median.index(cy + dy, cx - half, 0)];
                    for (int i = 0; i < p * 3; ++i, ++k) {
                        const double d = row[i] - patch[k];
                        ssd += d * d;
                    }
                }
                if (best.size() < static_cast<std::size_t>(cfg.top_m)) {
                    best.push_back({ssd, li, cy, cx});
                    std::stable_sort(best.begin(), best.end(),
                                     [](const PatchMatch& a, const PatchMatch& b) {
                                         return a.ssd < b.ssd;
                                     });
                } else if (ssd < best.back().ssd) {
                    best.back() = {ssd, li, cy, cx};
                    std::stable_sort(best.begin(), best.end(),
                                     [](const PatchMatch& a, const PatchMatch& b) {
                                         return a.ssd < b.ssd;
                                     });
                }
            }
        }
    }
    if (best.empty())
        throw Error("estimate_pixel: no library image large enough for a " + std::to_string(p) +
                    "x" + std::to_string(p) + " patch");

    std::array<double, 3> estimate{0.0, 0.0, 0.0};
    for (const PatchMatch& m : best) {
        const Image& clean = library[m.pair_index].clean_image;
        std::array<double, 3> mean{0.0, 0.0, 0.0};
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx)
                for (int c = 0; c < 3; ++c) mean[c] += clean.at(m.cy + dy, m.cx + dx, c);
        for (int c = 0; c < 3; ++c) estimate[c] += mean[c] / (p * p);
    }
    for (int c = 0; c < 3; ++c) estimate[c] /= best.size();
    return estimate;
}

PixelSampleSet draw_sample_set(const Image& observed_img, int k, std::uint64_t rng_seed,
                               const std::vector<ReferencePair>& library,
                               const PatchMatchConfig& cfg, const Image* match_query) {
    cfg.validate();
    if (k < 2) throw Error("draw_sample_set: need at least 2 samples, got " + std::to_string(k));
    if (observed_img.pixel_count() < static_cast<std::size_t>(k))
        throw Error("draw_sample_set: image too small for " + std::to_string(k) + " samples");
    if (match_query) require_same_size(observed_img, *match_query, "draw_sample_set");

    PositionDrawer drawer(observed_img.height, observed_img.width, rng_seed);
    PixelSampleSet set;
    set.positions.reserve(k);
    set.observed.reserve(k);
    for (int j = 0; j < k; ++j) {
        const PixelPos pos = drawer.next();
        set.positions.push_back(pos);
        set.observed.push_back({observed_img.at(pos.y, pos.x, 0), observed_img.at(pos.y, pos.x, 1),
                                observed_img.at(pos.y, pos.x, 2)});
    }

    // Replace the last position while some channel's observed column is
    // constant; a constant column would zero the fit denominator.
    int retries = 0;
    auto degenerate = [&set] {
        return channel_degenerate(set.observed, 0) || channel_degenerate(set.observed, 1) ||
               channel_degenerate(set.observed, 2);
    };
    while (degenerate()) {
        if (retries >= kSampleRedrawCap || drawer.remaining() == 0)
            throw Error("draw_sample_set: degenerate sample, observed values are identical "
                        "within a channel (image constant?)");
        const PixelPos pos = drawer.next();
        set.positions.back() = pos;
        set.observed.back() = {observed_img.at(pos.y, pos.x, 0), observed_img.at(pos.y, pos.x, 1),
                               observed_img.at(pos.y, pos.x, 2)};
        ++retries;
    }

    const Image& query = match_query ? *match_query : observed_img;
    set.estimated.reserve(k);
    for (const PixelPos& pos : set.positions)
        set.estimated.push_back(estimate_pixel(query, pos, library, cfg));
    return set;
}

ChannelAffine fit_affine(const PixelSampleSet& samples) {
    const int k = samples.sample_count();
    if (k < 2) throw Error("fit_affine: need at least 2 samples, got " + std::to_string(k));
    if (samples.estimated.size() != samples.observed.size() ||
        samples.positions.size() != samples.observed.size())
        throw Error("fit_affine: inconsistent sample set");

    ChannelAffine coeffs;
    for (int c = 0; c < 3; ++c) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (int j = 0; j < k; ++j) {
            const double x = samples.observed[j][c];
            const double y = samples.estimated[j][c];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double denom = k * sxx - sx * sx;
        if (!(denom > 1e-12 * static_cast<double>(k) * k))
            throw Error("fit_affine: degenerate fit in channel " + std::to_string(c) +
                        " (observed values nearly identical)");
        const double a = (k * sxy - sx * sy) / denom;
        coeffs.gain[c] = a;
        coeffs.offset[c] = sy / k - a * sx / k;
    }
    return coeffs;
}

Image apply_affine(const Image& img, const ChannelAffine& coeffs) {
    for (int c = 0; c < 3; ++c)
        if (!std::isfinite(coeffs.gain[c]) || !std::isfinite(coeffs.offset[c]))
            throw Error("apply_affine: non-finite coefficients");

    Image out(img.height, img.width);
    const std::size_t n = img.value_count();
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 3);
        out.data[i] = clamp01(coeffs.gain[c] * img.data[i] + coeffs.offset[c]);
    }
    return out;
}

FitPlusResult fit_affine_plus(const Image& observed_img, int n_sets, int k,
                              std::uint64_t base_seed, const std::vector<ReferencePair>& library,
                              const PatchMatchConfig& cfg, const Image* match_query) {
    if (n_sets < 1) throw Error("fit_affine_plus: need at least 1 index set");

    // Config problems are global; fail before the per-set loop so they are
    // not mistaken for degenerate draws.
    cfg.validate();
    if (library.empty()) throw Error("fit_affine_plus: empty reference library");
    if (k < 2) throw Error("fit_affine_plus: need at least 2 samples per set");
    if (observed_img.pixel_count() < static_cast<std::size_t>(k))
        throw Error("fit_affine_plus: image too small for " + std::to_string(k) + " samples");
    if (match_query) require_same_size(observed_img, *match_query, "fit_affine_plus");

    FitPlusResult result;
    std::array<double, 3> gain_sum{0.0, 0.0, 0.0};
    std::array<double, 3> offset_sum{0.0, 0.0, 0.0};
    for (int i = 0; i < n_sets; ++i) {
        try {
            const PixelSampleSet set =
                draw_sample_set(observed_img, k, base_seed + i, library, cfg, match_query);
            const ChannelAffine fit = fit_affine(set);
            for (int c = 0; c < 3; ++c) {
                gain_sum[c] += fit.gain[c];
                offset_sum[c] += fit.offset[c];
            }
            ++result.sets_used;
        } catch (const Error&) {
            ++result.sets_skipped;
        }
    }
    if (result.sets_used == 0)
        throw Error("fit_affine_plus: all " + std::to_string(n_sets) + " index sets degenerate");
    for (int c = 0; c < 3; ++c) {
        result.coeffs.gain[c] = gain_sum[c] / result.sets_used;
        result.coeffs.offset[c] = offset_sum[c] / result.sets_used;
    }
    return result;
}

}  // namespace derainkit
