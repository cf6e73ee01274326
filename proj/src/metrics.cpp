#include "derainkit/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace derainkit {
namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_kernel() {
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kHalf;
        g[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Valid-region separable convolution: in is h x w, out is (h-10) x (w-10).
void convolve_valid(const std::vector<double>& in, int h, int w, std::vector<double>& out,
                    std::vector<double>& scratch, const std::array<double, kWindow>& g) {
    const int wv = w - 2 * kHalf;
    const int hv = h - 2 * kHalf;
    scratch.assign(static_cast<std::size_t>(h) * wv, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[k] * in[y * w + x + k];
            scratch[y * wv + x] = acc;
        }
    out.assign(static_cast<std::size_t>(hv) * wv, 0.0);
    for (int y = 0; y < hv; ++y)
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[k] * scratch[(y + k) * wv + x];
            out[y * wv + x] = acc;
        }
}

}  // namespace

double mse(const Image& a, const Image& b) {
    require_same_size(a, b, "mse");
    const std::size_t n = a.value_count();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / n;
}

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

double ssim(const Image& a, const Image& b) {
    require_same_size(a, b, "ssim");
    if (a.height < kWindow || a.width < kWindow)
        throw Error("ssim: image " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                    " smaller than the " + std::to_string(kWindow) + "x" +
                    std::to_string(kWindow) + " window");

    static const std::array<double, kWindow> g = gaussian_kernel();
    const int h = a.height, w = a.width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
    std::vector<double> ma, mb, maa, mbb, mab, scratch;

    double total = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < Image::kChannels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            const double va = a.data[i * Image::kChannels + c];
            const double vb = b.data[i * Image::kChannels + c];
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
        convolve_valid(pa, h, w, ma, scratch, g);
        convolve_valid(pb, h, w, mb, scratch, g);
        convolve_valid(paa, h, w, maa, scratch, g);
        convolve_valid(pbb, h, w, mbb, scratch, g);
        convolve_valid(pab, h, w, mab, scratch, g);

        const std::size_t nv = ma.size();
        for (std::size_t i = 0; i < nv; ++i) {
            const double mu_a = ma[i];
            const double mu_b = mb[i];
            const double var_a = maa[i] - mu_a * mu_a;
            const double var_b = mbb[i] - mu_b * mu_b;
            const double cov = mab[i] - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                     ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
        }
        count += nv;
    }
    return total / count;
}

MetricReport evaluate_scene(const Image& result, const Image& ground_truth) {
    MetricReport report;
    report.mse = mse(result, ground_truth);
    report.psnr = report.mse == 0.0 ? std::numeric_limits<double>::infinity()
                                    : 10.0 * std::log10(1.0 / report.mse);
    report.ssim = ssim(result, ground_truth);
    return report;
}

Image quantize_to_8bit(const Image& img) {
    Image out(img.height, img.width);
    for (std::size_t i = 0; i < img.value_count(); ++i) {
        double q = std::floor(img.data[i] * 255.0 + 0.5);
        if (q < 0.0) q = 0.0;
        if (q > 255.0) q = 255.0;
        out.data[i] = q / 255.0;
    }
    return out;
}

}  // namespace derainkit
