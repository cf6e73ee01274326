#pragma once

#include "derainkit/image.hpp"

namespace derainkit {

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
};

/// Mean squared error over all pixels and channels on the [0,1] scale.
double mse(const Image& a, const Image& b);

/// 10*log10(1/MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
/// C2=0.03^2 on unit dynamic range, computed per channel over all window
/// positions fully inside the image, then averaged across positions and
/// channels. Requires min(H,W) >= 11.
double ssim(const Image& a, const Image& b);

MetricReport evaluate_scene(const Image& result, const Image& ground_truth);

/// Snaps every value to the 8-bit lattice (round-half-up, clamped), mimicking
/// metrics computed on saved 8-bit files.
Image quantize_to_8bit(const Image& img);

}  // namespace derainkit
