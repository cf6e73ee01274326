#include "derainkit/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "derainkit/temporal.hpp"

namespace fs = std::filesystem;

namespace derainkit {
namespace {

// Clean-background band; keeps gain*clean+offset inside [0,1] for gains in
// roughly [0.7, 1.3] and offsets in [-0.1, 0.1].
constexpr double kCleanLow = 0.15;
constexpr double kCleanHigh = 0.65;
constexpr int kStreakRetryCap = 200;
constexpr double kPi = 3.14159265358979323846;

// Smooth random field: one bilinear sheet spanned by four random corner
// values per channel. Separately linear in x and y, so any symmetric patch
// mean reproduces the patch center exactly; brightness estimates on these
// backgrounds carry no smoothing bias.
Image random_gradient(int height, int width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(kCleanLow, kCleanHigh);
    double corners[2][2][3];
    for (int cy = 0; cy < 2; ++cy)
        for (int cx = 0; cx < 2; ++cx)
            for (int c = 0; c < 3; ++c) corners[cy][cx][c] = dist(rng);

    Image out(height, width);
    for (int y = 0; y < height; ++y) {
        const double ty = height == 1 ? 0.0 : static_cast<double>(y) / (height - 1);
        for (int x = 0; x < width; ++x) {
            const double tx = width == 1 ? 0.0 : static_cast<double>(x) / (width - 1);
            for (int c = 0; c < 3; ++c) {
                const double top = corners[0][0][c] * (1.0 - tx) + corners[0][1][c] * tx;
                const double bot = corners[1][0][c] * (1.0 - tx) + corners[1][1][c] * tx;
                out.at(y, x, c) = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    return out;
}

std::vector<std::size_t> draw_streak_pixels(int height, int width, int length,
                                            std::mt19937_64& rng) {
    std::uniform_int_distribution<int> ydist(0, height - 1);
    std::uniform_int_distribution<int> xdist(0, width - 1);
    // 70..110 degrees from horizontal: near-vertical fall direction
    std::uniform_real_distribution<double> adist(70.0 * kPi / 180.0, 110.0 * kPi / 180.0);
    const int y0 = ydist(rng);
    const int x0 = xdist(rng);
    const double angle = adist(rng);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);

    std::vector<std::size_t> pixels;
    pixels.reserve(length);
    for (int s = 0; s < length; ++s) {
        const int y = y0 + static_cast<int>(std::lround(s * dy));
        const int x = x0 + static_cast<int>(std::lround(s * dx));
        if (y < 0 || y >= height || x < 0 || x >= width) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * width + x;
        if (pixels.empty() || pixels.back() != idx) pixels.push_back(idx);
    }
    return pixels;
}

}  // namespace

void RainSceneSpec::validate() const {
    if (height < 1 || width < 1) throw Error("synth: dimensions must be positive");
    if (frame_count < 1) throw Error("synth: frame count must be >= 1");
    if (!(rain_density >= 0.0 && rain_density < 0.5))
        throw Error("synth: rain density must lie in [0, 0.5), got " +
                    std::to_string(rain_density));
    if (streak_length < 1) throw Error("synth: streak length must be >= 1");
    if (rain_density > 0.0 && !(streak_intensity > 0.0 && streak_intensity <= 1.0))
        throw Error("synth: streak intensity must lie in (0, 1]");
    for (int c = 0; c < 3; ++c)
        if (!std::isfinite(brightness_gain[c]) || !std::isfinite(brightness_offset[c]))
            throw Error("synth: non-finite brightness coefficients");
}

GeneratedScene generate_scene(const RainSceneSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    GeneratedScene scene;
    scene.clean = random_gradient(spec.height, spec.width, rng);
    scene.degraded_background = Image(spec.height, spec.width);
    for (std::size_t i = 0; i < scene.clean.value_count(); ++i) {
        const int c = static_cast<int>(i % 3);
        scene.degraded_background.data[i] =
            spec.brightness_gain[c] * scene.clean.data[i] + spec.brightness_offset[c];
    }

    const int t_count = spec.frame_count;
    const std::size_t pixels = scene.clean.pixel_count();
    // Hard cap per pixel: struck in strictly fewer than ceil(T/2) frames.
    const int max_strikes = (t_count + 1) / 2 - 1;
    const int streaks_per_frame =
        spec.rain_density <= 0.0
            ? 0
            : std::max(1, static_cast<int>(std::lround(spec.rain_density * pixels /
                                                       spec.streak_length)));
    scene.strike_counts.assign(pixels, 0);
    scene.rainy.frames.reserve(t_count);

    std::vector<char> covered(pixels, 0);
    for (int t = 0; t < t_count; ++t) {
        Image frame = scene.degraded_background;
        std::fill(covered.begin(), covered.end(), 0);
        for (int s = 0; s < streaks_per_frame; ++s) {
            bool placed = false;
            for (int attempt = 0; attempt < kStreakRetryCap && !placed; ++attempt) {
                const auto streak = draw_streak_pixels(spec.height, spec.width,
                                                       spec.streak_length, rng);
                bool feasible = !streak.empty();
                for (const std::size_t p : streak)
                    if (!covered[p] && scene.strike_counts[p] >= max_strikes) {
                        feasible = false;
                        break;
                    }
                if (!feasible) continue;
                for (const std::size_t p : streak) {
                    if (!covered[p]) {
                        covered[p] = 1;
                        ++scene.strike_counts[p];
                    }
                    for (int c = 0; c < 3; ++c)
                        frame.data[p * 3 + c] =
                            clamp01(frame.data[p * 3 + c] + spec.streak_intensity);
                }
                placed = true;
            }
            if (!placed)
                throw Error("synth: rain density " + std::to_string(spec.rain_density) +
                            " infeasible for " + std::to_string(t_count) +
                            " frames (per-pixel strike cap exhausted)");
        }
        for (double& v : frame.data) v = clamp01(v);
        scene.rainy.frames.push_back(std::move(frame));
    }
    return scene;
}

void generate_reference_library(const std::vector<RainSceneSpec>& specs, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const GeneratedScene scene = generate_scene(specs[i]);
        const fs::path sub = dir / synth_scene_id(i);
        fs::create_directories(sub);
        save_image(temporal_median(scene.rainy), sub / "median.png", 16);
        save_image(scene.clean, sub / "clean.png", 16);
    }
}

SceneStack synthesize_restored_frames(const GeneratedScene& scene, double blend,
                                      double noise_sigma, std::uint64_t seed) {
    if (!(blend >= 0.0 && blend <= 1.0))
        throw Error("synthesize_restored_frames: blend must lie in [0,1]");
    if (noise_sigma < 0.0) throw Error("synthesize_restored_frames: negative noise sigma");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    SceneStack restored;
    restored.scene_id = scene.rainy.scene_id;
    restored.frames.reserve(scene.rainy.frames.size());
    for (std::size_t t = 0; t < scene.rainy.frames.size(); ++t) {
        Image frame(scene.clean.height, scene.clean.width);
        for (std::size_t i = 0; i < frame.value_count(); ++i) {
            const double v = (1.0 - blend) * scene.degraded_background.data[i] +
                             blend * scene.clean.data[i];
            frame.data[i] = clamp01(noise_sigma > 0.0 ? v + noise(rng) : v);
        }
        restored.frames.push_back(std::move(frame));
    }
    return restored;
}

std::string synth_scene_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%03zu", index);
    return buf;
}

}  // namespace derainkit
