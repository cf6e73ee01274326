#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "derainkit/brightness.hpp"
#include "derainkit/ensemble.hpp"
#include "derainkit/metrics.hpp"
#include "derainkit/pipeline.hpp"
#include "derainkit/synth.hpp"
#include "derainkit/temporal.hpp"

namespace py = pybind11;
using namespace derainkit;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw Error("expected an array of shape (H, W, 3)");
    Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + img.value_count(), img.data.begin());
    return img;
}

py::array_t<double> array_from_image(const Image& img) {
    py::array_t<double> arr({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

SceneStack stack_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 4 || arr.shape(3) != 3)
        throw Error("expected an array of shape (T, H, W, 3)");
    SceneStack stack;
    const int t_count = static_cast<int>(arr.shape(0));
    const std::size_t frame_values = arr.size() / t_count;
    for (int t = 0; t < t_count; ++t) {
        Image frame(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(2)));
        const double* base = arr.data() + t * frame_values;
        std::copy(base, base + frame_values, frame.data.begin());
        stack.frames.push_back(std::move(frame));
    }
    return stack;
}

py::array_t<double> array_from_stack(const SceneStack& stack) {
    const Image& first = stack.frames.front();
    py::array_t<double> arr({stack.frame_count(), first.height, first.width, 3});
    double* out = arr.mutable_data();
    for (const Image& frame : stack.frames)
        out = std::copy(frame.data.begin(), frame.data.end(), out);
    return arr;
}

std::vector<ReferencePair> library_from_pairs(
    const std::vector<std::pair<py::array_t<double, py::array::c_style | py::array::forcecast>,
                                py::array_t<double, py::array::c_style | py::array::forcecast>>>&
        pairs) {
    std::vector<ReferencePair> library;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ReferencePair pair;
        pair.scene_id = std::to_string(i);
        pair.median_image = image_from_array(pairs[i].first);
        pair.clean_image = image_from_array(pairs[i].second);
        library.push_back(std::move(pair));
    }
    return library;
}

using ArrayD = py::array_t<double, py::array::c_style | py::array::forcecast>;
using PairList = std::vector<std::pair<ArrayD, ArrayD>>;

PatchMatchConfig make_cfg(int patch_size, int top_m, int stride) {
    PatchMatchConfig cfg;
    cfg.patch_size = patch_size;
    cfg.top_m = top_m;
    cfg.search_stride = stride;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-frame deraining core: temporal reductions, ensembling, brightness "
              "correction, metrics and synthetic scenes";

    py::register_exception<Error>(m, "DerainError");

    m.def(
        "temporal_median",
        [](const ArrayD& stack) { return array_from_image(temporal_median(stack_from_array(stack))); },
        py::arg("stack"), "Per-pixel median over a (T, H, W, 3) stack");
    m.def(
        "temporal_mean",
        [](const ArrayD& stack) { return array_from_image(temporal_mean(stack_from_array(stack))); },
        py::arg("stack"), "Per-pixel mean over a (T, H, W, 3) stack");
    m.def(
        "weighted_average",
        [](const ArrayD& mean_img, const ArrayD& median_img, double w) {
            return array_from_image(
                weighted_average(image_from_array(mean_img), image_from_array(median_img), w));
        },
        py::arg("mean_img"), py::arg("median_img"), py::arg("w") = kDefaultEnsembleWeight);

    m.def(
        "psnr", [](const ArrayD& a, const ArrayD& b) { return psnr(image_from_array(a), image_from_array(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "ssim", [](const ArrayD& a, const ArrayD& b) { return ssim(image_from_array(a), image_from_array(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "evaluate",
        [](const ArrayD& result, const ArrayD& clean) {
            const MetricReport r = evaluate_scene(image_from_array(result), image_from_array(clean));
            return py::dict(py::arg("psnr") = r.psnr, py::arg("ssim") = r.ssim,
                            py::arg("mse") = r.mse);
        },
        py::arg("result"), py::arg("ground_truth"));

    m.def(
        "estimate_pixel",
        [](const ArrayD& query, std::pair<int, int> pos, const PairList& library, int patch_size,
           int top_m, int stride) {
            return estimate_pixel(image_from_array(query), {pos.first, pos.second},
                                  library_from_pairs(library), make_cfg(patch_size, top_m, stride));
        },
        py::arg("query"), py::arg("pos"), py::arg("library"), py::arg("patch_size") = 9,
        py::arg("top_m") = 1, py::arg("stride") = 1,
        "Patch-match estimate of the clean value at (y, x); library is a list of "
        "(median, clean) array pairs");
    m.def(
        "fit_affine",
        [](const ArrayD& observed, const ArrayD& estimated) {
            if (observed.ndim() != 2 || observed.shape(1) != 3 || estimated.ndim() != 2 ||
                estimated.shape(1) != 3 || observed.shape(0) != estimated.shape(0))
                throw Error("fit_affine expects two (K, 3) arrays");
            PixelSampleSet set;
            const int k = static_cast<int>(observed.shape(0));
            for (int j = 0; j < k; ++j) {
                set.positions.push_back({0, j});
                set.observed.push_back(
                    {observed.at(j, 0), observed.at(j, 1), observed.at(j, 2)});
                set.estimated.push_back(
                    {estimated.at(j, 0), estimated.at(j, 1), estimated.at(j, 2)});
            }
            const ChannelAffine coeffs = fit_affine(set);
            return py::make_tuple(coeffs.gain, coeffs.offset);
        },
        py::arg("observed"), py::arg("estimated"),
        "Closed-form per-channel least squares; returns (gain, offset) triples");
    m.def(
        "apply_affine",
        [](const ArrayD& img, std::array<double, 3> gain, std::array<double, 3> offset) {
            ChannelAffine coeffs;
            coeffs.gain = gain;
            coeffs.offset = offset;
            return array_from_image(apply_affine(image_from_array(img), coeffs));
        },
        py::arg("img"), py::arg("gain"), py::arg("offset"));
    m.def(
        "fit_affine_plus",
        [](const ArrayD& observed_img, int n_sets, int k, std::uint64_t seed,
           const PairList& library, int patch_size, int top_m, int stride,
           const std::optional<ArrayD>& match_query) {
            Image query;
            const Image obs = image_from_array(observed_img);
            const Image* query_ptr = nullptr;
            if (match_query) {
                query = image_from_array(*match_query);
                query_ptr = &query;
            }
            const FitPlusResult r =
                fit_affine_plus(obs, n_sets, k, seed, library_from_pairs(library),
                                make_cfg(patch_size, top_m, stride), query_ptr);
            return py::make_tuple(r.coeffs.gain, r.coeffs.offset, r.sets_used, r.sets_skipped);
        },
        py::arg("observed_img"), py::arg("n_sets") = 10, py::arg("k") = 10, py::arg("seed") = 0,
        py::arg("library"), py::arg("patch_size") = 9, py::arg("top_m") = 1, py::arg("stride") = 1,
        py::arg("match_query") = py::none());

    m.def(
        "load_image", [](const std::filesystem::path& p) { return array_from_image(load_image(p)); },
        py::arg("path"));
    m.def(
        "save_image",
        [](const ArrayD& img, const std::filesystem::path& p, int bit_depth) {
            save_image(image_from_array(img), p, bit_depth);
        },
        py::arg("img"), py::arg("path"), py::arg("bit_depth") = 16);

    m.def(
        "generate_scene",
        [](int height, int width, int frames, double density, int streak_length,
           double streak_intensity, std::array<double, 3> gain, std::array<double, 3> offset,
           std::uint64_t seed) {
            RainSceneSpec spec;
            spec.height = height;
            spec.width = width;
            spec.frame_count = frames;
            spec.rain_density = density;
            spec.streak_length = streak_length;
            spec.streak_intensity = streak_intensity;
            spec.brightness_gain = gain;
            spec.brightness_offset = offset;
            spec.seed = seed;
            const GeneratedScene scene = generate_scene(spec);
            return py::make_tuple(array_from_stack(scene.rainy), array_from_image(scene.clean),
                                  array_from_image(scene.degraded_background));
        },
        py::arg("height") = 64, py::arg("width") = 64, py::arg("frames") = 31,
        py::arg("density") = 0.05, py::arg("streak_length") = 7,
        py::arg("streak_intensity") = 0.25,
        py::arg("gain") = std::array<double, 3>{1.0, 1.0, 1.0},
        py::arg("offset") = std::array<double, 3>{0.0, 0.0, 0.0}, py::arg("seed") = 1,
        "Synthesize a rainy scene; returns (rainy_stack, clean, degraded_background)");
}
