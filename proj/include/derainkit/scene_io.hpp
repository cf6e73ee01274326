#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "derainkit/image.hpp"

namespace derainkit {

/// Ordered frames of one scene, all the same size.
struct SceneStack {
    std::string scene_id;
    std::vector<Image> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// One entry of the patch-match reference library: the temporal median of a
/// scene paired with its clean ground truth.
struct ReferencePair {
    std::string scene_id;
    Image median_image;
    Image clean_image;
};

/// Decodes a PNG (8- or 16-bit per channel) into [0,1] doubles.
/// Grayscale is replicated to three channels; an alpha channel is dropped
/// with a warning on stderr.
Image load_image(const std::filesystem::path& path);

/// Writes an RGB PNG at the given bit depth (8 or 16). Values are quantized
/// by round-half-up of v*(2^d-1) and clamped to the representable range.
void save_image(const Image& img, const std::filesystem::path& path, int bit_depth = 16);

/// Loads every *.png in `dir` as one stack, frames ordered by lexicographic
/// filename. Throws on an empty directory or mismatched frame dimensions.
SceneStack load_scene(const std::filesystem::path& dir);

/// Loads `<dir>/<scene_id>/median.png` + `clean.png` pairs, one per
/// subdirectory, sorted by scene id. An empty directory yields an empty list.
std::vector<ReferencePair> load_reference_library(const std::filesystem::path& dir);

}  // namespace derainkit
