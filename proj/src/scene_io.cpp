#include "derainkit/scene_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

namespace fs = std::filesystem;

namespace derainkit {
namespace {

struct FileHandle {
    FILE* fp = nullptr;

    FileHandle(const fs::path& path, const char* mode) : fp(std::fopen(path.string().c_str(), mode)) {}
    ~FileHandle() {
        if (fp) std::fclose(fp);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

constexpr bool kLittleEndian = std::endian::native == std::endian::little;

uint16_t quantize(double v, int bit_depth) {
    const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
    double q = std::floor(v * maxv + 0.5);  // round half up
    if (q < 0.0) q = 0.0;
    if (q > maxv) q = maxv;
    return static_cast<uint16_t>(q);
}

}  // namespace

Image load_image(const fs::path& path) {
    FileHandle file(path, "rb");
    if (!file.fp) throw Error("cannot open image file: " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, file.fp) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw Error("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng: failed to create read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng: failed to create info struct");
    }

    std::vector<png_byte> raster;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("failed to decode PNG: " + path.string());
    }

    png_init_io(png, file.fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);

    const bool has_alpha =
        (color_type & PNG_COLOR_MASK_ALPHA) != 0 || png_get_valid(png, info, PNG_INFO_tRNS);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (has_alpha) {
        std::fprintf(stderr, "derainkit: warning: %s: alpha channel dropped\n",
                     path.string().c_str());
        png_set_strip_alpha(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (depth == 16 && kLittleEndian) png_set_swap(png);
    png_set_interlace_handling(png);

    png_read_update_info(png, info);

    const int out_depth = png_get_bit_depth(png, info);
    const int out_channels = png_get_channels(png, info);
    if (out_channels != 3 || (out_depth != 8 && out_depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("unsupported PNG layout in " + path.string() + " (channels=" +
                    std::to_string(out_channels) + ", depth=" + std::to_string(out_depth) + ")");
    }

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raster.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * rowbytes;

    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image out(static_cast<int>(height), static_cast<int>(width));
    const std::size_t n = out.value_count();
    if (out_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) out.data[i] = raster[i] / 255.0;
    } else {
        const auto* v16 = reinterpret_cast<const uint16_t*>(raster.data());
        for (std::size_t i = 0; i < n; ++i) out.data[i] = v16[i] / 65535.0;
    }
    return out;
}

void save_image(const Image& img, const fs::path& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw Error("save_image: bit depth must be 8 or 16, got " + std::to_string(bit_depth));
    if (img.empty()) throw Error("save_image: empty image");

    const std::size_t n = img.value_count();
    std::vector<png_byte> raster;
    if (bit_depth == 8) {
        raster.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            raster[i] = static_cast<png_byte>(quantize(img.data[i], 8));
    } else {
        raster.resize(n * 2);
        auto* v16 = reinterpret_cast<uint16_t*>(raster.data());
        for (std::size_t i = 0; i < n; ++i) v16[i] = quantize(img.data[i], 16);
    }

    FileHandle file(path, "wb");
    if (!file.fp) throw Error("cannot open file for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng: failed to create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng: failed to create info struct");
    }

    std::vector<png_bytep> rows(img.height);
    const std::size_t rowbytes = static_cast<std::size_t>(img.width) * 3 * (bit_depth / 8);
    for (int y = 0; y < img.height; ++y) rows[y] = raster.data() + y * rowbytes;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed to encode PNG: " + path.string());
    }

    png_init_io(png, file.fp);
    png_set_IHDR(png, info, img.width, img.height, bit_depth, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16 && kLittleEndian) png_set_swap(png);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

SceneStack load_scene(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("scene directory not found: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    if (files.empty()) throw Error("no PNG frames in scene directory: " + dir.string());

    SceneStack stack;
    stack.scene_id = dir.lexically_normal().filename().string();
    stack.frames.reserve(files.size());
    for (const auto& f : files) {
        Image frame = load_image(f);
        if (!stack.frames.empty() && !frame.same_size(stack.frames.front()))
            throw Error("frame dimension mismatch in " + dir.string() + ": " +
                        f.filename().string() + " is " + std::to_string(frame.height) + "x" +
                        std::to_string(frame.width) + ", expected " +
                        std::to_string(stack.frames.front().height) + "x" +
                        std::to_string(stack.frames.front().width));
        stack.frames.push_back(std::move(frame));
    }
    return stack;
}

std::vector<ReferencePair> load_reference_library(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("reference library directory not found: " + dir.string());

    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());

    std::vector<ReferencePair> library;
    library.reserve(subdirs.size());
    for (const auto& sub : subdirs) {
        const fs::path median_path = sub / "median.png";
        const fs::path clean_path = sub / "clean.png";
        if (!fs::is_regular_file(median_path) || !fs::is_regular_file(clean_path))
            throw Error("reference library entry " + sub.string() +
                        " must contain median.png and clean.png");
        ReferencePair pair;
        pair.scene_id = sub.filename().string();
        pair.median_image = load_image(median_path);
        pair.clean_image = load_image(clean_path);
        if (!pair.median_image.same_size(pair.clean_image))
            throw Error("reference library entry " + sub.string() +
                        ": median.png and clean.png dimensions differ");
        library.push_back(std::move(pair));
    }
    return library;
}

}  // namespace derainkit
