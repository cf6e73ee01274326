#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace derainkit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PixelPos {
    int y = 0;
    int x = 0;

    bool operator==(const PixelPos&) const = default;
};

/// RGB raster, row-major and channel-interleaved, stored as doubles.
/// Values loaded from files live in [0,1]; intermediate stage math may
/// leave that range and is only quantized when an image is written out.
struct Image {
    static constexpr int kChannels = 3;

    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;

    Image(int h, int w, double fill = 0.0) {
        if (h < 1 || w < 1)
            throw Error("image dimensions must be positive, got " + std::to_string(h) + "x" +
                        std::to_string(w));
        height = h;
        width = w;
        data.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * kChannels, fill);
    }

    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * kChannels + c;
    }

    double& at(int y, int x, int c) { return data[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data[index(y, x, c)]; }

    std::size_t value_count() const { return data.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    bool same_size(const Image& other) const {
        return height == other.height && width == other.width;
    }

    bool empty() const { return data.empty(); }
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline void require_same_size(const Image& a, const Image& b, const char* what) {
    if (!a.same_size(b))
        throw Error(std::string(what) + ": dimension mismatch, " + std::to_string(a.height) + "x" +
                    std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                    std::to_string(b.width));
}

}  // namespace derainkit
