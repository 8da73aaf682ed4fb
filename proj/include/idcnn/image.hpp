#pragma once

#include <string>
#include <vector>

#include "idcnn/errors.hpp"
#include "idcnn/tensor.hpp"

namespace idcnn {

// Single-channel intensity grid, row-major, canonical domain [0, 1].
// Speckled observations are also carried in this container and may exceed 1;
// the raw float format exists so that they survive a disk round trip intact.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t size() const { return data.size(); }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

// Loads an 8- or 16-bit grayscale PNG or binary PGM (P5), normalized to
// [0, 1] by the format's max value. Color PNGs are converted by the
// unweighted channel mean.
Image load_image(const std::string& path);

// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and stored as
// round(v * 255).
void save_image(const Image& img, const std::string& path);

// Raw float raster: magic "SPKL1", u32 width, u32 height, then
// width*height little-endian 32-bit floats.
Image load_raw(const std::string& path);
void save_raw(const Image& img, const std::string& path);

// Dispatches on the ".spkl" extension (raw floats) vs image formats.
Image load_any(const std::string& path);
void save_any(const Image& img, const std::string& path);

Image resize_bilinear(const Image& img, int out_w, int out_h);

Image crop(const Image& img, int x0, int y0, int w, int h);

// Stacks same-sized images into an N x 1 x H x W batch.
Tensor4f to_batch(const std::vector<Image>& images);
Image from_batch(const Tensor4f& t, int index);

float clampf(float v, float lo, float hi);

}  // namespace idcnn
