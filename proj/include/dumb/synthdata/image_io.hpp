#ifndef DUMB_SYNTHDATA_IMAGE_IO_HPP
#define DUMB_SYNTHDATA_IMAGE_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "dumb/synthdata/dataset.hpp"
#include "dumb/synthdata/generate.hpp"

namespace dumb {

namespace png_detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace png_detail

/// Write an H x W x 3 image in [0,1] as 8-bit RGB PNG.
inline void write_png(const std::string& path, const Image& image) {
    if (image.rank() != 3 || image.dim(2) != 3) throw Error("shape-error", "write_png expects H x W x 3");
    png_detail::FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error("io-error", "cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("io-error", "libpng init failed");
    }
    const auto h = static_cast<png_uint_32>(image.dim(0)), w = static_cast<png_uint_32>(image.dim(1));
    std::vector<png_byte> bytes(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        bytes[i] = static_cast<png_byte>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("io-error", "failed writing " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Decode any PNG to H x W x 3 in [0,1]. Grayscale is replicated, alpha dropped,
/// 16-bit samples reduced to 8 bits.
inline Image read_png(const std::string& path) {
    png_detail::FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error("ingest-error", "cannot open " + path);
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw Error("ingest-error", "not a PNG file: " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("ingest-error", "libpng init failed for " + path);
    }
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("ingest-error", "corrupt PNG: " + path);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    bytes.resize(row_bytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image image({h, w, 3});
    for (png_uint_32 y = 0; y < h; ++y)
        for (png_uint_32 x = 0; x < w * 3; ++x)
            image[static_cast<std::size_t>(y) * w * 3 + x] = static_cast<float>(rows[y][x]) / 255.0f;
    return image;
}

/// Area-averaging resample (antialiased when shrinking; bilinear-like when
/// enlarging since each output pixel covers a fraction of one input pixel).
inline Image resize_area(const Image& in, std::size_t out_h, std::size_t out_w) {
    const std::size_t in_h = in.dim(0), in_w = in.dim(1), ch = in.dim(2);
    Image out({out_h, out_w, ch});
    const double sy = static_cast<double>(in_h) / out_h, sx = static_cast<double>(in_w) / out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double y0 = oy * sy, y1 = (oy + 1) * sy;
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double x0 = ox * sx, x1 = (ox + 1) * sx;
            std::vector<double> acc(ch, 0.0);
            double total = 0.0;
            for (auto iy = static_cast<std::size_t>(y0); iy < in_h && static_cast<double>(iy) < y1; ++iy) {
                const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                for (auto ix = static_cast<std::size_t>(x0); ix < in_w && static_cast<double>(ix) < x1; ++ix) {
                    const double wgt = wy * (std::min<double>(ix + 1, x1) - std::max<double>(ix, x0));
                    if (wgt <= 0) continue;
                    total += wgt;
                    for (std::size_t c = 0; c < ch; ++c) acc[c] += wgt * in[(iy * in_w + ix) * ch + c];
                }
            }
            for (std::size_t c = 0; c < ch; ++c) out[(oy * out_w + ox) * ch + c] = static_cast<float>(acc[c] / total);
        }
    }
    return out;
}

/// Load `<path>/<class name>/*.png` for both classes of the task, resized to
/// the task's image size. Files are visited in sorted order.
inline std::vector<LabeledImage> ingest_folder(const std::filesystem::path& path,
                                               const std::array<std::string, 2>& class_subdirs, std::size_t image_size) {
    namespace fs = std::filesystem;
    std::vector<LabeledImage> out;
    for (int label = 0; label < 2; ++label) {
        const fs::path dir = path / class_subdirs[static_cast<std::size_t>(label)];
        std::vector<fs::path> files;
        if (fs::is_directory(dir)) {
            for (const auto& entry : fs::directory_iterator(dir))
                if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw Error("empty-class", "no images under " + dir.string());
        for (const auto& file : files) {
            Image img = resize_area(read_png(file.string()), image_size, image_size);
            quantize_8bit(img);
            out.push_back({std::move(img), label});
        }
    }
    return out;
}

} // namespace dumb

#endif
