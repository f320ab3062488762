#ifndef DUMB_SYNTHDATA_GENERATE_HPP
#define DUMB_SYNTHDATA_GENERATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dumb/synthdata/dataset.hpp"

namespace dumb {

/// A binary image task. Tasks are ordered by intended difficulty.
struct TaskSpec {
    std::string id;  // easy | medium | hard
    std::array<std::string, 2> class_names;
    std::size_t image_size = 32;

    Shape image_shape() const { return {image_size, image_size, 3}; }
};

inline const std::vector<std::string>& task_ids() {
    static const std::vector<std::string> ids{"easy", "medium", "hard"};
    return ids;
}

inline TaskSpec make_task(const std::string& id, std::size_t image_size = 32) {
    if (image_size < 16) throw Error("config-error", "image_size must be at least 16");
    if (id == "easy") return {id, {"circles", "squares"}, image_size};
    if (id == "medium") return {id, {"blobs", "appendage-blobs"}, image_size};
    if (id == "hard") return {id, {"fine-texture", "coarse-texture"}, image_size};
    throw Error("config-error", "unknown task " + id);
}

enum class BackgroundFamily { Gradient, ValueNoise };

/// Rendering style of one image source. The two sources differ in every field.
struct SourceSpec {
    std::string id;  // A | B
    BackgroundFamily background = BackgroundFamily::Gradient;
    bool filled_shapes = true;       // false: outlines drawn with stroke_width
    double stroke_min = 1.5, stroke_max = 2.5;
    double color_jitter = 0.05;      // global brightness/contrast jitter amplitude
    double clutter_density = 2.0;    // mean count of distractor marks
    double background_lo = 0.55, background_hi = 0.95;  // per-channel background colour range
};

inline SourceSpec make_source(const std::string& id) {
    if (id == "A") return {"A", BackgroundFamily::Gradient, true, 1.5, 2.5, 0.05, 2.0, 0.55, 0.95};
    if (id == "B") return {"B", BackgroundFamily::ValueNoise, false, 2.0, 3.5, 0.15, 6.0, 0.05, 0.45};
    throw Error("config-error", "unknown source " + id);
}

namespace render {

using Color = std::array<float, 3>;

class Canvas {
public:
    explicit Canvas(std::size_t size) : size_(size), image_({size, size, 3}) {}

    std::size_t size() const { return size_; }
    Image& image() { return image_; }

    /// Alpha-blend `color` using a coverage function sampled on a 4x4 sub-grid.
    template <typename Coverage>
    void paint(const Color& color, float opacity, Coverage&& inside) {
        for (std::size_t y = 0; y < size_; ++y)
            for (std::size_t x = 0; x < size_; ++x) {
                int hits = 0;
                for (int sy = 0; sy < 4; ++sy)
                    for (int sx = 0; sx < 4; ++sx)
                        hits += inside(static_cast<double>(x) + (sx + 0.5) / 4.0,
                                       static_cast<double>(y) + (sy + 0.5) / 4.0)
                                    ? 1
                                    : 0;
                if (hits == 0) continue;
                const float a = opacity * static_cast<float>(hits) / 16.0f;
                float* px = &image_[(y * size_ + x) * 3];
                for (int c = 0; c < 3; ++c) px[c] = (1.0f - a) * px[c] + a * color[static_cast<std::size_t>(c)];
            }
    }

private:
    std::size_t size_;
    Image image_;
};

inline Color random_color(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
            static_cast<float>(rng.uniform(lo, hi))};
}

inline float luminance(const Color& c) { return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]; }

/// Foreground colour with a guaranteed luminance gap to the background.
inline Color contrasting_color(Rng& rng, float background_luma) {
    const bool dark = background_luma > 0.5f;
    for (int attempt = 0; attempt < 32; ++attempt) {
        Color c = dark ? random_color(rng, 0.0, 0.55) : random_color(rng, 0.45, 1.0);
        if (std::abs(luminance(c) - background_luma) > 0.25f) return c;
    }
    return dark ? Color{0.05f, 0.05f, 0.05f} : Color{0.95f, 0.95f, 0.95f};
}

inline void fill_background(Canvas& canvas, const SourceSpec& source, Rng& rng) {
    const std::size_t n = canvas.size();
    Image& img = canvas.image();
    const Color a = random_color(rng, source.background_lo, source.background_hi);
    const Color b = random_color(rng, source.background_lo, source.background_hi);
    if (source.background == BackgroundFamily::Gradient) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double dx = std::cos(angle), dy = std::sin(angle);
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const double u = ((static_cast<double>(x) / n - 0.5) * dx + (static_cast<double>(y) / n - 0.5) * dy) + 0.5;
                const float t = static_cast<float>(std::clamp(u, 0.0, 1.0));
                for (std::size_t c = 0; c < 3; ++c) img[(y * n + x) * 3 + c] = (1 - t) * a[c] + t * b[c];
            }
        return;
    }
    constexpr std::size_t grid = 5;
    std::array<float, grid * grid> lattice{};
    for (float& v : lattice) v = static_cast<float>(rng.uniform());
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double gx = static_cast<double>(x) / n * (grid - 1), gy = static_cast<double>(y) / n * (grid - 1);
            const auto x0 = static_cast<std::size_t>(gx), y0 = static_cast<std::size_t>(gy);
            const double fx = gx - x0, fy = gy - y0;
            const auto at = [&](std::size_t i, std::size_t j) { return lattice[std::min(j, grid - 1) * grid + std::min(i, grid - 1)]; };
            const double v = (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0)) +
                             fy * ((1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1));
            const float t = static_cast<float>(v);
            for (std::size_t c = 0; c < 3; ++c) img[(y * n + x) * 3 + c] = (1 - t) * a[c] + t * b[c];
        }
}

inline float mean_luma(const Image& img) {
    double s = 0.0;
    for (std::size_t i = 0; i < img.size(); i += 3) s += 0.299 * img[i] + 0.587 * img[i + 1] + 0.114 * img[i + 2];
    return static_cast<float>(s / (img.size() / 3));
}

/// Radial outline r(theta) of a smooth random blob.
struct Blob {
    double cx, cy, radius;
    std::array<double, 3> amp, phase;

    double boundary(double theta) const {
        double r = 1.0;
        for (std::size_t k = 0; k < 3; ++k) r += amp[k] * std::sin(static_cast<double>(k + 2) * theta + phase[k]);
        return radius * r;
    }
    double signed_distance_proxy(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        return std::hypot(dx, dy) - boundary(std::atan2(dy, dx));
    }
};

inline double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double vx = bx - ax, vy = by - ay;
    const double t = std::clamp(((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
    return std::hypot(px - ax - t * vx, py - ay - t * vy);
}

inline void draw_shape_task(Canvas& canvas, const std::string& task, int label, const SourceSpec& source, Rng& rng) {
    const double n = static_cast<double>(canvas.size());
    const Color fg = contrasting_color(rng, mean_luma(canvas.image()));
    const double stroke = rng.uniform(source.stroke_min, source.stroke_max) * n / 32.0;
    const bool filled = source.filled_shapes;

    if (task == "easy") {
        const double r = rng.uniform(0.22, 0.34) * n;
        const double cx = rng.uniform(r + 1, n - r - 1), cy = rng.uniform(r + 1, n - r - 1);
        if (label == 0) {
            canvas.paint(fg, 1.0f, [&](double x, double y) {
                const double d = std::hypot(x - cx, y - cy);
                return filled ? d <= r : std::abs(d - r) <= stroke / 2;
            });
        } else {
            const double angle = rng.uniform(-0.15, 0.15);
            const double ca = std::cos(angle), sa = std::sin(angle), half = r * 0.85;
            canvas.paint(fg, 1.0f, [&](double x, double y) {
                const double u = std::abs((x - cx) * ca + (y - cy) * sa), v = std::abs(-(x - cx) * sa + (y - cy) * ca);
                const double m = std::max(u, v);
                return filled ? m <= half : std::abs(m - half) <= stroke / 2;
            });
        }
        return;
    }

    // medium: smooth blob, optionally with a tail-like appendage
    Blob blob{0, 0, rng.uniform(0.16, 0.24) * n, {}, {}};
    for (std::size_t k = 0; k < 3; ++k) {
        blob.amp[k] = rng.uniform(0.0, 0.12);
        blob.phase[k] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
    blob.cx = rng.uniform(0.35, 0.65) * n;
    blob.cy = rng.uniform(0.35, 0.65) * n;
    const double theta = rng.uniform(0.0, 2 * std::numbers::pi);
    const double base = blob.boundary(theta);
    const double length = rng.uniform(0.28, 0.4) * n;
    const double ax = blob.cx + 0.6 * base * std::cos(theta), ay = blob.cy + 0.6 * base * std::sin(theta);
    const double bx = blob.cx + (base + length) * std::cos(theta), by = blob.cy + (base + length) * std::sin(theta);
    const double width = std::max(stroke, 0.1 * n);
    canvas.paint(fg, 1.0f, [&](double x, double y) {
        const double d = blob.signed_distance_proxy(x, y);
        bool in = filled ? d <= 0 : std::abs(d) <= stroke / 2;
        if (label == 1) in = in || segment_distance(x, y, ax, ay, bx, by) <= width / 2;
        return in;
    });
}

/// Oriented grating whose spatial frequency range depends on the class; the
/// two ranges overlap.
inline void draw_texture_task(Canvas& canvas, int label, const SourceSpec& source, Rng& rng) {
    const double n = static_cast<double>(canvas.size());
    const double freq = (label == 0 ? rng.uniform(0.19, 0.30) : rng.uniform(0.09, 0.2)) * 32.0 / n;
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const Color fg = contrasting_color(rng, mean_luma(canvas.image()));
    const float opacity = static_cast<float>(rng.uniform(0.5, 0.85));
    const double duty = source.filled_shapes ? 0.0 : 0.3;
    canvas.paint(fg, opacity, [&](double x, double y) {
        return std::sin(2 * std::numbers::pi * freq * (x * ca + y * sa) + phase) > duty;
    });
}

inline void draw_clutter(Canvas& canvas, const SourceSpec& source, Rng& rng) {
    const double n = static_cast<double>(canvas.size());
    // Poisson draw by inversion
    const double limit = std::exp(-source.clutter_density);
    int count = 0;
    for (double p = rng.uniform(); p > limit; p *= rng.uniform()) ++count;
    for (int i = 0; i < count; ++i) {
        const Color c = random_color(rng);
        const double x0 = rng.uniform(0, n), y0 = rng.uniform(0, n);
        if (rng.bernoulli(0.5)) {
            const double r = rng.uniform(0.5, 1.5) * n / 32.0;
            canvas.paint(c, 0.8f, [&](double x, double y) { return std::hypot(x - x0, y - y0) <= r; });
        } else {
            const double len = rng.uniform(2.0, 5.0) * n / 32.0, a = rng.uniform(0, std::numbers::pi);
            const double x1 = x0 + len * std::cos(a), y1 = y0 + len * std::sin(a);
            canvas.paint(c, 0.8f, [&](double x, double y) { return segment_distance(x, y, x0, y0, x1, y1) <= 0.5; });
        }
    }
}

inline void jitter_and_noise(Image& img, const SourceSpec& source, Rng& rng) {
    const float brightness = static_cast<float>(rng.uniform(-source.color_jitter, source.color_jitter));
    const float contrast = 1.0f + static_cast<float>(rng.uniform(-source.color_jitter, source.color_jitter));
    for (float& v : img.data) {
        v = (v - 0.5f) * contrast + 0.5f + brightness + static_cast<float>(rng.normal(0.0, 0.02));
    }
}

} // namespace render

/// Render one image of `label` for (task, source) from its own seed.
inline Image render_image(const TaskSpec& task, const SourceSpec& source, int label, std::uint64_t seed) {
    Rng rng(seed);
    render::Canvas canvas(task.image_size);
    render::fill_background(canvas, source, rng);
    if (task.id == "hard") {
        render::draw_texture_task(canvas, label, source, rng);
    } else {
        render::draw_shape_task(canvas, task.id, label, source, rng);
    }
    render::draw_clutter(canvas, source, rng);
    Image img = std::move(canvas.image());
    render::jitter_and_noise(img, source, rng);
    quantize_8bit(img);
    return img;
}

/// Deterministic labelled dataset: per_class_count images of each class.
/// Every image draws from its own derived seed, so the result does not depend
/// on evaluation order.
inline std::vector<LabeledImage> generate_dataset(const TaskSpec& task, const SourceSpec& source, std::uint64_t seed,
                                                  std::size_t per_class_count) {
    if (per_class_count < 50) throw Error("config-error", "per_class_count must be at least 50");
    const std::uint64_t base = derive_seed(seed, task.id + "/" + source.id);
    std::vector<LabeledImage> out;
    out.reserve(2 * per_class_count);
    for (int label = 0; label < 2; ++label)
        for (std::size_t i = 0; i < per_class_count; ++i) {
            const std::uint64_t index = static_cast<std::uint64_t>(label) * per_class_count + i;
            out.push_back({render_image(task, source, label, derive_seed(base, index)), label});
        }
    return out;
}

} // namespace dumb

#endif
