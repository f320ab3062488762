#ifndef DUMB_SYNTHDATA_DATASET_HPP
#define DUMB_SYNTHDATA_DATASET_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "dumb/core/random.hpp"
#include "dumb/diffcore/tensor.hpp"

namespace dumb {

using Image = Tensor<float>;

struct LabeledImage {
    Image image;
    int label = 0;
};

/// Stable 64-bit content hash of an image (shape and exact float bits), as hex.
inline std::string content_hash(const Image& image) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t d : image.shape) mix(static_cast<std::uint32_t>(d));
    for (float v : image.data) mix(std::bit_cast<std::uint32_t>(v));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Round to the nearest multiple of 1/255 so images survive 8-bit PNG storage unchanged.
inline void quantize_8bit(Image& image) {
    for (float& v : image.data) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        v = static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
    }
}

/// Drop exact duplicates, keeping the first occurrence.
inline std::vector<LabeledImage> deduplicate(std::vector<LabeledImage> images) {
    std::unordered_set<std::string> seen;
    std::vector<LabeledImage> kept;
    kept.reserve(images.size());
    for (auto& item : images) {
        if (seen.insert(content_hash(item.image)).second) kept.push_back(std::move(item));
    }
    return kept;
}

struct Provenance {
    std::string task;
    std::string source;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<LabeledImage> train, validation, test;
    Provenance provenance;
};

inline std::array<std::size_t, 2> class_counts(std::span<const LabeledImage> images) {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto& item : images) ++counts.at(static_cast<std::size_t>(item.label));
    return counts;
}

/// Integer apportionment of `total` by `ratios` using the largest-remainder
/// method; ties go to the earlier ratio.
inline std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> ratios) {
    std::vector<std::size_t> counts(ratios.size());
    std::vector<double> remainders(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double exact = static_cast<double>(total) * ratios[i];
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainders[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(ratios.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < total && k < order.size(); ++k, ++assigned) ++counts[order[k]];
    return counts;
}

/// Per-class seeded partition into train/validation/test.
inline DatasetSplit split(const std::vector<LabeledImage>& images, std::array<double, 3> ratios, std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9 || std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
        throw Error("split-error", "ratios must be non-negative and sum to 1");
    }
    const auto nonzero = static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }));
    DatasetSplit out;
    for (int label = 0; label < 2; ++label) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < images.size(); ++i)
            if (images[i].label == label) members.push_back(i);
        if (members.size() < nonzero) {
            throw Error("split-error", "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                           " samples, fewer than the " + std::to_string(nonzero) + " non-empty splits");
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(members);
        const auto counts = largest_remainder(members.size(), ratios);
        for (std::size_t s = 0; s < 3; ++s) {
            if (ratios[s] > 0.0 && counts[s] == 0)
                throw Error("split-error", "class " + std::to_string(label) + " too small for ratios");
        }
        std::size_t pos = 0;
        for (std::size_t k = 0; k < counts[0]; ++k) out.train.push_back(images[members[pos++]]);
        for (std::size_t k = 0; k < counts[1]; ++k) out.validation.push_back(images[members[pos++]]);
        for (std::size_t k = 0; k < counts[2]; ++k) out.test.push_back(images[members[pos++]]);
    }
    return out;
}

struct BalanceLevel {
    std::string label;
    int minority_percent = 50;  // minority share of the training set

    double minority_fraction() const { return minority_percent / 100.0; }
    bool operator==(const BalanceLevel&) const = default;
};

inline const std::vector<BalanceLevel>& balance_levels() {
    static const std::vector<BalanceLevel> levels{{"balanced", 50}, {"weak", 40}, {"medium", 30}, {"strong", 20}};
    return levels;
}

inline const BalanceLevel& balance_level(const std::string& label) {
    for (const auto& level : balance_levels())
        if (level.label == label) return level;
    throw Error("config-error", "unknown balance level " + label);
}

/// Minority count for a fixed majority count: ceil(majority * p / (1 - p)),
/// computed in integers.
inline std::size_t minority_target(std::size_t majority, const BalanceLevel& level) {
    if (level.minority_percent <= 0 || level.minority_percent > 50) {
        throw Error("config-error", "minority fraction must lie in (0, 0.5]");
    }
    const auto p = static_cast<std::size_t>(level.minority_percent);
    return (majority * p + (100 - p) - 1) / (100 - p);
}

/// Undersample the minority class of a training set. The majority class and
/// the relative order of retained samples are untouched.
inline std::vector<LabeledImage> rebalance(const std::vector<LabeledImage>& train, const BalanceLevel& level,
                                           int minority_class, std::uint64_t seed) {
    if (minority_class != 0 && minority_class != 1) throw Error("config-error", "minority class must be 0 or 1");
    const auto counts = class_counts(train);
    const std::size_t majority = counts[static_cast<std::size_t>(1 - minority_class)];
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < train.size(); ++i)
        if (train[i].label == minority_class) minority.push_back(i);
    const std::size_t keep = std::min(minority.size(), minority_target(majority, level));
    Rng rng(seed);
    rng.shuffle(minority);
    std::vector<bool> retained(train.size(), true);
    for (std::size_t k = keep; k < minority.size(); ++k) retained[minority[k]] = false;
    std::vector<LabeledImage> out;
    out.reserve(majority + keep);
    for (std::size_t i = 0; i < train.size(); ++i)
        if (retained[i]) out.push_back(train[i]);
    return out;
}

} // namespace dumb

#endif
