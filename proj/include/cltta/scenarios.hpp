#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cltta/matrix.hpp"

namespace cltta {

struct Dataset {
    Matrix features;          // N x d
    std::vector<int> labels;  // in [0, num_classes)
    std::size_t num_classes = 0;
    std::string generator;
    std::uint64_t seed = 0;
    int severity = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
};

void validate_dataset(const Dataset& data);

// Seeded Gaussian clusters: class means drawn uniformly on the unit sphere
// in R^d, isotropic per-coordinate spread. Train and test are disjoint draws
// from the same distribution.
std::pair<Dataset, Dataset> make_source(std::size_t num_classes, std::size_t dim,
                                        std::size_t n_per_class, double spread,
                                        std::uint64_t seed);

enum class CorruptionKind { GaussNoise, MeanShift, FeatureScale, RotationMix, MaskDropout, None };

struct Corruption {
    CorruptionKind kind = CorruptionKind::None;
    int severity = 0;  // 1..5 for real corruptions, 0 for None

    bool operator==(const Corruption&) const = default;
};

std::string corruption_name(CorruptionKind kind);
CorruptionKind corruption_from_name(const std::string& name);

// Label-preserving feature transform with magnitude monotone in severity.
// Deterministic per (data, corruption, seed). Kind None is the identity.
Dataset corrupt(const Dataset& data, const Corruption& corruption, std::uint64_t seed);

// The shipped benchmark order: the five kinds at severity 3, then the five
// kinds at severity 5. Stable across releases.
std::vector<Corruption> default_suite();

// A seeded permutation of default_suite().
std::vector<Corruption> shuffled_suite(std::uint64_t seed);

// Columnar text format: a small header (classes, dims, count, seed,
// generator, severity), then one "label f0 f1 ..." line per sample.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cltta
