#include "cltta/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cltta/numerics.hpp"

namespace cltta {

namespace {

// Corruption magnitude constants, calibrated once so that every kind at
// severity 5 costs the default source model at least 5 accuracy points.
constexpr double kGaussNoiseScale = 0.1;      // noise sd = scale*severity*feature sd
constexpr double kMeanShiftScale = 0.55;       // shift length = scale*severity
constexpr double kFeatureScaleLogRange = 0.5; // log factors uniform in +-range*severity
constexpr double kRotationAngle = 2.1;       // radians, per rotated plane
constexpr std::size_t kRotationPlanes = 3;
constexpr double kMaskFraction = 0.11;        // zeroed coords = fraction*severity*d

// Severity scales magnitude only; the random draw depends on (seed, kind) so
// the same transform direction grows with severity.
int corruption_salt(const Corruption& c) {
    return static_cast<int>(c.kind);
}

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm_sq += x * x;
    }
    if (norm_sq < 1e-24) {
        v.assign(dim, 0.0);
        v[0] = 1.0;
        return v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
}

std::vector<double> per_feature_sd(const Matrix& features) {
    const std::size_t n = features.rows();
    std::vector<double> mean(features.cols(), 0.0), sd(features.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < features.cols(); ++j) mean[j] += features(i, j);
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < features.cols(); ++j) {
            const double d = features(i, j) - mean[j];
            sd[j] += d * d;
        }
    }
    for (double& v : sd) v = std::sqrt(v / static_cast<double>(n));
    return sd;
}

// Orthonormal basis vectors spanning the rotation planes, via Gram-Schmidt
// over seeded Gaussian draws.
std::vector<std::vector<double>> orthonormal_vectors(Rng& rng, std::size_t dim, std::size_t count) {
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.normal();
        for (const auto& u : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) dot += u[j] * v[j];
            for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * u[j];
        }
        double norm_sq = 0.0;
        for (double x : v) norm_sq += x * x;
        if (norm_sq < 1e-12) continue;
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace

void validate_dataset(const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("Dataset: empty");
    if (data.features.rows() != data.labels.size()) {
        throw std::invalid_argument("Dataset: feature/label count mismatch");
    }
    if (!data.features.all_finite()) throw std::invalid_argument("Dataset: non-finite features");
    for (int y : data.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= data.num_classes) {
            throw std::invalid_argument("Dataset: label out of range");
        }
    }
}

std::pair<Dataset, Dataset> make_source(std::size_t num_classes, std::size_t dim,
                                        std::size_t n_per_class, double spread,
                                        std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("make_source: need at least 2 classes");
    if (dim < 2) throw std::invalid_argument("make_source: need dim >= 2");
    if (n_per_class == 0) throw std::invalid_argument("make_source: need samples per class");
    if (spread < 0.0) throw std::invalid_argument("make_source: spread must be >= 0");

    Rng means_rng(Rng::mix(seed, 1));
    std::vector<std::vector<double>> means;
    means.reserve(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) means.push_back(random_unit_vector(means_rng, dim));

    auto draw = [&](std::uint64_t salt) {
        Rng rng(Rng::mix(seed, salt));
        Dataset data;
        data.num_classes = num_classes;
        data.generator = "blobs";
        data.seed = seed;
        data.features = Matrix(num_classes * n_per_class, dim);
        data.labels.resize(num_classes * n_per_class);
        std::size_t row = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            for (std::size_t k = 0; k < n_per_class; ++k, ++row) {
                data.labels[row] = static_cast<int>(c);
                for (std::size_t j = 0; j < dim; ++j) {
                    data.features(row, j) = means[c][j] + spread * rng.normal();
                }
            }
        }
        return data;
    };

    return {draw(2), draw(3)};
}

std::string corruption_name(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::GaussNoise: return "gauss_noise";
        case CorruptionKind::MeanShift: return "mean_shift";
        case CorruptionKind::FeatureScale: return "feature_scale";
        case CorruptionKind::RotationMix: return "rotation_mix";
        case CorruptionKind::MaskDropout: return "mask_dropout";
        case CorruptionKind::None: return "none";
    }
    throw std::invalid_argument("corruption_name: unknown kind");
}

CorruptionKind corruption_from_name(const std::string& name) {
    if (name == "gauss_noise") return CorruptionKind::GaussNoise;
    if (name == "mean_shift") return CorruptionKind::MeanShift;
    if (name == "feature_scale") return CorruptionKind::FeatureScale;
    if (name == "rotation_mix") return CorruptionKind::RotationMix;
    if (name == "mask_dropout") return CorruptionKind::MaskDropout;
    if (name == "none") return CorruptionKind::None;
    throw std::invalid_argument("unknown corruption kind: " + name);
}

Dataset corrupt(const Dataset& data, const Corruption& corruption, std::uint64_t seed) {
    validate_dataset(data);
    Dataset out = data;
    out.generator = data.generator + "+" + corruption_name(corruption.kind);
    out.severity = corruption.severity;

    if (corruption.kind == CorruptionKind::None) {
        out.severity = 0;
        return out;
    }
    if (corruption.severity < 1 || corruption.severity > 5) {
        throw std::invalid_argument("corrupt: severity must be in 1..5");
    }

    const double severity = static_cast<double>(corruption.severity);
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(corruption_salt(corruption))));

    switch (corruption.kind) {
        case CorruptionKind::GaussNoise: {
            const std::vector<double> sd = per_feature_sd(data.features);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    out.features(i, j) += kGaussNoiseScale * severity * sd[j] * rng.normal();
                }
            }
            break;
        }
        case CorruptionKind::MeanShift: {
            const std::vector<double> dir = random_unit_vector(rng, d);
            const double length = kMeanShiftScale * severity;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < d; ++j) out.features(i, j) += length * dir[j];
            }
            break;
        }
        case CorruptionKind::FeatureScale: {
            const double range = kFeatureScaleLogRange * severity;
            std::vector<double> factor(d);
            for (double& f : factor) f = std::exp(rng.uniform(-range, range));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < d; ++j) out.features(i, j) *= factor[j];
            }
            break;
        }
        case CorruptionKind::RotationMix: {
            const std::size_t planes = std::min(kRotationPlanes, d / 2);
            const auto basis = orthonormal_vectors(rng, d, 2 * planes);
            const double alpha = severity / 5.0;  // 1 - alpha toward identity
            const double cos_a = std::cos(kRotationAngle);
            const double sin_a = std::sin(kRotationAngle);
            std::vector<double> x(d);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < d; ++j) x[j] = data.features(i, j);
                // rotated = Q x, built plane by plane
                std::vector<double> rotated = x;
                for (std::size_t p = 0; p < planes; ++p) {
                    const auto& u = basis[2 * p];
                    const auto& v = basis[2 * p + 1];
                    double a = 0.0, b = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        a += u[j] * x[j];
                        b += v[j] * x[j];
                    }
                    const double du = (cos_a - 1.0) * a - sin_a * b;
                    const double dv = sin_a * a + (cos_a - 1.0) * b;
                    for (std::size_t j = 0; j < d; ++j) rotated[j] += du * u[j] + dv * v[j];
                }
                for (std::size_t j = 0; j < d; ++j) {
                    out.features(i, j) = (1.0 - alpha) * x[j] + alpha * rotated[j];
                }
            }
            break;
        }
        case CorruptionKind::MaskDropout: {
            const auto zeroed =
                static_cast<std::size_t>(std::lround(kMaskFraction * severity * static_cast<double>(d)));
            std::vector<std::size_t> coords(d);
            for (std::size_t i = 0; i < n; ++i) {
                std::iota(coords.begin(), coords.end(), 0);
                for (std::size_t k = 0; k < zeroed && k < d; ++k) {
                    const std::size_t pick = k + rng.index(d - k);
                    std::swap(coords[k], coords[pick]);
                    out.features(i, coords[k]) = 0.0;
                }
            }
            break;
        }
        case CorruptionKind::None:
            break;
    }
    return out;
}

std::vector<Corruption> default_suite() {
    std::vector<Corruption> suite;
    for (int severity : {3, 5}) {
        for (CorruptionKind kind :
             {CorruptionKind::GaussNoise, CorruptionKind::FeatureScale, CorruptionKind::RotationMix,
              CorruptionKind::MaskDropout, CorruptionKind::MeanShift}) {
            suite.push_back({kind, severity});
        }
    }
    return suite;
}

std::vector<Corruption> shuffled_suite(std::uint64_t seed) {
    std::vector<Corruption> suite = default_suite();
    Rng rng(Rng::mix(seed, 0x5u));
    rng.shuffle(suite);
    return suite;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    validate_dataset(data);
    std::ostringstream out;
    out << "cltta-dataset v1\n";
    out << "classes " << data.num_classes << "\n";
    out << "dims " << data.dim() << "\n";
    out << "count " << data.size() << "\n";
    out << "seed " << data.seed << "\n";
    out << "generator " << (data.generator.empty() ? "unknown" : data.generator) << "\n";
    out << "severity " << data.severity << "\n";
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.labels[i];
        for (std::size_t j = 0; j < data.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), " %.17g", data.features(i, j));
            out << buf;
        }
        out << "\n";
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream file(tmp);
        if (!file) throw std::runtime_error("save_dataset: cannot open " + tmp.string());
        file << out.str();
    }
    std::filesystem::rename(tmp, path);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("load_dataset: cannot open " + path.string());
    std::string magic, version;
    file >> magic >> version;
    if (magic != "cltta-dataset" || version != "v1") {
        throw std::runtime_error("load_dataset: not a v1 dataset file");
    }
    Dataset data;
    std::size_t dims = 0, count = 0;
    auto expect_key = [&](const char* key) {
        std::string k;
        file >> k;
        if (k != key) throw std::runtime_error(std::string("load_dataset: expected key ") + key);
    };
    expect_key("classes");
    file >> data.num_classes;
    expect_key("dims");
    file >> dims;
    expect_key("count");
    file >> count;
    expect_key("seed");
    file >> data.seed;
    expect_key("generator");
    file >> data.generator;
    expect_key("severity");
    file >> data.severity;
    if (!file) throw std::runtime_error("load_dataset: malformed header");

    data.features = Matrix(count, dims);
    data.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        file >> data.labels[i];
        for (std::size_t j = 0; j < dims; ++j) file >> data.features(i, j);
    }
    if (!file) throw std::runtime_error("load_dataset: truncated sample block");
    validate_dataset(data);
    return data;
}

}  // namespace cltta
