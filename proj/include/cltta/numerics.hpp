#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cltta/matrix.hpp"

namespace cltta {

// Pre-softmax network outputs; unconstrained finite reals.
using LogitMatrix = Matrix;
// Row-stochastic prediction matrix: entries in [0,1], rows sum to 1.
using ProbMatrix = Matrix;

// Floor applied to probabilities before taking logs.
inline constexpr double kLogClampEps = 1e-12;

// Row-sum slack accepted when validating a ProbMatrix.
inline constexpr double kRowSumTol = 1e-6;

// ln(max(p, eps)). Keeps every risk finite when a probability underflows.
double clamped_log(double p, double eps = kLogClampEps);

// Row-wise stable softmax (max subtraction). Throws on non-finite input.
ProbMatrix softmax(const LogitMatrix& logits);

// Linear-interpolation percentile: rank r = (t/100)*(n-1) over the ascending
// sort, interpolated between the floor(r) and ceil(r) elements.
// t must be in [0,100]; values must be non-empty.
double percentile(std::span<const double> values, double t);

void validate_prob_matrix(const ProbMatrix& probs);

// SplitMix64. One value per state increment; identical seed gives an
// identical stream. Integer and uniform-double outputs are pure integer
// arithmetic, so they are bit-stable across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0,1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; draws two uniforms per pair.
    double normal();

    // Uniform index in [0,n). Modulo reduction; bias is negligible for the
    // desk-scale n used here and keeps the mapping platform-stable.
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    // Derives an independent sub-seed from (base, salt); used to split one
    // run seed into per-purpose streams.
    static std::uint64_t mix(std::uint64_t base, std::uint64_t salt);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cltta
