#include "cltta/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cltta {

double clamped_log(double p, double eps) {
    if (!(p >= 0.0)) throw std::invalid_argument("clamped_log: p must be >= 0");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("clamped_log: eps must be in (0,1)");
    return std::log(std::max(p, eps));
}

ProbMatrix softmax(const LogitMatrix& logits) {
    if (!logits.all_finite()) {
        throw std::invalid_argument("softmax: logits contain non-finite entries");
    }
    ProbMatrix probs(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < logits.cols(); ++j) row_max = std::max(row_max, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            const double e = std::exp(logits(i, j) - row_max);
            probs(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) probs(i, j) /= sum;
    }
    return probs;
}

double percentile(std::span<const double> values, double t) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (!(t >= 0.0 && t <= 100.0)) throw std::invalid_argument("percentile: t must be in [0,100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = (t / 100.0) * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

void validate_prob_matrix(const ProbMatrix& probs) {
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            const double p = probs(i, j);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("ProbMatrix: entry outside [0,1]");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            throw std::invalid_argument("ProbMatrix: row does not sum to 1");
        }
    }
}

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0,1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
    return static_cast<std::size_t>(next_u64() % n);
}

std::uint64_t Rng::mix(std::uint64_t base, std::uint64_t salt) {
    Rng r(base ^ (salt + 0x9E3779B97F4A7C15ULL + (base << 6) + (base >> 2)));
    return r.next_u64();
}

}  // namespace cltta
