#include "cltta/labeling.hpp"

#include <cmath>
#include <stdexcept>

namespace cltta {

void validate_thresholds(const ThresholdVector& theta) {
    for (double v : theta) {
        if (!(v >= 0.0 && v < 1.0)) {
            throw std::invalid_argument("ThresholdVector: entries must be in [0,1)");
        }
    }
}

namespace {

void require_matching_categories(const ProbMatrix& probs, const ThresholdVector& theta) {
    if (probs.cols() != theta.size()) {
        throw std::invalid_argument("category count mismatch between probs and thresholds");
    }
}

}  // namespace

std::vector<int> pseudo_label(const ProbMatrix& probs) {
    validate_prob_matrix(probs);
    std::vector<int> labels(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols(); ++j) {
            if (probs(i, j) > probs(i, best)) best = j;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

HardClMatrix hard_complementary(const ProbMatrix& probs, const ThresholdVector& theta) {
    validate_prob_matrix(probs);
    validate_thresholds(theta);
    require_matching_categories(probs, theta);
    HardClMatrix flags(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            flags(i, j) = probs(i, j) < theta[j] ? 1.0 : 0.0;
        }
    }
    return flags;
}

SoftClMatrix soft_complementary(const ProbMatrix& probs, const ThresholdVector& theta) {
    validate_prob_matrix(probs);
    validate_thresholds(theta);
    require_matching_categories(probs, theta);
    SoftClMatrix weights(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            weights(i, j) = theta[j] > 0.0
                                ? std::max(theta[j] - probs(i, j), 0.0) / theta[j]
                                : 0.0;
        }
    }
    return weights;
}

double cl_correctness(const HardClMatrix& flags, const std::vector<int>& truth) {
    if (flags.rows() != truth.size()) {
        throw std::invalid_argument("cl_correctness: length mismatch");
    }
    if (flags.rows() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < flags.rows(); ++i) {
        const int y = truth[i];
        if (y < 0 || static_cast<std::size_t>(y) >= flags.cols()) {
            throw std::invalid_argument("cl_correctness: truth index out of range");
        }
        if (flags(i, static_cast<std::size_t>(y)) == 0.0) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(flags.rows());
}

double pl_accuracy(const std::vector<int>& pseudo, const std::vector<int>& truth) {
    if (pseudo.size() != truth.size()) {
        throw std::invalid_argument("pl_accuracy: length mismatch");
    }
    if (pseudo.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
        if (pseudo[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pseudo.size());
}

double cl_bound(double theta_max, std::size_t num_classes) {
    if (!(theta_max >= 0.0 && theta_max < 1.0)) {
        throw std::invalid_argument("cl_bound: theta_max must be in [0,1)");
    }
    if (num_classes < 2) throw std::invalid_argument("cl_bound: need at least 2 classes");
    return std::pow(1.0 - theta_max, static_cast<double>(num_classes - 1));
}

double threshold_crossover(double f_max, std::size_t num_classes) {
    if (!(f_max > 0.0 && f_max < 1.0)) {
        throw std::invalid_argument("threshold_crossover: f_max must be in (0,1)");
    }
    if (num_classes < 2) throw std::invalid_argument("threshold_crossover: need at least 2 classes");
    return 1.0 - std::pow(f_max, 1.0 / static_cast<double>(num_classes - 1));
}

}  // namespace cltta
