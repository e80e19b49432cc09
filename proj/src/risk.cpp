#include "cltta/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cltta {

namespace {

// d/dp of clamped_log: zero below the clamp.
double clamped_log_grad(double p, double eps = kLogClampEps) {
    return p >= eps ? 1.0 / p : 0.0;
}

LossResult finish(const ProbMatrix& probs, double value, Matrix grad_probs) {
    LossResult res;
    res.value = value;
    res.grad_logits = softmax_chain(probs, grad_probs);
    res.grad_probs = std::move(grad_probs);
    return res;
}

}  // namespace

Matrix softmax_chain(const ProbMatrix& probs, const Matrix& grad_probs) {
    if (!probs.same_shape(grad_probs)) {
        throw std::invalid_argument("softmax_chain: shape mismatch");
    }
    Matrix grad_logits(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) dot += grad_probs(i, j) * probs(i, j);
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            grad_logits(i, j) = probs(i, j) * (grad_probs(i, j) - dot);
        }
    }
    return grad_logits;
}

LossResult bcl_loss(const ProbMatrix& probs, const ThresholdVector& theta) {
    validate_thresholds(theta);
    if (probs.cols() != theta.size()) {
        throw std::invalid_argument("bcl_loss: category count mismatch");
    }
    HardClMatrix flags(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            flags(i, j) = theta[j] > probs(i, j) ? 1.0 : 0.0;
        }
    }
    return bcl_loss_with_flags(probs, flags);
}

LossResult bcl_loss_with_flags(const ProbMatrix& probs, const HardClMatrix& flags) {
    validate_prob_matrix(probs);
    if (!probs.same_shape(flags)) {
        throw std::invalid_argument("bcl_loss_with_flags: shape mismatch");
    }
    const double n = static_cast<double>(probs.rows());
    const double c = static_cast<double>(probs.cols());
    const double scale = 1.0 / (n * c);

    double value = 0.0;
    Matrix grad_probs(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            if (flags(i, j) == 0.0) continue;
            const double p = 1.0 - probs(i, j);
            value -= scale * p * clamped_log(p);
            grad_probs(i, j) = scale * (clamped_log(p) + p * clamped_log_grad(p));
        }
    }
    return finish(probs, value, std::move(grad_probs));
}

SignedLabelMatrix complementary_transform(const ProbMatrix& ordinary, const ThresholdVector& theta) {
    validate_thresholds(theta);
    if (ordinary.cols() != theta.size()) {
        throw std::invalid_argument("complementary_transform: category count mismatch");
    }
    for (double t : theta) {
        if (t <= 0.0) throw std::invalid_argument("complementary_transform: thresholds must be > 0");
    }
    SignedLabelMatrix out(ordinary.rows(), ordinary.cols());
    for (std::size_t i = 0; i < ordinary.rows(); ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < ordinary.cols(); ++j) row_sum += ordinary(i, j);
        for (std::size_t j = 0; j < ordinary.cols(); ++j) {
            out(i, j) = (theta[j] * row_sum - ordinary(i, j)) / theta[j];
        }
    }
    return out;
}

ProbMatrix inverse_transform(const SignedLabelMatrix& signed_labels, const ThresholdVector& theta) {
    validate_thresholds(theta);
    if (signed_labels.cols() != theta.size()) {
        throw std::invalid_argument("inverse_transform: category count mismatch");
    }
    for (double t : theta) {
        if (t <= 0.0) throw std::invalid_argument("inverse_transform: thresholds must be > 0");
    }
    const double theta_sum = std::accumulate(theta.begin(), theta.end(), 0.0);
    if (std::abs(1.0 - theta_sum) < 1e-9) {
        throw std::invalid_argument("inverse_transform: sum(theta) == 1 is singular");
    }
    const double k = 1.0 / (1.0 - theta_sum);
    ProbMatrix out(signed_labels.rows(), signed_labels.cols());
    for (std::size_t i = 0; i < signed_labels.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < signed_labels.cols(); ++j) s += theta[j] * signed_labels(i, j);
        for (std::size_t j = 0; j < signed_labels.cols(); ++j) {
            out(i, j) = -(theta[j] * signed_labels(i, j) + k * s * theta[j]);
        }
    }
    return out;
}

LossResult ecl_risk(const SoftClMatrix& weights, const ProbMatrix& probs_test,
                    const ThresholdVector& theta) {
    validate_prob_matrix(probs_test);
    validate_thresholds(theta);
    if (probs_test.cols() != theta.size() || !weights.same_shape(probs_test)) {
        throw std::invalid_argument("ecl_risk: shape mismatch");
    }
    const bool all_zero = std::all_of(theta.begin(), theta.end(), [](double t) { return t == 0.0; });
    if (all_zero) {
        LossResult res;
        res.grad_probs = Matrix(probs_test.rows(), probs_test.cols());
        res.grad_logits = Matrix(probs_test.rows(), probs_test.cols());
        return res;
    }
    const double theta_sum = std::accumulate(theta.begin(), theta.end(), 0.0);
    if (theta_sum >= 1.0) {
        throw std::invalid_argument("ecl_risk: sum(theta) must be < 1");
    }
    const double k = 1.0 / (1.0 - theta_sum);
    const double n = static_cast<double>(probs_test.rows());

    double value = 0.0;
    Matrix grad_probs(probs_test.rows(), probs_test.cols());
    for (std::size_t i = 0; i < probs_test.rows(); ++i) {
        double weighted_theta = 0.0;  // sum_c theta[c] * w(i,c)
        double log_term = 0.0;        // sum_j theta[j] * ln f(i,j)
        for (std::size_t j = 0; j < probs_test.cols(); ++j) {
            weighted_theta += theta[j] * weights(i, j);
            log_term += theta[j] * clamped_log(probs_test(i, j));
        }
        for (std::size_t j = 0; j < probs_test.cols(); ++j) {
            value += weights(i, j) * theta[j] * clamped_log(probs_test(i, j)) / n;
            grad_probs(i, j) = theta[j] * clamped_log_grad(probs_test(i, j)) *
                               (weights(i, j) + k * weighted_theta) / n;
        }
        value += k * weighted_theta * log_term / n;
    }
    return finish(probs_test, value, std::move(grad_probs));
}

double ordinary_risk(const Matrix& labels, const ProbMatrix& probs) {
    if (!labels.same_shape(probs)) {
        throw std::invalid_argument("ordinary_risk: shape mismatch");
    }
    const double n = static_cast<double>(probs.rows());
    double value = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            value -= labels(i, j) * clamped_log(probs(i, j)) / n;
        }
    }
    return value;
}

LossResult npl_loss(const ProbMatrix& probs) {
    const std::vector<int> pseudo = pseudo_label(probs);
    const double n = static_cast<double>(probs.rows());
    double value = 0.0;
    Matrix grad_probs(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto y = static_cast<std::size_t>(pseudo[i]);
        value -= clamped_log(probs(i, y)) / n;
        grad_probs(i, y) = -clamped_log_grad(probs(i, y)) / n;
    }
    return finish(probs, value, std::move(grad_probs));
}

LossResult entropy_loss(const ProbMatrix& probs) {
    validate_prob_matrix(probs);
    const double n = static_cast<double>(probs.rows());
    double value = 0.0;
    Matrix grad_probs(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            const double p = probs(i, j);
            value -= p * clamped_log(p) / n;
            grad_probs(i, j) = -(clamped_log(p) + p * clamped_log_grad(p)) / n;
        }
    }
    return finish(probs, value, std::move(grad_probs));
}

}  // namespace cltta
