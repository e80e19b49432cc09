#include "cltta/bank.hpp"

#include <stdexcept>

namespace cltta {

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("MemoryBank: capacity must be positive");
}

void MemoryBank::push_batch(const ProbMatrix& probs) {
    if (probs.rows() == 0) return;
    validate_prob_matrix(probs);
    if (num_categories_ == 0) {
        num_categories_ = probs.cols();
    } else if (probs.cols() != num_categories_) {
        throw std::invalid_argument("MemoryBank: category count mismatch");
    }
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::vector<double> row(probs.cols());
        for (std::size_t j = 0; j < probs.cols(); ++j) row[j] = probs(i, j);
        rows_.push_back(std::move(row));
    }
    while (rows_.size() > capacity_) rows_.pop_front();
}

ThresholdVector MemoryBank::thresholds(double percentile_t) const {
    if (rows_.empty()) throw std::invalid_argument("MemoryBank::thresholds: bank is empty");
    ThresholdVector theta(num_categories_);
    std::vector<double> column(rows_.size());
    for (std::size_t c = 0; c < num_categories_; ++c) {
        for (std::size_t i = 0; i < rows_.size(); ++i) column[i] = rows_[i][c];
        theta[c] = percentile(column, percentile_t);
    }
    return theta;
}

void MemoryBank::clear() {
    rows_.clear();
    num_categories_ = 0;
}

ThresholdPolicy ThresholdPolicy::dynamic(double t, std::size_t capacity) {
    if (!(t >= 0.0 && t <= 100.0)) {
        throw std::invalid_argument("ThresholdPolicy: percentile must be in [0,100]");
    }
    ThresholdPolicy p;
    p.kind = Kind::Dynamic;
    p.percentile = t;
    p.capacity = capacity;
    return p;
}

ThresholdPolicy ThresholdPolicy::fixed(ThresholdVector theta0) {
    validate_thresholds(theta0);
    ThresholdPolicy p;
    p.kind = Kind::Fixed;
    p.fixed_theta = std::move(theta0);
    return p;
}

ThresholdPolicy ThresholdPolicy::fixed_uniform(double theta0, std::size_t num_classes) {
    return fixed(ThresholdVector(num_classes, theta0));
}

ThresholdVector policy_thresholds(const ThresholdPolicy& policy, const MemoryBank& bank,
                                  const ProbMatrix& current_batch) {
    if (policy.kind == ThresholdPolicy::Kind::Fixed) {
        return policy.fixed_theta;
    }
    if (!bank.empty()) {
        return bank.thresholds(policy.percentile);
    }
    if (current_batch.rows() == 0) {
        throw std::invalid_argument("policy_thresholds: empty bank and empty batch");
    }
    // Cold start: seed the thresholds from the first batch itself.
    MemoryBank seeded(policy.capacity);
    seeded.push_batch(current_batch);
    return seeded.thresholds(policy.percentile);
}

}  // namespace cltta
