#pragma once

#include <cstddef>
#include <vector>

#include "cltta/numerics.hpp"

namespace cltta {

// Per-category complementary-label filter; each entry in [0,1).
using ThresholdVector = std::vector<double>;

// Binary complementary-label flags, one row per sample. flag(i,c)=1 asserts
// that sample i does NOT belong to category c.
using HardClMatrix = Matrix;

// Confidence-weighted complementary labels in [0,1]; nonzero exactly where
// the hard rule flags.
using SoftClMatrix = Matrix;

void validate_thresholds(const ThresholdVector& theta);

// Argmax class per row; ties break to the lowest index.
std::vector<int> pseudo_label(const ProbMatrix& probs);

// flag(i,c) = 1 iff probs(i,c) < theta[c] (strict; equality is exempt).
HardClMatrix hard_complementary(const ProbMatrix& probs, const ThresholdVector& theta);

// weight(i,c) = max(theta[c] - probs(i,c), 0) / theta[c]; a zero threshold
// exempts its category entirely.
SoftClMatrix soft_complementary(const ProbMatrix& probs, const ThresholdVector& theta);

// Fraction of samples whose true class is unflagged. Samples with an empty
// flag set count as correct.
double cl_correctness(const HardClMatrix& flags, const std::vector<int>& truth);

// Exact-match fraction of pseudo labels against the truth.
double pl_accuracy(const std::vector<int>& pseudo, const std::vector<int>& truth);

// Lower bound (1 - theta_max)^(C-1) on the probability that a calibrated
// sample's complementary label set excludes the true class.
double cl_bound(double theta_max, std::size_t num_classes);

// The threshold value 1 - f_max^(1/(C-1)); for any max threshold strictly
// below it, cl_bound exceeds f_max.
double threshold_crossover(double f_max, std::size_t num_classes);

}  // namespace cltta
