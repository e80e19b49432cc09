#pragma once

#include "cltta/labeling.hpp"
#include "cltta/numerics.hpp"

namespace cltta {

// Scalar loss plus its gradient with respect to the prediction matrix and,
// through the softmax chain rule, to the logits that produced it.
struct LossResult {
    double value = 0.0;
    Matrix grad_probs;
    Matrix grad_logits;
};

// Unclipped complementary label rows; entries may be negative.
using SignedLabelMatrix = Matrix;

// Gradient with respect to logits given probs = softmax(logits) and the
// gradient with respect to probs.
Matrix softmax_chain(const ProbMatrix& probs, const Matrix& grad_probs);

// Basic complementary loss: L = -(1/(N*C)) sum over flagged (i,c) of
// p*ln(p) with p = 1 - probs(i,c); an entry is flagged when
// theta[c] > probs(i,c). Descent drives flagged probabilities down
// whenever p > 1/e, which holds for any threshold below 1 - 1/e.
LossResult bcl_loss(const ProbMatrix& probs, const ThresholdVector& theta);

// Same objective with an explicit flag matrix (known complementary labels).
LossResult bcl_loss_with_flags(const ProbMatrix& probs, const HardClMatrix& flags);

// Affine map from ordinary label rows to unclipped complementary rows:
// out(i,c) = (theta[c]*rowsum_i - in(i,c)) / theta[c]. Requires all
// theta[c] > 0.
SignedLabelMatrix complementary_transform(const ProbMatrix& ordinary, const ThresholdVector& theta);

// Exact inverse of complementary_transform via the Sherman-Morrison form of
// (I - theta e^T)^{-1}. Rejects sum(theta) == 1 (singular).
ProbMatrix inverse_transform(const SignedLabelMatrix& signed_labels, const ThresholdVector& theta);

// Confidence-weighted complementary risk:
//   R = (1/N) sum_i [ sum_c w(i,c)*theta[c]*ln f(i,c)
//       + (1/(1-sum(theta))) * (sum_c theta[c]*w(i,c)) * (sum_j theta[j]*ln f(i,j)) ]
// with clamped logs. Weights are treated as constants (no gradient through
// them). With unclipped weights from complementary_transform this equals
// ordinary_risk exactly; with clipped soft weights the gradient on flagged
// categories is positive, so descent suppresses them. An all-zero theta
// short-circuits to a zero result; otherwise sum(theta) must be < 1.
LossResult ecl_risk(const SoftClMatrix& weights, const ProbMatrix& probs_test,
                    const ThresholdVector& theta);

// (1/N) sum_i sum_y labels(i,y) * (-ln probs(i,y)), clamped logs. Labels may
// be ordinary rows or signed complementary rows.
double ordinary_risk(const Matrix& labels, const ProbMatrix& probs);

// Self-training cross-entropy against each row's argmax pseudo label. The
// pseudo label is a constant: no gradient flows through the argmax.
LossResult npl_loss(const ProbMatrix& probs);

// Mean Shannon entropy over rows.
LossResult entropy_loss(const ProbMatrix& probs);

}  // namespace cltta
