#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cltta/risk.hpp"

namespace cltta {

enum class VerifyLevel { Fast, Full };

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;  // worst observed error, check-specific units
    std::string detail;
};

using EclRiskFn =
    std::function<LossResult(const Matrix&, const ProbMatrix&, const ThresholdVector&)>;

// Ordinary risk on random instances must equal the complementary risk built
// from the unclipped transform, within 1e-8. The injectable risk function
// exists so a deliberately broken convention can be shown to fail.
CheckResult check_risk_equivalence(std::size_t instances = 100, EclRiskFn risk_fn = {});

// inverse_transform(complementary_transform(p)) == p within 1e-10.
CheckResult check_transform_round_trip(std::size_t instances = 1000);

// Analytic logit gradients of all four losses against central finite
// differences (h=1e-5), relative error < 1e-5.
CheckResult check_loss_gradients(std::size_t instances_per_loss = 20);

// Full parameter gradients through forward+softmax+loss on a small network
// against central finite differences, relative error < 1e-4.
CheckResult check_model_gradients();

// Library percentile against a naive sort-and-interpolate oracle, exact.
CheckResult check_percentile_oracle(std::size_t instances = 1000);

// Closed-form bound identities on a grid (cheap, always run).
CheckResult check_bound_algebra();

// Calibrated synthetic stream: empirical complementary-label correctness
// against the (1-theta)^(C-1) bound and against pseudo-label accuracy.
CheckResult check_cl_bound(std::size_t samples = 100000);

// Fast runs everything except the large-sample bound check.
std::vector<CheckResult> run_verification(VerifyLevel level);

}  // namespace cltta
