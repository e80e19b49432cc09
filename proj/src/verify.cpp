#include "cltta/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cltta/bank.hpp"
#include "cltta/net.hpp"

namespace cltta {

namespace {

std::string describe(double residual, const char* what) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max %s %.3e", what, residual);
    return buf;
}

// theta sampled in (0.05, min(0.3, 0.99/C)) per class, so entries stay in
// the required band and the sum stays below 1 for every C.
ThresholdVector sample_theta(Rng& rng, std::size_t num_classes) {
    const double hi = std::min(0.3, 0.99 / static_cast<double>(num_classes));
    ThresholdVector theta(num_classes);
    for (double& t : theta) t = rng.uniform(0.05, hi);
    return theta;
}

ProbMatrix sample_prob_rows(Rng& rng, std::size_t rows, std::size_t cols) {
    ProbMatrix probs(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            probs(i, j) = 0.05 + rng.uniform();
            sum += probs(i, j);
        }
        for (std::size_t j = 0; j < cols; ++j) probs(i, j) /= sum;
    }
    return probs;
}

double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

}  // namespace

CheckResult check_risk_equivalence(std::size_t instances, EclRiskFn risk_fn) {
    if (!risk_fn) risk_fn = [](const Matrix& w, const ProbMatrix& f, const ThresholdVector& t) {
        return ecl_risk(w, f, t);
    };
    Rng rng(0xEC1);
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        const std::size_t num_classes = 2 + rng.index(9);  // 2..10
        const ProbMatrix ordinary = sample_prob_rows(rng, 1 + rng.index(4), num_classes);
        const ProbMatrix probs_test = sample_prob_rows(rng, ordinary.rows(), num_classes);
        const ThresholdVector theta = sample_theta(rng, num_classes);
        const SignedLabelMatrix unclipped = complementary_transform(ordinary, theta);
        const double via_complementary = risk_fn(unclipped, probs_test, theta).value;
        const double via_ordinary = ordinary_risk(ordinary, probs_test);
        worst = std::max(worst, std::abs(via_complementary - via_ordinary));
    }
    return {"risk-equivalence", worst <= 1e-8, worst, describe(worst, "|ecl - ordinary|")};
}

CheckResult check_transform_round_trip(std::size_t instances) {
    Rng rng(0x5A7);
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
        const std::size_t num_classes = 2 + rng.index(9);
        const ProbMatrix ordinary = sample_prob_rows(rng, 1 + rng.index(3), num_classes);
        const ThresholdVector theta = sample_theta(rng, num_classes);
        const ProbMatrix back = inverse_transform(complementary_transform(ordinary, theta), theta);
        for (std::size_t i = 0; i < ordinary.rows(); ++i) {
            for (std::size_t j = 0; j < ordinary.cols(); ++j) {
                worst = std::max(worst, std::abs(back(i, j) - ordinary(i, j)));
            }
        }
    }
    return {"transform-round-trip", worst <= 1e-10, worst, describe(worst, "|inverse(forward)-id|")};
}

CheckResult check_loss_gradients(std::size_t instances_per_loss) {
    Rng rng(0x6AD);
    const double h = 1e-5;
    double worst = 0.0;
    std::string worst_loss = "none";

    struct Case {
        const char* name;
        std::function<LossResult(const ProbMatrix&)> loss;
    };

    for (std::size_t k = 0; k < instances_per_loss; ++k) {
        const std::size_t num_classes = 3 + rng.index(6);  // 3..8
        const std::size_t rows = 2 + rng.index(4);
        LogitMatrix logits(rows, num_classes);
        for (double& v : logits.data()) v = 2.0 * rng.normal();
        const ProbMatrix base = softmax(logits);
        ThresholdVector theta = sample_theta(rng, num_classes);
        const SoftClMatrix weights = soft_complementary(base, theta);

        const std::vector<Case> cases = {
            {"bcl", [&](const ProbMatrix& p) { return bcl_loss(p, theta); }},
            {"ecl", [&](const ProbMatrix& p) { return ecl_risk(weights, p, theta); }},
            {"npl", [&](const ProbMatrix& p) { return npl_loss(p); }},
            {"entropy", [&](const ProbMatrix& p) { return entropy_loss(p); }},
        };
        for (const Case& c : cases) {
            const Matrix analytic = c.loss(base).grad_logits;
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < num_classes; ++j) {
                    LogitMatrix bumped = logits;
                    bumped(i, j) = logits(i, j) + h;
                    const double up = c.loss(softmax(bumped)).value;
                    bumped(i, j) = logits(i, j) - h;
                    const double down = c.loss(softmax(bumped)).value;
                    const double numeric = (up - down) / (2.0 * h);
                    const double err = rel_error(analytic(i, j), numeric);
                    if (err > worst) {
                        worst = err;
                        worst_loss = c.name;
                    }
                }
            }
        }
    }
    return {"loss-gradients", worst < 1e-5, worst,
            describe(worst, ("rel err (" + worst_loss + ")").c_str())};
}

CheckResult check_model_gradients() {
    Rng rng(0x90D);
    const double h = 1e-5;
    double worst = 0.0;

    MlpModel model = mlp_new({5, 6, 6, 4}, 20240601);
    const std::size_t rows = 8;
    Matrix batch(rows, model.input_dim());
    for (double& v : batch.data()) v = rng.normal();

    ThresholdVector theta(model.num_classes(), 0.2);
    ForwardCache base_cache;
    const ProbMatrix base_probs =
        softmax(forward(model, batch, ForwardMode::TrainStats, &base_cache));
    const SoftClMatrix weights = soft_complementary(base_probs, theta);

    const std::vector<std::pair<const char*, std::function<LossResult(const ProbMatrix&)>>> cases =
        {{"bcl", [&](const ProbMatrix& p) { return bcl_loss(p, theta); }},
         {"ecl", [&](const ProbMatrix& p) { return ecl_risk(weights, p, theta); }},
         {"npl", [&](const ProbMatrix& p) { return npl_loss(p); }},
         {"entropy", [&](const ProbMatrix& p) { return entropy_loss(p); }}};

    std::string worst_name = "none";
    for (const auto& [name, loss_fn] : cases) {
        ForwardCache cache;
        MlpModel work = model;
        const ProbMatrix probs = softmax(forward(work, batch, ForwardMode::TrainStats, &cache));
        const LossResult loss = loss_fn(probs);
        const GradientSet grads = backward(work, cache, loss.grad_logits, ParamGroup::All);

        const std::vector<ParamRef> refs = parameters(work);
        for (std::size_t k = 0; k < refs.size(); ++k) {
            for (std::size_t j = 0; j < refs[k].values->size(); ++j) {
                auto probe = [&](double delta) {
                    MlpModel copy = model;
                    (*parameters(copy)[k].values)[j] += delta;
                    return loss_fn(softmax(forward(copy, batch, ForwardMode::TrainStats, nullptr)))
                        .value;
                };
                const double numeric = (probe(h) - probe(-h)) / (2.0 * h);
                const double err = rel_error(grads.grads[k][j], numeric);
                if (err > worst) {
                    worst = err;
                    worst_name = std::string(name) + "/" + refs[k].name;
                }
            }
        }
    }
    return {"model-gradients", worst < 1e-4, worst,
            describe(worst, ("rel err (" + worst_name + ")").c_str())};
}

CheckResult check_percentile_oracle(std::size_t instances) {
    Rng rng(0x9EC);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < instances; ++k) {
        const std::size_t n = 1 + rng.index(50);
        std::vector<double> values(n);
        for (double& v : values) v = rng.uniform(-10.0, 10.0);
        const double t = rng.uniform(0.0, 100.0);

        // Naive oracle: selection sort, then the same pinned interpolation.
        std::vector<double> sorted = values;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::size_t min_at = i;
            for (std::size_t j = i + 1; j < sorted.size(); ++j) {
                if (sorted[j] < sorted[min_at]) min_at = j;
            }
            std::swap(sorted[i], sorted[min_at]);
        }
        const double rank = (t / 100.0) * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(rank);
        const double frac = rank - static_cast<double>(lo);
        const double expected =
            lo + 1 >= n ? sorted.back() : sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);

        if (percentile(values, t) != expected) ++mismatches;
    }
    return {"percentile-oracle", mismatches == 0, static_cast<double>(mismatches),
            std::to_string(mismatches) + " mismatches (exact comparison)"};
}

CheckResult check_bound_algebra() {
    double worst = 0.0;
    // No filtering: bound is 1.
    worst = std::max(worst, std::abs(cl_bound(0.0, 10) - 1.0));
    // Crossover composition: a threshold just below the crossover must push
    // the bound above the top-1 probability.
    for (double f_max : {0.3, 0.6, 0.9, 0.99}) {
        for (std::size_t num_classes : {2ul, 5ul, 10ul}) {
            const double crossover = threshold_crossover(f_max, num_classes);
            const double bound = cl_bound(std::max(crossover - 1e-6, 0.0), num_classes);
            if (bound <= f_max) worst = std::max(worst, f_max - bound + 1.0);
        }
    }
    // Spec composition example: bound(0.01, 10) = 0.99^9 > 0.9.
    if (cl_bound(0.01, 10) <= 0.9) worst = std::max(worst, 1.0);
    return {"bound-algebra", worst < 1e-12, worst, describe(worst, "identity error")};
}

CheckResult check_cl_bound(std::size_t samples) {
    // Calibrated stream: each row is a softmax of N(0,1) logits and the true
    // label is drawn from the row itself, so predictions are calibrated by
    // construction.
    Rng rng(0xCA1B);
    const std::size_t num_classes = 10;
    const double theta_value = 0.05;
    const ThresholdVector theta(num_classes, theta_value);

    std::size_t cl_correct = 0, pl_correct = 0;
    double top1_total = 0.0;
    std::vector<double> row(num_classes);
    for (std::size_t s = 0; s < samples; ++s) {
        double max_logit = -1e300;
        for (double& v : row) {
            v = rng.normal();
            max_logit = std::max(max_logit, v);
        }
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - max_logit);
            sum += v;
        }
        std::size_t argmax = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            row[c] /= sum;
            if (row[c] > row[argmax]) argmax = c;
        }
        top1_total += row[argmax];

        const double u = rng.uniform();
        double cumulative = 0.0;
        std::size_t truth = num_classes - 1;
        for (std::size_t c = 0; c < num_classes; ++c) {
            cumulative += row[c];
            if (u < cumulative) {
                truth = c;
                break;
            }
        }

        if (row[truth] >= theta_value) ++cl_correct;  // true class unflagged
        if (argmax == truth) ++pl_correct;
    }

    const double n = static_cast<double>(samples);
    const double cl_rate = static_cast<double>(cl_correct) / n;
    const double pl_rate = static_cast<double>(pl_correct) / n;
    const double mean_top1 = top1_total / n;
    const double bound = cl_bound(theta_value, num_classes);
    const double stderr3 = 3.0 * std::sqrt(std::max(cl_rate * (1.0 - cl_rate), 1e-12) / n);

    const bool bound_ok = cl_rate >= bound - stderr3;
    const bool below_crossover = theta_value < threshold_crossover(mean_top1, num_classes);
    const bool beats_pl = cl_rate > pl_rate;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "cl=%.4f (bound %.4f - 3se %.4f), pl=%.4f, mean top-1 %.4f, crossover %.4f",
                  cl_rate, bound, stderr3, pl_rate, mean_top1,
                  threshold_crossover(mean_top1, num_classes));
    return {"cl-bound", bound_ok && below_crossover && beats_pl,
            std::max(0.0, bound - stderr3 - cl_rate), buf};
}

std::vector<CheckResult> run_verification(VerifyLevel level) {
    std::vector<CheckResult> results;
    results.push_back(check_risk_equivalence());
    results.push_back(check_transform_round_trip());
    results.push_back(check_loss_gradients());
    results.push_back(check_model_gradients());
    results.push_back(check_percentile_oracle());
    results.push_back(check_bound_algebra());
    if (level == VerifyLevel::Full) {
        results.push_back(check_cl_bound());
    }
    return results;
}

}  // namespace cltta
