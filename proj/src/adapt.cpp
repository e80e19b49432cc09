#include "cltta/adapt.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cltta/risk.hpp"

namespace cltta {

namespace {

// ECL needs sum(theta) < 1; near-uniform predictions under heavy shift can
// push dynamic thresholds past that. Rescaling keeps the loss defined and is
// conservative: smaller thresholds flag fewer categories.
constexpr double kEclThetaBudget = 0.95;

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::uint64_t stream_seed(std::uint64_t run_seed, const Corruption& c) {
    // Depends only on the corruption identity, never on its position.
    const auto salt = static_cast<std::uint64_t>(static_cast<int>(c.kind) * 8 + c.severity);
    return Rng::mix(run_seed, salt);
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::Bcl: return "bcl";
        case LossKind::Ecl: return "ecl";
        case LossKind::Npl: return "npl";
        case LossKind::Entropy: return "entropy";
        case LossKind::None: return "none";
        case LossKind::Source: return "source";
    }
    throw std::invalid_argument("loss_kind_name: unknown kind");
}

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "bcl") return LossKind::Bcl;
    if (name == "ecl") return LossKind::Ecl;
    if (name == "npl") return LossKind::Npl;
    if (name == "entropy") return LossKind::Entropy;
    if (name == "none") return LossKind::None;
    if (name == "source") return LossKind::Source;
    throw std::invalid_argument("unknown loss kind: " + name);
}

void validate_config(const AdaptationConfig& config) {
    if (config.batch_size < 2) throw std::invalid_argument("AdaptationConfig: batch_size must be >= 2");
    if (!(config.lr > 0.0)) throw std::invalid_argument("AdaptationConfig: lr must be positive");
    if (config.batches_per_corruption == 0) {
        throw std::invalid_argument("AdaptationConfig: batches_per_corruption must be positive");
    }
}

AdaptEngine::AdaptEngine(const MlpModel& source, AdaptationConfig config)
    : config_(std::move(config)),
      source_(source),
      model_(source),
      optimizer_(source, {.lr = config_.lr}),
      bank_(config_.policy.capacity) {
    validate_config(config_);
}

void AdaptEngine::reset() {
    model_ = source_;
    optimizer_.reset();
    bank_.clear();
}

BatchOutcome AdaptEngine::adapt_batch(const Matrix& features, const std::vector<int>& truth) {
    if (features.rows() != truth.size()) {
        throw std::invalid_argument("adapt_batch: feature/truth count mismatch");
    }

    BatchOutcome outcome;
    if (config_.loss == LossKind::Source) {
        const ProbMatrix probs = softmax(forward_running(model_, features));
        outcome.predictions = pseudo_label(probs);
        outcome.accuracy = pl_accuracy(outcome.predictions, truth);
        outcome.thresholds = policy_thresholds(config_.policy, bank_, probs);
        return outcome;
    }

    ForwardCache cache;
    const ProbMatrix probs = softmax(forward(model_, features, ForwardMode::TrainStats, &cache));
    outcome.predictions = pseudo_label(probs);
    outcome.accuracy = pl_accuracy(outcome.predictions, truth);

    ThresholdVector theta = policy_thresholds(config_.policy, bank_, probs);

    if (config_.loss != LossKind::None) {
        if (config_.loss == LossKind::Ecl) {
            const double theta_sum = std::accumulate(theta.begin(), theta.end(), 0.0);
            if (theta_sum >= kEclThetaBudget) {
                for (double& t : theta) t *= kEclThetaBudget / theta_sum;
            }
        }

        LossResult loss;
        switch (config_.loss) {
            case LossKind::Bcl: {
                const ProbMatrix& reference =
                    config_.weight_source == WeightSource::Current
                        ? probs
                        : softmax(forward_running(source_, features));
                loss = bcl_loss_with_flags(probs, hard_complementary(reference, theta));
                break;
            }
            case LossKind::Ecl: {
                const ProbMatrix& reference =
                    config_.weight_source == WeightSource::Current
                        ? probs
                        : softmax(forward_running(source_, features));
                loss = ecl_risk(soft_complementary(reference, theta), probs, theta);
                break;
            }
            case LossKind::Npl:
                loss = npl_loss(probs);
                break;
            case LossKind::Entropy:
                loss = entropy_loss(probs);
                break;
            default:
                break;
        }
        const GradientSet grads = backward(model_, cache, loss.grad_logits, config_.group);
        optimizer_.step(model_, grads);
        outcome.loss_value = loss.value;
    }

    bank_.push_batch(probs);
    outcome.thresholds = std::move(theta);
    return outcome;
}

RunReport run_scenario(const AdaptationConfig& config, const MlpModel& source,
                       const Dataset& clean_test, const std::vector<Corruption>& scenario) {
    validate_config(config);
    validate_dataset(clean_test);
    if (scenario.empty()) throw std::invalid_argument("run_scenario: empty scenario");
    if (clean_test.dim() != source.input_dim() || clean_test.num_classes != source.num_classes()) {
        throw std::invalid_argument("run_scenario: dataset does not match model");
    }

    AdaptEngine engine(source, config);
    RunReport report;
    report.config = config;
    report.seed = config.seed;

    for (const Corruption& corruption : scenario) {
        if (config.protocol == Protocol::Oaat) engine.reset();

        const std::uint64_t seed = stream_seed(config.seed, corruption);
        const Dataset shifted = corrupt(clean_test, corruption, seed);
        Rng order_rng(Rng::mix(seed, 0x57));
        std::vector<std::size_t> order(shifted.size());
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);

        CorruptionResult result;
        result.corruption = corruption_name(corruption.kind);
        result.severity = corruption.severity;
        result.batches = config.batches_per_corruption;

        for (std::size_t b = 0; b < config.batches_per_corruption; ++b) {
            Matrix batch(config.batch_size, shifted.dim());
            std::vector<int> truth(config.batch_size);
            for (std::size_t r = 0; r < config.batch_size; ++r) {
                const std::size_t src = order[(b * config.batch_size + r) % order.size()];
                truth[r] = shifted.labels[src];
                for (std::size_t j = 0; j < shifted.dim(); ++j) {
                    batch(r, j) = shifted.features(src, j);
                }
            }
            BatchOutcome outcome = engine.adapt_batch(batch, truth);
            result.batch_accuracy.push_back(outcome.accuracy);
            result.threshold_trace.push_back(std::move(outcome.thresholds));
        }

        result.accuracy = mean_of(result.batch_accuracy);
        double theta_mean = 0.0;
        for (const ThresholdVector& theta : result.threshold_trace) theta_mean += mean_of(theta);
        result.mean_threshold = theta_mean / static_cast<double>(result.threshold_trace.size());
        report.per_corruption.push_back(std::move(result));
    }

    double total = 0.0;
    for (const CorruptionResult& r : report.per_corruption) total += r.accuracy;
    report.mean_accuracy = total / static_cast<double>(report.per_corruption.size());
    return report;
}

std::vector<ComparisonRow> compare_runs(const std::vector<AdaptationConfig>& configs,
                                        const MlpModel& source, const Dataset& clean_test,
                                        const std::vector<Corruption>& scenario,
                                        const std::vector<std::uint64_t>& seeds) {
    if (configs.empty() || seeds.empty()) {
        throw std::invalid_argument("compare_runs: configs and seeds must be non-empty");
    }
    std::vector<ComparisonRow> rows;
    for (const AdaptationConfig& config : configs) {
        ComparisonRow row;
        row.config_id = config.id;
        for (std::uint64_t seed : seeds) {
            AdaptationConfig seeded = config;
            seeded.seed = seed;
            RunReport report = run_scenario(seeded, source, clean_test, scenario);
            row.per_seed_mean.push_back(report.mean_accuracy);
            row.reports.push_back(std::move(report));
        }
        row.mean = mean_of(row.per_seed_mean);
        if (row.per_seed_mean.size() > 1) {
            double ss = 0.0;
            for (double v : row.per_seed_mean) ss += (v - row.mean) * (v - row.mean);
            row.sd = std::sqrt(ss / static_cast<double>(row.per_seed_mean.size() - 1));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace cltta
