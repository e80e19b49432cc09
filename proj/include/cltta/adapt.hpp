#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cltta/bank.hpp"
#include "cltta/net.hpp"
#include "cltta/scenarios.hpp"

namespace cltta {

enum class LossKind { Bcl, Ecl, Npl, Entropy, None, Source };
enum class WeightSource { Current, Frozen };
enum class Protocol { Oaat, Continual };

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

struct AdaptationConfig {
    std::string id = "run";
    LossKind loss = LossKind::Ecl;
    ThresholdPolicy policy = ThresholdPolicy::dynamic(75.0, 200);
    WeightSource weight_source = WeightSource::Current;
    ParamGroup group = ParamGroup::Bn;
    double lr = 2e-2;
    std::size_t batch_size = 64;
    std::size_t batches_per_corruption = 50;
    Protocol protocol = Protocol::Oaat;
    std::uint64_t seed = 0;
};

void validate_config(const AdaptationConfig& config);

struct BatchOutcome {
    std::vector<int> predictions;  // argmax of the pre-update forward pass
    double accuracy = 0.0;
    ThresholdVector thresholds;    // thresholds applied this batch
    double loss_value = 0.0;
};

// Per-batch loop: predict (pre-update), threshold, label, loss, selective
// update, bank refresh. Loss kind None runs the train-stats forward only
// (batchnorm statistics adapt, parameters stay); Source runs a running-stats
// forward and never touches any state.
class AdaptEngine {
public:
    AdaptEngine(const MlpModel& source, AdaptationConfig config);

    BatchOutcome adapt_batch(const Matrix& features, const std::vector<int>& truth);

    // Back to the pristine source model, fresh optimizer moments, empty bank.
    void reset();

    const MlpModel& model() const noexcept { return model_; }
    const MlpModel& source_model() const noexcept { return source_; }
    const MemoryBank& bank() const noexcept { return bank_; }
    const AdamState& optimizer() const noexcept { return optimizer_; }
    const AdaptationConfig& config() const noexcept { return config_; }

private:
    AdaptationConfig config_;
    MlpModel source_;
    MlpModel model_;
    AdamState optimizer_;
    MemoryBank bank_;
};

struct CorruptionResult {
    std::string corruption;
    int severity = 0;
    double accuracy = 0.0;        // mean of per-batch pre-update accuracies
    double mean_threshold = 0.0;  // mean over batches of the mean threshold
    std::size_t batches = 0;
    std::vector<double> batch_accuracy;
    std::vector<ThresholdVector> threshold_trace;
};

struct RunReport {
    AdaptationConfig config;
    std::uint64_t seed = 0;
    std::vector<CorruptionResult> per_corruption;
    double mean_accuracy = 0.0;
};

// Streams each corruption of the scenario through the engine. OAAT resets
// model, optimizer, and bank before every corruption; continual carries all
// state. Per-corruption streams depend only on (config seed, corruption
// identity), so OAAT results are invariant under reordering.
RunReport run_scenario(const AdaptationConfig& config, const MlpModel& source,
                       const Dataset& clean_test, const std::vector<Corruption>& scenario);

struct ComparisonRow {
    std::string config_id;
    double mean = 0.0;  // mean over seeds of per-run mean accuracy
    double sd = 0.0;    // sample standard deviation over seeds
    std::vector<double> per_seed_mean;
    std::vector<RunReport> reports;
};

// Runs every (config, seed) pair and aggregates mean +- sd per config, in
// input order.
std::vector<ComparisonRow> compare_runs(const std::vector<AdaptationConfig>& configs,
                                        const MlpModel& source, const Dataset& clean_test,
                                        const std::vector<Corruption>& scenario,
                                        const std::vector<std::uint64_t>& seeds);

}  // namespace cltta
