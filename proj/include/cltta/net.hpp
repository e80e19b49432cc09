#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cltta/numerics.hpp"
#include "cltta/scenarios.hpp"

namespace cltta {

enum class ParamGroup { Bn, Feature, Classifier, All };
enum class ForwardMode { TrainStats, RunningStats };

// Effective batch variance never drops below this; constant features are
// normalized instead of rejected.
inline constexpr double kBnVarianceFloor = 1e-5;

struct AffineLayer {
    Matrix weight;  // fan_in x fan_out
    std::vector<double> bias;

    bool operator==(const AffineLayer&) const = default;
};

struct BatchNormLayer {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;

    bool operator==(const BatchNormLayer&) const = default;
};

// Dense classifier: affine -> batchnorm -> relu blocks, ending in a plain
// affine of width C. Hidden affines carry the "feature" tag, the final
// affine "classifier", and batchnorm scale/shift "bn".
struct MlpModel {
    std::vector<std::size_t> dims;
    std::vector<AffineLayer> affines;   // dims.size()-1 of them
    std::vector<BatchNormLayer> norms;  // one per hidden block
    std::uint64_t init_seed = 0;

    std::size_t input_dim() const { return dims.front(); }
    std::size_t num_classes() const { return dims.back(); }
    std::size_t hidden_blocks() const { return norms.size(); }

    bool operator==(const MlpModel&) const = default;
};

// Seeded Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// gamma=1, beta=0, running_mean=0, running_var=1.
MlpModel mlp_new(const std::vector<std::size_t>& dims, std::uint64_t seed);

struct ParamRef {
    std::string name;
    ParamGroup group;
    std::vector<double>* values;
};

// Stable flat view of the trainable parameters (running statistics are not
// trainable). Optimizer state and gradient sets align with this order.
std::vector<ParamRef> parameters(MlpModel& model);

std::size_t parameter_count(const MlpModel& model, ParamGroup group);

struct BnCache {
    std::vector<double> mean;
    std::vector<double> inv_std;
    std::vector<char> var_floored;
    Matrix input;  // pre-normalization activations
    Matrix xhat;
};

struct ForwardCache {
    ForwardMode mode = ForwardMode::RunningStats;
    std::size_t batch_size = 0;
    std::vector<std::size_t> dims;
    std::vector<Matrix> affine_inputs;  // input to affine k
    std::vector<BnCache> bn;            // per hidden block
    std::vector<Matrix> relu_inputs;    // batchnorm outputs
    LogitMatrix logits;
};

// TrainStats: batchnorm normalizes with current-batch statistics and updates
// the model's running statistics by EMA (requires batch size >= 2).
// RunningStats: normalizes with stored statistics; pure in the model.
LogitMatrix forward(MlpModel& model, const Matrix& batch, ForwardMode mode,
                    ForwardCache* cache = nullptr);

// RunningStats forward without touching the model.
LogitMatrix forward_running(const MlpModel& model, const Matrix& batch,
                            ForwardCache* cache = nullptr);

// Gradients aligned with parameters(); entries outside the selected group
// are absent (frozen).
struct GradientSet {
    std::vector<std::vector<double>> grads;
    std::vector<char> present;
};

GradientSet backward(MlpModel& model, const ForwardCache& cache, const Matrix& grad_logits,
                     ParamGroup group);

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias-corrected moments. Parameters without a gradient in the set
// keep their values and moments untouched.
class AdamState {
public:
    AdamState(const MlpModel& model, AdamOptions options);

    void step(MlpModel& model, const GradientSet& grads);
    void reset();

    std::size_t step_count() const noexcept { return step_count_; }
    const AdamOptions& options() const noexcept { return options_; }

private:
    AdamOptions options_;
    std::size_t step_count_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

struct TrainOptions {
    std::size_t epochs = 30;
    double lr = 1e-3;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

struct TrainResult {
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
};

// Supervised cross-entropy training with shuffled mini-batches.
TrainResult train_source(MlpModel& model, const Dataset& train, const Dataset& eval,
                         const TrainOptions& options);

// Training from fixed known complementary labels: each sample gets a seeded,
// frozen set of n_negatives categories excluding its true class, and the
// model minimizes the basic complementary loss over those flags.
TrainResult train_with_known_cl(MlpModel& model, const Dataset& train, const Dataset& eval,
                                std::size_t n_negatives, const TrainOptions& options);

// Running-stats argmax predictions; ties break to the lowest index.
std::vector<int> predict(const MlpModel& model, const Matrix& features);

double evaluate_accuracy(const MlpModel& model, const Dataset& data);

}  // namespace cltta
