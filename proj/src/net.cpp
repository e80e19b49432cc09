#include "cltta/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cltta/labeling.hpp"
#include "cltta/risk.hpp"

namespace cltta {

namespace {

bool group_matches(ParamGroup tag, ParamGroup selector) {
    return selector == ParamGroup::All || tag == selector;
}

void require_labels_in_range(const Dataset& data, std::size_t num_classes) {
    for (int y : data.labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw std::invalid_argument("label out of range for model");
        }
    }
}

Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& index,
                   std::size_t begin, std::size_t end) {
    Matrix batch(end - begin, features.cols());
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t j = 0; j < features.cols(); ++j) {
            batch(r - begin, j) = features(index[r], j);
        }
    }
    return batch;
}

}  // namespace

MlpModel mlp_new(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("mlp_new: need at least 2 widths");
    for (std::size_t w : dims) {
        if (w == 0) throw std::invalid_argument("mlp_new: widths must be positive");
    }
    MlpModel model;
    model.dims = dims;
    model.init_seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        AffineLayer layer;
        layer.weight = Matrix(dims[i], dims[i + 1]);
        layer.bias.assign(dims[i + 1], 0.0);
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
        model.affines.push_back(std::move(layer));
        if (i + 2 < dims.size()) {
            BatchNormLayer norm;
            norm.gamma.assign(dims[i + 1], 1.0);
            norm.beta.assign(dims[i + 1], 0.0);
            norm.running_mean.assign(dims[i + 1], 0.0);
            norm.running_var.assign(dims[i + 1], 1.0);
            model.norms.push_back(std::move(norm));
        }
    }
    return model;
}

std::vector<ParamRef> parameters(MlpModel& model) {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < model.affines.size(); ++i) {
        const bool last = i + 1 == model.affines.size();
        const ParamGroup group = last ? ParamGroup::Classifier : ParamGroup::Feature;
        const std::string prefix = "affine" + std::to_string(i);
        refs.push_back({prefix + ".weight", group, &model.affines[i].weight.data()});
        refs.push_back({prefix + ".bias", group, &model.affines[i].bias});
        if (!last) {
            const std::string bn = "bn" + std::to_string(i);
            refs.push_back({bn + ".gamma", ParamGroup::Bn, &model.norms[i].gamma});
            refs.push_back({bn + ".beta", ParamGroup::Bn, &model.norms[i].beta});
        }
    }
    return refs;
}

std::size_t parameter_count(const MlpModel& model, ParamGroup group) {
    auto& mutable_model = const_cast<MlpModel&>(model);  // read-only traversal
    std::size_t count = 0;
    for (const ParamRef& ref : parameters(mutable_model)) {
        if (group_matches(ref.group, group)) count += ref.values->size();
    }
    return count;
}

namespace {

LogitMatrix forward_impl(const MlpModel& model, MlpModel* mutable_model, const Matrix& batch,
                         ForwardMode mode, ForwardCache* cache) {
    if (batch.cols() != model.input_dim()) {
        throw std::invalid_argument("forward: batch width does not match input dimension");
    }
    if (mode == ForwardMode::TrainStats && batch.rows() < 2) {
        throw std::invalid_argument("forward: train-stats mode needs a batch of at least 2");
    }
    const std::size_t n = batch.rows();

    if (cache) {
        *cache = ForwardCache{};
        cache->mode = mode;
        cache->batch_size = n;
        cache->dims = model.dims;
    }

    Matrix activ = batch;
    for (std::size_t i = 0; i < model.affines.size(); ++i) {
        if (cache) cache->affine_inputs.push_back(activ);
        Matrix z = multiply(activ, model.affines[i].weight);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += model.affines[i].bias[c];
        }
        const bool last = i + 1 == model.affines.size();
        if (last) {
            if (cache) cache->logits = z;
            return z;
        }

        const BatchNormLayer& norm = model.norms[i];
        const std::size_t width = z.cols();
        BnCache bn;
        bn.mean.resize(width);
        bn.inv_std.resize(width);
        bn.var_floored.assign(width, 0);

        std::vector<double> var(width, 0.0);
        if (mode == ForwardMode::TrainStats) {
            for (std::size_t c = 0; c < width; ++c) {
                double m = 0.0;
                for (std::size_t r = 0; r < n; ++r) m += z(r, c);
                m /= static_cast<double>(n);
                double v = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double d = z(r, c) - m;
                    v += d * d;
                }
                v /= static_cast<double>(n);
                bn.mean[c] = m;
                var[c] = v;
                bn.var_floored[c] = v < kBnVarianceFloor ? 1 : 0;
                bn.inv_std[c] = 1.0 / std::sqrt(std::max(v, kBnVarianceFloor));
            }
            if (mutable_model) {
                BatchNormLayer& target = mutable_model->norms[i];
                const double mom = target.momentum;
                const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
                for (std::size_t c = 0; c < width; ++c) {
                    target.running_mean[c] = (1.0 - mom) * target.running_mean[c] + mom * bn.mean[c];
                    target.running_var[c] =
                        (1.0 - mom) * target.running_var[c] + mom * var[c] * unbias;
                }
            }
        } else {
            for (std::size_t c = 0; c < width; ++c) {
                bn.mean[c] = norm.running_mean[c];
                bn.inv_std[c] = 1.0 / std::sqrt(std::max(norm.running_var[c], kBnVarianceFloor));
            }
        }

        Matrix xhat(n, width);
        Matrix bn_out(n, width);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                xhat(r, c) = (z(r, c) - bn.mean[c]) * bn.inv_std[c];
                bn_out(r, c) = norm.gamma[c] * xhat(r, c) + norm.beta[c];
            }
        }
        if (cache) {
            bn.input = std::move(z);
            bn.xhat = xhat;
            cache->bn.push_back(std::move(bn));
            cache->relu_inputs.push_back(bn_out);
        }
        for (double& v : bn_out.data()) v = std::max(v, 0.0);
        activ = std::move(bn_out);
    }
    throw std::logic_error("forward: unreachable");
}

}  // namespace

LogitMatrix forward(MlpModel& model, const Matrix& batch, ForwardMode mode, ForwardCache* cache) {
    return forward_impl(model, mode == ForwardMode::TrainStats ? &model : nullptr, batch, mode,
                        cache);
}

LogitMatrix forward_running(const MlpModel& model, const Matrix& batch, ForwardCache* cache) {
    return forward_impl(model, nullptr, batch, ForwardMode::RunningStats, cache);
}

GradientSet backward(MlpModel& model, const ForwardCache& cache, const Matrix& grad_logits,
                     ParamGroup group) {
    if (cache.dims != model.dims || cache.affine_inputs.size() != model.affines.size()) {
        throw std::invalid_argument("backward: cache does not match this model");
    }
    if (grad_logits.rows() != cache.batch_size || grad_logits.cols() != model.num_classes()) {
        throw std::invalid_argument("backward: grad_logits shape mismatch");
    }

    const std::size_t hidden = model.hidden_blocks();
    std::vector<Matrix> affine_weight_grads(model.affines.size());
    std::vector<std::vector<double>> affine_bias_grads(model.affines.size());
    std::vector<std::vector<double>> gamma_grads(hidden);
    std::vector<std::vector<double>> beta_grads(hidden);

    Matrix delta = grad_logits;  // gradient wrt current affine output
    for (std::size_t idx = model.affines.size(); idx-- > 0;) {
        affine_weight_grads[idx] = multiply_at_b(cache.affine_inputs[idx], delta);
        affine_bias_grads[idx] = column_sums(delta);
        if (idx == 0) break;
        Matrix grad_activ = multiply_a_bt(delta, model.affines[idx].weight);

        const std::size_t block = idx - 1;
        const BnCache& bn = cache.bn[block];
        const Matrix& relu_in = cache.relu_inputs[block];
        const std::size_t n = cache.batch_size;
        const std::size_t width = relu_in.cols();

        // relu
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                if (relu_in(r, c) <= 0.0) grad_activ(r, c) = 0.0;
            }
        }

        gamma_grads[block].assign(width, 0.0);
        beta_grads[block].assign(width, 0.0);
        Matrix grad_input(n, width);
        const std::vector<double>& gamma = model.norms[block].gamma;
        for (std::size_t c = 0; c < width; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double dy = grad_activ(r, c);
                sum_dy += dy;
                sum_dy_xhat += dy * bn.xhat(r, c);
            }
            gamma_grads[block][c] = sum_dy_xhat;
            beta_grads[block][c] = sum_dy;

            const double inv_std = bn.inv_std[c];
            const double g = gamma[c];
            if (cache.mode == ForwardMode::TrainStats) {
                const double mean_dxhat = g * sum_dy / static_cast<double>(n);
                const double mean_dxhat_xhat = g * sum_dy_xhat / static_cast<double>(n);
                const bool floored = bn.var_floored[c] != 0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double dxhat = g * grad_activ(r, c);
                    double dz = dxhat - mean_dxhat;
                    if (!floored) dz -= bn.xhat(r, c) * mean_dxhat_xhat;
                    grad_input(r, c) = inv_std * dz;
                }
            } else {
                for (std::size_t r = 0; r < n; ++r) {
                    grad_input(r, c) = inv_std * g * grad_activ(r, c);
                }
            }
        }
        delta = std::move(grad_input);
    }

    GradientSet set;
    const std::vector<ParamRef> refs = parameters(model);
    set.grads.resize(refs.size());
    set.present.assign(refs.size(), 0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < model.affines.size(); ++i) {
        const bool last = i + 1 == model.affines.size();
        if (group_matches(last ? ParamGroup::Classifier : ParamGroup::Feature, group)) {
            set.grads[k] = affine_weight_grads[i].data();
            set.present[k] = 1;
            set.grads[k + 1] = affine_bias_grads[i];
            set.present[k + 1] = 1;
        }
        k += 2;
        if (!last) {
            if (group_matches(ParamGroup::Bn, group)) {
                set.grads[k] = gamma_grads[i];
                set.present[k] = 1;
                set.grads[k + 1] = beta_grads[i];
                set.present[k + 1] = 1;
            }
            k += 2;
        }
    }
    return set;
}

AdamState::AdamState(const MlpModel& model, AdamOptions options) : options_(options) {
    if (!(options.lr > 0.0)) throw std::invalid_argument("AdamState: lr must be positive");
    auto& mutable_model = const_cast<MlpModel&>(model);
    for (const ParamRef& ref : parameters(mutable_model)) {
        first_moment_.emplace_back(ref.values->size(), 0.0);
        second_moment_.emplace_back(ref.values->size(), 0.0);
    }
}

void AdamState::reset() {
    step_count_ = 0;
    for (auto& m : first_moment_) std::fill(m.begin(), m.end(), 0.0);
    for (auto& v : second_moment_) std::fill(v.begin(), v.end(), 0.0);
}

void AdamState::step(MlpModel& model, const GradientSet& grads) {
    const std::vector<ParamRef> refs = parameters(model);
    if (refs.size() != first_moment_.size() || grads.grads.size() != refs.size()) {
        throw std::invalid_argument("AdamState::step: gradient set does not match model");
    }
    ++step_count_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_count_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_count_));
    for (std::size_t k = 0; k < refs.size(); ++k) {
        if (!grads.present[k]) continue;
        const std::vector<double>& g = grads.grads[k];
        if (g.size() != refs[k].values->size()) {
            throw std::invalid_argument("AdamState::step: gradient shape mismatch for " +
                                        refs[k].name);
        }
        for (double x : g) {
            if (!std::isfinite(x)) {
                throw std::invalid_argument("AdamState::step: non-finite gradient for " +
                                            refs[k].name);
            }
        }
        std::vector<double>& m = first_moment_[k];
        std::vector<double>& v = second_moment_[k];
        std::vector<double>& p = *refs[k].values;
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g[j];
            v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g[j] * g[j];
            p[j] -= options_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + options_.eps);
        }
    }
}

namespace {

// Shared mini-batch loop; the loss callback maps batch probabilities (plus
// batch sample indices) to a LossResult.
template <typename LossFn>
void train_loop(MlpModel& model, const Dataset& train, const TrainOptions& options, LossFn&& loss_fn) {
    if (options.batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
    AdamState optimizer(model, {.lr = options.lr});
    Rng shuffle_rng(Rng::mix(options.seed, 0xB1));
    std::vector<std::size_t> index(train.size());
    std::iota(index.begin(), index.end(), 0);

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_rng.shuffle(index);
        for (std::size_t begin = 0; begin < index.size(); begin += options.batch_size) {
            const std::size_t end = std::min(begin + options.batch_size, index.size());
            if (end - begin < 2) continue;  // train-stats batchnorm needs >= 2 samples
            const Matrix batch = gather_rows(train.features, index, begin, end);
            ForwardCache cache;
            const LogitMatrix logits = forward(model, batch, ForwardMode::TrainStats, &cache);
            const ProbMatrix probs = softmax(logits);
            const LossResult loss = loss_fn(probs, index, begin, end);
            const GradientSet grads = backward(model, cache, loss.grad_logits, ParamGroup::All);
            optimizer.step(model, grads);
        }
    }
}

}  // namespace

TrainResult train_source(MlpModel& model, const Dataset& train, const Dataset& eval,
                         const TrainOptions& options) {
    validate_dataset(train);
    require_labels_in_range(train, model.num_classes());

    train_loop(model, train, options,
               [&](const ProbMatrix& probs, const std::vector<std::size_t>& index,
                   std::size_t begin, std::size_t end) {
                   const double scale = 1.0 / static_cast<double>(end - begin);
                   LossResult loss;
                   Matrix grad_logits = probs;
                   double value = 0.0;
                   for (std::size_t r = begin; r < end; ++r) {
                       const auto y = static_cast<std::size_t>(train.labels[index[r]]);
                       grad_logits(r - begin, y) -= 1.0;
                       value -= clamped_log(probs(r - begin, y)) * scale;
                   }
                   for (double& g : grad_logits.data()) g *= scale;
                   loss.value = value;
                   loss.grad_logits = std::move(grad_logits);
                   return loss;
               });

    return {evaluate_accuracy(model, train), evaluate_accuracy(model, eval)};
}

TrainResult train_with_known_cl(MlpModel& model, const Dataset& train, const Dataset& eval,
                                std::size_t n_negatives, const TrainOptions& options) {
    validate_dataset(train);
    require_labels_in_range(train, model.num_classes());
    const std::size_t num_classes = model.num_classes();
    if (n_negatives < 1 || n_negatives > num_classes - 1) {
        throw std::invalid_argument("train_with_known_cl: n_negatives must be in [1, C-1]");
    }

    // Each sample's negative set is drawn once and frozen for the whole run.
    Rng flag_rng(Rng::mix(options.seed, 0xC1));
    HardClMatrix flags(train.size(), num_classes);
    std::vector<int> candidates;
    for (std::size_t i = 0; i < train.size(); ++i) {
        candidates.clear();
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (static_cast<int>(c) != train.labels[i]) candidates.push_back(static_cast<int>(c));
        }
        for (std::size_t k = 0; k < n_negatives; ++k) {
            const std::size_t pick = k + flag_rng.index(candidates.size() - k);
            std::swap(candidates[k], candidates[pick]);
            flags(i, static_cast<std::size_t>(candidates[k])) = 1.0;
        }
    }

    // Complementary cross-entropy over the flagged categories:
    //   L = (1/(N*C)) sum over flags of -ln(1 - f_c).
    // Unlike the -p*ln(p) adaptation loss, this is strictly decreasing in
    // 1 - f_c, so a wrongly confident flagged category keeps receiving
    // pressure instead of settling into a second zero-loss vertex; with
    // frozen flags that difference decides whether training converges at
    // all (see the risk module's descent-direction note for p < 1/e).
    train_loop(model, train, options,
               [&](const ProbMatrix& probs, const std::vector<std::size_t>& index,
                   std::size_t begin, std::size_t end) {
                   const std::size_t batch_rows = end - begin;
                   const double scale =
                       1.0 / (static_cast<double>(batch_rows) * static_cast<double>(num_classes));
                   LossResult loss;
                   Matrix grad_probs(batch_rows, num_classes);
                   for (std::size_t r = begin; r < end; ++r) {
                       for (std::size_t c = 0; c < num_classes; ++c) {
                           if (flags(index[r], c) == 0.0) continue;
                           const double p = 1.0 - probs(r - begin, c);
                           loss.value -= scale * clamped_log(p);
                           grad_probs(r - begin, c) = p >= kLogClampEps ? scale / p : 0.0;
                       }
                   }
                   loss.grad_logits = softmax_chain(probs, grad_probs);
                   loss.grad_probs = std::move(grad_probs);
                   return loss;
               });

    return {evaluate_accuracy(model, train), evaluate_accuracy(model, eval)};
}

std::vector<int> predict(const MlpModel& model, const Matrix& features) {
    const LogitMatrix logits = forward_running(model, features);
    return pseudo_label(softmax(logits));
}

double evaluate_accuracy(const MlpModel& model, const Dataset& data) {
    return pl_accuracy(predict(model, data.features), data.labels);
}

}  // namespace cltta
