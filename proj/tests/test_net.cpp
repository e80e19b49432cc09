#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cltta/net.hpp"
#include "cltta/risk.hpp"
#include "cltta/scenarios.hpp"

using namespace cltta;

namespace {

Matrix random_batch(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix batch(rows, cols);
    for (double& v : batch.data()) v = rng.normal();
    return batch;
}

}  // namespace

TEST_CASE("mlp_new determinism and rejection") {
    const MlpModel a = mlp_new({20, 64, 10}, 7);
    const MlpModel b = mlp_new({20, 64, 10}, 7);
    CHECK(a == b);
    CHECK(a.affines.size() == 2);
    CHECK(a.norms.size() == 1);

    const MlpModel c = mlp_new({20, 64, 10}, 8);
    CHECK(a.affines[0].weight.data() != c.affines[0].weight.data());

    CHECK_THROWS_AS(mlp_new({20}, 7), std::invalid_argument);
    CHECK_THROWS_AS(mlp_new({20, 0, 10}, 7), std::invalid_argument);
}

TEST_CASE("parameter counts follow the layer shapes") {
    const MlpModel model = mlp_new({4, 8, 8, 3}, 1);
    // affine: 4*8+8 + 8*8+8 + 8*3+3, batchnorm: 2*8 + 2*8
    CHECK(parameter_count(model, ParamGroup::All) == 139 + 32);
    CHECK(parameter_count(model, ParamGroup::Bn) == 32);
    CHECK(parameter_count(model, ParamGroup::Classifier) == 8 * 3 + 3);
    CHECK(parameter_count(model, ParamGroup::Feature) == 4 * 8 + 8 + 8 * 8 + 8);
}

TEST_CASE("forward shape contract and small-batch rejection") {
    MlpModel model = mlp_new({5, 6, 3}, 2);
    Rng rng(3);
    const Matrix batch = random_batch(rng, 4, 5);
    const LogitMatrix logits = forward(model, batch, ForwardMode::TrainStats);
    CHECK(logits.rows() == 4);
    CHECK(logits.cols() == 3);

    const Matrix single = random_batch(rng, 1, 5);
    CHECK_THROWS_AS(forward(model, single, ForwardMode::TrainStats), std::invalid_argument);
    CHECK_NOTHROW(forward_running(model, single));

    const Matrix wrong_width = random_batch(rng, 4, 6);
    CHECK_THROWS_AS(forward(model, wrong_width, ForwardMode::TrainStats), std::invalid_argument);
}

TEST_CASE("constant batch is floored, not rejected") {
    MlpModel model = mlp_new({3, 4, 2}, 5);
    Matrix batch(4, 3, 1.5);  // identical rows -> zero batch variance
    ForwardCache cache;
    CHECK_NOTHROW(forward(model, batch, ForwardMode::TrainStats, &cache));
    for (char floored : cache.bn[0].var_floored) CHECK(floored == 1);
    CHECK(cache.logits.all_finite());
}

TEST_CASE("train-stats batchnorm normalizes per feature") {
    MlpModel model = mlp_new({6, 8, 3}, 11);
    Rng rng(13);
    const Matrix batch = random_batch(rng, 32, 6);
    ForwardCache cache;
    forward(model, batch, ForwardMode::TrainStats, &cache);
    // gamma=1, beta=0 at init, so the bn output is xhat itself
    const Matrix& bn_out = cache.relu_inputs[0];
    for (std::size_t c = 0; c < bn_out.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < bn_out.rows(); ++r) mean += bn_out(r, c);
        mean /= static_cast<double>(bn_out.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < bn_out.rows(); ++r) {
            var += (bn_out(r, c) - mean) * (bn_out(r, c) - mean);
        }
        var /= static_cast<double>(bn_out.rows());
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(var - 1.0) < 1e-5);
    }
}

TEST_CASE("train-stats forward moves running statistics, running-stats forward is pure") {
    MlpModel model = mlp_new({5, 6, 3}, 17);
    Rng rng(19);
    const Matrix batch = random_batch(rng, 8, 5);

    const MlpModel before = model;
    forward_running(model, batch);
    CHECK(model == before);
    forward(model, batch, ForwardMode::RunningStats);
    CHECK(model == before);

    forward(model, batch, ForwardMode::TrainStats);
    CHECK(model.norms[0].running_mean != before.norms[0].running_mean);
    CHECK(model.norms[0].running_var != before.norms[0].running_var);
    CHECK(model.affines == before.affines);
    for (double v : model.norms[0].running_var) CHECK(v > 0.0);
}

TEST_CASE("backward group filter and zero gradient") {
    MlpModel model = mlp_new({5, 6, 3}, 23);
    Rng rng(29);
    const Matrix batch = random_batch(rng, 6, 5);
    ForwardCache cache;
    forward(model, batch, ForwardMode::TrainStats, &cache);

    const std::vector<ParamRef> refs = parameters(model);
    Matrix grad_logits(6, 3, 0.1);

    const GradientSet bn_only = backward(model, cache, grad_logits, ParamGroup::Bn);
    for (std::size_t k = 0; k < refs.size(); ++k) {
        CHECK((bn_only.present[k] != 0) == (refs[k].group == ParamGroup::Bn));
    }

    const GradientSet all = backward(model, cache, Matrix(6, 3), ParamGroup::All);
    for (std::size_t k = 0; k < refs.size(); ++k) {
        REQUIRE(all.present[k]);
        for (double g : all.grads[k]) CHECK(g == 0.0);
    }

    // cache from a different model shape is rejected
    MlpModel other = mlp_new({5, 7, 3}, 23);
    CHECK_THROWS_AS(backward(other, cache, grad_logits, ParamGroup::All), std::invalid_argument);
}

TEST_CASE("analytic parameter gradients match finite differences through the net") {
    // cross-entropy against fixed labels, full parameter set
    MlpModel model = mlp_new({4, 5, 3}, 31);
    Rng rng(37);
    const Matrix batch = random_batch(rng, 8, 4);
    const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2, 0, 1};

    auto loss_value = [&](MlpModel& m) {
        const ProbMatrix probs = softmax(forward(m, batch, ForwardMode::TrainStats, nullptr));
        double value = 0.0;
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            value -= clamped_log(probs(i, labels[i])) / static_cast<double>(probs.rows());
        }
        return value;
    };

    ForwardCache cache;
    MlpModel work = model;
    const ProbMatrix probs = softmax(forward(work, batch, ForwardMode::TrainStats, &cache));
    Matrix grad_logits = probs;
    for (std::size_t i = 0; i < probs.rows(); ++i) grad_logits(i, labels[i]) -= 1.0;
    for (double& g : grad_logits.data()) g /= static_cast<double>(probs.rows());
    const GradientSet grads = backward(work, cache, grad_logits, ParamGroup::All);

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < grads.grads.size(); ++k) {
        for (std::size_t j = 0; j < grads.grads[k].size(); ++j) {
            MlpModel up = model;
            (*parameters(up)[k].values)[j] += h;
            MlpModel down = model;
            (*parameters(down)[k].values)[j] -= h;
            const double numeric = (loss_value(up) - loss_value(down)) / (2.0 * h);
            const double denom = std::max({1.0, std::abs(numeric), std::abs(grads.grads[k][j])});
            worst = std::max(worst, std::abs(numeric - grads.grads[k][j]) / denom);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("adam first step and fixed point") {
    MlpModel model = mlp_new({2, 2}, 41);  // single affine, no batchnorm
    model.affines[0].weight.data() = {0.0, 0.0, 0.0, 0.0};
    model.affines[0].bias = {0.0, 0.0};
    AdamState opt(model, {.lr = 0.1});

    GradientSet zero;
    zero.grads = {{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0}};
    zero.present = {1, 1};
    opt.step(model, zero);
    for (double w : model.affines[0].weight.data()) CHECK(w == 0.0);

    AdamState opt2(model, {.lr = 0.1});
    GradientSet ones;
    ones.grads = {{1.0, 1.0, 1.0, 1.0}, {1.0, 1.0}};
    ones.present = {1, 1};
    opt2.step(model, ones);
    for (double w : model.affines[0].weight.data()) {
        CHECK(w == doctest::Approx(-0.09999999900000002).epsilon(1e-12));
    }

    GradientSet bad = ones;
    bad.grads[0][2] = std::nan("");
    CHECK_THROWS_WITH_AS(opt2.step(model, bad), doctest::Contains("affine0.weight"),
                         std::invalid_argument);
}

TEST_CASE("optimizer updates are deterministic") {
    auto run = [] {
        MlpModel model = mlp_new({4, 6, 3}, 43);
        AdamState opt(model, {.lr = 1e-2});
        Rng rng(47);
        for (int step = 0; step < 20; ++step) {
            Matrix batch = random_batch(rng, 4, 4);
            ForwardCache cache;
            const ProbMatrix probs = softmax(forward(model, batch, ForwardMode::TrainStats, &cache));
            const LossResult loss = entropy_loss(probs);
            opt.step(model, backward(model, cache, loss.grad_logits, ParamGroup::All));
        }
        return model;
    };
    CHECK(run() == run());
}

TEST_CASE("group freezing keeps non-bn parameters bit-exact") {
    MlpModel model = mlp_new({4, 6, 6, 3}, 53);
    const MlpModel initial = model;
    AdamState opt(model, {.lr = 5e-2});
    Rng rng(59);
    for (int step = 0; step < 25; ++step) {
        Matrix batch = random_batch(rng, 8, 4);
        ForwardCache cache;
        const ProbMatrix probs = softmax(forward(model, batch, ForwardMode::TrainStats, &cache));
        const LossResult loss = entropy_loss(probs);
        opt.step(model, backward(model, cache, loss.grad_logits, ParamGroup::Bn));
    }
    for (std::size_t i = 0; i < model.affines.size(); ++i) {
        CHECK(model.affines[i].weight.data() == initial.affines[i].weight.data());
        CHECK(model.affines[i].bias == initial.affines[i].bias);
    }
    bool bn_moved = false;
    for (std::size_t i = 0; i < model.norms.size(); ++i) {
        if (model.norms[i].gamma != initial.norms[i].gamma) bn_moved = true;
    }
    CHECK(bn_moved);
}

TEST_CASE("train_source fits separable blobs and is deterministic") {
    auto [train, test] = make_source(3, 6, 60, 0.05, 71);
    const TrainOptions options{.epochs = 30, .lr = 1e-3, .batch_size = 16, .seed = 5};

    MlpModel model = mlp_new({6, 16, 3}, 73);
    const TrainResult result = train_source(model, train, test, options);
    CHECK(result.train_accuracy >= 0.99);
    CHECK(result.eval_accuracy >= 0.99);

    MlpModel again = mlp_new({6, 16, 3}, 73);
    train_source(again, train, test, options);
    CHECK(model == again);
}

TEST_CASE("train_source with zero epochs leaves the model untouched") {
    auto [train, test] = make_source(3, 6, 20, 0.2, 79);
    MlpModel model = mlp_new({6, 8, 3}, 83);
    const MlpModel before = model;
    train_source(model, train, test, {.epochs = 0, .lr = 1e-3, .batch_size = 16, .seed = 1});
    CHECK(model == before);
}

TEST_CASE("train_source rejects out-of-range labels") {
    auto [train, test] = make_source(4, 6, 10, 0.2, 89);
    MlpModel model = mlp_new({6, 8, 3}, 97);  // 3-way head, labels go to 3
    CHECK_THROWS_AS(train_source(model, train, test, {.epochs = 1, .seed = 1}),
                    std::invalid_argument);
}

TEST_CASE("train_with_known_cl approaches the supervised baseline at n = C-1") {
    auto [train, test] = make_source(10, 10, 120, 0.3, 101);
    const TrainOptions options{.epochs = 40, .lr = 1e-3, .batch_size = 32, .seed = 9};

    MlpModel supervised = mlp_new({10, 32, 10}, 103);
    const double baseline = train_source(supervised, train, test, options).eval_accuracy;

    MlpModel cl_model = mlp_new({10, 32, 10}, 103);
    const double cl_acc = train_with_known_cl(cl_model, train, test, 9, options).eval_accuracy;

    CHECK(cl_acc >= baseline - 0.05);
}

TEST_CASE("train_with_known_cl rejects out-of-range negative counts") {
    auto [train, test] = make_source(5, 6, 10, 0.2, 107);
    MlpModel model = mlp_new({6, 8, 5}, 109);
    CHECK_THROWS_AS(train_with_known_cl(model, train, test, 0, {.epochs = 1, .seed = 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(train_with_known_cl(model, train, test, 5, {.epochs = 1, .seed = 1}),
                    std::invalid_argument);
}
