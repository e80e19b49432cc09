#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cltta/checkpoint.hpp"
#include "cltta/experiment.hpp"
#include "cltta/report.hpp"
#include "cltta/verify.hpp"

using namespace cltta;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    REQUIRE(file);
    return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

const char* kSpecJson = R"({
  "schema_version": 1,
  "source": {"classes": 5, "dims": 8, "per_class": 40, "spread": 0.3, "seed": 11},
  "model": {"dims": [8, 16, 5], "init_seed": 12},
  "train": {"epochs": 10, "lr": 0.001, "batch_size": 16, "seed": 13},
  "adapt_configs": [
    {"id": "ecl-dynamic", "loss": "ecl",
     "threshold": {"kind": "dynamic", "percentile": 75, "capacity": 64},
     "weight_source": "current", "param_group": "bn",
     "lr": 0.02, "batch_size": 16, "batches_per_corruption": 4,
     "protocol": "oaat", "seed": 21},
    {"id": "source", "loss": "source", "seed": 22}
  ],
  "scenario": {"kind": "explicit", "list": [
    {"kind": "gauss_noise", "severity": 3},
    {"kind": "mean_shift", "severity": 5}
  ]}
})";

}  // namespace

TEST_CASE("experiment spec parses and resolves") {
    const ExperimentSpec spec = parse_experiment_spec(kSpecJson);
    CHECK(spec.source.classes == 5);
    CHECK(spec.model.dims == std::vector<std::size_t>{8, 16, 5});
    REQUIRE(spec.adapt_configs.size() == 2);
    CHECK(spec.adapt_configs[0].loss == LossKind::Ecl);
    CHECK(spec.adapt_configs[0].policy.kind == ThresholdPolicy::Kind::Dynamic);
    CHECK(spec.adapt_configs[1].loss == LossKind::Source);
    CHECK(spec.adapt_configs[1].seed == 22);
    const std::vector<Corruption> scenario = resolve_scenario(spec.scenario);
    REQUIRE(scenario.size() == 2);
    CHECK(scenario[0].kind == CorruptionKind::GaussNoise);
}

TEST_CASE("unknown keys and missing seeds are rejected") {
    std::string with_typo = kSpecJson;
    const auto at = with_typo.find("\"spread\"");
    with_typo.replace(at, 8, "\"spraed\"");
    CHECK_THROWS_WITH_AS(parse_experiment_spec(with_typo), doctest::Contains("spraed"),
                         std::runtime_error);

    std::string no_seed = kSpecJson;
    const auto seed_at = no_seed.find(", \"seed\": 13");
    no_seed.replace(seed_at, 12, "");
    CHECK_THROWS_WITH_AS(parse_experiment_spec(no_seed), doctest::Contains("seed"),
                         std::runtime_error);

    CHECK_THROWS(parse_experiment_spec("{\"schema_version\": 2}"));
}

TEST_CASE("fixed threshold spec expands theta0 across classes") {
    std::string fixed = kSpecJson;
    const auto at = fixed.find(R"({"kind": "dynamic", "percentile": 75, "capacity": 64})");
    fixed.replace(at, std::string(R"({"kind": "dynamic", "percentile": 75, "capacity": 64})").size(),
                  R"({"kind": "fixed", "theta0": 0.05})");
    const ExperimentSpec spec = parse_experiment_spec(fixed);
    CHECK(spec.adapt_configs[0].policy.kind == ThresholdPolicy::Kind::Fixed);
    CHECK(spec.adapt_configs[0].policy.fixed_theta == ThresholdVector(5, 0.05));
}

TEST_CASE("checkpoint round trip is bit exact and rewrites identically") {
    auto [train, test] = make_source(4, 6, 30, 0.3, 401);
    MlpModel model = mlp_new({6, 12, 4}, 403);
    train_source(model, train, test, {.epochs = 5, .lr = 1e-3, .batch_size = 16, .seed = 5});

    const auto dir = std::filesystem::temp_directory_path();
    const auto path_a = dir / "cltta_ckpt_a.txt";
    const auto path_b = dir / "cltta_ckpt_b.txt";
    save_model(model, path_a);
    const MlpModel loaded = load_model(path_a);
    CHECK(loaded == model);

    save_model(loaded, path_b);
    CHECK(read_file(path_a) == read_file(path_b));

    // reloading reproduces evaluation exactly
    CHECK(evaluate_accuracy(loaded, test) == evaluate_accuracy(model, test));

    std::filesystem::remove(path_a);
    std::filesystem::remove(path_b);
}

TEST_CASE("checkpoint carries an optional bank section") {
    MlpModel model = mlp_new({4, 8, 3}, 405);
    MemoryBank bank(5);
    bank.push_batch(Matrix::from_rows({{0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}}));

    const auto path = std::filesystem::temp_directory_path() / "cltta_ckpt_bank.txt";
    save_checkpoint({model, bank}, path);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.model == model);
    REQUIRE(loaded.bank.has_value());
    CHECK(loaded.bank->capacity() == 5);
    CHECK(loaded.bank->rows() == bank.rows());
    std::filesystem::remove(path);
}

TEST_CASE("corrupted checkpoints are rejected with a diagnostic") {
    MlpModel model = mlp_new({4, 8, 3}, 407);
    const auto path = std::filesystem::temp_directory_path() / "cltta_ckpt_corrupt.txt";
    save_model(model, path);

    std::string text = read_file(path);
    text.replace(text.find("cltta-checkpoint"), 5, "bogus");
    {
        std::ofstream file(path, std::ios::binary);
        file << text;
    }
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("checkpoint"), std::runtime_error);

    // truncation is also caught
    save_model(model, path);
    text = read_file(path);
    {
        std::ofstream file(path, std::ios::binary);
        file << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS(load_model(path));
    std::filesystem::remove(path);
}

TEST_CASE("report rows and csv round trip") {
    RunReport report;
    report.config.id = "ecl-dynamic";
    report.seed = 21;
    report.per_corruption = {
        {"gauss_noise", 3, 0.7211, 0.0825, 4, {}, {}},
        {"mean_shift", 5, 0.65, 0.0456789, 4, {}, {}},
    };
    report.mean_accuracy = (0.7211 + 0.65) / 2.0;

    const std::vector<ReportRow> rows = report_rows(report);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].corruption == "mean");
    CHECK(rows[2].batches == 8);

    const auto path = std::filesystem::temp_directory_path() / "cltta_report.csv";
    write_report_csv(rows, path);
    const std::vector<ReportRow> parsed = read_report_csv(path);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].config_id == rows[i].config_id);
        CHECK(parsed[i].corruption == rows[i].corruption);
        CHECK(parsed[i].severity == rows[i].severity);
        CHECK(parsed[i].batches == rows[i].batches);
        CHECK(parsed[i].seed == rows[i].seed);
        // lossless at the printed precision
        CHECK(format_sig6(parsed[i].accuracy) == format_sig6(rows[i].accuracy));
        CHECK(format_sig6(parsed[i].mean_threshold) == format_sig6(rows[i].mean_threshold));
    }

    // rewriting parsed rows yields byte-identical output
    const auto path_b = std::filesystem::temp_directory_path() / "cltta_report_b.csv";
    write_report_csv(parsed, path_b);
    CHECK(read_file(path) == read_file(path_b));
    std::filesystem::remove(path);
    std::filesystem::remove(path_b);
}

TEST_CASE("fast verification passes on a pristine build") {
    for (const CheckResult& check : run_verification(VerifyLevel::Fast)) {
        INFO(check.name, ": ", check.detail);
        CHECK(check.passed);
    }
}

TEST_CASE("a flipped risk sign convention fails the equivalence check loudly") {
    const CheckResult flipped = check_risk_equivalence(100, [](const Matrix& w, const ProbMatrix& f,
                                                               const ThresholdVector& theta) {
        LossResult res = ecl_risk(w, f, theta);
        res.value = -res.value;  // the discarded sign reading
        return res;
    });
    CHECK_FALSE(flipped.passed);
    CHECK(flipped.residual > 0.1);
}

TEST_CASE("demo-cl emits the four-column table") {
    // tiny configuration; the full-scale trend is covered by the acceptance suite
    const char* tiny = R"({
      "schema_version": 1,
      "source": {"classes": 10, "dims": 8, "per_class": 30, "spread": 0.25, "seed": 31},
      "model": {"dims": [8, 16, 10], "init_seed": 32},
      "train": {"epochs": 8, "lr": 0.002, "batch_size": 16, "seed": 33}
    })";
    const DemoClResult result = run_demo_cl(parse_experiment_spec(tiny));
    CHECK(result.n_negatives == std::vector<std::size_t>{4, 6, 8});
    REQUIRE(result.accuracy.size() == 3);
    for (double acc : result.accuracy) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    CHECK(result.baseline > 0.0);

    // baseline column reproduces train_source on the same spec
    const ExperimentSpec spec = parse_experiment_spec(tiny);
    const SourceBundle bundle = build_source(spec);
    CHECK(result.baseline == bundle.result.eval_accuracy);
}

TEST_CASE("fast verification skips only the large-sample bound check") {
    const auto fast = run_verification(VerifyLevel::Fast);
    const auto full = run_verification(VerifyLevel::Full);
    CHECK(fast.size() + 1 == full.size());
    CHECK(full.back().name == "cl-bound");
    for (const CheckResult& check : fast) CHECK(check.name != "cl-bound");
}

TEST_CASE("rebuilding the source from the same spec yields identical checkpoint bytes") {
    const ExperimentSpec spec = parse_experiment_spec(kSpecJson);
    const auto dir = std::filesystem::temp_directory_path();
    const auto path_a = dir / "cltta_src_a.ckpt";
    const auto path_b = dir / "cltta_src_b.ckpt";
    save_model(build_source(spec).model, path_a);
    save_model(build_source(spec).model, path_b);
    CHECK(read_file(path_a) == read_file(path_b));
    std::filesystem::remove(path_a);
    std::filesystem::remove(path_b);
}
