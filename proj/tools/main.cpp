#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cltta/checkpoint.hpp"
#include "cltta/experiment.hpp"
#include "cltta/report.hpp"
#include "cltta/verify.hpp"

namespace {

using namespace cltta;

int cmd_train_source(const std::string& spec_path, const std::string& out_dir) {
    const ExperimentSpec spec = load_experiment_spec(spec_path);
    std::filesystem::create_directories(out_dir);
    const SourceBundle bundle = build_source(spec);
    const std::filesystem::path checkpoint = std::filesystem::path(out_dir) / "source_model.ckpt";
    save_model(bundle.model, checkpoint);
    std::printf("train-source: train_accuracy=%s test_accuracy=%s checkpoint=%s\n",
                format_sig6(bundle.result.train_accuracy).c_str(),
                format_sig6(bundle.result.eval_accuracy).c_str(), checkpoint.c_str());
    return 0;
}

int cmd_adapt(const std::string& spec_path, const std::string& checkpoint_path,
              const std::string& out_dir) {
    const ExperimentSpec spec = load_experiment_spec(spec_path);
    if (spec.adapt_configs.empty()) {
        std::fprintf(stderr, "adapt: spec has no adapt_configs\n");
        return 1;
    }
    const MlpModel model = load_model(checkpoint_path);
    if (model.dims != spec.model.dims) {
        std::fprintf(stderr, "adapt: checkpoint dims do not match the spec\n");
        return 1;
    }
    // The clean evaluation split is regenerated from the spec seeds, so the
    // whole command is a function of (spec file, checkpoint).
    auto [train, test] = make_source(spec.source.classes, spec.source.dims, spec.source.per_class,
                                     spec.source.spread, spec.source.seed);
    (void)train;
    const std::vector<Corruption> scenario = resolve_scenario(spec.scenario);

    std::filesystem::create_directories(out_dir);
    std::vector<ReportRow> rows;
    for (const AdaptationConfig& config : spec.adapt_configs) {
        const RunReport report = run_scenario(config, model, test, scenario);
        for (ReportRow& row : report_rows(report)) rows.push_back(std::move(row));
        std::printf("adapt: config=%s mean_accuracy=%s\n", config.id.c_str(),
                    format_sig6(report.mean_accuracy).c_str());
    }
    const std::filesystem::path csv = std::filesystem::path(out_dir) / "report.csv";
    write_report_csv(rows, csv);
    std::printf("adapt: wrote %zu rows to %s\n", rows.size(), csv.c_str());
    return 0;
}

int cmd_demo_cl(const std::string& spec_path, const std::string& out_dir) {
    const ExperimentSpec spec = load_experiment_spec(spec_path);
    const DemoClResult result = run_demo_cl(spec);
    std::printf("%-10s", "");
    for (std::size_t n : result.n_negatives) std::printf("N=%-8zu", n);
    std::printf("%s\n", "baseline");
    std::printf("%-10s", "accuracy");
    for (double acc : result.accuracy) std::printf("%-10s", format_sig6(acc).c_str());
    std::printf("%s\n", format_sig6(result.baseline).c_str());

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path csv = std::filesystem::path(out_dir) / "demo_cl.csv";
        std::string body = "n_negatives,accuracy\n";
        for (std::size_t i = 0; i < result.n_negatives.size(); ++i) {
            body += std::to_string(result.n_negatives[i]) + "," +
                    format_sig6(result.accuracy[i]) + "\n";
        }
        body += "baseline," + format_sig6(result.baseline) + "\n";
        const std::filesystem::path tmp = csv.string() + ".tmp";
        {
            std::ofstream file(tmp, std::ios::binary);
            file << body;
        }
        std::filesystem::rename(tmp, csv);
        std::printf("demo-cl: wrote %s\n", csv.c_str());
    }
    return 0;
}

int cmd_verify(const std::string& level_name) {
    const VerifyLevel level = level_name == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
    const std::vector<CheckResult> results = run_verification(level);
    bool all_passed = true;
    for (const CheckResult& check : results) {
        std::printf("%-22s %s  %s\n", check.name.c_str(), check.passed ? "PASS" : "FAIL",
                    check.detail.c_str());
        all_passed = all_passed && check.passed;
    }
    std::printf("verify (%s): %s\n", level_name.c_str(), all_passed ? "all checks passed" : "FAILED");
    return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complementary-label test-time adaptation on synthetic shift benchmarks"};
    app.require_subcommand(1);

    std::string spec_path, checkpoint_path, out_dir = "out", level = "fast";

    CLI::App* train = app.add_subcommand("train-source", "Train and checkpoint the source model");
    train->add_option("--spec", spec_path, "Experiment spec file")->required();
    train->add_option("--out", out_dir, "Output directory");

    CLI::App* adapt = app.add_subcommand("adapt", "Run adaptation configs over a scenario");
    adapt->add_option("--spec", spec_path, "Experiment spec file")->required();
    adapt->add_option("--checkpoint", checkpoint_path, "Source model checkpoint")->required();
    adapt->add_option("--out", out_dir, "Output directory");

    CLI::App* demo = app.add_subcommand("demo-cl", "Known-complementary-label training table");
    demo->add_option("--spec", spec_path, "Experiment spec file")->required();
    std::string demo_out;
    demo->add_option("--out", demo_out, "Optional output directory for the CSV");

    CLI::App* verify = app.add_subcommand("verify", "Run the oracle checks");
    verify->add_option("--level", level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train_source(spec_path, out_dir);
        if (adapt->parsed()) return cmd_adapt(spec_path, checkpoint_path, out_dir);
        if (demo->parsed()) return cmd_demo_cl(spec_path, demo_out);
        if (verify->parsed()) return cmd_verify(level);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
