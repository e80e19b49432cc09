#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cltta/adapt.hpp"
#include "cltta/net.hpp"
#include "cltta/scenarios.hpp"

namespace cltta {

struct SourceSpec {
    std::size_t classes = 10;
    std::size_t dims = 20;
    std::size_t per_class = 500;
    double spread = 0.35;
    std::uint64_t seed = 0;
};

struct ModelSpec {
    std::vector<std::size_t> dims;
    std::uint64_t init_seed = 0;
};

struct TrainSpec {
    std::size_t epochs = 30;
    double lr = 1e-3;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

struct ScenarioSpec {
    enum class Kind { Default, Shuffled, Explicit };
    Kind kind = Kind::Default;
    std::uint64_t shuffle_seed = 0;
    std::vector<Corruption> list;
};

// Parsed experiment file. JSON with an explicit schema_version; unknown keys
// are rejected, and every seed must be spelled out.
struct ExperimentSpec {
    int schema_version = 1;
    SourceSpec source;
    ModelSpec model;
    TrainSpec train;
    std::vector<AdaptationConfig> adapt_configs;
    ScenarioSpec scenario;
};

ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
ExperimentSpec parse_experiment_spec(const std::string& json_text);

std::vector<Corruption> resolve_scenario(const ScenarioSpec& scenario);

struct SourceBundle {
    Dataset train;
    Dataset test;
    MlpModel model;
    TrainResult result;
};

// Generates the source datasets and trains the source model per spec.
SourceBundle build_source(const ExperimentSpec& spec);

struct DemoClResult {
    std::vector<std::size_t> n_negatives;  // {4, 6, 8}
    std::vector<double> accuracy;          // test accuracy per n
    double baseline = 0.0;                 // supervised test accuracy
};

// Known-complementary-label experiment on the spec's source blobs.
DemoClResult run_demo_cl(const ExperimentSpec& spec);

}  // namespace cltta
