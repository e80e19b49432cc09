#include "cltta/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cltta {

namespace {

using nlohmann::json;

void require_keys(const json& object, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& context) {
    if (!object.is_object()) throw std::runtime_error("spec: " + context + " must be an object");
    for (const auto& item : object.items()) {
        if (!allowed.count(item.key())) {
            throw std::runtime_error("spec: unknown key '" + item.key() + "' in " + context);
        }
    }
    for (const std::string& key : required) {
        if (!object.contains(key)) {
            throw std::runtime_error("spec: missing key '" + key + "' in " + context);
        }
    }
}

ParamGroup param_group_from_name(const std::string& name) {
    if (name == "bn") return ParamGroup::Bn;
    if (name == "feature") return ParamGroup::Feature;
    if (name == "classifier") return ParamGroup::Classifier;
    if (name == "all") return ParamGroup::All;
    throw std::runtime_error("spec: unknown param_group '" + name + "'");
}

ThresholdPolicy parse_threshold(const json& j, std::size_t num_classes) {
    require_keys(j, {"kind", "percentile", "capacity", "theta0"}, {"kind"}, "threshold");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dynamic") {
        return ThresholdPolicy::dynamic(j.value("percentile", 75.0),
                                        j.value("capacity", std::size_t{200}));
    }
    if (kind == "fixed") {
        if (!j.contains("theta0")) throw std::runtime_error("spec: fixed threshold needs theta0");
        return ThresholdPolicy::fixed_uniform(j.at("theta0").get<double>(), num_classes);
    }
    throw std::runtime_error("spec: unknown threshold kind '" + kind + "'");
}

AdaptationConfig parse_adapt_config(const json& j, std::size_t num_classes) {
    require_keys(j,
                 {"id", "loss", "threshold", "weight_source", "param_group", "lr", "batch_size",
                  "batches_per_corruption", "protocol", "seed"},
                 {"id", "loss", "seed"}, "adapt config");
    AdaptationConfig config;
    config.id = j.at("id").get<std::string>();
    config.loss = loss_kind_from_name(j.at("loss").get<std::string>());
    if (j.contains("threshold")) config.policy = parse_threshold(j.at("threshold"), num_classes);
    if (j.contains("weight_source")) {
        const std::string w = j.at("weight_source").get<std::string>();
        if (w == "current") {
            config.weight_source = WeightSource::Current;
        } else if (w == "frozen") {
            config.weight_source = WeightSource::Frozen;
        } else {
            throw std::runtime_error("spec: unknown weight_source '" + w + "'");
        }
    }
    if (j.contains("param_group")) {
        config.group = param_group_from_name(j.at("param_group").get<std::string>());
    }
    config.lr = j.value("lr", 2e-2);
    config.batch_size = j.value("batch_size", std::size_t{64});
    config.batches_per_corruption = j.value("batches_per_corruption", std::size_t{50});
    if (j.contains("protocol")) {
        const std::string p = j.at("protocol").get<std::string>();
        if (p == "oaat") {
            config.protocol = Protocol::Oaat;
        } else if (p == "continual") {
            config.protocol = Protocol::Continual;
        } else {
            throw std::runtime_error("spec: unknown protocol '" + p + "'");
        }
    }
    config.seed = j.at("seed").get<std::uint64_t>();
    validate_config(config);
    return config;
}

ScenarioSpec parse_scenario(const json& j) {
    require_keys(j, {"kind", "seed", "list"}, {"kind"}, "scenario");
    ScenarioSpec scenario;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "default") {
        scenario.kind = ScenarioSpec::Kind::Default;
    } else if (kind == "shuffled") {
        scenario.kind = ScenarioSpec::Kind::Shuffled;
        if (!j.contains("seed")) throw std::runtime_error("spec: shuffled scenario needs a seed");
        scenario.shuffle_seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "explicit") {
        scenario.kind = ScenarioSpec::Kind::Explicit;
        if (!j.contains("list")) throw std::runtime_error("spec: explicit scenario needs a list");
        for (const json& item : j.at("list")) {
            require_keys(item, {"kind", "severity"}, {"kind"}, "scenario list entry");
            Corruption c;
            c.kind = corruption_from_name(item.at("kind").get<std::string>());
            c.severity = item.value("severity", 0);
            scenario.list.push_back(c);
        }
        if (scenario.list.empty()) throw std::runtime_error("spec: explicit scenario list is empty");
    } else {
        throw std::runtime_error("spec: unknown scenario kind '" + kind + "'");
    }
    return scenario;
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
    json root = json::parse(json_text);
    require_keys(root, {"schema_version", "source", "model", "train", "adapt_configs", "scenario"},
                 {"schema_version", "source", "model", "train"}, "spec");
    ExperimentSpec spec;
    spec.schema_version = root.at("schema_version").get<int>();
    if (spec.schema_version != 1) {
        throw std::runtime_error("spec: unsupported schema_version");
    }

    const json& source = root.at("source");
    require_keys(source, {"classes", "dims", "per_class", "spread", "seed"}, {"seed"}, "source");
    spec.source.classes = source.value("classes", std::size_t{10});
    spec.source.dims = source.value("dims", std::size_t{20});
    spec.source.per_class = source.value("per_class", std::size_t{500});
    spec.source.spread = source.value("spread", 0.35);
    spec.source.seed = source.at("seed").get<std::uint64_t>();

    const json& model = root.at("model");
    require_keys(model, {"dims", "init_seed"}, {"dims", "init_seed"}, "model");
    spec.model.dims = model.at("dims").get<std::vector<std::size_t>>();
    spec.model.init_seed = model.at("init_seed").get<std::uint64_t>();
    if (spec.model.dims.size() < 2 || spec.model.dims.front() != spec.source.dims ||
        spec.model.dims.back() != spec.source.classes) {
        throw std::runtime_error("spec: model dims must run from source dims to source classes");
    }

    const json& train = root.at("train");
    require_keys(train, {"epochs", "lr", "batch_size", "seed"}, {"seed"}, "train");
    spec.train.epochs = train.value("epochs", std::size_t{30});
    spec.train.lr = train.value("lr", 1e-3);
    spec.train.batch_size = train.value("batch_size", std::size_t{64});
    spec.train.seed = train.at("seed").get<std::uint64_t>();

    if (root.contains("adapt_configs")) {
        for (const json& item : root.at("adapt_configs")) {
            spec.adapt_configs.push_back(parse_adapt_config(item, spec.source.classes));
        }
    }
    if (root.contains("scenario")) {
        spec.scenario = parse_scenario(root.at("scenario"));
    }
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("spec: cannot open " + path.string());
    std::ostringstream text;
    text << file.rdbuf();
    return parse_experiment_spec(text.str());
}

std::vector<Corruption> resolve_scenario(const ScenarioSpec& scenario) {
    switch (scenario.kind) {
        case ScenarioSpec::Kind::Default: return default_suite();
        case ScenarioSpec::Kind::Shuffled: return shuffled_suite(scenario.shuffle_seed);
        case ScenarioSpec::Kind::Explicit: return scenario.list;
    }
    throw std::logic_error("resolve_scenario: unreachable");
}

SourceBundle build_source(const ExperimentSpec& spec) {
    auto [train, test] = make_source(spec.source.classes, spec.source.dims, spec.source.per_class,
                                     spec.source.spread, spec.source.seed);
    MlpModel model = mlp_new(spec.model.dims, spec.model.init_seed);
    const TrainOptions options{.epochs = spec.train.epochs,
                               .lr = spec.train.lr,
                               .batch_size = spec.train.batch_size,
                               .seed = spec.train.seed};
    const TrainResult result = train_source(model, train, test, options);
    return {std::move(train), std::move(test), std::move(model), result};
}

DemoClResult run_demo_cl(const ExperimentSpec& spec) {
    auto [train, test] = make_source(spec.source.classes, spec.source.dims, spec.source.per_class,
                                     spec.source.spread, spec.source.seed);
    const TrainOptions options{.epochs = spec.train.epochs,
                               .lr = spec.train.lr,
                               .batch_size = spec.train.batch_size,
                               .seed = spec.train.seed};
    DemoClResult result;
    result.n_negatives = {4, 6, 8};
    for (std::size_t n : result.n_negatives) {
        MlpModel model = mlp_new(spec.model.dims, spec.model.init_seed);
        result.accuracy.push_back(train_with_known_cl(model, train, test, n, options).eval_accuracy);
    }
    MlpModel baseline = mlp_new(spec.model.dims, spec.model.init_seed);
    result.baseline = train_source(baseline, train, test, options).eval_accuracy;
    return result;
}

}  // namespace cltta
