#include "cltta/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cltta {

namespace {

constexpr const char* kMagic = "cltta-checkpoint";
constexpr const char* kVersion = "v1";

void write_values(std::ostream& out, const std::vector<double>& values) {
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%a", values[i]);
        out << (i ? " " : "") << buf;
    }
    out << "\n";
}

std::vector<double> read_values(std::istream& in, std::size_t count, const char* what) {
    std::vector<double> values(count);
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
        if (!(in >> token)) {
            throw std::runtime_error(std::string("checkpoint: truncated values for ") + what);
        }
        char* end = nullptr;
        values[i] = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') {
            throw std::runtime_error(std::string("checkpoint: bad float for ") + what);
        }
    }
    return values;
}

void expect(std::istream& in, const std::string& token) {
    std::string got;
    if (!(in >> got) || got != token) {
        throw std::runtime_error("checkpoint: expected '" + token + "', got '" + got + "'");
    }
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const MlpModel& model = checkpoint.model;
    std::ostringstream out;
    out << kMagic << " " << kVersion << "\n";
    out << "seed " << model.init_seed << "\n";
    out << "dims " << model.dims.size();
    for (std::size_t w : model.dims) out << " " << w;
    out << "\n";
    for (std::size_t i = 0; i < model.affines.size(); ++i) {
        out << "affine " << i << "\n";
        write_values(out, model.affines[i].weight.data());
        write_values(out, model.affines[i].bias);
    }
    for (std::size_t i = 0; i < model.norms.size(); ++i) {
        const BatchNormLayer& norm = model.norms[i];
        out << "batchnorm " << i << "\n";
        write_values(out, norm.gamma);
        write_values(out, norm.beta);
        write_values(out, norm.running_mean);
        write_values(out, norm.running_var);
        write_values(out, {norm.momentum});
    }
    if (checkpoint.bank.has_value()) {
        const MemoryBank& bank = *checkpoint.bank;
        out << "bank " << bank.capacity() << " " << bank.num_categories() << " " << bank.size()
            << "\n";
        for (const std::vector<double>& row : bank.rows()) write_values(out, row);
    }
    out << "end\n";

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary);
        if (!file) throw std::runtime_error("checkpoint: cannot open " + tmp.string());
        file << out.str();
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    expect(in, kMagic);
    expect(in, kVersion);
    expect(in, "seed");
    Checkpoint checkpoint;
    MlpModel& model = checkpoint.model;
    if (!(in >> model.init_seed)) throw std::runtime_error("checkpoint: bad seed");
    expect(in, "dims");
    std::size_t ndims = 0;
    if (!(in >> ndims) || ndims < 2) throw std::runtime_error("checkpoint: bad dims header");
    model.dims.resize(ndims);
    for (std::size_t& w : model.dims) {
        if (!(in >> w) || w == 0) throw std::runtime_error("checkpoint: bad width");
    }

    for (std::size_t i = 0; i + 1 < ndims; ++i) {
        expect(in, "affine");
        std::size_t idx = 0;
        if (!(in >> idx) || idx != i) throw std::runtime_error("checkpoint: affine out of order");
        AffineLayer layer;
        layer.weight = Matrix(model.dims[i], model.dims[i + 1]);
        layer.weight.data() = read_values(in, model.dims[i] * model.dims[i + 1], "affine weight");
        layer.bias = read_values(in, model.dims[i + 1], "affine bias");
        model.affines.push_back(std::move(layer));
    }
    for (std::size_t i = 0; i + 2 < ndims; ++i) {
        expect(in, "batchnorm");
        std::size_t idx = 0;
        if (!(in >> idx) || idx != i) throw std::runtime_error("checkpoint: batchnorm out of order");
        BatchNormLayer norm;
        const std::size_t width = model.dims[i + 1];
        norm.gamma = read_values(in, width, "gamma");
        norm.beta = read_values(in, width, "beta");
        norm.running_mean = read_values(in, width, "running_mean");
        norm.running_var = read_values(in, width, "running_var");
        norm.momentum = read_values(in, 1, "momentum")[0];
        for (double v : norm.running_var) {
            if (!(v > 0.0)) throw std::runtime_error("checkpoint: running_var must be positive");
        }
        model.norms.push_back(std::move(norm));
    }

    std::string token;
    if (!(in >> token)) throw std::runtime_error("checkpoint: missing end marker");
    if (token == "bank") {
        std::size_t capacity = 0, categories = 0, count = 0;
        if (!(in >> capacity >> categories >> count)) {
            throw std::runtime_error("checkpoint: bad bank header");
        }
        MemoryBank bank(capacity);
        for (std::size_t r = 0; r < count; ++r) {
            Matrix row(1, categories);
            row.data() = read_values(in, categories, "bank row");
            bank.push_batch(row);
        }
        checkpoint.bank = std::move(bank);
        if (!(in >> token)) throw std::runtime_error("checkpoint: missing end marker");
    }
    if (token != "end") throw std::runtime_error("checkpoint: missing end marker");
    return checkpoint;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    save_checkpoint({model, std::nullopt}, path);
}

MlpModel load_model(const std::filesystem::path& path) {
    return load_checkpoint(path).model;
}

}  // namespace cltta
