#pragma once

#include <filesystem>
#include <optional>

#include "cltta/bank.hpp"
#include "cltta/net.hpp"

namespace cltta {

// Versioned text container for model state, optionally carrying a memory
// bank section (run checkpoints). Floats are written as C hexfloats, so a
// save/load cycle is bit-exact and repeated saves are byte-identical.
struct Checkpoint {
    MlpModel model;
    std::optional<MemoryBank> bank;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace cltta
