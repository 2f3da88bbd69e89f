#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "scbm/lexicon.hpp"
#include "scbm/models.hpp"
#include "scbm/nncore.hpp"

namespace scbm {

// Everything needed to resume or serve a trained head. The JSON container
// stores each tensor with its shape; doubles use shortest round-trip text so
// save -> load restores every bit.
struct Checkpoint {
    Head head;
    ConceptLexicon lexicon;
    std::uint64_t seed = 0;
    nn::RmsPropState optimizer;
    double multilabel_threshold = 0.5;
    std::map<std::string, std::string> metadata;
};

inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& contents);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// SHA-256 of the serialized form.
std::string checkpoint_hash(const Checkpoint& checkpoint);

}  // namespace scbm
