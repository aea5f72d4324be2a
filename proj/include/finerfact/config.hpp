#pragma once

#include <string>

#include "finerfact/corpus.hpp"
#include "finerfact/ranker.hpp"
#include "finerfact/reasoner.hpp"
#include "finerfact/topics.hpp"
#include "finerfact/trainer.hpp"

#include "json.hpp"

namespace finerfact {

// Merged configuration document for a whole run. Unknown keys are rejected;
// the hash is taken over the canonical (key-sorted) serialization, so it is
// stable under key reordering in the source file.
struct RunConfig {
    VocabConfig vocab;
    RankerConfig ranker;
    TopicConfig topics;
    ReasonerConfig reasoner;
    TrainConfig trainer;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;
    std::string hash() const;

    // Hash over the stages that shape cached per-article artifacts.
    std::string pipeline_hash(std::uint64_t seed) const;
};

}  // namespace finerfact
