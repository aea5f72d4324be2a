#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "finerfact/config.hpp"

namespace finerfact {

// Per-article deterministic seed, independent of article order.
std::uint64_t article_seed(std::uint64_t base, const std::string& article_id);

struct ArticleArtifacts {
    Vocabulary vocab;
    ReinforcementGraph graph;
    SaliencyVector saliency;
    TopicModel topic_model;  // empty when the claim-evidence graph came from cache
    ClaimEvidenceGraph ce_graph;
};

// Ranking stages only (vocabulary, reinforcement graph, saliency).
ArticleArtifacts rank_article(const SocialCorpus& corpus, const std::string& article_id,
                              const RunConfig& config);

// Full preprocessing chain for one article. cache_dir may be empty; when set,
// the claim-evidence graph is cached keyed by the pipeline hash.
ArticleArtifacts run_article_pipeline(const SocialCorpus& corpus,
                                      const std::string& article_id,
                                      const RunConfig& config, std::uint64_t seed,
                                      const std::string& cache_dir = "");

ArticleInput prepare_article(const SocialCorpus& corpus, const std::string& article_id,
                             const RunConfig& config, std::uint64_t seed,
                             const std::string& cache_dir = "");

std::vector<ArticleInput> prepare_corpus(const SocialCorpus& corpus, const RunConfig& config,
                                         std::uint64_t seed, const std::string& cache_dir = "",
                                         int jobs = 1, std::ostream* progress = nullptr);

}  // namespace finerfact
