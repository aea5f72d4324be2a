#pragma once

#include <string>
#include <vector>

#include "finerfact/corpus.hpp"
#include "finerfact/ranker.hpp"

#include "json.hpp"

namespace finerfact {

struct TopicModel {
    int num_topics = 0;
    std::vector<std::vector<double>> topic_word;  // T x V, rows sum to 1
    std::vector<std::vector<double>> doc_topic;   // D x T, rows sum to 1
    double perplexity = 0.0;
    std::uint64_t seed = 0;
};

struct TopicConfig {
    int num_topics = 0;  // 0 = perplexity grid search over [grid_lo, grid_hi]
    int grid_lo = 2;
    int grid_hi = 10;
    double alpha = 0.0;  // 0 = 50/T
    double eta = 0.01;
    int gibbs_iterations = 1000;
    int top_keywords = 7;      // N_K
    int max_topics = 5;        // N_T
    int claims_per_topic = 3;  // N_S
    int posts_per_topic = 6;   // N_P
    int users_per_topic = 32;  // N_U
    bool uniform_sampling = false;  // FF-M wiring: ignore saliency when sampling
};

struct ClaimEvidenceNode {
    int topic_id = 0;
    std::vector<int> top_keywords;            // keyword ids, <= N_K
    std::vector<int> claims;                  // sentence indices, <= N_S
    std::vector<std::string> evidence_posts;  // post ids, <= N_P
    std::vector<std::string> evidence_users;  // user ids, <= N_U
    double topic_saliency = 0.0;
    // descending, zero-padded to exactly N_P / N_U / N_K
    std::vector<double> saliency_posts;
    std::vector<double> saliency_users;
    std::vector<double> saliency_keywords;
};

struct ClaimEvidenceGraph {
    std::string article_id;
    std::vector<ClaimEvidenceNode> nodes;
    std::vector<std::pair<int, int>> topology;  // all ordered pairs incl. self

    nlohmann::json to_json() const;
    static ClaimEvidenceGraph from_json(const nlohmann::json& j);
};

// Documents are keyword-id lists over the article vocabulary; empty docs are
// allowed and receive a uniform topic distribution.
using IdDocs = std::vector<std::vector<int>>;

TopicModel fit_topic_model(const IdDocs& docs, int vocab_size, int num_topics,
                           double alpha, double eta, int iterations, std::uint64_t seed);

int select_topic_count(const IdDocs& docs, int vocab_size, int grid_lo, int grid_hi,
                       double alpha, double eta, int iterations, std::uint64_t seed);

double topic_saliency(const std::vector<double>& topic_word_row,
                      const std::vector<int>& top_keywords,
                      const std::vector<double>& keyword_scores);

std::vector<int> top_topic_keywords(const TopicModel& model, int topic, int n_k);

std::vector<int> select_topics(const TopicModel& model, const SaliencyVector& saliency,
                               int n_t, int n_k);

// Top-N_S sentence indices by P(t|s) over the sentence documents (doc ids
// 0..num_sentences-1 in the model), ties by sentence order.
std::vector<int> extract_claims(const TopicModel& model, int num_sentences, int topic,
                                int n_s);

// Candidate index shared by evidence sampling: which posts mention a keyword
// and which users wrote or commented on a post.
struct EvidenceIndex {
    std::vector<std::vector<int>> posts_of_keyword;
    std::vector<std::vector<int>> users_of_post;
};

EvidenceIndex build_evidence_index(const SocialCorpus& corpus, const std::string& article_id,
                                   const ReinforcementGraph& graph);

struct SampledEvidence {
    std::vector<int> post_indices;
    std::vector<int> user_indices;
    bool fallback_used = false;
};

SampledEvidence sample_evidence(const std::vector<int>& topic_keywords,
                                const EvidenceIndex& index, const SaliencyVector& saliency,
                                int n_p, int n_u, Rng& rng, bool uniform_weights);

ClaimEvidenceGraph build_claim_evidence_graph(const SocialCorpus& corpus,
                                              const std::string& article_id,
                                              const ReinforcementGraph& graph,
                                              const TopicModel& model,
                                              const SaliencyVector& saliency,
                                              const TopicConfig& config,
                                              std::uint64_t seed);

// Sentences first, then posts, mapped to article-vocabulary ids.
IdDocs make_documents(const SocialCorpus& corpus, const std::string& article_id,
                      const Vocabulary& vocab);

}  // namespace finerfact
