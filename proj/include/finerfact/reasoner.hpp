#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finerfact/autodiff.hpp"
#include "finerfact/encoder.hpp"
#include "finerfact/ranker.hpp"
#include "finerfact/topics.hpp"

namespace finerfact {

struct KernelBank {
    std::vector<double> mu;
    std::vector<double> sigma;

    // One exact-match kernel (mu=1, sigma=1e-3) plus count-1 kernels with
    // sigma=0.1 whose means are evenly spaced bin centers within [-1, 1].
    static KernelBank standard(int count);
    int size() const { return static_cast<int>(mu.size()); }
};

enum class Ablation { None, NoPrior, NoUserChannel, NoKernel, NoImportance, NoRanking };

Ablation parse_ablation(const std::string& name);  // "none", "FF-P", "FF-B", ...
std::string ablation_name(Ablation a);

struct ReasonerConfig {
    EncoderConfig encoder;
    int kernel_count = 11;
    int fusion_hidden = 64;
    double appnp_teleport = 0.1;
    int appnp_depth = 10;
    bool separate_channel_attention = false;
    // fixed slice lengths, mirrored from the topic configuration
    int n_posts = 6;
    int n_users = 32;
    int n_keywords = 7;
};

// Everything the network needs for one claim-evidence node, resolved to ids.
struct NodeInput {
    int topic_id = 0;
    std::vector<TextSegment> segments;
    std::vector<int> user_rows;  // rows into the article user matrix
    std::vector<std::string> user_ids;
    std::vector<double> saliency_posts;
    std::vector<double> saliency_users;
    std::vector<double> saliency_keywords;
    double mean_user_saliency = 0.0;
    // presentation-only fields carried through to explanations
    std::vector<std::string> keyword_strings;
    std::vector<std::string> claim_texts;
    std::vector<std::string> post_ids;
};

struct ArticleInput {
    std::string article_id;
    std::optional<int> label;
    std::vector<NodeInput> nodes;
    std::vector<std::string> user_ids;                      // article user universe
    std::vector<std::array<int, 8>> user_feature_buckets;   // per user
    Eigen::MatrixXd user_adjacency;                         // D^-1/2 A_UU D^-1/2
};

ArticleInput assemble_article_input(const SocialCorpus& corpus,
                                    const ClaimEvidenceGraph& ce_graph,
                                    const ReinforcementGraph& m_graph,
                                    const SaliencyVector& saliency,
                                    const ReasonerConfig& config);

// Per ordered node pair (q, v): attention over q's tokens / users.
struct PairAttention {
    std::vector<double> token_attention;
    std::vector<std::string> tokens;
    std::vector<double> user_attention;
    std::vector<std::string> users;
};

struct PredictionBreakdown {
    double final_probability = 0.5;
    std::vector<double> node_labels;       // P(y=1|v,G)
    std::vector<double> node_importances;  // P(v|G,R)
    std::vector<double> ranking_feature;   // phi(v)
    std::vector<double> attention_prior;   // delta(v,R)
    Eigen::MatrixXd node_attention;        // gamma[q][v]
    std::vector<PairAttention> pairs;      // indexed q * N + v
    std::vector<int> topic_ids;
    std::vector<double> mean_user_saliency;
};

class ReasonerModel {
public:
    ReasonerModel(EncoderVocab vocab, ReasonerConfig config, std::uint64_t seed);

    // Tape output; breakdown (when requested) is filled with detached values.
    ad::Tensor forward(const ArticleInput& input, Ablation ablation,
                       PredictionBreakdown* breakdown = nullptr) const;

    PredictionBreakdown predict(const ArticleInput& input,
                                Ablation ablation = Ablation::None) const;

    ad::ParameterStore& params() { return params_; }
    const ad::ParameterStore& params() const { return params_; }
    const ReasonerConfig& config() const { return config_; }
    const KernelBank& kernels() const { return kernels_; }
    const TextEncoder& encoder() const { return *encoder_; }
    std::uint64_t seed() const { return seed_; }

    // APPNP-propagated user embeddings for the whole article (rows align with
    // input.user_ids); undefined tensor when the article has no users.
    ad::Tensor encode_users(const ArticleInput& input) const;

    // Swap the kernel bank; the count must match the configured one since the
    // attention weights are sized by it.
    void set_kernels(KernelBank bank);

private:
    ReasonerConfig config_;
    KernelBank kernels_;
    ad::ParameterStore params_;
    std::unique_ptr<ToyTransformerEncoder> encoder_;
    std::uint64_t seed_ = 0;
};

// Checkpoint archive: parameters, encoder vocabulary, kernel bank, config hash.
void save_checkpoint(const ReasonerModel& model, const std::string& config_hash,
                     const std::string& path);
std::unique_ptr<ReasonerModel> load_checkpoint(const std::string& path,
                                               const std::string& expected_config_hash);
std::string checkpoint_config_hash(const std::string& path);

}  // namespace finerfact
