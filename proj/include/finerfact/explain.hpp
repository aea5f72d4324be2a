#pragma once

#include <string>
#include <vector>

#include "finerfact/ranker.hpp"
#include "finerfact/reasoner.hpp"

#include "json.hpp"

namespace finerfact {

// Case-study style explanation artifact: keyword cloud, per-node summaries,
// cross-node attention, and the strongest token/user clues per node pair.
struct Explanation {
    std::string article_id;
    std::vector<std::pair<std::string, double>> keyword_cloud;  // keyword -> saliency

    struct NodeSummary {
        int topic_id = 0;
        std::vector<std::string> keywords;
        std::vector<std::string> claims;
        std::vector<std::string> top_posts;
        double mean_user_saliency = 0.0;
        double label = 0.5;       // P(y=1|v,G)
        double importance = 0.0;  // P(v|G,R)
    };
    std::vector<NodeSummary> nodes;

    Eigen::MatrixXd node_attention;  // gamma[q][v]

    struct PairClues {
        int from_node = 0;
        int to_node = 0;
        std::vector<std::pair<std::string, double>> top_tokens;
        std::vector<std::pair<std::string, double>> top_users;
    };
    std::vector<PairClues> pair_clues;

    double final_probability = 0.5;

    nlohmann::json to_json() const;
};

Explanation emit_explanation(const PredictionBreakdown& breakdown,
                             const ArticleInput& input, const ReinforcementGraph& graph,
                             const SaliencyVector& saliency, int top_k = 3);

// Static figures: keyword cloud sized by saliency and a node-attention
// heatmap; both carry their data tables as embedded text.
void write_keyword_cloud_svg(const Explanation& e, const std::string& path);
void write_attention_heatmap_svg(const Explanation& e, const std::string& path);

}  // namespace finerfact
