#pragma once

#include <string>
#include <vector>

#include "finerfact/corpus.hpp"
#include "finerfact/sparse.hpp"

namespace finerfact {

struct RankerConfig {
    double damping = 0.85;
    double theta_post = 1e-3;
    double theta_keyword = 1e-3;
    double theta_user = 1e-3;
    double beta_intra = 1.0;  // beta_xx
    double beta_inter = 0.5;  // beta_xy, x != y
    double tolerance = 1e-10;
    int max_iterations = 200;
};

// Three-layer mutual reinforcement evidence graph. Layer order in the stacked
// operator is posts, keywords, users. Inter-layer blocks are stored one way;
// the transpose direction is implied.
struct ReinforcementGraph {
    std::vector<std::string> post_ids;
    std::vector<std::string> keywords;
    std::vector<std::string> user_ids;

    SparseMatrix a_pp;  // post x post, cosine in [0,1], zero diagonal
    SparseMatrix a_kk;  // keyword x keyword, 0/1 co-occurrence
    SparseMatrix a_uu;  // user x user, 0/1 symmetrized comment relation
    SparseMatrix a_kp;  // post x keyword mention incidence
    SparseMatrix a_ku;  // user x keyword mention incidence
    SparseMatrix a_up;  // post x user authorship incidence

    // Attribute-saliency priors, floor-shifted and normalized to sum 1/3 per layer.
    std::vector<double> prior_posts;
    std::vector<double> prior_keywords;
    std::vector<double> prior_users;

    int num_posts() const { return static_cast<int>(post_ids.size()); }
    int num_keywords() const { return static_cast<int>(keywords.size()); }
    int num_users() const { return static_cast<int>(user_ids.size()); }
    int total_nodes() const { return num_posts() + num_keywords() + num_users(); }

    std::vector<double> stacked_prior() const;
};

// Column-stochastic propagation operator derived from the beta-scaled stacked
// affinity matrix. Dangling (all-zero) columns act as uniform columns 1/n.
struct NormalizedOperator {
    SparseMatrix matrix;             // column-normalized non-dangling part
    std::vector<int> dangling_cols;  // columns redistributed uniformly
    int size = 0;

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    Eigen::MatrixXd to_dense() const;
};

struct SaliencyVector {
    std::vector<double> posts;
    std::vector<double> keywords;
    std::vector<double> users;
    int iterations_used = 0;
    double residual = 0.0;
    bool converged = true;

    std::vector<double> stacked() const;
    double sum() const;
};

// Attribute saliencies. The user score may be negative; the floor
// shift is applied when priors are assembled into the graph.
double user_attribute_saliency(const User& user, double theta_u);
double post_attribute_saliency(const Post& post, double theta_p);
double keyword_attribute_saliency(long long freq, double theta_k);

ReinforcementGraph build_reinforcement_graph(const SocialCorpus& corpus,
                                             const std::string& article_id,
                                             const Vocabulary& vocab,
                                             const RankerConfig& config);

// Shift each raw layer so its minimum is positive, then scale to sum 1/3.
std::vector<double> normalize_prior_layer(std::vector<double> raw);

NormalizedOperator normalize(const ReinforcementGraph& graph, const RankerConfig& config);

SaliencyVector propagate_saliency(const ReinforcementGraph& graph,
                                  const RankerConfig& config);

// Exact fixed point (1-d)(I - d*A)^-1 E by dense solve; test oracle, n <= 2000.
SaliencyVector closed_form_saliency(const ReinforcementGraph& graph,
                                    const RankerConfig& config);

}  // namespace finerfact
