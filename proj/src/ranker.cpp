#include "finerfact/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace finerfact {

std::vector<double> ReinforcementGraph::stacked_prior() const {
    std::vector<double> e;
    e.reserve(static_cast<std::size_t>(total_nodes()));
    e.insert(e.end(), prior_posts.begin(), prior_posts.end());
    e.insert(e.end(), prior_keywords.begin(), prior_keywords.end());
    e.insert(e.end(), prior_users.begin(), prior_users.end());
    return e;
}

std::vector<double> SaliencyVector::stacked() const {
    std::vector<double> r;
    r.reserve(posts.size() + keywords.size() + users.size());
    r.insert(r.end(), posts.begin(), posts.end());
    r.insert(r.end(), keywords.begin(), keywords.end());
    r.insert(r.end(), users.begin(), users.end());
    return r;
}

double SaliencyVector::sum() const {
    double s = 0.0;
    for (double v : posts) s += v;
    for (double v : keywords) s += v;
    for (double v : users) s += v;
    return s;
}

double user_attribute_saliency(const User& user, double theta_u) {
    const double in = static_cast<double>(user.follower_count) + theta_u;
    const double listed = static_cast<double>(user.listed_count) + theta_u;
    const double out = static_cast<double>(user.friend_count) + theta_u;
    return std::log(in * in * listed / out);
}

double post_attribute_saliency(const Post& post, double theta_p) {
    return std::log(static_cast<double>(post.retweet_count) + 1.0) + theta_p;
}

double keyword_attribute_saliency(long long freq, double theta_k) {
    return std::log(static_cast<double>(freq) + 1.0) + theta_k;
}

std::vector<double> normalize_prior_layer(std::vector<double> raw) {
    if (raw.empty()) return raw;
    double lo = *std::min_element(raw.begin(), raw.end());
    double shift = (lo < 0.0 ? -lo : 0.0) + 1e-6;
    double total = 0.0;
    for (double& v : raw) {
        v += shift;
        total += v;
    }
    for (double& v : raw) v = v / total / 3.0;
    return raw;
}

namespace {

using Triplet = SparseMatrix::Triplet;

struct TfVector {
    std::vector<std::pair<int, int>> entries;  // (keyword index, count)
    double norm = 0.0;
};

double sparse_cosine(const TfVector& a, const TfVector& b) {
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.entries.size() && j < b.entries.size()) {
        if (a.entries[i].first == b.entries[j].first) {
            dot += static_cast<double>(a.entries[i].second) *
                   static_cast<double>(b.entries[j].second);
            ++i;
            ++j;
        } else if (a.entries[i].first < b.entries[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    return dot / (a.norm * b.norm);
}

}  // namespace

ReinforcementGraph build_reinforcement_graph(const SocialCorpus& corpus,
                                             const std::string& article_id,
                                             const Vocabulary& vocab,
                                             const RankerConfig& config) {
    if (vocab.size() == 0) {
        throw ConstructionError("reinforcement graph: empty keyword layer for article " +
                                article_id);
    }
    const NewsArticle& article = corpus.article(article_id);
    const auto& posts = corpus.posts_for(article_id);
    if (posts.empty()) {
        throw ConstructionError("reinforcement graph: no posts for article " + article_id);
    }

    ReinforcementGraph g;
    for (const auto& p : posts) g.post_ids.push_back(p.id);
    g.keywords = vocab.keywords;

    // users in deterministic first-appearance order: post authors, then comment endpoints
    std::unordered_map<std::string, int> user_index;
    auto add_user = [&](const std::string& id) {
        if (user_index.emplace(id, static_cast<int>(g.user_ids.size())).second) {
            g.user_ids.push_back(id);
        }
    };
    for (const auto& p : posts) add_user(p.author_id);
    const auto cit = corpus.comments.find(article_id);
    const std::vector<CommentEdge> no_edges;
    const auto& comment_edges = cit == corpus.comments.end() ? no_edges : cit->second;
    for (const auto& e : comment_edges) {
        add_user(e.commenter_id);
        add_user(e.commented_id);
    }

    const int np = g.num_posts();
    const int nk = g.num_keywords();
    const int nu = g.num_users();

    // term-frequency vectors and keyword incidence
    std::vector<TfVector> tf(static_cast<std::size_t>(np));
    std::vector<std::vector<int>> posts_of_keyword(static_cast<std::size_t>(nk));
    for (int i = 0; i < np; ++i) {
        tf[i].entries = term_frequency_vector(posts[static_cast<std::size_t>(i)], vocab);
        double sq = 0.0;
        for (const auto& [k, c] : tf[i].entries) {
            sq += static_cast<double>(c) * static_cast<double>(c);
            posts_of_keyword[static_cast<std::size_t>(k)].push_back(i);
        }
        tf[i].norm = std::sqrt(sq);
    }

    // A_PP: cosine over pairs sharing at least one keyword (others are zero anyway)
    std::vector<Triplet> pp;
    {
        std::set<std::pair<int, int>> candidate;
        for (const auto& members : posts_of_keyword) {
            for (std::size_t a = 0; a < members.size(); ++a) {
                for (std::size_t b = a + 1; b < members.size(); ++b) {
                    candidate.emplace(members[a], members[b]);
                }
            }
        }
        for (const auto& [i, j] : candidate) {
            double c = sparse_cosine(tf[static_cast<std::size_t>(i)],
                                     tf[static_cast<std::size_t>(j)]);
            if (c > 0.0) {
                pp.push_back({i, j, c});
                pp.push_back({j, i, c});
            }
        }
    }
    g.a_pp = SparseMatrix(np, np, std::move(pp));

    // A_KK: co-occurrence within one post or one news sentence
    std::vector<Triplet> kk;
    {
        std::set<std::pair<int, int>> seen;
        auto co_occur = [&](const TokenList& tokens) {
            std::set<int> ids;
            for (const auto& t : tokens) {
                auto it = vocab.index.find(t);
                if (it != vocab.index.end()) ids.insert(it->second);
            }
            for (auto a = ids.begin(); a != ids.end(); ++a) {
                for (auto b = std::next(a); b != ids.end(); ++b) {
                    seen.emplace(*a, *b);
                }
            }
        };
        for (const auto& s : article.sentences) co_occur(s);
        for (const auto& p : posts) co_occur(p.tokens);
        for (const auto& [a, b] : seen) {
            kk.push_back({a, b, 1.0});
            kk.push_back({b, a, 1.0});
        }
    }
    g.a_kk = SparseMatrix(nk, nk, std::move(kk));

    // A_UU: symmetrized comment relation
    std::vector<Triplet> uu;
    {
        std::set<std::pair<int, int>> seen;
        for (const auto& e : comment_edges) {
            int a = user_index.at(e.commenter_id);
            int b = user_index.at(e.commented_id);
            seen.emplace(a, b);
            seen.emplace(b, a);
        }
        for (const auto& [a, b] : seen) uu.push_back({a, b, 1.0});
    }
    g.a_uu = SparseMatrix(nu, nu, std::move(uu));

    // mention and authorship incidence
    std::vector<Triplet> kp, ku, up;
    {
        std::set<std::pair<int, int>> ku_seen;
        for (int i = 0; i < np; ++i) {
            const Post& p = posts[static_cast<std::size_t>(i)];
            int author = user_index.at(p.author_id);
            up.push_back({i, author, 1.0});
            for (const auto& [k, _] : tf[static_cast<std::size_t>(i)].entries) {
                kp.push_back({i, k, 1.0});
                ku_seen.emplace(author, k);
            }
        }
        for (const auto& [u, k] : ku_seen) ku.push_back({u, k, 1.0});
    }
    g.a_kp = SparseMatrix(np, nk, std::move(kp));
    g.a_ku = SparseMatrix(nu, nk, std::move(ku));
    g.a_up = SparseMatrix(np, nu, std::move(up));

    // attribute-saliency priors
    std::vector<double> ep, ek, eu;
    ep.reserve(static_cast<std::size_t>(np));
    for (const auto& p : posts) ep.push_back(post_attribute_saliency(p, config.theta_post));
    ek.reserve(static_cast<std::size_t>(nk));
    for (const auto& k : g.keywords) {
        ek.push_back(keyword_attribute_saliency(vocab.frequencies.at(k), config.theta_keyword));
    }
    eu.reserve(static_cast<std::size_t>(nu));
    for (const auto& id : g.user_ids) {
        eu.push_back(user_attribute_saliency(corpus.user(id), config.theta_user));
    }
    g.prior_posts = normalize_prior_layer(std::move(ep));
    g.prior_keywords = normalize_prior_layer(std::move(ek));
    g.prior_users = normalize_prior_layer(std::move(eu));
    return g;
}

void NormalizedOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
    matrix.multiply(x, y);
    if (!dangling_cols.empty()) {
        double mass = 0.0;
        for (int c : dangling_cols) mass += x[static_cast<std::size_t>(c)];
        const double share = mass / static_cast<double>(size);
        for (double& v : y) v += share;
    }
}

Eigen::MatrixXd NormalizedOperator::to_dense() const {
    Eigen::MatrixXd m = matrix.to_dense();
    for (int c : dangling_cols) {
        m.col(c).setConstant(1.0 / static_cast<double>(size));
    }
    return m;
}

NormalizedOperator normalize(const ReinforcementGraph& graph, const RankerConfig& config) {
    const int np = graph.num_posts();
    const int nk = graph.num_keywords();
    const int nu = graph.num_users();
    const int n = np + nk + nu;
    const int off_p = 0, off_k = np, off_u = np + nk;

    std::vector<Triplet> t;
    t.reserve(graph.a_pp.nonzeros() + graph.a_kk.nonzeros() + graph.a_uu.nonzeros() +
              2 * (graph.a_kp.nonzeros() + graph.a_ku.nonzeros() + graph.a_up.nonzeros()));
    const double bi = config.beta_intra;
    const double bx = config.beta_inter;

    graph.a_pp.for_each([&](int r, int c, double v) { t.push_back({off_p + r, off_p + c, bi * v}); });
    graph.a_kk.for_each([&](int r, int c, double v) { t.push_back({off_k + r, off_k + c, bi * v}); });
    graph.a_uu.for_each([&](int r, int c, double v) { t.push_back({off_u + r, off_u + c, bi * v}); });
    graph.a_kp.for_each([&](int r, int c, double v) {
        t.push_back({off_p + r, off_k + c, bx * v});  // keyword -> post
        t.push_back({off_k + c, off_p + r, bx * v});  // post -> keyword
    });
    graph.a_ku.for_each([&](int r, int c, double v) {
        t.push_back({off_u + r, off_k + c, bx * v});
        t.push_back({off_k + c, off_u + r, bx * v});
    });
    graph.a_up.for_each([&](int r, int c, double v) {
        t.push_back({off_p + r, off_u + c, bx * v});
        t.push_back({off_u + c, off_p + r, bx * v});
    });

    NormalizedOperator op;
    op.size = n;
    op.matrix = SparseMatrix(n, n, std::move(t));
    std::vector<double> sums = op.matrix.column_sums();
    for (int c = 0; c < n; ++c) {
        if (sums[static_cast<std::size_t>(c)] == 0.0) op.dangling_cols.push_back(c);
    }
    op.matrix.scale_columns_inverse(sums);
    return op;
}

namespace {

SaliencyVector split_saliency(const ReinforcementGraph& graph, const std::vector<double>& r) {
    SaliencyVector s;
    const auto np = static_cast<std::size_t>(graph.num_posts());
    const auto nk = static_cast<std::size_t>(graph.num_keywords());
    const auto nu = static_cast<std::size_t>(graph.num_users());
    s.posts.assign(r.begin(), r.begin() + np);
    s.keywords.assign(r.begin() + np, r.begin() + np + nk);
    s.users.assign(r.begin() + np + nk, r.begin() + np + nk + nu);
    return s;
}

}  // namespace

SaliencyVector propagate_saliency(const ReinforcementGraph& graph,
                                  const RankerConfig& config) {
    const NormalizedOperator op = normalize(graph, config);
    const std::vector<double> prior = graph.stacked_prior();
    const double d = config.damping;
    const auto n = static_cast<std::size_t>(op.size);

    std::vector<double> r = prior;  // warm start at the prior
    std::vector<double> next(n, 0.0);
    double residual = 0.0;
    int it = 0;
    bool converged = false;
    while (it < config.max_iterations) {
        op.apply(r, next);
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = d * next[i] + (1.0 - d) * prior[i];
        }
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - r[i]);
        r.swap(next);
        ++it;
        if (residual < config.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged && config.tolerance > 0.0) {
        std::cerr << "[warn] saliency propagation stopped at " << it
                  << " iterations with residual " << residual << "\n";
    }
    SaliencyVector s = split_saliency(graph, r);
    s.iterations_used = it;
    s.residual = residual;
    s.converged = converged;
    return s;
}

SaliencyVector closed_form_saliency(const ReinforcementGraph& graph,
                                    const RankerConfig& config) {
    const int n = graph.total_nodes();
    if (n > 2000) {
        throw NumericError("closed_form_saliency: graph too large for dense solve");
    }
    const NormalizedOperator op = normalize(graph, config);
    const std::vector<double> prior = graph.stacked_prior();
    const double d = config.damping;

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - d * op.to_dense();
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e(i) = prior[static_cast<std::size_t>(i)];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd sol = lu.solve((1.0 - d) * e);
    if (!sol.allFinite()) {
        throw NumericError("closed_form_saliency: singular system");
    }

    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = sol(i);
    SaliencyVector s = split_saliency(graph, r);
    s.iterations_used = 0;
    s.residual = 0.0;
    return s;
}

}  // namespace finerfact
