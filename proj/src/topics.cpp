#include "finerfact/topics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <unordered_map>

namespace finerfact {

using nlohmann::json;

TopicModel fit_topic_model(const IdDocs& docs, int vocab_size, int num_topics,
                           double alpha, double eta, int iterations, std::uint64_t seed) {
    if (num_topics < 2) throw ConfigError("fit_topic_model: need at least 2 topics");
    if (alpha <= 0.0) alpha = 50.0 / num_topics;

    const int T = num_topics;
    const int V = vocab_size;
    std::size_t total_tokens = 0;
    for (const auto& d : docs) total_tokens += d.size();
    if (total_tokens == 0) throw ConstructionError("fit_topic_model: all documents empty");

    const auto D = docs.size();
    std::vector<std::vector<int>> assignment(D);
    std::vector<std::vector<long long>> n_dt(D, std::vector<long long>(T, 0));
    std::vector<std::vector<long long>> n_tw(T, std::vector<long long>(V, 0));
    std::vector<long long> n_t(T, 0);

    Rng rng(seed);
    std::uniform_int_distribution<int> init_topic(0, T - 1);
    for (std::size_t d = 0; d < D; ++d) {
        assignment[d].resize(docs[d].size());
        for (std::size_t i = 0; i < docs[d].size(); ++i) {
            int t = init_topic(rng);
            assignment[d][i] = t;
            n_dt[d][t] += 1;
            n_tw[t][docs[d][i]] += 1;
            n_t[t] += 1;
        }
    }

    std::vector<double> weights(T);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double veta = V * eta;
    for (int sweep = 0; sweep < iterations; ++sweep) {
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t i = 0; i < docs[d].size(); ++i) {
                const int w = docs[d][i];
                const int old_t = assignment[d][i];
                n_dt[d][old_t] -= 1;
                n_tw[old_t][w] -= 1;
                n_t[old_t] -= 1;

                double total = 0.0;
                for (int t = 0; t < T; ++t) {
                    total += weights[t] = (n_dt[d][t] + alpha) * (n_tw[t][w] + eta) /
                                          (n_t[t] + veta);
                }
                double u = unit(rng) * total;
                int new_t = T - 1;
                for (int t = 0; t < T; ++t) {
                    u -= weights[t];
                    if (u <= 0.0) {
                        new_t = t;
                        break;
                    }
                }
                assignment[d][i] = new_t;
                n_dt[d][new_t] += 1;
                n_tw[new_t][w] += 1;
                n_t[new_t] += 1;
            }
        }
    }

    TopicModel model;
    model.num_topics = T;
    model.seed = seed;
    model.topic_word.assign(T, std::vector<double>(V, 0.0));
    for (int t = 0; t < T; ++t) {
        const double denom = n_t[t] + veta;
        for (int w = 0; w < V; ++w) {
            model.topic_word[t][w] = (n_tw[t][w] + eta) / denom;
        }
    }
    model.doc_topic.assign(D, std::vector<double>(T, 0.0));
    for (std::size_t d = 0; d < D; ++d) {
        const double nd = static_cast<double>(docs[d].size());
        const double denom = nd + T * alpha;
        for (int t = 0; t < T; ++t) {
            // empty documents fall back to the uniform prior
            model.doc_topic[d][t] = docs[d].empty()
                                        ? 1.0 / T
                                        : (n_dt[d][t] + alpha) / denom;
        }
    }

    // held-in perplexity under the point estimates
    double log_lik = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        for (int w : docs[d]) {
            double p = 0.0;
            for (int t = 0; t < T; ++t) p += model.doc_topic[d][t] * model.topic_word[t][w];
            log_lik += std::log(std::max(p, 1e-300));
        }
    }
    model.perplexity = std::exp(-log_lik / static_cast<double>(total_tokens));
    return model;
}

int select_topic_count(const IdDocs& docs, int vocab_size, int grid_lo, int grid_hi,
                       double alpha, double eta, int iterations, std::uint64_t seed) {
    if (grid_lo < 2 || grid_hi < grid_lo) {
        throw ConfigError("select_topic_count: bad grid range");
    }
    int best_t = grid_lo;
    double best_perplexity = std::numeric_limits<double>::infinity();
    for (int t = grid_lo; t <= grid_hi; ++t) {
        TopicModel m = fit_topic_model(docs, vocab_size, t, alpha, eta, iterations,
                                       seed + static_cast<std::uint64_t>(t));
        if (m.perplexity < best_perplexity) {
            best_perplexity = m.perplexity;
            best_t = t;
        }
    }
    return best_t;
}

double topic_saliency(const std::vector<double>& topic_word_row,
                      const std::vector<int>& top_keywords,
                      const std::vector<double>& keyword_scores) {
    double r = 0.0;
    for (int k : top_keywords) {
        r += topic_word_row[static_cast<std::size_t>(k)] *
             keyword_scores[static_cast<std::size_t>(k)];
    }
    return r;
}

std::vector<int> top_topic_keywords(const TopicModel& model, int topic, int n_k) {
    const auto& row = model.topic_word[static_cast<std::size_t>(topic)];
    std::vector<int> ids(row.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
    });
    if (static_cast<int>(ids.size()) > n_k) ids.resize(static_cast<std::size_t>(n_k));
    return ids;
}

std::vector<int> select_topics(const TopicModel& model, const SaliencyVector& saliency,
                               int n_t, int n_k) {
    std::vector<std::pair<double, int>> scored;
    for (int t = 0; t < model.num_topics; ++t) {
        auto kt = top_topic_keywords(model, t, n_k);
        scored.emplace_back(
            topic_saliency(model.topic_word[static_cast<std::size_t>(t)], kt,
                           saliency.keywords),
            t);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    for (int i = 0; i < std::min<int>(n_t, static_cast<int>(scored.size())); ++i) {
        out.push_back(scored[static_cast<std::size_t>(i)].second);
    }
    return out;
}

std::vector<int> extract_claims(const TopicModel& model, int num_sentences, int topic,
                                int n_s) {
    std::vector<int> ids(static_cast<std::size_t>(num_sentences));
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return model.doc_topic[static_cast<std::size_t>(a)][static_cast<std::size_t>(topic)] >
               model.doc_topic[static_cast<std::size_t>(b)][static_cast<std::size_t>(topic)];
    });
    if (static_cast<int>(ids.size()) > n_s) ids.resize(static_cast<std::size_t>(n_s));
    return ids;
}

EvidenceIndex build_evidence_index(const SocialCorpus& corpus, const std::string& article_id,
                                   const ReinforcementGraph& graph) {
    EvidenceIndex idx;
    idx.posts_of_keyword.assign(static_cast<std::size_t>(graph.num_keywords()), {});
    graph.a_kp.for_each([&](int post, int keyword, double) {
        idx.posts_of_keyword[static_cast<std::size_t>(keyword)].push_back(post);
    });

    std::unordered_map<std::string, int> user_index;
    for (int u = 0; u < graph.num_users(); ++u) {
        user_index[graph.user_ids[static_cast<std::size_t>(u)]] = u;
    }
    std::unordered_map<std::string, int> post_index;
    const auto& posts = corpus.posts_for(article_id);
    for (int p = 0; p < static_cast<int>(posts.size()); ++p) {
        post_index[posts[static_cast<std::size_t>(p)].id] = p;
    }

    idx.users_of_post.assign(posts.size(), {});
    std::vector<std::set<int>> seen(posts.size());
    for (std::size_t p = 0; p < posts.size(); ++p) {
        seen[p].insert(user_index.at(posts[p].author_id));
    }
    // commenters: authors of replies to a post
    for (const auto& post : posts) {
        if (!post.reply_to) continue;
        auto tgt = post_index.find(*post.reply_to);
        if (tgt == post_index.end()) continue;
        seen[static_cast<std::size_t>(tgt->second)].insert(user_index.at(post.author_id));
    }
    for (std::size_t p = 0; p < posts.size(); ++p) {
        idx.users_of_post[p].assign(seen[p].begin(), seen[p].end());
    }
    return idx;
}

namespace {

// Weighted sampling without replacement; zero total weight falls back to uniform.
std::vector<int> sample_without_replacement(std::vector<int> candidates,
                                            const std::vector<double>& scores, int count,
                                            Rng& rng, bool uniform_weights) {
    std::vector<int> picked;
    if (candidates.empty()) return picked;
    std::sort(candidates.begin(), candidates.end());
    while (static_cast<int>(picked.size()) < count && !candidates.empty()) {
        double total = 0.0;
        for (int c : candidates) {
            total += uniform_weights ? 1.0 : std::max(scores[static_cast<std::size_t>(c)], 0.0);
        }
        std::size_t chosen = 0;
        if (total <= 0.0) {
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            chosen = pick(rng);
        } else {
            std::uniform_real_distribution<double> unit(0.0, total);
            double u = unit(rng);
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                double w = uniform_weights
                               ? 1.0
                               : std::max(scores[static_cast<std::size_t>(candidates[i])], 0.0);
                u -= w;
                if (u <= 0.0) {
                    chosen = i;
                    break;
                }
                if (i + 1 == candidates.size()) chosen = i;
            }
        }
        picked.push_back(candidates[chosen]);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    return picked;
}

std::vector<int> top_by_score(const std::vector<double>& scores, int count) {
    std::vector<int> ids(scores.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    if (static_cast<int>(ids.size()) > count) ids.resize(static_cast<std::size_t>(count));
    return ids;
}

}  // namespace

SampledEvidence sample_evidence(const std::vector<int>& topic_keywords,
                                const EvidenceIndex& index, const SaliencyVector& saliency,
                                int n_p, int n_u, Rng& rng, bool uniform_weights) {
    SampledEvidence out;
    std::set<int> post_set;
    for (int k : topic_keywords) {
        const auto& ps = index.posts_of_keyword[static_cast<std::size_t>(k)];
        post_set.insert(ps.begin(), ps.end());
    }
    std::vector<int> post_candidates(post_set.begin(), post_set.end());
    if (post_candidates.empty()) {
        std::cerr << "[warn] no posts mention the topic keywords; falling back to "
                     "top-saliency posts\n";
        out.fallback_used = true;
        out.post_indices = top_by_score(saliency.posts, n_p);
    } else {
        out.post_indices = sample_without_replacement(post_candidates, saliency.posts, n_p,
                                                      rng, uniform_weights);
    }

    std::set<int> user_set;
    for (int p : out.post_indices) {
        const auto& us = index.users_of_post[static_cast<std::size_t>(p)];
        user_set.insert(us.begin(), us.end());
    }
    std::vector<int> user_candidates(user_set.begin(), user_set.end());
    if (user_candidates.empty()) {
        std::cerr << "[warn] no users attached to the sampled posts; falling back to "
                     "top-saliency users\n";
        out.fallback_used = true;
        out.user_indices = top_by_score(saliency.users, n_u);
    } else {
        out.user_indices = sample_without_replacement(user_candidates, saliency.users, n_u,
                                                      rng, uniform_weights);
    }
    return out;
}

IdDocs make_documents(const SocialCorpus& corpus, const std::string& article_id,
                      const Vocabulary& vocab) {
    IdDocs docs;
    auto to_ids = [&](const TokenList& toks) {
        std::vector<int> ids;
        for (const auto& t : toks) {
            auto it = vocab.index.find(t);
            if (it != vocab.index.end()) ids.push_back(it->second);
        }
        return ids;
    };
    const NewsArticle& article = corpus.article(article_id);
    for (const auto& s : article.sentences) docs.push_back(to_ids(s));
    for (const auto& p : corpus.posts_for(article_id)) docs.push_back(to_ids(p.tokens));
    return docs;
}

ClaimEvidenceGraph build_claim_evidence_graph(const SocialCorpus& corpus,
                                              const std::string& article_id,
                                              const ReinforcementGraph& graph,
                                              const TopicModel& model,
                                              const SaliencyVector& saliency,
                                              const TopicConfig& config,
                                              std::uint64_t seed) {
    const NewsArticle& article = corpus.article(article_id);
    const auto& posts = corpus.posts_for(article_id);

    std::vector<int> chosen = select_topics(model, saliency, config.max_topics,
                                            config.top_keywords);
    if (chosen.empty()) {
        throw ConstructionError("claim-evidence graph: no selectable topics for article " +
                                article_id);
    }
    EvidenceIndex index = build_evidence_index(corpus, article_id, graph);

    auto padded_slice = [](std::vector<double> v, int len) {
        std::sort(v.begin(), v.end(), std::greater<double>());
        v.resize(static_cast<std::size_t>(len), 0.0);
        return v;
    };

    ClaimEvidenceGraph g;
    g.article_id = article_id;
    Rng rng(seed);
    for (int t : chosen) {
        ClaimEvidenceNode node;
        node.topic_id = t;
        node.top_keywords = top_topic_keywords(model, t, config.top_keywords);
        node.claims = extract_claims(model, static_cast<int>(article.sentences.size()), t,
                                     config.claims_per_topic);
        SampledEvidence ev =
            sample_evidence(node.top_keywords, index, saliency, config.posts_per_topic,
                            config.users_per_topic, rng, config.uniform_sampling);
        std::vector<double> post_scores, user_scores, keyword_scores;
        for (int p : ev.post_indices) {
            node.evidence_posts.push_back(posts[static_cast<std::size_t>(p)].id);
            post_scores.push_back(saliency.posts[static_cast<std::size_t>(p)]);
        }
        for (int u : ev.user_indices) {
            node.evidence_users.push_back(graph.user_ids[static_cast<std::size_t>(u)]);
            user_scores.push_back(saliency.users[static_cast<std::size_t>(u)]);
        }
        for (int k : node.top_keywords) {
            keyword_scores.push_back(saliency.keywords[static_cast<std::size_t>(k)]);
        }
        node.topic_saliency = topic_saliency(model.topic_word[static_cast<std::size_t>(t)],
                                             node.top_keywords, saliency.keywords);
        node.saliency_posts = padded_slice(std::move(post_scores), config.posts_per_topic);
        node.saliency_users = padded_slice(std::move(user_scores), config.users_per_topic);
        node.saliency_keywords = padded_slice(std::move(keyword_scores), config.top_keywords);
        g.nodes.push_back(std::move(node));
    }
    const int n = static_cast<int>(g.nodes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g.topology.emplace_back(i, j);
    }
    return g;
}

json ClaimEvidenceGraph::to_json() const {
    json nodes_j = json::array();
    for (const auto& n : nodes) {
        nodes_j.push_back(json{{"topic_id", n.topic_id},
                               {"top_keywords", n.top_keywords},
                               {"claims", n.claims},
                               {"evidence_posts", n.evidence_posts},
                               {"evidence_users", n.evidence_users},
                               {"topic_saliency", n.topic_saliency},
                               {"saliency_posts", n.saliency_posts},
                               {"saliency_users", n.saliency_users},
                               {"saliency_keywords", n.saliency_keywords}});
    }
    json topo = json::array();
    for (const auto& [a, b] : topology) topo.push_back(json::array({a, b}));
    return json{{"article_id", article_id}, {"nodes", nodes_j}, {"topology", topo}};
}

ClaimEvidenceGraph ClaimEvidenceGraph::from_json(const json& j) {
    ClaimEvidenceGraph g;
    g.article_id = j.at("article_id").get<std::string>();
    for (const auto& nj : j.at("nodes")) {
        ClaimEvidenceNode n;
        n.topic_id = nj.at("topic_id").get<int>();
        n.top_keywords = nj.at("top_keywords").get<std::vector<int>>();
        n.claims = nj.at("claims").get<std::vector<int>>();
        n.evidence_posts = nj.at("evidence_posts").get<std::vector<std::string>>();
        n.evidence_users = nj.at("evidence_users").get<std::vector<std::string>>();
        n.topic_saliency = nj.at("topic_saliency").get<double>();
        n.saliency_posts = nj.at("saliency_posts").get<std::vector<double>>();
        n.saliency_users = nj.at("saliency_users").get<std::vector<double>>();
        n.saliency_keywords = nj.at("saliency_keywords").get<std::vector<double>>();
        g.nodes.push_back(std::move(n));
    }
    for (const auto& pj : j.at("topology")) {
        g.topology.emplace_back(pj.at(0).get<int>(), pj.at(1).get<int>());
    }
    return g;
}

}  // namespace finerfact
