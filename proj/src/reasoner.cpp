#include "finerfact/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace finerfact {

using ad::Mask;
using ad::Tensor;

KernelBank KernelBank::standard(int count) {
    if (count < 1) throw ConfigError("kernel bank needs at least one kernel");
    KernelBank bank;
    bank.mu.push_back(1.0);  // exact-match kernel
    bank.sigma.push_back(1e-3);
    const int soft = count - 1;
    for (int i = 0; i < soft; ++i) {
        bank.mu.push_back(-1.0 + (2.0 * i + 1.0) / soft);
        bank.sigma.push_back(0.1);
    }
    return bank;
}

Ablation parse_ablation(const std::string& name) {
    if (name == "none" || name.empty()) return Ablation::None;
    if (name == "FF-P") return Ablation::NoPrior;
    if (name == "FF-B") return Ablation::NoUserChannel;
    if (name == "FF-K") return Ablation::NoKernel;
    if (name == "FF-I") return Ablation::NoImportance;
    if (name == "FF-M") return Ablation::NoRanking;
    throw ConfigError("unknown ablation variant: " + name);
}

std::string ablation_name(Ablation a) {
    switch (a) {
        case Ablation::None: return "none";
        case Ablation::NoPrior: return "FF-P";
        case Ablation::NoUserChannel: return "FF-B";
        case Ablation::NoKernel: return "FF-K";
        case Ablation::NoImportance: return "FF-I";
        case Ablation::NoRanking: return "FF-M";
    }
    return "none";
}

namespace {

int log2_bucket(long long count) {
    int b = static_cast<int>(std::floor(std::log2(static_cast<double>(count) + 1.0)));
    return std::min(b, 30);
}

constexpr int kBucketCount = 31;
constexpr int kAttrEmbedDim = 8;

const char* kCountTables[6] = {"followers", "friends", "listed",
                               "favourites", "statuses", "description"};

}  // namespace

ArticleInput assemble_article_input(const SocialCorpus& corpus,
                                    const ClaimEvidenceGraph& ce_graph,
                                    const ReinforcementGraph& m_graph,
                                    const SaliencyVector& saliency,
                                    const ReasonerConfig& config) {
    const NewsArticle& article = corpus.article(ce_graph.article_id);
    const auto& posts = corpus.posts_for(ce_graph.article_id);
    std::unordered_map<std::string, const Post*> post_by_id;
    for (const auto& p : posts) post_by_id[p.id] = &p;
    std::unordered_map<std::string, int> user_row;
    for (int u = 0; u < m_graph.num_users(); ++u) {
        user_row[m_graph.user_ids[static_cast<std::size_t>(u)]] = u;
    }

    ArticleInput input;
    input.article_id = ce_graph.article_id;
    input.label = article.label;
    input.user_ids = m_graph.user_ids;
    for (const auto& id : m_graph.user_ids) {
        const User& u = corpus.user(id);
        input.user_feature_buckets.push_back(
            {log2_bucket(u.follower_count), log2_bucket(u.friend_count),
             log2_bucket(u.listed_count), log2_bucket(u.favourite_count),
             log2_bucket(u.status_count), log2_bucket(u.description_word_count),
             u.verified ? 1 : 0, u.geo_enabled ? 1 : 0});
    }

    // symmetric normalization of the user-user layer, no self loops
    const int nu = m_graph.num_users();
    Eigen::MatrixXd adj = m_graph.a_uu.to_dense();
    Eigen::VectorXd deg = adj.rowwise().sum();
    input.user_adjacency = Eigen::MatrixXd::Zero(nu, nu);
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nu; ++j) {
            if (adj(i, j) != 0.0 && deg(i) > 0.0 && deg(j) > 0.0) {
                input.user_adjacency(i, j) = adj(i, j) / std::sqrt(deg(i) * deg(j));
            }
        }
    }

    for (const auto& node : ce_graph.nodes) {
        NodeInput ni;
        ni.topic_id = node.topic_id;
        for (int s : node.claims) {
            const auto& sent = article.sentences[static_cast<std::size_t>(s)];
            ni.segments.push_back({TextSegment::Kind::Claim, sent});
            std::string text;
            for (const auto& t : sent) {
                if (!text.empty()) text += ' ';
                text += t;
            }
            ni.claim_texts.push_back(std::move(text));
        }
        for (const auto& pid : node.evidence_posts) {
            auto it = post_by_id.find(pid);
            if (it == post_by_id.end()) {
                throw LinkError("claim-evidence node references unknown post " + pid);
            }
            ni.segments.push_back({TextSegment::Kind::Post, it->second->tokens});
            ni.post_ids.push_back(pid);
        }
        double sal_sum = 0.0;
        for (const auto& uid : node.evidence_users) {
            auto it = user_row.find(uid);
            if (it == user_row.end()) {
                throw LinkError("claim-evidence node references unknown user " + uid);
            }
            ni.user_rows.push_back(it->second);
            ni.user_ids.push_back(uid);
            sal_sum += saliency.users[static_cast<std::size_t>(it->second)];
        }
        ni.mean_user_saliency =
            ni.user_rows.empty() ? 0.0 : sal_sum / static_cast<double>(ni.user_rows.size());
        for (int k : node.top_keywords) {
            ni.keyword_strings.push_back(m_graph.keywords[static_cast<std::size_t>(k)]);
        }
        auto pad = [](std::vector<double> v, int len) {
            v.resize(static_cast<std::size_t>(len), 0.0);
            return v;
        };
        ni.saliency_posts = pad(node.saliency_posts, config.n_posts);
        ni.saliency_users = pad(node.saliency_users, config.n_users);
        ni.saliency_keywords = pad(node.saliency_keywords, config.n_keywords);
        input.nodes.push_back(std::move(ni));
    }
    return input;
}

ReasonerModel::ReasonerModel(EncoderVocab vocab, ReasonerConfig config, std::uint64_t seed)
    : config_(config), kernels_(KernelBank::standard(config.kernel_count)), seed_(seed) {
    Rng rng(seed);
    encoder_ = std::make_unique<ToyTransformerEncoder>(std::move(vocab), config.encoder,
                                                       params_, rng);
    const auto dim = static_cast<Eigen::Index>(config_.encoder.embed_dim);
    const auto nk = static_cast<Eigen::Index>(kernels_.size());
    const auto hidden = static_cast<Eigen::Index>(config_.fusion_hidden);

    for (const char* name : kCountTables) {
        params_.create(std::string("user_feat.") + name, kBucketCount, kAttrEmbedDim, 0.1, rng);
    }
    params_.create("user_feat.verified", 2, kAttrEmbedDim, 0.1, rng);
    params_.create("user_feat.geo", 2, kAttrEmbedDim, 0.1, rng);
    params_.create("user_feat.proj", 8 * kAttrEmbedDim, dim, 0.1, rng);
    params_.create_zeros("user_feat.proj_bias", 1, dim);

    params_.create("attn.text.w1", nk, 1, 0.1, rng);
    params_.create_zeros("attn.text.b1", 1, 1);
    params_.create("attn.user.w2", nk, 1, 0.1, rng);
    params_.create_zeros("attn.user.b2", 1, 1);

    if (config_.separate_channel_attention) {
        params_.create("fusion.text.w1", 2 * dim, hidden, 0.1, rng);
        params_.create_zeros("fusion.text.b1", 1, hidden);
        params_.create("fusion.text.w2", hidden, 1, 0.1, rng);
        params_.create_zeros("fusion.text.b2", 1, 1);
        params_.create("fusion.user.w1", 2 * dim, hidden, 0.1, rng);
        params_.create_zeros("fusion.user.b1", 1, hidden);
        params_.create("fusion.user.w2", hidden, 1, 0.1, rng);
        params_.create_zeros("fusion.user.b2", 1, 1);
    } else {
        params_.create("fusion.w1", 4 * dim, hidden, 0.1, rng);
        params_.create_zeros("fusion.b1", 1, hidden);
        params_.create("fusion.w2", hidden, 1, 0.1, rng);
        params_.create_zeros("fusion.b2", 1, 1);
    }

    params_.create("label.w5", 2 * dim, 1, 0.1, rng);
    params_.create("label.w6", 2 * dim, 1, 0.1, rng);
    params_.create_zeros("label.b5", 1, 1);

    params_.create("importance.w7", nk, 1, 0.1, rng);
    params_.create_zeros("importance.b6", 1, 1);
    params_.create_constant("importance.w8_raw", config_.n_posts, 1, -2.0);
    params_.create_constant("importance.w9_raw", config_.n_users, 1, -2.0);
    params_.create_constant("importance.w10_raw", config_.n_keywords, 1, -2.0);
}

void ReasonerModel::set_kernels(KernelBank bank) {
    if (bank.size() != kernels_.size()) {
        throw ConfigError("set_kernels: bank size must match the configured kernel count");
    }
    kernels_ = std::move(bank);
}

Tensor ReasonerModel::encode_users(const ArticleInput& input) const {
    const auto nu = static_cast<Eigen::Index>(input.user_ids.size());
    if (nu == 0) return Tensor();
    std::vector<int> buckets[8];
    for (const auto& b : input.user_feature_buckets) {
        for (int a = 0; a < 8; ++a) buckets[a].push_back(b[static_cast<std::size_t>(a)]);
    }
    std::vector<Tensor> parts;
    for (int a = 0; a < 6; ++a) {
        parts.push_back(ad::gather_rows(
            params_.get(std::string("user_feat.") + kCountTables[a]), buckets[a]));
    }
    parts.push_back(ad::gather_rows(params_.get("user_feat.verified"), buckets[6]));
    parts.push_back(ad::gather_rows(params_.get("user_feat.geo"), buckets[7]));
    Tensor features = ad::concat_cols(parts);
    Tensor h = ad::add(ad::matmul(features, params_.get("user_feat.proj")),
                       params_.get("user_feat.proj_bias"));

    // APPNP over the user-user layer
    Tensor adjacency = Tensor::constant(input.user_adjacency);
    const double alpha = config_.appnp_teleport;
    Tensor z = h;
    for (int k = 0; k < config_.appnp_depth; ++k) {
        z = ad::add(ad::scale(ad::matmul(adjacency, z), 1.0 - alpha), ad::scale(h, alpha));
    }
    return z;
}

Tensor ReasonerModel::forward(const ArticleInput& input, Ablation ablation,
                              PredictionBreakdown* breakdown) const {
    const int n = static_cast<int>(input.nodes.size());
    if (n == 0) throw ConstructionError("forward: article has no claim-evidence nodes");
    const auto dim = static_cast<Eigen::Index>(config_.encoder.embed_dim);
    const bool use_users = ablation != Ablation::NoUserChannel;
    const bool use_kernels = ablation != Ablation::NoKernel;

    std::vector<TokenEncoding> enc;
    enc.reserve(static_cast<std::size_t>(n));
    for (const auto& node : input.nodes) enc.push_back(encoder().encode(node.segments));

    // user embeddings per node (empty tensor when the node has no users)
    std::vector<Tensor> node_users(static_cast<std::size_t>(n));
    std::vector<Tensor> node_user_pool(static_cast<std::size_t>(n));
    Tensor zero_row = Tensor::constant(ad::Matrix::Zero(1, dim));
    if (use_users) {
        Tensor all_users = encode_users(input);
        for (int v = 0; v < n; ++v) {
            const auto& rows = input.nodes[static_cast<std::size_t>(v)].user_rows;
            if (all_users.defined() && !rows.empty()) {
                Tensor uv = ad::gather_rows(all_users, rows);
                node_users[static_cast<std::size_t>(v)] = uv;
                node_user_pool[static_cast<std::size_t>(v)] =
                    ad::masked_max_rows(uv, Mask(rows.size(), 1));
            } else {
                node_user_pool[static_cast<std::size_t>(v)] = zero_row;
            }
        }
    } else {
        for (int v = 0; v < n; ++v) node_user_pool[static_cast<std::size_t>(v)] = zero_row;
    }

    // pairwise propagated content
    std::vector<Tensor> zhat(static_cast<std::size_t>(n * n));
    std::vector<Tensor> xhat(static_cast<std::size_t>(n * n));
    std::vector<PairAttention> pair_info;
    if (breakdown) pair_info.resize(static_cast<std::size_t>(n * n));
    for (int q = 0; q < n; ++q) {
        for (int v = 0; v < n; ++v) {
            const auto idx = static_cast<std::size_t>(q * n + v);
            const auto& eq = enc[static_cast<std::size_t>(q)];
            const auto& ev = enc[static_cast<std::size_t>(v)];
            if (use_kernels) {
                Tensor translation = ad::cosine_matrix(eq.embeddings, ev.embeddings);
                Tensor psi = ad::kernel_features(translation, kernels_.mu, kernels_.sigma,
                                                 ev.content_mask);
                Tensor logits = ad::add(ad::matmul(psi, params_.get("attn.text.w1")),
                                        params_.get("attn.text.b1"));
                Tensor alpha = ad::masked_softmax(logits, eq.content_mask);
                zhat[idx] = ad::matmul(ad::transpose(alpha), eq.embeddings);
                if (breakdown) {
                    auto& pi = pair_info[idx];
                    pi.tokens = eq.surface;
                    const auto& av = alpha.value();
                    pi.token_attention.assign(av.data(), av.data() + av.size());
                }
            } else {
                zhat[idx] = eq.sequence;
            }

            if (use_users) {
                const Tensor& uq = node_users[static_cast<std::size_t>(q)];
                const Tensor& uv = node_users[static_cast<std::size_t>(v)];
                if (uq.defined() && uv.defined() && use_kernels) {
                    Tensor translation = ad::cosine_matrix(uq, uv);
                    Tensor psi = ad::kernel_features(
                        translation, kernels_.mu, kernels_.sigma,
                        Mask(static_cast<std::size_t>(uv.rows()), 1));
                    Tensor logits = ad::add(ad::matmul(psi, params_.get("attn.user.w2")),
                                            params_.get("attn.user.b2"));
                    Tensor rho = ad::masked_softmax(
                        logits, Mask(static_cast<std::size_t>(uq.rows()), 1));
                    xhat[idx] = ad::matmul(ad::transpose(rho), uq);
                    if (breakdown) {
                        auto& pi = pair_info[idx];
                        pi.users = input.nodes[static_cast<std::size_t>(q)].user_ids;
                        const auto& rv = rho.value();
                        pi.user_attention.assign(rv.data(), rv.data() + rv.size());
                    }
                } else if (uq.defined() && !use_kernels) {
                    xhat[idx] = node_user_pool[static_cast<std::size_t>(q)];
                } else {
                    xhat[idx] = zero_row;
                }
            } else {
                xhat[idx] = zero_row;
            }
        }
    }

    // fused node-level attention, one distribution over q per target v
    auto mlp = [&](const Tensor& in, const std::string& prefix) {
        Tensor h = ad::tanh_t(ad::add(ad::matmul(in, params_.get(prefix + "w1")),
                                      params_.get(prefix + "b1")));
        return ad::add(ad::matmul(h, params_.get(prefix + "w2")), params_.get(prefix + "b2"));
    };
    std::vector<Tensor> gamma(static_cast<std::size_t>(n));   // over q, per v
    std::vector<Tensor> lambda(static_cast<std::size_t>(n));  // user-channel attention
    for (int v = 0; v < n; ++v) {
        std::vector<Tensor> text_logits, user_logits;
        for (int q = 0; q < n; ++q) {
            const auto idx = static_cast<std::size_t>(q * n + v);
            if (config_.separate_channel_attention) {
                text_logits.push_back(
                    mlp(ad::concat_cols({zhat[idx], enc[static_cast<std::size_t>(v)].sequence}),
                        "fusion.text."));
                user_logits.push_back(
                    mlp(ad::concat_cols({xhat[idx], node_user_pool[static_cast<std::size_t>(v)]}),
                        "fusion.user."));
            } else {
                text_logits.push_back(
                    mlp(ad::concat_cols({zhat[idx], enc[static_cast<std::size_t>(v)].sequence,
                                         xhat[idx], node_user_pool[static_cast<std::size_t>(v)]}),
                        "fusion."));
            }
        }
        gamma[static_cast<std::size_t>(v)] =
            ad::masked_softmax(ad::vstack(text_logits), Mask(static_cast<std::size_t>(n), 1));
        lambda[static_cast<std::size_t>(v)] =
            config_.separate_channel_attention
                ? ad::masked_softmax(ad::vstack(user_logits), Mask(static_cast<std::size_t>(n), 1))
                : gamma[static_cast<std::size_t>(v)];
    }

    // per-node label via both channels
    std::vector<Tensor> labels(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        std::vector<Tensor> z_rows, x_rows;
        for (int q = 0; q < n; ++q) {
            z_rows.push_back(zhat[static_cast<std::size_t>(q * n + v)]);
            x_rows.push_back(xhat[static_cast<std::size_t>(q * n + v)]);
        }
        Tensor text_agg = ad::matmul(ad::transpose(gamma[static_cast<std::size_t>(v)]),
                                     ad::vstack(z_rows));
        Tensor kappa = ad::concat_cols({text_agg, enc[static_cast<std::size_t>(v)].sequence});
        Tensor logit = ad::add(ad::matmul(kappa, params_.get("label.w5")),
                               params_.get("label.b5"));
        if (use_users) {
            Tensor user_agg = ad::matmul(ad::transpose(lambda[static_cast<std::size_t>(v)]),
                                         ad::vstack(x_rows));
            Tensor kappa_u =
                ad::concat_cols({user_agg, node_user_pool[static_cast<std::size_t>(v)]});
            logit = ad::add(logit, ad::matmul(kappa_u, params_.get("label.w6")));
        }
        labels[static_cast<std::size_t>(v)] = ad::sigmoid(logit);
    }

    // node importance
    std::vector<double> phi_values(static_cast<std::size_t>(n), 0.0);
    std::vector<double> delta_values(static_cast<std::size_t>(n), 0.0);
    Tensor importances;
    if (ablation == Ablation::NoImportance) {
        importances = Tensor::constant(
            ad::Matrix::Constant(n, 1, 1.0 / static_cast<double>(n)));
    } else {
        std::vector<Tensor> logits;
        Tensor w8 = ad::softplus(params_.get("importance.w8_raw"));
        Tensor w9 = ad::softplus(params_.get("importance.w9_raw"));
        Tensor w10 = ad::softplus(params_.get("importance.w10_raw"));
        for (int v = 0; v < n; ++v) {
            const auto& node = input.nodes[static_cast<std::size_t>(v)];
            const auto& e = enc[static_cast<std::size_t>(v)];
            bool has_claims = std::any_of(e.claim_mask.begin(), e.claim_mask.end(),
                                          [](int m) { return m != 0; });
            bool has_posts = std::any_of(e.post_mask.begin(), e.post_mask.end(),
                                         [](int m) { return m != 0; });
            Tensor phi;
            if (has_claims && has_posts) {
                Tensor translation = ad::cosine_matrix(e.embeddings, e.embeddings);
                Tensor psi = ad::kernel_features(translation, kernels_.mu, kernels_.sigma,
                                                 e.post_mask);
                Tensor pooled = ad::masked_mean_rows(psi, e.claim_mask);
                phi = ad::matmul(pooled, params_.get("importance.w7"));
            } else {
                phi = Tensor::constant(ad::Matrix::Zero(1, 1));
            }
            Tensor logit = phi;
            Tensor delta;
            if (ablation != Ablation::NoPrior) {
                auto slice_row = [](const std::vector<double>& v) {
                    ad::Matrix m(1, static_cast<Eigen::Index>(v.size()));
                    for (std::size_t i = 0; i < v.size(); ++i) {
                        m(0, static_cast<Eigen::Index>(i)) = v[i];
                    }
                    return Tensor::constant(std::move(m));
                };
                delta = ad::add(
                    ad::add(ad::matmul(slice_row(node.saliency_posts), w8),
                            ad::matmul(slice_row(node.saliency_users), w9)),
                    ad::matmul(slice_row(node.saliency_keywords), w10));
                logit = ad::add(logit, delta);
            }
            logit = ad::add(logit, params_.get("importance.b6"));
            logits.push_back(logit);
            phi_values[static_cast<std::size_t>(v)] = phi.value()(0, 0);
            if (delta.defined()) delta_values[static_cast<std::size_t>(v)] = delta.value()(0, 0);
        }
        importances = ad::masked_softmax(ad::vstack(logits), Mask(static_cast<std::size_t>(n), 1));
    }

    Tensor label_vec = ad::vstack(labels);
    Tensor probability = ad::sum_all(ad::mul(label_vec, importances));

    if (breakdown) {
        breakdown->final_probability = probability.value()(0, 0);
        breakdown->node_labels.assign(label_vec.value().data(),
                                      label_vec.value().data() + n);
        breakdown->node_importances.assign(importances.value().data(),
                                           importances.value().data() + n);
        breakdown->ranking_feature = phi_values;
        breakdown->attention_prior = delta_values;
        breakdown->node_attention = Eigen::MatrixXd::Zero(n, n);
        for (int v = 0; v < n; ++v) {
            for (int q = 0; q < n; ++q) {
                breakdown->node_attention(q, v) =
                    gamma[static_cast<std::size_t>(v)].value()(q, 0);
            }
        }
        breakdown->pairs = std::move(pair_info);
        for (const auto& node : input.nodes) {
            breakdown->topic_ids.push_back(node.topic_id);
            breakdown->mean_user_saliency.push_back(node.mean_user_saliency);
        }
    }
    return probability;
}

PredictionBreakdown ReasonerModel::predict(const ArticleInput& input,
                                           Ablation ablation) const {
    PredictionBreakdown breakdown;
    forward(input, ablation, &breakdown);
    return breakdown;
}

}  // namespace finerfact
