#include "finerfact/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace finerfact {

using ad::Tensor;

EncoderVocab EncoderVocab::from_tokens(std::vector<std::string> tokens) {
    EncoderVocab v;
    v.tokens = std::move(tokens);
    for (std::size_t i = 0; i < v.tokens.size(); ++i) {
        v.index[v.tokens[i]] = static_cast<int>(i);
    }
    return v;
}

EncoderVocab EncoderVocab::build(const SocialCorpus& corpus, std::size_t max_size) {
    std::unordered_map<std::string, long long> freq;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::size_t position = 0;
    auto count = [&](const TokenList& toks) {
        for (const auto& t : toks) {
            auto [it, inserted] = freq.try_emplace(t, 0);
            it->second += 1;
            if (inserted) first_seen[t] = position;
            ++position;
        }
    };
    for (const auto& a : corpus.articles) {
        for (const auto& s : a.sentences) count(s);
        for (const auto& p : corpus.posts_for(a.id)) count(p.tokens);
    }
    std::vector<std::string> ordered;
    ordered.reserve(freq.size());
    for (const auto& [w, _] : freq) ordered.push_back(w);
    std::sort(ordered.begin(), ordered.end(), [&](const std::string& a, const std::string& b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return first_seen[a] < first_seen[b];
    });
    std::vector<std::string> final_tokens = {"<s>", "<sep>", "<unk>"};
    for (const auto& w : ordered) {
        if (final_tokens.size() >= max_size) break;
        final_tokens.push_back(w);
    }
    return from_tokens(std::move(final_tokens));
}

ToyTransformerEncoder::ToyTransformerEncoder(EncoderVocab vocab, EncoderConfig config,
                                             ad::ParameterStore& params, Rng& rng)
    : vocab_(std::move(vocab)), config_(config), params_(&params) {
    const auto dim = static_cast<Eigen::Index>(config_.embed_dim);
    const auto ffn = static_cast<Eigen::Index>(config_.ffn_dim);
    params.create("encoder.token_embeddings",
                  static_cast<Eigen::Index>(vocab_.size()), dim, 0.1, rng);
    params.create("encoder.position_embeddings",
                  static_cast<Eigen::Index>(config_.max_seq_len), dim, 0.1, rng);
    for (int b = 0; b < config_.num_blocks; ++b) {
        const std::string p = "encoder.block" + std::to_string(b) + ".";
        params.create_constant(p + "ln1.gain", 1, dim, 1.0);
        params.create_zeros(p + "ln1.bias", 1, dim);
        params.create(p + "attn.wq", dim, dim, 0.1, rng);
        params.create(p + "attn.wk", dim, dim, 0.1, rng);
        params.create(p + "attn.wv", dim, dim, 0.1, rng);
        params.create(p + "attn.wo", dim, dim, 0.1, rng);
        params.create_constant(p + "ln2.gain", 1, dim, 1.0);
        params.create_zeros(p + "ln2.bias", 1, dim);
        params.create(p + "ffn.w1", dim, ffn, 0.1, rng);
        params.create_zeros(p + "ffn.b1", 1, ffn);
        params.create(p + "ffn.w2", ffn, dim, 0.1, rng);
        params.create_zeros(p + "ffn.b2", 1, dim);
    }
    params.create_constant("encoder.final_ln.gain", 1, dim, 1.0);
    params.create_zeros("encoder.final_ln.bias", 1, dim);
}

TokenEncoding ToyTransformerEncoder::encode(const std::vector<TextSegment>& segments) const {
    std::vector<int> ids = {EncoderVocab::kSequenceStart};
    TokenEncoding enc;
    enc.surface = {"<s>"};
    enc.content_mask = {0};
    enc.claim_mask = {0};
    enc.post_mask = {0};

    bool any_content = false;
    bool first_segment = true;
    for (const auto& seg : segments) {
        if (!first_segment) {
            ids.push_back(EncoderVocab::kSeparator);
            enc.surface.push_back("<sep>");
            enc.content_mask.push_back(0);
            enc.claim_mask.push_back(0);
            enc.post_mask.push_back(0);
        }
        first_segment = false;
        for (const auto& tok : seg.tokens) {
            if (static_cast<int>(ids.size()) >= config_.max_seq_len) break;
            ids.push_back(vocab_.id(tok));
            enc.surface.push_back(tok);
            enc.content_mask.push_back(1);
            enc.claim_mask.push_back(seg.kind == TextSegment::Kind::Claim ? 1 : 0);
            enc.post_mask.push_back(seg.kind == TextSegment::Kind::Post ? 1 : 0);
            any_content = true;
        }
        if (static_cast<int>(ids.size()) >= config_.max_seq_len) break;
    }
    if (!any_content) {
        throw ConstructionError("encode: node has no claim or post tokens");
    }
    if (static_cast<int>(ids.size()) > config_.max_seq_len) {
        const auto keep = static_cast<std::size_t>(config_.max_seq_len);
        ids.resize(keep);
        enc.surface.resize(keep);
        enc.content_mask.resize(keep);
        enc.claim_mask.resize(keep);
        enc.post_mask.resize(keep);
    }
    const auto len = static_cast<Eigen::Index>(ids.size());

    Tensor x = ad::add(ad::gather_rows(params_->get("encoder.token_embeddings"), ids),
                       ad::slice_rows(params_->get("encoder.position_embeddings"), 0, len));
    const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
    for (int b = 0; b < config_.num_blocks; ++b) {
        const std::string p = "encoder.block" + std::to_string(b) + ".";
        Tensor a = ad::layer_norm(x, params_->get(p + "ln1.gain"), params_->get(p + "ln1.bias"));
        Tensor q = ad::matmul(a, params_->get(p + "attn.wq"));
        Tensor k = ad::matmul(a, params_->get(p + "attn.wk"));
        Tensor v = ad::matmul(a, params_->get(p + "attn.wv"));
        Tensor scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dim);
        Tensor attended = ad::matmul(ad::softmax_rows(scores), v);
        x = ad::add(x, ad::matmul(attended, params_->get(p + "attn.wo")));

        Tensor f = ad::layer_norm(x, params_->get(p + "ln2.gain"), params_->get(p + "ln2.bias"));
        Tensor h = ad::tanh_t(ad::add(ad::matmul(f, params_->get(p + "ffn.w1")),
                                      params_->get(p + "ffn.b1")));
        x = ad::add(x, ad::add(ad::matmul(h, params_->get(p + "ffn.w2")),
                               params_->get(p + "ffn.b2")));
    }
    x = ad::layer_norm(x, params_->get("encoder.final_ln.gain"),
                       params_->get("encoder.final_ln.bias"));
    enc.embeddings = x;
    enc.sequence = ad::slice_rows(x, 0, 1);
    return enc;
}

}  // namespace finerfact
