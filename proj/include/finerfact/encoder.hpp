#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "finerfact/autodiff.hpp"
#include "finerfact/corpus.hpp"

namespace finerfact {

// Token vocabulary shared across articles; ids 0..2 are the special tokens.
struct EncoderVocab {
    static constexpr int kSequenceStart = 0;
    static constexpr int kSeparator = 1;
    static constexpr int kUnknown = 2;

    std::vector<std::string> tokens;  // includes the special tokens
    std::unordered_map<std::string, int> index;

    static EncoderVocab build(const SocialCorpus& corpus, std::size_t max_size);
    static EncoderVocab from_tokens(std::vector<std::string> tokens);

    int id(const std::string& token) const {
        auto it = index.find(token);
        return it == index.end() ? kUnknown : it->second;
    }
    std::size_t size() const { return tokens.size(); }
};

struct TextSegment {
    enum class Kind { Claim, Post };
    Kind kind;
    TokenList tokens;
};

// One encoded node text: a matrix of token embeddings whose row 0 is the
// sequence-start embedding, plus row masks for downstream kernel matching.
struct TokenEncoding {
    ad::Tensor embeddings;  // L x dim
    ad::Tensor sequence;    // 1 x dim, row 0 of embeddings
    ad::Mask content_mask;  // non-special rows
    ad::Mask claim_mask;    // rows that came from claims
    ad::Mask post_mask;     // rows that came from posts
    std::vector<std::string> surface;  // token strings aligned to rows
};

struct EncoderConfig {
    int embed_dim = 32;
    int num_blocks = 2;
    int ffn_dim = 64;
    int max_seq_len = 128;
    std::size_t max_vocab = 4096;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual TokenEncoding encode(const std::vector<TextSegment>& segments) const = 0;
    virtual const EncoderVocab& vocab() const = 0;
    virtual int embed_dim() const = 0;
};

// Trainable token + position embeddings with self-attention blocks; the
// desk-scale stand-in for a pretrained transformer behind the same interface.
class ToyTransformerEncoder : public TextEncoder {
public:
    ToyTransformerEncoder(EncoderVocab vocab, EncoderConfig config,
                          ad::ParameterStore& params, Rng& rng);

    TokenEncoding encode(const std::vector<TextSegment>& segments) const override;
    const EncoderVocab& vocab() const override { return vocab_; }
    int embed_dim() const override { return config_.embed_dim; }

    const EncoderConfig& config() const { return config_; }

private:
    EncoderVocab vocab_;
    EncoderConfig config_;
    ad::ParameterStore* params_;
};

}  // namespace finerfact
