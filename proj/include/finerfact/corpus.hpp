#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "finerfact/common.hpp"

namespace finerfact {

using TokenList = std::vector<std::string>;

struct NewsArticle {
    std::string id;
    std::vector<TokenList> sentences;  // cleaned, non-empty
    std::optional<int> label;          // 1 = fake, 0 = real
    std::string raw_text;
};

struct Post {
    std::string id;
    std::string author_id;
    TokenList tokens;
    long long retweet_count = 0;
    std::optional<std::string> reply_to;
    std::string raw_text;
};

struct User {
    std::string id;
    long long follower_count = 0;
    long long friend_count = 0;
    long long listed_count = 0;
    long long favourite_count = 0;
    long long status_count = 0;
    long long description_word_count = 0;
    bool verified = false;
    bool geo_enabled = false;
};

// Commenter -> commented author, derived from reply_to chains at load time.
struct CommentEdge {
    std::string commenter_id;
    std::string commented_id;
};

struct SocialCorpus {
    std::vector<NewsArticle> articles;
    std::map<std::string, std::vector<Post>> posts;            // article id -> posts
    std::map<std::string, User> users;                         // user id -> user
    std::map<std::string, std::vector<CommentEdge>> comments;  // article id -> edges

    const NewsArticle& article(const std::string& id) const;
    const std::vector<Post>& posts_for(const std::string& article_id) const;
    const User& user(const std::string& id) const;
    std::size_t total_posts() const;
};

struct VocabConfig {
    std::vector<std::string> extra_stopwords;
    bool use_default_stopwords = true;
    std::size_t min_token_length = 3;
    std::size_t max_vocabulary = 2000;
};

struct Vocabulary {
    std::vector<std::string> keywords;               // freq desc, ties by first occurrence
    std::unordered_map<std::string, int> index;      // bijection onto [0, keywords.size())
    std::unordered_map<std::string, long long> frequencies;

    bool contains(const std::string& token) const { return index.count(token) > 0; }
    std::size_t size() const { return keywords.size(); }
};

// Lowercases, drops hashtag/mention/URL tokens, splits on non-alphabetic characters.
// Total function: never throws, may return an empty list.
TokenList clean_text(const std::string& raw);

// Sentence split on [.!?] of the raw text, each sentence cleaned; empty ones dropped.
std::vector<TokenList> split_and_clean_sentences(const std::string& raw);

// Loads articles.jsonl / posts.jsonl / users.jsonl from a split directory.
// training_mode: articles without a label are skipped with a warning instead of kept.
SocialCorpus load_corpus(const std::string& path, const std::string& schema_version,
                         bool training_mode = false);

// Writes the three JSONL files back; load(save(c)) == c.
void save_corpus(const SocialCorpus& corpus, const std::string& path);

Vocabulary build_vocabulary(const SocialCorpus& corpus, const std::string& article_id,
                            const VocabConfig& config);

// Raw in-vocabulary counts over vocab indices, sparse as (index, count) pairs.
std::vector<std::pair<int, int>> term_frequency_vector(const Post& post,
                                                       const Vocabulary& vocab);
std::vector<std::pair<int, int>> term_frequency_vector(const TokenList& tokens,
                                                       const Vocabulary& vocab);

const std::vector<std::string>& default_stopwords();

}  // namespace finerfact
