#include "finerfact/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace finerfact {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

const NewsArticle& SocialCorpus::article(const std::string& id) const {
    for (const auto& a : articles)
        if (a.id == id) return a;
    throw LinkError("unknown article id: " + id);
}

const std::vector<Post>& SocialCorpus::posts_for(const std::string& article_id) const {
    auto it = posts.find(article_id);
    if (it == posts.end()) throw LinkError("no posts for article: " + article_id);
    return it->second;
}

const User& SocialCorpus::user(const std::string& id) const {
    auto it = users.find(id);
    if (it == users.end()) throw LinkError("unknown user id: " + id);
    return it->second;
}

std::size_t SocialCorpus::total_posts() const {
    std::size_t n = 0;
    for (const auto& [_, ps] : posts) n += ps.size();
    return n;
}

namespace {

bool is_url_token(const std::string& t) {
    return t.rfind("http://", 0) == 0 || t.rfind("https://", 0) == 0 ||
           t.rfind("www.", 0) == 0;
}

}  // namespace

TokenList clean_text(const std::string& raw) {
    TokenList out;
    std::istringstream ss(raw);
    std::string tok;
    while (ss >> tok) {
        if (tok.empty()) continue;
        if (tok[0] == '#' || tok[0] == '@') continue;
        std::string lowered;
        lowered.reserve(tok.size());
        for (char c : tok) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (is_url_token(lowered)) continue;
        // split the remainder on non-alphabetic characters
        std::string piece;
        for (char c : lowered) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                piece.push_back(c);
            } else if (!piece.empty()) {
                out.push_back(piece);
                piece.clear();
            }
        }
        if (!piece.empty()) out.push_back(piece);
    }
    return out;
}

std::vector<TokenList> split_and_clean_sentences(const std::string& raw) {
    std::vector<TokenList> sentences;
    std::string current;
    auto flush = [&]() {
        TokenList toks = clean_text(current);
        if (!toks.empty()) sentences.push_back(std::move(toks));
        current.clear();
    };
    for (char c : raw) {
        if (c == '.' || c == '!' || c == '?') {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();
    return sentences;
}

namespace {

json parse_line(const std::string& file, int line_no, const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw LoadError(file + ":" + std::to_string(line_no) + ": malformed record");
    }
    return j;
}

template <typename T>
T require_field(const json& j, const std::string& file, int line_no, const char* key) {
    if (!j.contains(key)) {
        throw LoadError(file + ":" + std::to_string(line_no) + ": missing field '" +
                        key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw LoadError(file + ":" + std::to_string(line_no) + ": bad type for '" +
                        key + "'");
    }
}

void for_each_line(const std::string& path,
                   const std::function<void(int, const std::string&)>& fn) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fn(line_no, line);
    }
}

}  // namespace

SocialCorpus load_corpus(const std::string& path, const std::string& schema_version,
                         bool training_mode) {
    if (schema_version != "1") {
        throw LoadError("unsupported corpus schema version: " + schema_version);
    }
    fs::path dir(path);
    if (!fs::exists(dir)) throw LoadError("corpus path does not exist: " + path);

    SocialCorpus corpus;

    const std::string users_file = (dir / "users.jsonl").string();
    for_each_line(users_file, [&](int ln, const std::string& line) {
        json j = parse_line(users_file, ln, line);
        User u;
        u.id = require_field<std::string>(j, users_file, ln, "id");
        u.follower_count = require_field<long long>(j, users_file, ln, "follower_count");
        u.friend_count = require_field<long long>(j, users_file, ln, "friend_count");
        u.listed_count = require_field<long long>(j, users_file, ln, "listed_count");
        u.favourite_count = require_field<long long>(j, users_file, ln, "favourite_count");
        u.status_count = require_field<long long>(j, users_file, ln, "status_count");
        u.description_word_count =
            require_field<long long>(j, users_file, ln, "description_word_count");
        u.verified = require_field<bool>(j, users_file, ln, "verified");
        u.geo_enabled = require_field<bool>(j, users_file, ln, "geo_enabled");
        for (long long c : {u.follower_count, u.friend_count, u.listed_count,
                            u.favourite_count, u.status_count, u.description_word_count}) {
            if (c < 0)
                throw LoadError(users_file + ":" + std::to_string(ln) +
                                ": negative count for user " + u.id);
        }
        corpus.users[u.id] = u;
    });

    struct RawArticle {
        NewsArticle article;
        int line_no;
    };
    std::vector<RawArticle> raw_articles;
    const std::string articles_file = (dir / "articles.jsonl").string();
    for_each_line(articles_file, [&](int ln, const std::string& line) {
        json j = parse_line(articles_file, ln, line);
        NewsArticle a;
        a.id = require_field<std::string>(j, articles_file, ln, "id");
        a.raw_text = require_field<std::string>(j, articles_file, ln, "text");
        if (j.contains("label") && !j.at("label").is_null()) {
            int lab = require_field<int>(j, articles_file, ln, "label");
            if (lab != 0 && lab != 1)
                throw LoadError(articles_file + ":" + std::to_string(ln) +
                                ": label must be 0 or 1");
            a.label = lab;
        }
        a.sentences = split_and_clean_sentences(a.raw_text);
        raw_articles.push_back({std::move(a), ln});
    });

    std::map<std::string, std::vector<Post>> posts_by_article;
    const std::string posts_file = (dir / "posts.jsonl").string();
    for_each_line(posts_file, [&](int ln, const std::string& line) {
        json j = parse_line(posts_file, ln, line);
        Post p;
        p.id = require_field<std::string>(j, posts_file, ln, "id");
        std::string article_id = require_field<std::string>(j, posts_file, ln, "article_id");
        p.author_id = require_field<std::string>(j, posts_file, ln, "author_id");
        p.raw_text = require_field<std::string>(j, posts_file, ln, "text");
        p.tokens = clean_text(p.raw_text);
        p.retweet_count = require_field<long long>(j, posts_file, ln, "retweet_count");
        if (p.retweet_count < 0)
            throw LoadError(posts_file + ":" + std::to_string(ln) +
                            ": negative retweet_count for post " + p.id);
        if (j.contains("reply_to") && !j.at("reply_to").is_null()) {
            p.reply_to = require_field<std::string>(j, posts_file, ln, "reply_to");
        }
        if (corpus.users.find(p.author_id) == corpus.users.end()) {
            throw LinkError("post " + p.id + " references unknown author " + p.author_id);
        }
        posts_by_article[article_id].push_back(std::move(p));
    });

    for (auto& ra : raw_articles) {
        NewsArticle& a = ra.article;
        auto pit = posts_by_article.find(a.id);
        if (pit == posts_by_article.end() || pit->second.empty()) {
            std::cerr << "[warn] skipping article " << a.id << ": no posts\n";
            continue;
        }
        if (training_mode && !a.label.has_value()) {
            std::cerr << "[warn] skipping article " << a.id << ": unlabeled in training mode\n";
            continue;
        }
        if (a.sentences.empty()) {
            std::cerr << "[warn] skipping article " << a.id << ": empty after cleaning\n";
            continue;
        }
        // derive commenter -> commented author edges from reply_to links
        std::unordered_map<std::string, const Post*> by_post_id;
        for (const Post& p : pit->second) by_post_id[p.id] = &p;
        std::vector<CommentEdge> edges;
        for (const Post& p : pit->second) {
            if (!p.reply_to) continue;
            auto tgt = by_post_id.find(*p.reply_to);
            if (tgt == by_post_id.end()) {
                throw LinkError("post " + p.id + " replies to unknown post " + *p.reply_to);
            }
            edges.push_back({p.author_id, tgt->second->author_id});
        }
        corpus.posts[a.id] = pit->second;
        corpus.comments[a.id] = std::move(edges);
        corpus.articles.push_back(std::move(a));
    }
    return corpus;
}

void save_corpus(const SocialCorpus& corpus, const std::string& path) {
    fs::create_directories(path);
    std::ofstream af(fs::path(path) / "articles.jsonl");
    std::ofstream pf(fs::path(path) / "posts.jsonl");
    std::ofstream uf(fs::path(path) / "users.jsonl");
    if (!af || !pf || !uf) throw Error("cannot write corpus to " + path);
    for (const auto& a : corpus.articles) {
        json j{{"id", a.id}, {"text", a.raw_text}};
        if (a.label)
            j["label"] = *a.label;
        else
            j["label"] = nullptr;
        af << j.dump() << "\n";
        for (const auto& p : corpus.posts_for(a.id)) {
            json pj{{"id", p.id},
                    {"article_id", a.id},
                    {"author_id", p.author_id},
                    {"text", p.raw_text},
                    {"retweet_count", p.retweet_count}};
            if (p.reply_to)
                pj["reply_to"] = *p.reply_to;
            else
                pj["reply_to"] = nullptr;
            pf << pj.dump() << "\n";
        }
    }
    for (const auto& [id, u] : corpus.users) {
        json uj{{"id", u.id},
                {"follower_count", u.follower_count},
                {"friend_count", u.friend_count},
                {"listed_count", u.listed_count},
                {"favourite_count", u.favourite_count},
                {"status_count", u.status_count},
                {"description_word_count", u.description_word_count},
                {"verified", u.verified},
                {"geo_enabled", u.geo_enabled}};
        uf << uj.dump() << "\n";
    }
}

const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "aren", "as", "at", "be", "because", "been", "before", "being",
        "below", "between", "both", "but", "by", "can", "cannot", "could", "couldn",
        "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each",
        "few", "for", "from", "further", "had", "hadn", "has", "hasn", "have", "haven",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
        "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just", "ll", "me",
        "more", "most", "mustn", "my", "myself", "no", "nor", "not", "now", "of", "off",
        "on", "once", "only", "or", "other", "ought", "our", "ours", "ourselves", "out",
        "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn", "so",
        "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
        "themselves", "then", "there", "these", "they", "this", "those", "through",
        "to", "too", "under", "until", "up", "ve", "very", "was", "wasn", "we", "were",
        "weren", "what", "when", "where", "which", "while", "who", "whom", "why",
        "will", "with", "won", "would", "wouldn", "you", "your", "yours", "yourself",
        "yourselves"};
    return words;
}

Vocabulary build_vocabulary(const SocialCorpus& corpus, const std::string& article_id,
                            const VocabConfig& config) {
    const NewsArticle& article = corpus.article(article_id);
    const auto& posts = corpus.posts_for(article_id);

    std::unordered_map<std::string, long long> freq;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::size_t position = 0;
    auto count = [&](const TokenList& toks) {
        for (const auto& t : toks) {
            if (t.size() < config.min_token_length) continue;
            auto [it, inserted] = freq.try_emplace(t, 0);
            it->second += 1;
            if (inserted) first_seen[t] = position;
            ++position;
        }
    };
    for (const auto& s : article.sentences) count(s);
    for (const auto& p : posts) count(p.tokens);

    if (config.use_default_stopwords) {
        for (const auto& w : default_stopwords()) {
            freq.erase(w);
        }
    }
    for (const auto& w : config.extra_stopwords) freq.erase(w);

    if (freq.empty()) {
        throw ConstructionError("empty vocabulary for article " + article_id);
    }

    std::vector<std::string> ordered;
    ordered.reserve(freq.size());
    for (const auto& [w, _] : freq) ordered.push_back(w);
    std::sort(ordered.begin(), ordered.end(), [&](const std::string& a, const std::string& b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return first_seen[a] < first_seen[b];
    });
    if (ordered.size() > config.max_vocabulary) ordered.resize(config.max_vocabulary);

    Vocabulary vocab;
    vocab.keywords = ordered;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        vocab.index[ordered[i]] = static_cast<int>(i);
        vocab.frequencies[ordered[i]] = freq[ordered[i]];
    }
    return vocab;
}

std::vector<std::pair<int, int>> term_frequency_vector(const TokenList& tokens,
                                                       const Vocabulary& vocab) {
    if (vocab.size() == 0) throw ConstructionError("term_frequency_vector: empty vocabulary");
    std::map<int, int> counts;
    for (const auto& t : tokens) {
        auto it = vocab.index.find(t);
        if (it != vocab.index.end()) counts[it->second] += 1;
    }
    return {counts.begin(), counts.end()};
}

std::vector<std::pair<int, int>> term_frequency_vector(const Post& post,
                                                       const Vocabulary& vocab) {
    return term_frequency_vector(post.tokens, vocab);
}

}  // namespace finerfact
