#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "finerfact/ranker.hpp"
#include "support/test_util.hpp"

namespace finerfact::testutil {

// Incremental JSONL corpus builder for load_corpus fixtures.
class CorpusBuilder {
public:
    CorpusBuilder& article(const std::string& id, const std::string& text,
                           std::optional<int> label = std::nullopt) {
        nlohmann::json j{{"id", id}, {"text", text}};
        if (label)
            j["label"] = *label;
        else
            j["label"] = nullptr;
        articles_ += j.dump() + "\n";
        return *this;
    }

    CorpusBuilder& post(const std::string& id, const std::string& article_id,
                        const std::string& author_id, const std::string& text,
                        long long retweets = 0,
                        std::optional<std::string> reply_to = std::nullopt) {
        nlohmann::json j{{"id", id},
                         {"article_id", article_id},
                         {"author_id", author_id},
                         {"text", text},
                         {"retweet_count", retweets}};
        if (reply_to)
            j["reply_to"] = *reply_to;
        else
            j["reply_to"] = nullptr;
        posts_ += j.dump() + "\n";
        return *this;
    }

    CorpusBuilder& user(const std::string& id, long long followers = 10,
                        long long friends = 10, long long listed = 1,
                        long long favourites = 0, long long statuses = 5,
                        long long description_words = 3, bool verified = false,
                        bool geo = false) {
        nlohmann::json j{{"id", id},
                         {"follower_count", followers},
                         {"friend_count", friends},
                         {"listed_count", listed},
                         {"favourite_count", favourites},
                         {"status_count", statuses},
                         {"description_word_count", description_words},
                         {"verified", verified},
                         {"geo_enabled", geo}};
        users_ += j.dump() + "\n";
        return *this;
    }

    CorpusBuilder& raw_post_line(const std::string& line) {
        posts_ += line + "\n";
        return *this;
    }

    void write(const std::filesystem::path& dir) const {
        write_file(dir / "articles.jsonl", articles_);
        write_file(dir / "posts.jsonl", posts_);
        write_file(dir / "users.jsonl", users_);
    }

private:
    std::string articles_;
    std::string posts_;
    std::string users_;
};

// Random synthetic reinforcement graph for oracle and scale tests: symmetric
// 0/1 inter-layer blocks, cosine-like PP weights, positive normalized priors.
inline ReinforcementGraph random_reinforcement_graph(int n_posts, int n_keywords,
                                                     int n_users, double density,
                                                     Rng& rng) {
    ReinforcementGraph g;
    for (int i = 0; i < n_posts; ++i) g.post_ids.push_back("p" + std::to_string(i));
    for (int i = 0; i < n_keywords; ++i) g.keywords.push_back("k" + std::to_string(i));
    for (int i = 0; i < n_users; ++i) g.user_ids.push_back("u" + std::to_string(i));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    using T = SparseMatrix::Triplet;
    auto symmetric_block = [&](int n, bool weighted) {
        std::vector<T> t;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (unit(rng) < density) {
                    const double w = weighted ? unit(rng) : 1.0;
                    t.push_back({i, j, w});
                    t.push_back({j, i, w});
                }
            }
        }
        return SparseMatrix(n, n, std::move(t));
    };
    auto incidence_block = [&](int rows, int cols) {
        std::vector<T> t;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                if (unit(rng) < density) t.push_back({i, j, 1.0});
            }
        }
        return SparseMatrix(rows, cols, std::move(t));
    };
    g.a_pp = symmetric_block(n_posts, true);
    g.a_kk = symmetric_block(n_keywords, false);
    g.a_uu = symmetric_block(n_users, false);
    g.a_kp = incidence_block(n_posts, n_keywords);
    g.a_ku = incidence_block(n_users, n_keywords);
    g.a_up = incidence_block(n_posts, n_users);

    auto prior = [&](int n) {
        std::vector<double> e(static_cast<std::size_t>(n));
        for (auto& v : e) v = unit(rng) + 1e-3;
        return normalize_prior_layer(std::move(e));
    };
    g.prior_posts = prior(n_posts);
    g.prior_keywords = prior(n_keywords);
    g.prior_users = prior(n_users);
    return g;
}

}  // namespace finerfact::testutil
