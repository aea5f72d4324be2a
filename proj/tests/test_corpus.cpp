#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "finerfact/corpus.hpp"
#include "support/fixtures.hpp"

using namespace finerfact;
using testutil::CorpusBuilder;
using testutil::TempDir;

TEST_CASE("clean_text removes hashtags, mentions and urls") {
    CHECK(clean_text("Check #FBI @lisa http://x.co now") == TokenList{"check", "now"});
    CHECK(clean_text("") == TokenList{});
    CHECK(clean_text("Property PROPERTY property!") ==
          TokenList{"property", "property", "property"});
    CHECK(clean_text("visit www.example.com today") == TokenList{"visit", "today"});
    CHECK(clean_text("don't stop2go") == TokenList{"don", "t", "stop", "go"});
}

TEST_CASE("clean_text is idempotent on rejoined tokens") {
    auto rejoin = [](const TokenList& toks) {
        std::string s;
        for (const auto& t : toks) {
            if (!s.empty()) s += ' ';
            s += t;
        }
        return s;
    };
    Rng rng(42);
    const std::string alphabet = "aB #@ht:/.p!12";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 40);
    for (int trial = 0; trial < 200; ++trial) {
        std::string raw;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) raw += alphabet[pick(rng)];
        TokenList once = clean_text(raw);
        CHECK(clean_text(rejoin(once)) == once);
    }
}

TEST_CASE("load_corpus links a minimal fixture") {
    TempDir dir("load_min");
    CorpusBuilder()
        .article("a1", "Big news about the property. More text here!", 1)
        .post("p1", "a1", "u1", "property news is big", 3)
        .post("p2", "a1", "u2", "doubtful claim here", 0, std::string("p1"))
        .user("u1", 100, 50, 10)
        .user("u2", 5, 200, 0)
        .write(dir.path());
    SocialCorpus corpus = load_corpus(dir.str(), "1");
    CHECK(corpus.articles.size() == 1);
    CHECK(corpus.total_posts() == 2);
    CHECK(corpus.users.size() == 2);
    // reply chain p2 -> p1 becomes a commenter edge u2 -> u1
    REQUIRE(corpus.comments.at("a1").size() == 1);
    CHECK(corpus.comments.at("a1")[0].commenter_id == "u2");
    CHECK(corpus.comments.at("a1")[0].commented_id == "u1");
}

TEST_CASE("load_corpus rejects dangling author references") {
    TempDir dir("load_dangling");
    CorpusBuilder()
        .article("a1", "Some text.", 0)
        .post("p1", "a1", "ghost", "who wrote this", 0)
        .user("u1")
        .write(dir.path());
    CHECK_THROWS_AS(load_corpus(dir.str(), "1"), LinkError);
}

TEST_CASE("load_corpus names the malformed line") {
    TempDir dir("load_malformed");
    CorpusBuilder builder;
    builder.article("a1", "Some text.", 0).user("u1");
    builder.post("p1", "a1", "u1", "fine", 0).raw_post_line("{not json");
    builder.write(dir.path());
    try {
        load_corpus(dir.str(), "1");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("load_corpus totals match an independently counted fixture") {
    TempDir dir("load_ten");
    CorpusBuilder builder;
    Rng rng(7);
    std::uniform_int_distribution<int> posts_per(1, 5);
    int expected_posts = 0;
    const int num_articles = 10, num_users = 8;
    for (int u = 0; u < num_users; ++u) builder.user("u" + std::to_string(u));
    for (int a = 0; a < num_articles; ++a) {
        const std::string id = "a" + std::to_string(a);
        builder.article(id, "Shared words plus article token" + std::to_string(a) + ".",
                        a % 2);
        const int np = posts_per(rng);
        expected_posts += np;
        for (int p = 0; p < np; ++p) {
            builder.post(id + "_p" + std::to_string(p), id,
                         "u" + std::to_string((a + p) % num_users),
                         "talking about article words", p);
        }
    }
    builder.write(dir.path());

    // oracle: count raw lines in the fixture files
    auto count_lines = [&](const char* name) {
        std::stringstream ss(testutil::read_file(dir.path() / name));
        std::string line;
        int n = 0;
        while (std::getline(ss, line))
            if (!line.empty()) ++n;
        return n;
    };
    SocialCorpus corpus = load_corpus(dir.str(), "1");
    CHECK(static_cast<int>(corpus.articles.size()) == count_lines("articles.jsonl"));
    CHECK(static_cast<int>(corpus.total_posts()) == count_lines("posts.jsonl"));
    CHECK(static_cast<int>(corpus.users.size()) == count_lines("users.jsonl"));
    CHECK(expected_posts == static_cast<int>(corpus.total_posts()));
}

TEST_CASE("articles without posts are skipped with a warning") {
    TempDir dir("load_no_posts");
    CorpusBuilder()
        .article("a1", "Has posts.", 1)
        .article("a2", "No posts at all.", 0)
        .post("p1", "a1", "u1", "something", 0)
        .user("u1")
        .write(dir.path());
    SocialCorpus corpus = load_corpus(dir.str(), "1");
    CHECK(corpus.articles.size() == 1);
    CHECK(corpus.articles[0].id == "a1");
}

TEST_CASE("training mode skips unlabeled articles") {
    TempDir dir("load_training");
    CorpusBuilder()
        .article("a1", "Labeled.", 1)
        .article("a2", "Unlabeled article text.")
        .post("p1", "a1", "u1", "x y z", 0)
        .post("p2", "a2", "u1", "x y z", 0)
        .user("u1")
        .write(dir.path());
    CHECK(load_corpus(dir.str(), "1", false).articles.size() == 2);
    CHECK(load_corpus(dir.str(), "1", true).articles.size() == 1);
}

TEST_CASE("corpus round-trips through save and load") {
    TempDir dir("round_src");
    CorpusBuilder()
        .article("a1", "Original text. Second sentence!", 1)
        .article("a2", "Another piece of news entirely.")
        .post("p1", "a1", "u1", "first post #tag", 7)
        .post("p2", "a1", "u2", "reply post", 2, std::string("p1"))
        .post("p3", "a2", "u2", "other thread", 0)
        .user("u1", 100, 50, 10, 3, 1000, 12, true, false)
        .user("u2", 5, 200, 0, 0, 17, 0, false, true)
        .write(dir.path());
    SocialCorpus original = load_corpus(dir.str(), "1");

    TempDir copy("round_dst");
    save_corpus(original, copy.str());
    SocialCorpus reloaded = load_corpus(copy.str(), "1");

    REQUIRE(reloaded.articles.size() == original.articles.size());
    for (std::size_t i = 0; i < original.articles.size(); ++i) {
        CHECK(reloaded.articles[i].id == original.articles[i].id);
        CHECK(reloaded.articles[i].raw_text == original.articles[i].raw_text);
        CHECK(reloaded.articles[i].label == original.articles[i].label);
        CHECK(reloaded.articles[i].sentences == original.articles[i].sentences);
    }
    for (const auto& [aid, posts] : original.posts) {
        const auto& other = reloaded.posts.at(aid);
        REQUIRE(other.size() == posts.size());
        for (std::size_t i = 0; i < posts.size(); ++i) {
            CHECK(other[i].id == posts[i].id);
            CHECK(other[i].author_id == posts[i].author_id);
            CHECK(other[i].tokens == posts[i].tokens);
            CHECK(other[i].retweet_count == posts[i].retweet_count);
            CHECK(other[i].reply_to == posts[i].reply_to);
        }
    }
    CHECK(reloaded.users.size() == original.users.size());
    for (const auto& [uid, user] : original.users) {
        const User& other = reloaded.users.at(uid);
        CHECK(other.follower_count == user.follower_count);
        CHECK(other.friend_count == user.friend_count);
        CHECK(other.listed_count == user.listed_count);
        CHECK(other.favourite_count == user.favourite_count);
        CHECK(other.status_count == user.status_count);
        CHECK(other.description_word_count == user.description_word_count);
        CHECK(other.verified == user.verified);
        CHECK(other.geo_enabled == user.geo_enabled);
    }
}

namespace {

SocialCorpus tiny_vocab_corpus(TempDir& dir) {
    CorpusBuilder()
        .article("a1", "a a b")
        .post("p1", "a1", "u1", "b c", 0)
        .user("u1")
        .write(dir.path());
    return load_corpus(dir.str(), "1");
}

}  // namespace

TEST_CASE("build_vocabulary counts article and post tokens uniformly") {
    TempDir dir("vocab1");
    SocialCorpus corpus = tiny_vocab_corpus(dir);
    VocabConfig cfg;
    cfg.use_default_stopwords = false;
    cfg.min_token_length = 1;
    cfg.max_vocabulary = 10;
    Vocabulary v = build_vocabulary(corpus, "a1", cfg);
    CHECK(v.frequencies.at("a") == 2);
    CHECK(v.frequencies.at("b") == 2);
    CHECK(v.frequencies.at("c") == 1);

    SUBCASE("top-V ties break by first occurrence") {
        cfg.max_vocabulary = 2;
        Vocabulary top2 = build_vocabulary(corpus, "a1", cfg);
        REQUIRE(top2.keywords.size() == 2);
        CHECK(top2.keywords[0] == "a");
        CHECK(top2.keywords[1] == "b");
        CHECK(!top2.contains("c"));
    }
    SUBCASE("deterministic for fixed corpus and config") {
        Vocabulary again = build_vocabulary(corpus, "a1", cfg);
        CHECK(again.keywords == v.keywords);
    }
    SUBCASE("index is a bijection onto [0, size)") {
        std::vector<int> seen(v.size(), 0);
        for (const auto& [token, idx] : v.index) {
            REQUIRE(idx >= 0);
            REQUIRE(idx < static_cast<int>(v.size()));
            seen[static_cast<std::size_t>(idx)] += 1;
            CHECK(v.keywords[static_cast<std::size_t>(idx)] == token);
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("build_vocabulary applies stopwords, length and hand-counted oracle") {
    TempDir dir("vocab2");
    CorpusBuilder()
        .article("a1", "The property scandal. Property dealings with the senate!")
        .post("p1", "a1", "u1", "property scandal is all about the senate", 0)
        .post("p2", "a1", "u1", "no scandal at all", 0)
        .user("u1")
        .write(dir.path());
    SocialCorpus corpus = load_corpus(dir.str(), "1");
    VocabConfig cfg;  // defaults: stopwords on, min length 3
    Vocabulary v = build_vocabulary(corpus, "a1", cfg);

    // brute-force recount over cleaned tokens
    std::unordered_map<std::string, long long> manual;
    auto add = [&](const TokenList& toks) {
        for (const auto& t : toks) {
            if (t.size() < 3) continue;
            const auto& sw = default_stopwords();
            if (std::find(sw.begin(), sw.end(), t) != sw.end()) continue;
            manual[t] += 1;
        }
    };
    for (const auto& s : corpus.articles[0].sentences) add(s);
    for (const auto& p : corpus.posts_for("a1")) add(p.tokens);
    REQUIRE(manual.size() == v.size());
    for (const auto& [word, count] : manual) {
        CHECK(v.frequencies.at(word) == count);
    }
    CHECK(!v.contains("the"));
    CHECK(!v.contains("is"));
    CHECK(!v.contains("no"));  // below min length
}

TEST_CASE("build_vocabulary fails on an empty candidate set") {
    TempDir dir("vocab3");
    CorpusBuilder()
        .article("a1", "the and of")
        .post("p1", "a1", "u1", "to a in", 0)
        .user("u1")
        .write(dir.path());
    SocialCorpus corpus = load_corpus(dir.str(), "1");
    CHECK_THROWS_AS(build_vocabulary(corpus, "a1", VocabConfig{}), ConstructionError);
}

TEST_CASE("term_frequency_vector counts in-vocabulary tokens") {
    TempDir dir("tf");
    SocialCorpus corpus = tiny_vocab_corpus(dir);
    Vocabulary vocab;
    vocab.keywords = {"a", "b"};
    vocab.index = {{"a", 0}, {"b", 1}};
    vocab.frequencies = {{"a", 2}, {"b", 2}};

    Post post;
    post.tokens = {"a", "a", "c"};
    auto tf = term_frequency_vector(post, vocab);
    REQUIRE(tf.size() == 1);
    CHECK(tf[0] == std::pair<int, int>{0, 2});

    Post none;
    none.tokens = {"x", "y"};
    CHECK(term_frequency_vector(none, vocab).empty());

    SUBCASE("entries sum to the number of in-vocabulary tokens") {
        Rng rng(3);
        std::vector<std::string> pool = {"a", "b", "c", "d"};
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (int trial = 0; trial < 50; ++trial) {
            Post p;
            std::size_t expected = 0;
            std::uniform_int_distribution<int> len(0, 12);
            const int n = len(rng);
            for (int i = 0; i < n; ++i) {
                p.tokens.push_back(pool[pick(rng)]);
                if (vocab.contains(p.tokens.back())) ++expected;
            }
            std::size_t total = 0;
            for (const auto& [_, count] : term_frequency_vector(p, vocab)) {
                total += static_cast<std::size_t>(count);
            }
            CHECK(total == expected);
        }
    }
}
