#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "finerfact/cli.hpp"
#include "finerfact/pipeline.hpp"
#include "support/synth_corpus.hpp"
#include "support/test_util.hpp"

using namespace finerfact;
using testutil::TempDir;

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

struct CliWorld {
    TempDir dir{"cli"};
    fs::path corpus;
    fs::path config_file;
    RunConfig config;

    explicit CliWorld(int articles = 16) {
        testutil::SynthConfig sc;
        sc.num_articles = articles;
        sc.seed = 19;
        corpus = dir.path() / "corpus";
        testutil::write_planted_corpus(sc, corpus.string());
        config = testutil::synth_run_config();
        config.trainer.epochs = 2;
        config.trainer.seed = 5;
        config_file = dir.path() / "config.json";
        testutil::write_file(config_file, config.to_json().dump(2));
    }

    int run(std::vector<std::string> args, const std::string& out_name) {
        std::vector<std::string> full = {"--config", config_file.string(), "--out",
                                         (dir.path() / out_name).string()};
        full.insert(full.end(), args.begin(), args.end());
        return run_command(full);
    }
    fs::path out(const std::string& out_name) const { return dir.path() / out_name; }
};

}  // namespace

TEST_CASE("usage errors exit with status 2") {
    CHECK(run_command({}) == 2);
    CHECK(run_command({"no-such-command"}) == 2);
    CHECK(run_command({"rank"}) == 2);  // missing required --corpus
}

TEST_CASE("module errors exit with status 1") {
    CHECK(run_command({"ingest", "--corpus", "/nonexistent/path"}) == 1);

    TempDir dir("badcfg");
    testutil::write_file(dir.path() / "bad.json", R"({"mystery_section": {}})");
    CHECK(run_command({"--config", (dir.path() / "bad.json").string(), "ingest", "--corpus",
                       dir.str()}) == 1);
}

TEST_CASE("rank emits descending saliency json stamped with the config hash") {
    CliWorld world;
    REQUIRE(world.run({"rank", "--corpus", world.corpus.string(), "--article", "art0"},
                      "rank_out") == 0);
    json j = load_json(world.out("rank_out") / "saliency" / "art0.json");
    CHECK(j.at("config_hash").get<std::string>() == world.config.hash());
    CHECK(j.at("iterations").get<int>() > 0);
    for (const char* layer : {"posts", "keywords", "users"}) {
        const auto& arr = j.at(layer);
        REQUIRE(arr.is_array());
        REQUIRE(!arr.empty());
        for (std::size_t i = 1; i < arr.size(); ++i) {
            CHECK(arr[i - 1].at("score").get<double>() >= arr[i].at("score").get<double>());
        }
    }
}

TEST_CASE("identical config and seed produce byte-identical artifacts") {
    CliWorld world;
    REQUIRE(world.run({"rank", "--corpus", world.corpus.string(), "--article", "art1"},
                      "rank_a") == 0);
    REQUIRE(world.run({"rank", "--corpus", world.corpus.string(), "--article", "art1"},
                      "rank_b") == 0);
    CHECK(testutil::read_file(world.out("rank_a") / "saliency" / "art1.json") ==
          testutil::read_file(world.out("rank_b") / "saliency" / "art1.json"));

    REQUIRE(world.run({"build-graph", "--corpus", world.corpus.string(), "--article", "art1"},
                      "graph_a") == 0);
    REQUIRE(world.run({"build-graph", "--corpus", world.corpus.string(), "--article", "art1"},
                      "graph_b") == 0);
    CHECK(testutil::read_file(world.out("graph_a") / "graphs" / "art1.json") ==
          testutil::read_file(world.out("graph_b") / "graphs" / "art1.json"));
}

TEST_CASE("ingest and topics report corpus structure") {
    CliWorld world(8);
    REQUIRE(world.run({"ingest", "--corpus", world.corpus.string()}, "ingest_out") == 0);
    json summary = load_json(world.out("ingest_out") / "corpus_summary.json");
    CHECK(summary.at("articles").get<int>() == 8);
    CHECK(summary.at("labeled_articles").get<int>() == 8);

    REQUIRE(world.run({"topics", "--corpus", world.corpus.string(), "--article", "art2"},
                      "topics_out") == 0);
    json topics = load_json(world.out("topics_out") / "topics" / "art2.json");
    CHECK(topics.at("num_topics").get<int>() == 3);
    CHECK(topics.at("topics").size() == 3);
    for (const auto& t : topics.at("topics")) {
        CHECK(t.at("keywords").size() <=
              static_cast<std::size_t>(world.config.topics.top_keywords));
    }
}

TEST_CASE("train, eval and explain produce a full artifact chain") {
    CliWorld world(16);
    REQUIRE(world.run({"train", "--corpus", world.corpus.string()}, "train_out") == 0);
    CHECK(fs::exists(world.out("train_out") / "checkpoint.json"));
    CHECK(fs::exists(world.out("train_out") / "metrics.log"));
    json report = load_json(world.out("train_out") / "train_report.json");
    CHECK(report.at("final_training").at("history").size() >= 1);

    const std::string ckpt = (world.out("train_out") / "checkpoint.json").string();
    REQUIRE(world.run({"eval", "--corpus", world.corpus.string(), "--checkpoint", ckpt},
                      "eval_out") == 0);
    json eval_report = load_json(world.out("eval_out") / "eval_report.json");
    CHECK(eval_report.at("metrics").contains("f1"));
    CHECK(eval_report.at("scores").size() == 16);

    REQUIRE(world.run({"explain", "--corpus", world.corpus.string(), "--article", "art3",
                       "--checkpoint", ckpt},
                      "explain_out") == 0);
    const fs::path dir = world.out("explain_out") / "explanations";
    CHECK(fs::exists(dir / "art3_keywords.svg"));
    CHECK(fs::exists(dir / "art3_attention.svg"));
    json explanation = load_json(dir / "art3.json");

    // attention rows sum to one over each target column
    const auto& attention = explanation.at("node_attention");
    const std::size_t n = attention.size();
    for (std::size_t v = 0; v < n; ++v) {
        double sum = 0.0;
        for (std::size_t q = 0; q < n; ++q) sum += attention[q][v].get<double>();
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }

    // every referenced id resolves in the corpus
    SocialCorpus corpus = load_corpus(world.corpus.string(), "1");
    const auto& posts = corpus.posts_for("art3");
    std::set<std::string> post_ids, user_ids;
    for (const auto& p : posts) post_ids.insert(p.id);
    for (const auto& [uid, _] : corpus.users) user_ids.insert(uid);
    Vocabulary vocab = build_vocabulary(corpus, "art3", world.config.vocab);
    for (const auto& node : explanation.at("nodes")) {
        for (const auto& pid : node.at("top_posts")) {
            CHECK(post_ids.count(pid.get<std::string>()) == 1);
        }
        for (const auto& kw : node.at("keywords")) {
            CHECK(vocab.contains(kw.get<std::string>()));
        }
    }
    for (const auto& entry : explanation.at("keyword_cloud")) {
        CHECK(vocab.contains(entry.at("keyword").get<std::string>()));
    }
    for (const auto& clue : explanation.at("pair_clues")) {
        for (const auto& user : clue.at("top_users")) {
            CHECK(user_ids.count(user.at("user").get<std::string>()) == 1);
        }
    }
}

TEST_CASE("sweep-kernels emits one table row per kernel count") {
    CliWorld world(10);
    world.config.trainer.epochs = 1;
    testutil::write_file(world.config_file, world.config.to_json().dump(2));
    REQUIRE(world.run({"sweep-kernels", "--corpus", world.corpus.string(), "--kernels",
                       "3,7"},
                      "sweep_out") == 0);
    json sweep = load_json(world.out("sweep_out") / "kernel_sweep.json");
    REQUIRE(sweep.at("sweep").size() == 2);
    CHECK(sweep.at("sweep")[0].at("kernels").get<int>() == 3);
    CHECK(sweep.at("sweep")[1].at("kernels").get<int>() == 7);
}

TEST_CASE("ablate matches the same wiring run manually") {
    CliWorld world(12);
    world.config.trainer.epochs = 1;
    testutil::write_file(world.config_file, world.config.to_json().dump(2));
    REQUIRE(world.run({"ablate", "--corpus", world.corpus.string(), "--variant", "FF-I"},
                      "ablate_out") == 0);

    // the eval config must carry the same ablation for the hash to match
    RunConfig eval_config = world.config;
    eval_config.trainer.ablation = "FF-I";
    eval_config = RunConfig::from_json(eval_config.to_json());
    const fs::path eval_cfg_file = world.dir.path() / "config_ffi.json";
    testutil::write_file(eval_cfg_file, eval_config.to_json().dump(2));
    const std::string ckpt = (world.out("ablate_out") / "checkpoint.json").string();
    REQUIRE(run_command({"--config", eval_cfg_file.string(), "--out",
                         (world.dir.path() / "ablate_eval").string(), "eval", "--corpus",
                         world.corpus.string(), "--checkpoint", ckpt}) == 0);
    json cli_metrics =
        load_json(world.dir.path() / "ablate_eval" / "eval_report.json")["metrics"];

    // manual replication of the train subcommand's wiring and seeding
    SocialCorpus corpus = load_corpus(world.corpus.string(), "1", true);
    std::vector<ArticleInput> articles =
        prepare_corpus(corpus, eval_config, eval_config.trainer.seed);
    EncoderVocab vocab = EncoderVocab::build(corpus, eval_config.reasoner.encoder.max_vocab);
    std::vector<int> labels;
    for (const auto& a : articles) labels.push_back(a.label.value_or(-1));
    std::vector<int> fold = stratified_folds(labels, 5, eval_config.trainer.seed);
    std::vector<ArticleInput> train_set, val_set;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        (fold[i] == 0 ? val_set : train_set).push_back(articles[i]);
    }
    ReasonerModel model(vocab, eval_config.reasoner, eval_config.trainer.seed);
    train(model, train_set, val_set, eval_config.trainer, Ablation::NoImportance);
    EvalResult manual = evaluate(model, articles, Ablation::NoImportance);

    CHECK(cli_metrics.at("f1").get<double>() == doctest::Approx(manual.metrics.f1));
    CHECK(cli_metrics.at("accuracy").get<double>() ==
          doctest::Approx(manual.metrics.accuracy));
}
