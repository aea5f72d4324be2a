#include "finerfact/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "finerfact/explain.hpp"
#include "finerfact/pipeline.hpp"

namespace finerfact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
    std::string config_path;
    std::string out_dir = "finerfact-out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;

    RunConfig config;
    std::string config_hash;

    void finalize() {
        config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        if (seed_given) config.trainer.seed = seed;
        config_hash = config.hash();
        fs::create_directories(out_dir);
    }

    std::uint64_t base_seed() const { return config.trainer.seed; }

    std::string cache_dir() const {
        if (const char* env = std::getenv("FINERFACT_CACHE")) return env;
        return (fs::path(out_dir) / "cache").string();
    }
};

void write_json(const fs::path& path, json j, const std::string& config_hash) {
    j["config_hash"] = config_hash;
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

std::vector<std::string> select_articles(const SocialCorpus& corpus,
                                         const std::string& article, bool all) {
    std::vector<std::string> ids;
    if (all || article.empty()) {
        for (const auto& a : corpus.articles) ids.push_back(a.id);
    } else {
        corpus.article(article);  // throws on unknown id
        ids.push_back(article);
    }
    return ids;
}

json saliency_to_json(const ArticleArtifacts& art) {
    auto scored = [](const std::vector<std::string>& ids, const std::vector<double>& scores) {
        std::vector<std::pair<double, std::string>> pairs;
        for (std::size_t i = 0; i < ids.size(); ++i) pairs.emplace_back(scores[i], ids[i]);
        std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        json arr = json::array();
        for (const auto& [score, id] : pairs) arr.push_back(json{{"id", id}, {"score", score}});
        return arr;
    };
    return json{{"posts", scored(art.graph.post_ids, art.saliency.posts)},
                {"keywords", scored(art.graph.keywords, art.saliency.keywords)},
                {"users", scored(art.graph.user_ids, art.saliency.users)},
                {"iterations", art.saliency.iterations_used},
                {"residual", art.saliency.residual}};
}

EncoderVocab build_encoder_vocab(const SocialCorpus& corpus, const RunConfig& config) {
    return EncoderVocab::build(corpus, config.reasoner.encoder.max_vocab);
}

struct PreparedDataset {
    std::vector<ArticleInput> articles;
    EncoderVocab vocab;
};

PreparedDataset prepare_dataset(Context& ctx, const std::string& corpus_path,
                                bool training_mode) {
    SocialCorpus corpus = load_corpus(corpus_path, "1", training_mode);
    if (corpus.articles.empty()) throw LoadError("corpus has no usable articles");
    PreparedDataset ds;
    ds.vocab = build_encoder_vocab(corpus, ctx.config);
    ds.articles = prepare_corpus(corpus, ctx.config, ctx.base_seed(), ctx.cache_dir(),
                                 ctx.jobs, &std::cerr);
    return ds;
}

void split_train_validation(const std::vector<ArticleInput>& all, std::uint64_t seed,
                            std::vector<ArticleInput>& train_set,
                            std::vector<ArticleInput>& val_set) {
    int pos = 0, neg = 0;
    for (const auto& a : all) (a.label.value_or(0) == 1 ? pos : neg) += 1;
    if (all.size() < 5 || pos < 2 || neg < 2) {
        // too small for a stratified hold-out; train on everything
        train_set = all;
        return;
    }
    std::vector<int> labels;
    for (const auto& a : all) labels.push_back(a.label.value_or(-1));
    std::vector<int> fold = stratified_folds(labels, 5, seed);
    for (std::size_t i = 0; i < all.size(); ++i) {
        (fold[i] == 0 ? val_set : train_set).push_back(all[i]);
    }
}

json history_to_json(const TrainResult& result) {
    json hist = json::array();
    for (const auto& e : result.history) {
        hist.push_back(json{{"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"validation", e.validation.to_json()}});
    }
    return json{{"history", hist},
                {"best_epoch", result.best_epoch},
                {"best_validation_f1", result.best_validation_f1}};
}

int cmd_ingest(Context& ctx, const std::string& corpus_path, bool training_mode) {
    SocialCorpus corpus = load_corpus(corpus_path, "1", training_mode);
    std::size_t labeled = 0;
    for (const auto& a : corpus.articles) labeled += a.label.has_value() ? 1 : 0;
    json summary{{"articles", corpus.articles.size()},
                 {"posts", corpus.total_posts()},
                 {"users", corpus.users.size()},
                 {"labeled_articles", labeled}};
    write_json(fs::path(ctx.out_dir) / "corpus_summary.json", summary, ctx.config_hash);
    std::cout << "articles=" << corpus.articles.size() << " posts=" << corpus.total_posts()
              << " users=" << corpus.users.size() << " labeled=" << labeled << "\n";
    return 0;
}

int cmd_rank(Context& ctx, const std::string& corpus_path, const std::string& article,
             bool all) {
    SocialCorpus corpus = load_corpus(corpus_path, "1");
    for (const auto& id : select_articles(corpus, article, all)) {
        ArticleArtifacts art = rank_article(corpus, id, ctx.config);
        write_json(fs::path(ctx.out_dir) / "saliency" / (id + ".json"),
                   saliency_to_json(art), ctx.config_hash);
        std::cout << "ranked " << id << " (" << art.graph.total_nodes() << " nodes, "
                  << art.saliency.iterations_used << " iterations)\n";
    }
    return 0;
}

int cmd_topics(Context& ctx, const std::string& corpus_path, const std::string& article,
               bool all) {
    SocialCorpus corpus = load_corpus(corpus_path, "1");
    for (const auto& id : select_articles(corpus, article, all)) {
        ArticleArtifacts art =
            run_article_pipeline(corpus, id, ctx.config, ctx.base_seed());
        json topics = json::array();
        for (int t = 0; t < art.topic_model.num_topics; ++t) {
            auto kt = top_topic_keywords(art.topic_model, t, ctx.config.topics.top_keywords);
            json kws = json::array();
            for (int k : kt) {
                kws.push_back(json{{"keyword", art.graph.keywords[static_cast<std::size_t>(k)]},
                                   {"prob", art.topic_model.topic_word[static_cast<std::size_t>(
                                        t)][static_cast<std::size_t>(k)]}});
            }
            topics.push_back(json{
                {"topic_id", t},
                {"r_t", topic_saliency(art.topic_model.topic_word[static_cast<std::size_t>(t)],
                                       kt, art.saliency.keywords)},
                {"keywords", kws}});
        }
        write_json(fs::path(ctx.out_dir) / "topics" / (id + ".json"),
                   json{{"article_id", id},
                        {"num_topics", art.topic_model.num_topics},
                        {"perplexity", art.topic_model.perplexity},
                        {"topics", topics}},
                   ctx.config_hash);
        std::cout << "topics " << id << ": T=" << art.topic_model.num_topics << "\n";
    }
    return 0;
}

int cmd_build_graph(Context& ctx, const std::string& corpus_path, const std::string& article,
                    bool all) {
    SocialCorpus corpus = load_corpus(corpus_path, "1");
    for (const auto& id : select_articles(corpus, article, all)) {
        ArticleArtifacts art = run_article_pipeline(corpus, id, ctx.config, ctx.base_seed(),
                                                    ctx.cache_dir());
        write_json(fs::path(ctx.out_dir) / "graphs" / (id + ".json"),
                   art.ce_graph.to_json(), ctx.config_hash);
        std::cout << "graph " << id << ": " << art.ce_graph.nodes.size() << " nodes\n";
    }
    return 0;
}

int cmd_train(Context& ctx, const std::string& corpus_path, int cv_folds) {
    PreparedDataset ds = prepare_dataset(ctx, corpus_path, true);
    ModelWiring wiring = make_ablation(ctx.config.trainer.ablation);

    std::ofstream log(fs::path(ctx.out_dir) / "metrics.log");
    json report;
    if (cv_folds > 0) {
        ModelFactory factory{ds.vocab, ctx.config.reasoner};
        MetricsReport cv = cross_validate(ds.articles, factory, ctx.config.trainer,
                                          cv_folds, wiring.ablation, &log);
        report["cross_validation"] = cv.to_json();
        std::cout << "cv mean f1=" << cv.mean.f1 << " accuracy=" << cv.mean.accuracy << "\n";
    }

    std::vector<ArticleInput> train_set, val_set;
    split_train_validation(ds.articles, ctx.base_seed(), train_set, val_set);
    ReasonerModel model(ds.vocab, ctx.config.reasoner, ctx.base_seed());
    TrainResult result = train(model, train_set, val_set, ctx.config.trainer,
                               wiring.ablation, &log);
    save_checkpoint(model, ctx.config_hash, (fs::path(ctx.out_dir) / "checkpoint.json").string());
    report["final_training"] = history_to_json(result);
    report["ablation"] = ablation_name(wiring.ablation);
    write_json(fs::path(ctx.out_dir) / "train_report.json", report, ctx.config_hash);
    std::cout << "trained: best epoch " << result.best_epoch << " validation f1 "
              << result.best_validation_f1 << "\n";
    return 0;
}

int cmd_eval(Context& ctx, const std::string& corpus_path, const std::string& checkpoint) {
    PreparedDataset ds = prepare_dataset(ctx, corpus_path, true);
    auto model = load_checkpoint(checkpoint, ctx.config_hash);
    ModelWiring wiring = make_ablation(ctx.config.trainer.ablation);
    EvalResult result = evaluate(*model, ds.articles, wiring.ablation, ctx.jobs);
    json scores = json::array();
    for (std::size_t i = 0; i < result.scores.size(); ++i) {
        scores.push_back(json{{"article_id", result.article_ids[i]},
                              {"score", result.scores[i]},
                              {"label", result.labels[i]}});
    }
    write_json(fs::path(ctx.out_dir) / "eval_report.json",
               json{{"metrics", result.metrics.to_json()}, {"scores", scores},
                    {"ablation", ablation_name(wiring.ablation)}},
               ctx.config_hash);
    std::cout << "eval f1=" << result.metrics.f1 << " accuracy=" << result.metrics.accuracy
              << (result.metrics.auc ? " auc=" + std::to_string(*result.metrics.auc) : "")
              << "\n";
    return 0;
}

int cmd_explain(Context& ctx, const std::string& corpus_path, const std::string& article,
                const std::string& checkpoint) {
    if (article.empty()) throw ConfigError("explain requires --article");
    SocialCorpus corpus = load_corpus(corpus_path, "1");
    ArticleArtifacts art = run_article_pipeline(corpus, article, ctx.config, ctx.base_seed(),
                                                ctx.cache_dir());
    ArticleInput input = assemble_article_input(corpus, art.ce_graph, art.graph,
                                                art.saliency, ctx.config.reasoner);
    auto model = load_checkpoint(checkpoint, ctx.config_hash);
    ModelWiring wiring = make_ablation(ctx.config.trainer.ablation);
    PredictionBreakdown breakdown = model->predict(input, wiring.ablation);
    Explanation e = emit_explanation(breakdown, input, art.graph, art.saliency);

    const fs::path dir = fs::path(ctx.out_dir) / "explanations";
    fs::create_directories(dir);
    write_json(dir / (article + ".json"), e.to_json(), ctx.config_hash);
    write_keyword_cloud_svg(e, (dir / (article + "_keywords.svg")).string());
    write_attention_heatmap_svg(e, (dir / (article + "_attention.svg")).string());
    std::cout << "explained " << article << ": p(fake)=" << e.final_probability << "\n";
    return 0;
}

int cmd_ablate(Context& ctx, const std::string& corpus_path, const std::string& variant,
               int cv_folds) {
    // override the configured variant, then train as usual
    ctx.config.trainer.ablation = variant;
    RunConfig rehashed = ctx.config;
    json j = rehashed.to_json();
    ctx.config = RunConfig::from_json(j);  // reapplies FF-M sampling wiring
    ctx.config_hash = ctx.config.hash();
    return cmd_train(ctx, corpus_path, cv_folds);
}

int cmd_sweep_kernels(Context& ctx, const std::string& corpus_path,
                      const std::string& kernel_list) {
    std::vector<int> counts;
    std::stringstream ss(kernel_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) counts.push_back(std::stoi(item));
    }
    if (counts.empty()) throw ConfigError("sweep-kernels: empty kernel list");
    PreparedDataset ds = prepare_dataset(ctx, corpus_path, true);

    std::ofstream log(fs::path(ctx.out_dir) / "metrics.log");
    ModelFactory factory{ds.vocab, ctx.config.reasoner};
    KernelSweepResult sweep =
        sweep_kernels(ds.articles, factory, ctx.config.trainer, counts, &log);
    write_json(fs::path(ctx.out_dir) / "kernel_sweep.json", sweep.to_json(), ctx.config_hash);
    std::cout << "kernels  auc      f1       accuracy\n";
    for (const auto& e : sweep.entries) {
        std::cout << e.kernel_count << "\t " << (e.test.auc ? std::to_string(*e.test.auc) : "n/a")
                  << "  " << e.test.f1 << "  " << e.test.accuracy << "\n";
    }
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"finerfact: explainable fake news detection pipeline"};
    app.require_subcommand(1);

    Context ctx;
    app.add_option("--config", ctx.config_path, "JSON config file");
    auto* seed_opt = app.add_option("--seed", ctx.seed, "override the run seed");
    app.add_option("--jobs", ctx.jobs, "parallel workers for per-article stages");
    app.add_option("--out", ctx.out_dir, "output directory");

    std::string corpus_path, article, checkpoint, variant = "none";
    std::string kernel_list = "3,5,7,9,11,13,15,17";
    bool all = false, training_mode = false;
    int cv_folds = 0;

    auto* ingest = app.add_subcommand("ingest", "load and validate a corpus");
    ingest->add_option("--corpus", corpus_path, "corpus directory")->required();
    ingest->add_flag("--training-mode", training_mode, "skip unlabeled articles");

    auto* rank = app.add_subcommand("rank", "mutual-reinforcement evidence ranking");
    rank->add_option("--corpus", corpus_path)->required();
    rank->add_option("--article", article);
    rank->add_flag("--all", all);

    auto* topics = app.add_subcommand("topics", "dump topic-keyword tables");
    topics->add_option("--corpus", corpus_path)->required();
    topics->add_option("--article", article);
    topics->add_flag("--all", all);

    auto* graph = app.add_subcommand("build-graph", "emit claim-evidence graphs");
    graph->add_option("--corpus", corpus_path)->required();
    graph->add_option("--article", article);
    graph->add_flag("--all", all);

    auto* train_cmd = app.add_subcommand("train", "train the reasoner");
    train_cmd->add_option("--corpus", corpus_path)->required();
    train_cmd->add_option("--cv", cv_folds, "also run k-fold cross-validation");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--corpus", corpus_path)->required();
    eval_cmd->add_option("--checkpoint", checkpoint)->required();

    auto* explain_cmd = app.add_subcommand("explain", "emit explanation artifacts");
    explain_cmd->add_option("--corpus", corpus_path)->required();
    explain_cmd->add_option("--article", article)->required();
    explain_cmd->add_option("--checkpoint", checkpoint)->required();

    auto* ablate = app.add_subcommand("ablate", "train an ablation variant");
    ablate->add_option("--corpus", corpus_path)->required();
    ablate->add_option("--variant", variant, "FF-P FF-B FF-K FF-I FF-M")->required();
    ablate->add_option("--cv", cv_folds);

    auto* sweep = app.add_subcommand("sweep-kernels", "kernel count sensitivity sweep");
    sweep->add_option("--corpus", corpus_path)->required();
    sweep->add_option("--kernels", kernel_list, "comma-separated kernel counts");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ctx.seed_given = seed_opt->count() > 0;
        ctx.finalize();
        if (*ingest) return cmd_ingest(ctx, corpus_path, training_mode);
        if (*rank) return cmd_rank(ctx, corpus_path, article, all);
        if (*topics) return cmd_topics(ctx, corpus_path, article, all);
        if (*graph) return cmd_build_graph(ctx, corpus_path, article, all);
        if (*train_cmd) return cmd_train(ctx, corpus_path, cv_folds);
        if (*eval_cmd) return cmd_eval(ctx, corpus_path, checkpoint);
        if (*explain_cmd) return cmd_explain(ctx, corpus_path, article, checkpoint);
        if (*ablate) return cmd_ablate(ctx, corpus_path, variant, cv_folds);
        if (*sweep) return cmd_sweep_kernels(ctx, corpus_path, kernel_list);
        throw ConfigError("no subcommand selected");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace finerfact
