#include "finerfact/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace finerfact {

namespace fs = std::filesystem;

std::uint64_t article_seed(std::uint64_t base, const std::string& article_id) {
    return fnv1a64(article_id.data(), article_id.size(), base ^ 0x9e3779b97f4a7c15ULL);
}

ArticleArtifacts rank_article(const SocialCorpus& corpus, const std::string& article_id,
                              const RunConfig& config) {
    ArticleArtifacts art;
    art.vocab = build_vocabulary(corpus, article_id, config.vocab);
    art.graph = build_reinforcement_graph(corpus, article_id, art.vocab, config.ranker);
    art.saliency = propagate_saliency(art.graph, config.ranker);
    return art;
}

ArticleArtifacts run_article_pipeline(const SocialCorpus& corpus,
                                      const std::string& article_id,
                                      const RunConfig& config, std::uint64_t seed,
                                      const std::string& cache_dir) {
    ArticleArtifacts art = rank_article(corpus, article_id, config);
    const std::uint64_t aseed = article_seed(seed, article_id);

    fs::path cache_file;
    if (!cache_dir.empty()) {
        cache_file = fs::path(cache_dir) / "ce-graphs" / config.pipeline_hash(seed) /
                     (article_id + ".json");
        if (fs::exists(cache_file)) {
            std::ifstream in(cache_file);
            nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
            if (!j.is_discarded()) {
                art.ce_graph = ClaimEvidenceGraph::from_json(j);
                return art;
            }
        }
    }

    IdDocs docs = make_documents(corpus, article_id, art.vocab);
    int num_topics = config.topics.num_topics;
    if (num_topics == 0) {
        num_topics = select_topic_count(docs, static_cast<int>(art.vocab.size()),
                                        config.topics.grid_lo, config.topics.grid_hi,
                                        config.topics.alpha, config.topics.eta,
                                        config.topics.gibbs_iterations, aseed);
    }
    art.topic_model = fit_topic_model(docs, static_cast<int>(art.vocab.size()), num_topics,
                                      config.topics.alpha, config.topics.eta,
                                      config.topics.gibbs_iterations, aseed);
    art.ce_graph = build_claim_evidence_graph(corpus, article_id, art.graph,
                                              art.topic_model, art.saliency, config.topics,
                                              aseed);
    if (!cache_file.empty()) {
        fs::create_directories(cache_file.parent_path());
        std::ofstream out(cache_file);
        out << art.ce_graph.to_json().dump() << "\n";
    }
    return art;
}

ArticleInput prepare_article(const SocialCorpus& corpus, const std::string& article_id,
                             const RunConfig& config, std::uint64_t seed,
                             const std::string& cache_dir) {
    ArticleArtifacts art = run_article_pipeline(corpus, article_id, config, seed, cache_dir);
    return assemble_article_input(corpus, art.ce_graph, art.graph, art.saliency,
                                  config.reasoner);
}

std::vector<ArticleInput> prepare_corpus(const SocialCorpus& corpus, const RunConfig& config,
                                         std::uint64_t seed, const std::string& cache_dir,
                                         int jobs, std::ostream* progress) {
    std::vector<ArticleInput> inputs(corpus.articles.size());
    std::mutex log_mutex;
    std::size_t done = 0;
    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            inputs[i] = prepare_article(corpus, corpus.articles[i].id, config, seed,
                                        cache_dir);
            if (progress) {
                std::lock_guard<std::mutex> lock(log_mutex);
                ++done;
                if (done % 50 == 0) {
                    (*progress) << "prepared " << done << "/" << corpus.articles.size()
                                << " articles\n";
                }
            }
        }
    };
    if (jobs <= 1 || corpus.articles.size() < 2) {
        run_range(0, corpus.articles.size());
    } else {
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(jobs), corpus.articles.size());
        std::vector<std::thread> pool;
        const std::size_t chunk = (corpus.articles.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(corpus.articles.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    return inputs;
}

}  // namespace finerfact
