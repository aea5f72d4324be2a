#include "finerfact/config.hpp"

#include <fstream>
#include <set>

namespace finerfact {

using nlohmann::json;

namespace {

// Strict section reader: every key in the file must be consumed.
class SectionReader {
public:
    SectionReader(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section " + name_ + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key " + name_ + "." + key + " has the wrong type");
        }
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown config key " + name_ + "." + key);
            }
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> sections = {"corpus", "ranker", "topics", "reasoner",
                                                   "trainer"};
    for (const auto& [key, _] : j.items()) {
        if (!sections.count(key)) throw ConfigError("unknown config section " + key);
    }

    RunConfig c;
    if (j.contains("corpus")) {
        SectionReader r(j.at("corpus"), "corpus");
        r.read("extra_stopwords", c.vocab.extra_stopwords);
        r.read("use_default_stopwords", c.vocab.use_default_stopwords);
        r.read("min_token_length", c.vocab.min_token_length);
        r.read("max_vocabulary", c.vocab.max_vocabulary);
        r.finish();
    }
    if (j.contains("ranker")) {
        SectionReader r(j.at("ranker"), "ranker");
        r.read("damping", c.ranker.damping);
        r.read("theta_post", c.ranker.theta_post);
        r.read("theta_keyword", c.ranker.theta_keyword);
        r.read("theta_user", c.ranker.theta_user);
        r.read("beta_intra", c.ranker.beta_intra);
        r.read("beta_inter", c.ranker.beta_inter);
        r.read("tolerance", c.ranker.tolerance);
        r.read("max_iterations", c.ranker.max_iterations);
        r.finish();
        if (c.ranker.damping <= 0.0 || c.ranker.damping >= 1.0) {
            throw ConfigError("ranker.damping must lie in (0, 1)");
        }
    }
    if (j.contains("topics")) {
        SectionReader r(j.at("topics"), "topics");
        r.read("num_topics", c.topics.num_topics);
        r.read("grid_lo", c.topics.grid_lo);
        r.read("grid_hi", c.topics.grid_hi);
        r.read("alpha", c.topics.alpha);
        r.read("eta", c.topics.eta);
        r.read("gibbs_iterations", c.topics.gibbs_iterations);
        r.read("top_keywords", c.topics.top_keywords);
        r.read("max_topics", c.topics.max_topics);
        r.read("claims_per_topic", c.topics.claims_per_topic);
        r.read("posts_per_topic", c.topics.posts_per_topic);
        r.read("users_per_topic", c.topics.users_per_topic);
        // accepted for round-trip stability; recomputed from the ablation below
        r.read("uniform_sampling", c.topics.uniform_sampling);
        r.finish();
    }
    if (j.contains("reasoner")) {
        SectionReader r(j.at("reasoner"), "reasoner");
        r.read("embed_dim", c.reasoner.encoder.embed_dim);
        r.read("encoder_blocks", c.reasoner.encoder.num_blocks);
        r.read("ffn_dim", c.reasoner.encoder.ffn_dim);
        r.read("max_seq_len", c.reasoner.encoder.max_seq_len);
        r.read("encoder_vocab", c.reasoner.encoder.max_vocab);
        r.read("kernel_count", c.reasoner.kernel_count);
        r.read("fusion_hidden", c.reasoner.fusion_hidden);
        r.read("appnp_teleport", c.reasoner.appnp_teleport);
        r.read("appnp_depth", c.reasoner.appnp_depth);
        r.read("separate_channel_attention", c.reasoner.separate_channel_attention);
        r.finish();
    }
    if (j.contains("trainer")) {
        SectionReader r(j.at("trainer"), "trainer");
        r.read("learning_rate", c.trainer.learning_rate);
        r.read("batch_size", c.trainer.batch_size);
        r.read("accumulation_steps", c.trainer.accumulation_steps);
        r.read("lambda_reg", c.trainer.lambda_reg);
        r.read("epochs", c.trainer.epochs);
        r.read("seed", c.trainer.seed);
        r.read("ablation", c.trainer.ablation);
        r.read("kernel_count", c.trainer.kernel_count);
        r.read("patience", c.trainer.patience);
        r.finish();
        if (c.trainer.lambda_reg < 0.0) throw ConfigError("trainer.lambda_reg must be >= 0");
        parse_ablation(c.trainer.ablation);  // validates the name
    }
    // the slice lengths of the attention prior mirror the topic configuration
    c.reasoner.n_posts = c.topics.posts_per_topic;
    c.reasoner.n_users = c.topics.users_per_topic;
    c.reasoner.n_keywords = c.topics.top_keywords;
    c.reasoner.kernel_count = c.trainer.kernel_count;
    c.topics.uniform_sampling = make_ablation(c.trainer.ablation).uniform_evidence_sampling;
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("malformed JSON in config file " + path);
    return from_json(j);
}

json RunConfig::to_json() const {
    return json{
        {"corpus",
         {{"extra_stopwords", vocab.extra_stopwords},
          {"use_default_stopwords", vocab.use_default_stopwords},
          {"min_token_length", vocab.min_token_length},
          {"max_vocabulary", vocab.max_vocabulary}}},
        {"ranker",
         {{"damping", ranker.damping},
          {"theta_post", ranker.theta_post},
          {"theta_keyword", ranker.theta_keyword},
          {"theta_user", ranker.theta_user},
          {"beta_intra", ranker.beta_intra},
          {"beta_inter", ranker.beta_inter},
          {"tolerance", ranker.tolerance},
          {"max_iterations", ranker.max_iterations}}},
        {"topics",
         {{"num_topics", topics.num_topics},
          {"grid_lo", topics.grid_lo},
          {"grid_hi", topics.grid_hi},
          {"alpha", topics.alpha},
          {"eta", topics.eta},
          {"gibbs_iterations", topics.gibbs_iterations},
          {"top_keywords", topics.top_keywords},
          {"max_topics", topics.max_topics},
          {"claims_per_topic", topics.claims_per_topic},
          {"posts_per_topic", topics.posts_per_topic},
          {"users_per_topic", topics.users_per_topic},
          {"uniform_sampling", topics.uniform_sampling}}},
        {"reasoner",
         {{"embed_dim", reasoner.encoder.embed_dim},
          {"encoder_blocks", reasoner.encoder.num_blocks},
          {"ffn_dim", reasoner.encoder.ffn_dim},
          {"max_seq_len", reasoner.encoder.max_seq_len},
          {"encoder_vocab", reasoner.encoder.max_vocab},
          {"kernel_count", reasoner.kernel_count},
          {"fusion_hidden", reasoner.fusion_hidden},
          {"appnp_teleport", reasoner.appnp_teleport},
          {"appnp_depth", reasoner.appnp_depth},
          {"separate_channel_attention", reasoner.separate_channel_attention}}},
        {"trainer",
         {{"learning_rate", trainer.learning_rate},
          {"batch_size", trainer.batch_size},
          {"accumulation_steps", trainer.accumulation_steps},
          {"lambda_reg", trainer.lambda_reg},
          {"epochs", trainer.epochs},
          {"seed", trainer.seed},
          {"ablation", trainer.ablation},
          {"kernel_count", trainer.kernel_count},
          {"patience", trainer.patience}}}};
}

std::string RunConfig::hash() const { return to_hex(fnv1a64(to_json().dump())); }

std::string RunConfig::pipeline_hash(std::uint64_t seed) const {
    json j = to_json();
    json relevant{{"corpus", j.at("corpus")},
                  {"ranker", j.at("ranker")},
                  {"topics", j.at("topics")},
                  {"seed", seed}};
    return to_hex(fnv1a64(relevant.dump()));
}

}  // namespace finerfact
