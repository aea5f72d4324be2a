#include <fstream>

#include "finerfact/reasoner.hpp"
#include "json.hpp"

namespace finerfact {

using nlohmann::json;

namespace {

json config_to_json(const ReasonerConfig& c) {
    return json{{"embed_dim", c.encoder.embed_dim},
                {"num_blocks", c.encoder.num_blocks},
                {"ffn_dim", c.encoder.ffn_dim},
                {"max_seq_len", c.encoder.max_seq_len},
                {"max_vocab", c.encoder.max_vocab},
                {"kernel_count", c.kernel_count},
                {"fusion_hidden", c.fusion_hidden},
                {"appnp_teleport", c.appnp_teleport},
                {"appnp_depth", c.appnp_depth},
                {"separate_channel_attention", c.separate_channel_attention},
                {"n_posts", c.n_posts},
                {"n_users", c.n_users},
                {"n_keywords", c.n_keywords}};
}

ReasonerConfig config_from_json(const json& j) {
    ReasonerConfig c;
    c.encoder.embed_dim = j.at("embed_dim").get<int>();
    c.encoder.num_blocks = j.at("num_blocks").get<int>();
    c.encoder.ffn_dim = j.at("ffn_dim").get<int>();
    c.encoder.max_seq_len = j.at("max_seq_len").get<int>();
    c.encoder.max_vocab = j.at("max_vocab").get<std::size_t>();
    c.kernel_count = j.at("kernel_count").get<int>();
    c.fusion_hidden = j.at("fusion_hidden").get<int>();
    c.appnp_teleport = j.at("appnp_teleport").get<double>();
    c.appnp_depth = j.at("appnp_depth").get<int>();
    c.separate_channel_attention = j.at("separate_channel_attention").get<bool>();
    c.n_posts = j.at("n_posts").get<int>();
    c.n_users = j.at("n_users").get<int>();
    c.n_keywords = j.at("n_keywords").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const ReasonerModel& model, const std::string& config_hash,
                     const std::string& path) {
    json params = json::object();
    model.params().for_each([&](const std::string& name, const ad::Tensor& t) {
        const auto& m = t.value();
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        }
        params[name] = json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
    });
    json j{{"format", "finerfact-checkpoint"},
           {"version", 1},
           {"config_hash", config_hash},
           {"seed", model.seed()},
           {"config", config_to_json(model.config())},
           {"vocab", model.encoder().vocab().tokens},
           {"kernel_bank", json{{"mu", model.kernels().mu}, {"sigma", model.kernels().sigma}}},
           {"params", params}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint to " + path);
    out << j.dump() << "\n";
}

std::string checkpoint_config_hash(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open checkpoint " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw LoadError("malformed checkpoint " + path);
    return j.at("config_hash").get<std::string>();
}

std::unique_ptr<ReasonerModel> load_checkpoint(const std::string& path,
                                               const std::string& expected_config_hash) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open checkpoint " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() ||
        j.value("format", "") != "finerfact-checkpoint") {
        throw LoadError("malformed checkpoint " + path);
    }
    const std::string stored_hash = j.at("config_hash").get<std::string>();
    if (!expected_config_hash.empty() && stored_hash != expected_config_hash) {
        throw ConfigError("checkpoint config hash " + stored_hash +
                          " does not match current configuration " + expected_config_hash);
    }
    ReasonerConfig config = config_from_json(j.at("config"));
    EncoderVocab vocab =
        EncoderVocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    auto model = std::make_unique<ReasonerModel>(std::move(vocab), config,
                                                 j.at("seed").get<std::uint64_t>());
    const json& params = j.at("params");
    model->params().for_each([&](const std::string& name, ad::Tensor& t) {
        auto it = params.find(name);
        if (it == params.end()) {
            throw LoadError("checkpoint missing parameter group " + name);
        }
        const auto rows = (*it).at("rows").get<Eigen::Index>();
        const auto cols = (*it).at("cols").get<Eigen::Index>();
        if (rows != t.rows() || cols != t.cols()) {
            throw LoadError("checkpoint shape mismatch for " + name);
        }
        const auto data = (*it).at("data").get<std::vector<double>>();
        auto& m = t.mutable_value();
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
        }
    });
    return model;
}

}  // namespace finerfact
