#include "doctest.h"

#include <cfloat>
#include <cmath>

#include "finerfact/reasoner.hpp"
#include "support/model_fixtures.hpp"
#include "support/test_util.hpp"

using namespace finerfact;
using ad::Matrix;
using ad::Tensor;
using testutil::small_reasoner_config;
using testutil::toy_vocab;
using testutil::two_node_fixture;

TEST_CASE("standard kernel bank shape") {
    KernelBank bank = KernelBank::standard(11);
    REQUIRE(bank.size() == 11);
    CHECK(bank.mu[0] == 1.0);
    CHECK(bank.sigma[0] == 1e-3);
    CHECK(bank.mu[1] == doctest::Approx(-0.9));
    CHECK(bank.mu[10] == doctest::Approx(0.9));
    for (int i = 1; i < 11; ++i) CHECK(bank.sigma[static_cast<std::size_t>(i)] == 0.1);
    // evenly spaced within [-1, 1]
    for (int i = 2; i < 11; ++i) {
        CHECK(bank.mu[static_cast<std::size_t>(i)] -
                  bank.mu[static_cast<std::size_t>(i - 1)] ==
              doctest::Approx(0.2));
    }
}

TEST_CASE("kernel features match direct arithmetic") {
    SUBCASE("exact match kernel on a perfect row") {
        Matrix row(1, 1);
        row << 1.0;
        Tensor psi = ad::kernel_features(Tensor::constant(row), {1.0}, {1e-3}, {1});
        CHECK(psi.value()(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("soft kernel two entries") {
        Matrix row(1, 2);
        row << 1.0, 0.5;
        Tensor psi = ad::kernel_features(Tensor::constant(row), {0.5}, {0.1}, {1, 1});
        CHECK(psi.value()(0, 0) ==
              doctest::Approx(std::log(1.0 + std::exp(-12.5))).epsilon(1e-9));
        CHECK(psi.value()(0, 0) == doctest::Approx(3.7266e-6).epsilon(1e-3));
    }
    SUBCASE("giant sigma counts valid entries") {
        Matrix row(1, 4);
        row << 0.3, -0.2, 0.9, 0.1;
        Tensor psi = ad::kernel_features(Tensor::constant(row), {1.0, -0.5}, {1e9, 1e9},
                                         {1, 1, 1, 1});
        CHECK(psi.value()(0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
        CHECK(psi.value()(0, 1) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    }
    SUBCASE("all-masked row is the machine-minimum log") {
        Matrix row(1, 3);
        row << 0.3, 0.2, 0.1;
        Tensor psi = ad::kernel_features(Tensor::constant(row), {0.5}, {0.1}, {0, 0, 0});
        CHECK(psi.value()(0, 0) == doctest::Approx(std::log(DBL_MIN)));
    }
}

namespace {

struct ModelUnderTest {
    ReasonerConfig config;
    ReasonerModel model;

    explicit ModelUnderTest(int kernels = 5, std::uint64_t seed = 31,
                            ReasonerConfig cfg_in = small_reasoner_config())
        : config([&] {
              cfg_in.kernel_count = kernels;
              return cfg_in;
          }()),
          model(toy_vocab(), config, seed) {}
};

void zero_param(ReasonerModel& model, const std::string& name) {
    model.params().get(name).mutable_value().setZero();
}

}  // namespace

TEST_CASE("prediction breakdown satisfies the probability laws") {
    ModelUnderTest t;
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown b = t.model.predict(input);

    CHECK(b.final_probability > 0.0);
    CHECK(b.final_probability < 1.0);
    double imp_sum = 0.0;
    for (double v : b.node_importances) imp_sum += v;
    CHECK(imp_sum == doctest::Approx(1.0).epsilon(1e-9));

    // mixture identity against an external dot product
    double mixture = 0.0;
    for (std::size_t v = 0; v < b.node_labels.size(); ++v) {
        mixture += b.node_labels[v] * b.node_importances[v];
    }
    CHECK(std::abs(mixture - b.final_probability) < 1e-9);

    for (Eigen::Index v = 0; v < b.node_attention.cols(); ++v) {
        CHECK(b.node_attention.col(v).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (const auto& pair : b.pairs) {
        if (!pair.token_attention.empty()) {
            double s = 0.0;
            for (double a : pair.token_attention) s += a;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
        if (!pair.user_attention.empty()) {
            double s = 0.0;
            for (double a : pair.user_attention) s += a;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("single-node graphs degenerate correctly") {
    ModelUnderTest t;
    testutil::InputBuilder b(t.config);
    b.users(2);
    b.node({{"property", "scandal"}}, {{"proof", "property"}}, {0, 1});
    PredictionBreakdown out = t.model.predict(b.input);
    CHECK(out.node_importances == std::vector<double>{1.0});
    CHECK(out.final_probability == doctest::Approx(out.node_labels[0]));
    CHECK(out.node_attention(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("zeroed output weights force label one half") {
    ModelUnderTest t;
    zero_param(t.model, "label.w5");
    zero_param(t.model, "label.w6");
    zero_param(t.model, "label.b5");
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown b = t.model.predict(input);
    for (double label : b.node_labels) CHECK(label == doctest::Approx(0.5).epsilon(1e-12));
    // mixture of equal labels is label regardless of importances
    CHECK(b.final_probability == doctest::Approx(0.5).epsilon(1e-12));

    SUBCASE("a saturating bias pushes every label toward one") {
        t.model.params().get("label.b5").mutable_value()(0, 0) = 100.0;
        PredictionBreakdown sat = t.model.predict(input);
        for (double label : sat.node_labels) CHECK(label > 1.0 - 1e-12);
        CHECK(sat.final_probability > 1.0 - 1e-9);
        CHECK(sat.final_probability < 1.0);
    }
}

TEST_CASE("a single content token takes all the attention") {
    ModelUnderTest t;
    testutil::InputBuilder b(t.config);
    b.users(1);
    b.node({{"property"}}, {}, {0});  // one claim token, no posts
    b.node({{"hacking", "conspiracy"}}, {{"china"}}, {0});
    PredictionBreakdown out = t.model.predict(b.input);
    // pairs (q=0, v): q has exactly one content token
    for (int v = 0; v < 2; ++v) {
        const auto& alpha = out.pairs[static_cast<std::size_t>(v)].token_attention;
        double total = 0.0;
        int nonzero = 0;
        for (double a : alpha) {
            total += a;
            nonzero += a > 0.0 ? 1 : 0;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(nonzero == 1);
    }
    // encoding shape: one content row plus the sequence-start token
    TokenEncoding e = t.model.encoder().encode(b.input.nodes[0].segments);
    CHECK(e.embeddings.rows() == 2);
    int content = 0;
    for (int m : e.content_mask) content += m;
    CHECK(content == 1);
}

TEST_CASE("constant fusion output gives uniform node attention") {
    ModelUnderTest t;
    zero_param(t.model, "fusion.w2");  // logits collapse to the bias
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown b = t.model.predict(input);
    for (Eigen::Index v = 0; v < b.node_attention.cols(); ++v) {
        for (Eigen::Index q = 0; q < b.node_attention.rows(); ++q) {
            CHECK(b.node_attention(q, v) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("identical nodes share labels and importances") {
    ModelUnderTest t;
    testutil::InputBuilder b(t.config);
    b.users(2);
    b.node({{"property", "scandal"}}, {{"proof"}}, {0, 1});
    b.node({{"property", "scandal"}}, {{"proof"}}, {0, 1});
    PredictionBreakdown out = t.model.predict(b.input);
    CHECK(out.node_labels[0] == doctest::Approx(out.node_labels[1]).epsilon(1e-12));
    CHECK(out.node_importances[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.node_importances[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("doubling one node's saliency slices raises its importance") {
    ModelUnderTest t;
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown before = t.model.predict(input);

    ArticleInput boosted = input;
    for (double& v : boosted.nodes[0].saliency_posts) v *= 2.0;
    for (double& v : boosted.nodes[0].saliency_users) v *= 2.0;
    for (double& v : boosted.nodes[0].saliency_keywords) v *= 2.0;
    PredictionBreakdown after = t.model.predict(boosted);
    CHECK(after.attention_prior[0] == doctest::Approx(2.0 * before.attention_prior[0]));
    CHECK(after.node_importances[0] > before.node_importances[0]);
}

TEST_CASE("mean pooling degeneracy with one giant-sigma kernel") {
    ReasonerConfig cfg = small_reasoner_config(1);
    ReasonerModel model(toy_vocab(), cfg, 77);
    model.set_kernels(KernelBank{{0.0}, {1e9}});
    ArticleInput input = two_node_fixture(cfg);

    // alpha must be uniform over content tokens, so zhat is the masked mean
    PredictionBreakdown b = model.predict(input);
    const auto& enc = model.encoder();
    for (int q = 0; q < 2; ++q) {
        TokenEncoding e = enc.encode(input.nodes[static_cast<std::size_t>(q)].segments);
        int content = 0;
        for (int m : e.content_mask) content += m;
        const auto& alpha = b.pairs[static_cast<std::size_t>(q * 2)].token_attention;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (e.content_mask[i]) {
                CHECK(alpha[i] == doctest::Approx(1.0 / content).epsilon(1e-5));
            } else {
                CHECK(alpha[i] == 0.0);
            }
        }
    }
}

TEST_CASE("eval mode is bit-deterministic") {
    ModelUnderTest t;
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown a = t.model.predict(input);
    PredictionBreakdown b = t.model.predict(input);
    CHECK(a.final_probability == b.final_probability);
    CHECK(a.node_labels == b.node_labels);
    CHECK(a.node_importances == b.node_importances);
    CHECK(a.node_attention == b.node_attention);
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(a.pairs[i].token_attention == b.pairs[i].token_attention);
        CHECK(a.pairs[i].user_attention == b.pairs[i].user_attention);
    }
}

TEST_CASE("node permutation leaves the final probability unchanged") {
    ModelUnderTest t;
    testutil::InputBuilder b(t.config);
    b.users(4);
    b.node({{"property", "scandal", "senate"}}, {{"property", "proof"}}, {0, 1});
    b.node({{"hacking", "conspiracy"}}, {{"china", "server"}}, {2});
    b.node({{"records", "story"}}, {{"claims", "records"}}, {3, 0});
    ArticleInput input = b.input;
    PredictionBreakdown base = t.model.predict(input);

    ArticleInput permuted = input;
    std::swap(permuted.nodes[0], permuted.nodes[2]);
    PredictionBreakdown swapped = t.model.predict(permuted);
    CHECK(std::abs(base.final_probability - swapped.final_probability) < 1e-6);
    CHECK(swapped.node_labels[0] == doctest::Approx(base.node_labels[2]).epsilon(1e-9));
    CHECK(swapped.node_labels[2] == doctest::Approx(base.node_labels[0]).epsilon(1e-9));
    CHECK(swapped.node_importances[0] ==
          doctest::Approx(base.node_importances[2]).epsilon(1e-9));
}

TEST_CASE("nodes without users are masked, not fabricated") {
    ModelUnderTest t;
    testutil::InputBuilder b(t.config);
    b.users(2);
    b.node({{"property"}}, {{"proof", "property"}}, {});  // no users on this node
    b.node({{"hacking"}}, {{"china", "server"}}, {0, 1});
    PredictionBreakdown out = t.model.predict(b.input);
    CHECK(out.final_probability > 0.0);
    CHECK(out.final_probability < 1.0);
    // pair attention from the userless node carries no user entries
    CHECK(out.pairs[0].user_attention.empty());
}

TEST_CASE("encoder rejects empty nodes and truncates long ones") {
    ModelUnderTest t;
    CHECK_THROWS_AS(t.model.encoder().encode({}), ConstructionError);
    std::vector<TextSegment> segments;
    TokenList longtext(100, "property");
    segments.push_back({TextSegment::Kind::Claim, longtext});
    TokenEncoding e = t.model.encoder().encode(segments);
    CHECK(e.embeddings.rows() == t.config.encoder.max_seq_len);
    CHECK(e.sequence.rows() == 1);
    CHECK(e.sequence.cols() == t.config.encoder.embed_dim);
}

TEST_CASE("appnp user encoding matches the dense closed form") {
    ReasonerConfig cfg = small_reasoner_config();
    cfg.appnp_depth = 10;
    cfg.appnp_teleport = 0.1;
    ReasonerModel model(toy_vocab(), cfg, 13);

    SUBCASE("isolated users collapse to teleport-weighted features") {
        testutil::InputBuilder b(cfg);
        b.users(3, /*connect_all=*/false);  // no edges
        b.node({{"property"}}, {{"proof"}}, {0, 1, 2});
        Tensor z = model.encode_users(b.input);
        // closed form with zero adjacency: z = alpha * h; recover h by rerunning
        // propagation with depth 0 semantics (adjacency is zero, so one step gives it)
        ReasonerConfig direct = cfg;
        direct.appnp_depth = 0;
        ReasonerModel same(toy_vocab(), direct, 13);
        Tensor h = same.encode_users(b.input);
        CHECK((z.value() - 0.1 * h.value()).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("complete five-user graph matches (I - (1-a)A)^-1 aH within 1e-4") {
        testutil::InputBuilder b(cfg);
        b.users(5, /*connect_all=*/true);
        b.node({{"property"}}, {{"proof"}}, {0, 1, 2, 3, 4});
        Tensor z = model.encode_users(b.input);

        ReasonerConfig direct = cfg;
        direct.appnp_depth = 0;
        ReasonerModel same(toy_vocab(), direct, 13);
        Matrix h = same.encode_users(b.input).value();
        Matrix system = Matrix::Identity(5, 5) - 0.9 * b.input.user_adjacency;
        Matrix limit = system.partialPivLu().solve(0.1 * h);
        CHECK((z.value() - limit).cwiseAbs().maxCoeff() < 1e-4);
    }

    SUBCASE("identical attributes with symmetric edges give identical embeddings") {
        testutil::InputBuilder b(cfg);
        b.users(2, true);
        b.input.user_feature_buckets[1] = b.input.user_feature_buckets[0];
        b.node({{"property"}}, {{"proof"}}, {0, 1});
        Matrix z = model.encode_users(b.input).value();
        CHECK((z.row(0) - z.row(1)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("toy encoder output matches its pinned golden digest") {
    ReasonerConfig cfg = small_reasoner_config();
    ReasonerModel model(toy_vocab(), cfg, 4242);
    TokenEncoding e = model.encoder().encode(
        {{TextSegment::Kind::Claim, {"property", "scandal"}},
         {TextSegment::Kind::Post, {"proof", "records", "property"}}});
    std::string serialized;
    char buf[64];
    const auto& m = e.embeddings.value();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.6f,", m(r, c));
            serialized += buf;
        }
    }
    const std::string digest = to_hex(fnv1a64(serialized));
    // frozen from the first run at seed 4242; determinism contract keeps it stable
    CHECK(digest == "ded58b89bbe96269");
}

TEST_CASE("checkpoints round-trip and refuse mismatched configs") {
    testutil::TempDir dir("ckpt");
    ModelUnderTest t;
    ArticleInput input = two_node_fixture(t.config);
    PredictionBreakdown before = t.model.predict(input);

    const std::string path = (dir.path() / "model.json").string();
    save_checkpoint(t.model, "confighash123", path);
    CHECK(checkpoint_config_hash(path) == "confighash123");

    auto loaded = load_checkpoint(path, "confighash123");
    PredictionBreakdown after = loaded->predict(input);
    CHECK(after.final_probability == before.final_probability);
    CHECK(after.node_labels == before.node_labels);

    CHECK_THROWS_AS(load_checkpoint(path, "otherhash"), ConfigError);
    CHECK_NOTHROW(load_checkpoint(path, ""));  // explicit skip for tooling
}

TEST_CASE("ablation wiring changes the forward contract") {
    ModelUnderTest t;
    ArticleInput input = two_node_fixture(t.config);

    SUBCASE("FF-I forces uniform importances") {
        PredictionBreakdown b = t.model.predict(input, Ablation::NoImportance);
        CHECK(b.node_importances == std::vector<double>{0.5, 0.5});
        double mean = 0.5 * (b.node_labels[0] + b.node_labels[1]);
        CHECK(b.final_probability == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("FF-P drops the attention prior") {
        PredictionBreakdown b = t.model.predict(input, Ablation::NoPrior);
        CHECK(b.attention_prior == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("FF-B removes every user contribution") {
        PredictionBreakdown b = t.model.predict(input, Ablation::NoUserChannel);
        for (const auto& pair : b.pairs) CHECK(pair.user_attention.empty());
        // user parameters receive no gradient without the channel
        Tensor p = ad::clamp(t.model.forward(input, Ablation::NoUserChannel), 1e-7, 1 - 1e-7);
        t.model.params().zero_grads();
        ad::backward(ad::neg(ad::log_t(p)));
        CHECK_FALSE(t.model.params().get("user_feat.proj").has_grad());
        CHECK_FALSE(t.model.params().get("label.w6").has_grad());
    }
    SUBCASE("FF-K propagates raw sequence embeddings") {
        PredictionBreakdown b = t.model.predict(input, Ablation::NoKernel);
        for (const auto& pair : b.pairs) CHECK(pair.token_attention.empty());
        // kernel attention weights are inert
        Tensor p = ad::clamp(t.model.forward(input, Ablation::NoKernel), 1e-7, 1 - 1e-7);
        t.model.params().zero_grads();
        ad::backward(ad::neg(ad::log_t(p)));
        CHECK_FALSE(t.model.params().get("attn.text.w1").has_grad());
    }
}
