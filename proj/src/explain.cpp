#include "finerfact/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace finerfact {

using nlohmann::json;

namespace {

std::vector<std::pair<std::string, double>> top_entries(
    const std::vector<std::string>& names, const std::vector<double>& weights, int k) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < order.size() && static_cast<int>(out.size()) < k; ++i) {
        if (weights[order[i]] <= 0.0) break;
        out.emplace_back(names[order[i]], weights[order[i]]);
    }
    return out;
}

}  // namespace

Explanation emit_explanation(const PredictionBreakdown& breakdown,
                             const ArticleInput& input, const ReinforcementGraph& graph,
                             const SaliencyVector& saliency, int top_k) {
    Explanation e;
    e.article_id = input.article_id;
    e.final_probability = breakdown.final_probability;
    for (int k = 0; k < graph.num_keywords(); ++k) {
        e.keyword_cloud.emplace_back(graph.keywords[static_cast<std::size_t>(k)],
                                     saliency.keywords[static_cast<std::size_t>(k)]);
    }
    std::sort(e.keyword_cloud.begin(), e.keyword_cloud.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });

    const int n = static_cast<int>(input.nodes.size());
    for (int v = 0; v < n; ++v) {
        const auto& node = input.nodes[static_cast<std::size_t>(v)];
        Explanation::NodeSummary s;
        s.topic_id = node.topic_id;
        s.keywords = node.keyword_strings;
        s.claims = node.claim_texts;
        s.top_posts = node.post_ids;
        s.mean_user_saliency = node.mean_user_saliency;
        s.label = breakdown.node_labels[static_cast<std::size_t>(v)];
        s.importance = breakdown.node_importances[static_cast<std::size_t>(v)];
        e.nodes.push_back(std::move(s));
    }
    e.node_attention = breakdown.node_attention;

    for (int q = 0; q < n; ++q) {
        for (int v = 0; v < n; ++v) {
            if (q == v) continue;
            const auto& pair = breakdown.pairs[static_cast<std::size_t>(q * n + v)];
            Explanation::PairClues clues;
            clues.from_node = q;
            clues.to_node = v;
            clues.top_tokens = top_entries(pair.tokens, pair.token_attention, top_k);
            clues.top_users = top_entries(pair.users, pair.user_attention, top_k);
            e.pair_clues.push_back(std::move(clues));
        }
    }
    return e;
}

json Explanation::to_json() const {
    json cloud = json::array();
    for (const auto& [k, s] : keyword_cloud) cloud.push_back(json{{"keyword", k}, {"saliency", s}});
    json nodes_j = json::array();
    for (const auto& s : nodes) {
        nodes_j.push_back(json{{"topic_id", s.topic_id},
                               {"keywords", s.keywords},
                               {"claims", s.claims},
                               {"top_posts", s.top_posts},
                               {"mean_user_saliency", s.mean_user_saliency},
                               {"label", s.label},
                               {"importance", s.importance}});
    }
    json attention = json::array();
    for (Eigen::Index q = 0; q < node_attention.rows(); ++q) {
        json row = json::array();
        for (Eigen::Index v = 0; v < node_attention.cols(); ++v) {
            row.push_back(node_attention(q, v));
        }
        attention.push_back(row);
    }
    json clues = json::array();
    for (const auto& c : pair_clues) {
        json toks = json::array();
        for (const auto& [t, w] : c.top_tokens) toks.push_back(json{{"token", t}, {"weight", w}});
        json users = json::array();
        for (const auto& [u, w] : c.top_users) users.push_back(json{{"user", u}, {"weight", w}});
        clues.push_back(json{{"from_node", c.from_node},
                             {"to_node", c.to_node},
                             {"top_tokens", toks},
                             {"top_users", users}});
    }
    return json{{"article_id", article_id},
                {"final_probability", final_probability},
                {"keyword_cloud", cloud},
                {"nodes", nodes_j},
                {"node_attention", attention},
                {"pair_clues", clues}};
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_keyword_cloud_svg(const Explanation& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const int limit = std::min<std::size_t>(e.keyword_cloud.size(), 40);
    double max_s = 1e-12;
    for (int i = 0; i < limit; ++i) max_s = std::max(max_s, e.keyword_cloud[i].second);

    const int width = 640;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << (40 + 28 * ((limit + 3) / 4)) << "\">\n";
    out << "<!-- data: keyword saliency pairs -->\n";
    for (int i = 0; i < limit; ++i) {
        const auto& [word, sal] = e.keyword_cloud[static_cast<std::size_t>(i)];
        const double size = 10.0 + 18.0 * (sal / max_s);
        const int col = i % 4;
        const int row = i / 4;
        out << "<text x=\"" << (20 + col * 155) << "\" y=\"" << (30 + row * 28)
            << "\" font-size=\"" << size << "\" data-saliency=\"" << sal << "\">"
            << escape_xml(word) << "</text>\n";
    }
    out << "</svg>\n";
}

void write_attention_heatmap_svg(const Explanation& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const auto n = e.node_attention.rows();
    const int cell = 64;
    const int margin = 48;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << (margin + cell * n + 20) << "\" height=\"" << (margin + cell * n + 20) << "\">\n";
    out << "<!-- rows: source node q, cols: target node v, value: attention -->\n";
    for (Eigen::Index q = 0; q < n; ++q) {
        for (Eigen::Index v = 0; v < n; ++v) {
            const double a = e.node_attention(q, v);
            const int shade = static_cast<int>(255.0 * (1.0 - a));
            out << "<rect x=\"" << (margin + v * cell) << "\" y=\"" << (margin + q * cell)
                << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade
                << "," << shade << ",255)\" data-value=\"" << a << "\"/>\n";
            std::ostringstream label;
            label.precision(3);
            label << a;
            out << "<text x=\"" << (margin + v * cell + 8) << "\" y=\""
                << (margin + q * cell + cell / 2) << "\" font-size=\"12\">" << label.str()
                << "</text>\n";
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out << "<text x=\"" << (margin + i * cell + cell / 3) << "\" y=\"24\" font-size=\"13\">v"
            << i << "</text>\n";
        out << "<text x=\"8\" y=\"" << (margin + i * cell + cell / 2) << "\" font-size=\"13\">q"
            << i << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace finerfact
