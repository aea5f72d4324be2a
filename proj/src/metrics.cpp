#include "finerfact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "finerfact/common.hpp"

namespace finerfact {

using nlohmann::json;

json Metrics::to_json() const {
    json j{{"precision", precision},
           {"recall", recall},
           {"f1", f1},
           {"accuracy", accuracy},
           {"averaging", "macro"}};
    if (auc)
        j["auc"] = *auc;
    else
        j["auc"] = nullptr;
    return j;
}

json MetricsReport::to_json() const {
    json j{{"mean", mean.to_json()}};
    if (!folds.empty()) {
        j["stddev"] = stddev.to_json();
        json fj = json::array();
        for (const auto& f : folds) fj.push_back(f.to_json());
        j["folds"] = fj;
    }
    return j;
}

MetricsReport MetricsReport::aggregate(std::vector<Metrics> folds) {
    MetricsReport r;
    r.folds = std::move(folds);
    const double n = static_cast<double>(r.folds.size());
    if (r.folds.empty()) return r;
    double auc_n = 0.0, auc_sum = 0.0;
    for (const auto& f : r.folds) {
        r.mean.precision += f.precision / n;
        r.mean.recall += f.recall / n;
        r.mean.f1 += f.f1 / n;
        r.mean.accuracy += f.accuracy / n;
        if (f.auc) {
            auc_sum += *f.auc;
            auc_n += 1.0;
        }
    }
    if (auc_n > 0.0) r.mean.auc = auc_sum / auc_n;
    auto var = [&](auto get, double mean) {
        double s = 0.0;
        for (const auto& f : r.folds) s += (get(f) - mean) * (get(f) - mean);
        return std::sqrt(s / n);
    };
    r.stddev.precision = var([](const Metrics& m) { return m.precision; }, r.mean.precision);
    r.stddev.recall = var([](const Metrics& m) { return m.recall; }, r.mean.recall);
    r.stddev.f1 = var([](const Metrics& m) { return m.f1; }, r.mean.f1);
    r.stddev.accuracy = var([](const Metrics& m) { return m.accuracy; }, r.mean.accuracy);
    return r;
}

std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
    long long n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // integer numerator of sum (delta FP) * (TP_i + TP_{i-1}); exact division once
    long long numerator = 0;
    long long tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        numerator += (fp - prev_fp) * (tp + prev_tp);
        prev_tp = tp;
        prev_fp = fp;
    }
    return static_cast<double>(numerator) / (2.0 * static_cast<double>(n_pos) *
                                             static_cast<double>(n_neg));
}

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw Error("compute_metrics: empty or mismatched inputs");
    }
    Metrics m;
    long long correct = 0;
    long long tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] >= 0.5 ? 1 : 0;
        const int y = labels[i];
        if (pred == y) ++correct;
        for (int c : {0, 1}) {
            if (pred == c && y == c) tp[c] += 1;
            if (pred == c && y != c) fp[c] += 1;
            if (pred != c && y == c) fn[c] += 1;
        }
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    double prec_sum = 0.0, rec_sum = 0.0;
    for (int c : {0, 1}) {
        const double p = (tp[c] + fp[c]) > 0
                             ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c])
                             : 0.0;
        const double r = (tp[c] + fn[c]) > 0
                             ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c])
                             : 0.0;
        prec_sum += p;
        rec_sum += r;
    }
    m.precision = prec_sum / 2.0;
    m.recall = rec_sum / 2.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.auc = roc_auc(scores, labels);
    return m;
}

}  // namespace finerfact
