#pragma once

#include <optional>
#include <vector>

#include "json.hpp"

namespace finerfact {

// Macro-averaged over both classes; F1 is the harmonic mean of the macro
// precision and recall. AUC is absent on single-class data.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::optional<double> auc;

    nlohmann::json to_json() const;
};

struct MetricsReport {
    Metrics mean;
    Metrics stddev;
    std::vector<Metrics> folds;

    nlohmann::json to_json() const;
    static MetricsReport single(Metrics m) {
        MetricsReport r;
        r.mean = m;
        return r;
    }
    static MetricsReport aggregate(std::vector<Metrics> folds);
};

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area under the ROC curve with exact rational accumulation;
// returns nothing when only one class is present.
std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels);

}  // namespace finerfact
