#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "finerfact/metrics.hpp"
#include "finerfact/reasoner.hpp"

namespace finerfact {

struct TrainConfig {
    double learning_rate = 5e-5;
    int batch_size = 8;
    int accumulation_steps = 8;
    double lambda_reg = 1e-6;
    int epochs = 10;
    std::uint64_t seed = 42;
    std::string ablation = "none";
    int kernel_count = 11;
    int patience = 3;  // early stopping on validation F1
};

// Binary cross-entropy plus L2 penalty; p_hat clamped to [1e-7, 1-1e-7].
double bce_loss(double p_hat, int label, double theta_norm_sq, double lambda_reg);

// Tape version used by training and the gradient check.
ad::Tensor article_loss(const ReasonerModel& model, const ArticleInput& input,
                        Ablation ablation, double lambda_reg, double scale = 1.0);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    Metrics validation;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_validation_f1 = 0.0;
};

// Gradient steps with accumulation; retains the best-validation parameters in
// the model. Labels must be present on every article.
TrainResult train(ReasonerModel& model, const std::vector<ArticleInput>& train_set,
                  const std::vector<ArticleInput>& validation_set,
                  const TrainConfig& config, Ablation ablation,
                  std::ostream* log = nullptr);

struct EvalResult {
    Metrics metrics;
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<std::string> article_ids;
};

EvalResult evaluate(const ReasonerModel& model, const std::vector<ArticleInput>& articles,
                    Ablation ablation, int jobs = 1);

// Stratified fold ids (0..k-1) with per-class round-robin dealing.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed);

struct ModelFactory {
    EncoderVocab vocab;
    ReasonerConfig reasoner;

    ReasonerModel make(std::uint64_t seed) const { return {vocab, reasoner, seed}; }
};

MetricsReport cross_validate(const std::vector<ArticleInput>& articles,
                             const ModelFactory& factory, const TrainConfig& config,
                             int k, Ablation ablation, std::ostream* log = nullptr);

// Ablation wiring: reasoner-side variant plus the FF-M sampling switch.
struct ModelWiring {
    Ablation ablation = Ablation::None;
    bool uniform_evidence_sampling = false;
};

ModelWiring make_ablation(const std::string& variant);

struct GradientCheckResult {
    struct Group {
        std::string name;
        double max_rel_error = 0.0;
        int checked = 0;
    };
    std::vector<Group> groups;
    double max_rel_error = 0.0;
    std::string worst_group;
    bool passed = false;
};

// Central differences against the tape gradients on a ~1% subsample of every
// parameter group; threshold 1e-4 relative.
// analytic_scale != 1 corrupts the analytic side; the mutation hook for
// verifying that the check itself can fail.
GradientCheckResult gradient_check(ReasonerModel& model, const ArticleInput& sample,
                                   Ablation ablation, double lambda_reg,
                                   double epsilon = 1e-5, double subsample = 0.01,
                                   std::uint64_t seed = 7, double analytic_scale = 1.0);

struct KernelSweepEntry {
    int kernel_count = 0;
    Metrics test;
};

struct KernelSweepResult {
    std::vector<KernelSweepEntry> entries;
    nlohmann::json to_json() const;
};

KernelSweepResult sweep_kernels(const std::vector<ArticleInput>& articles,
                                const ModelFactory& base_factory,
                                const TrainConfig& config,
                                const std::vector<int>& kernel_counts,
                                std::ostream* log = nullptr);

}  // namespace finerfact
