#include "finerfact/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <thread>

namespace finerfact {

using ad::Tensor;

double bce_loss(double p_hat, int label, double theta_norm_sq, double lambda_reg) {
    const double p = std::clamp(p_hat, 1e-7, 1.0 - 1e-7);
    const double bce = label == 1 ? -std::log(p) : -std::log(1.0 - p);
    return bce + lambda_reg * theta_norm_sq;
}

Tensor article_loss(const ReasonerModel& model, const ArticleInput& input,
                    Ablation ablation, double lambda_reg, double scale) {
    if (!input.label.has_value()) {
        throw ConfigError("article_loss: article " + input.article_id + " has no label");
    }
    Tensor p = ad::clamp(model.forward(input, ablation), 1e-7, 1.0 - 1e-7);
    Tensor bce = *input.label == 1
                     ? ad::neg(ad::log_t(p))
                     : ad::neg(ad::log_t(ad::add_scalar(ad::neg(p), 1.0)));
    if (lambda_reg > 0.0) {
        Tensor reg;
        model.params().for_each([&](const std::string&, const Tensor& t) {
            Tensor sq = ad::sum_squares(t);
            reg = reg.defined() ? ad::add(reg, sq) : sq;
        });
        bce = ad::add(bce, ad::scale(reg, lambda_reg));
    }
    return scale == 1.0 ? bce : ad::scale(bce, scale);
}

namespace {

std::vector<ad::Matrix> snapshot_params(const ReasonerModel& model) {
    std::vector<ad::Matrix> snap;
    model.params().for_each(
        [&](const std::string&, const Tensor& t) { snap.push_back(t.value()); });
    return snap;
}

void restore_params(ReasonerModel& model, const std::vector<ad::Matrix>& snap) {
    std::size_t i = 0;
    model.params().for_each(
        [&](const std::string&, Tensor& t) { t.mutable_value() = snap[i++]; });
}

void log_metrics_line(std::ostream* log, int epoch, const std::string& split, double loss,
                      const Metrics& m) {
    if (!log) return;
    (*log) << "epoch=" << epoch << " split=" << split << " loss=" << loss
           << " precision=" << m.precision << " recall=" << m.recall << " f1=" << m.f1
           << " accuracy=" << m.accuracy << " auc=" << (m.auc ? std::to_string(*m.auc) : "n/a")
           << "\n";
}

}  // namespace

EvalResult evaluate(const ReasonerModel& model, const std::vector<ArticleInput>& articles,
                    Ablation ablation, int jobs) {
    EvalResult result;
    result.scores.resize(articles.size());
    result.labels.resize(articles.size());
    result.article_ids.resize(articles.size());

    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            result.scores[i] = model.forward(articles[i], ablation).item();
            result.labels[i] = articles[i].label.value_or(0);
            result.article_ids[i] = articles[i].article_id;
        }
    };
    if (jobs <= 1 || articles.size() < 2) {
        run_range(0, articles.size());
    } else {
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(jobs), articles.size());
        std::vector<std::thread> pool;
        const std::size_t chunk = (articles.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(articles.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& a : articles) {
        if (!a.label.has_value()) {
            throw ConfigError("evaluate: article " + a.article_id + " has no label");
        }
    }
    result.metrics = compute_metrics(result.scores, result.labels);
    return result;
}

TrainResult train(ReasonerModel& model, const std::vector<ArticleInput>& train_set,
                  const std::vector<ArticleInput>& validation_set,
                  const TrainConfig& config, Ablation ablation, std::ostream* log) {
    if (train_set.empty()) throw ConfigError("train: empty training set");
    ad::Adam optimizer(config.learning_rate);
    Rng rng(config.seed);
    const int effective_batch = config.batch_size * config.accumulation_steps;

    TrainResult result;
    std::vector<ad::Matrix> best_params = snapshot_params(model);
    double best_f1 = -1.0;
    int best_epoch = 0;
    int epochs_without_improvement = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        model.params().zero_grads();
        int in_batch = 0;
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const ArticleInput& article = train_set[idx];
            Tensor loss = article_loss(model, article, ablation, config.lambda_reg,
                                       1.0 / static_cast<double>(effective_batch));
            const double raw = loss.item() * static_cast<double>(effective_batch);
            if (!std::isfinite(raw)) {
                throw NumericError("train: non-finite loss on article " + article.article_id);
            }
            loss_sum += raw;
            ad::backward(loss);
            if (++in_batch == effective_batch) {
                optimizer.step(model.params());
                model.params().zero_grads();
                in_batch = 0;
            }
        }
        if (in_batch > 0) {
            optimizer.step(model.params());
            model.params().zero_grads();
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        if (!validation_set.empty()) {
            stats.validation = evaluate(model, validation_set, ablation).metrics;
        }
        log_metrics_line(log, epoch, "train", stats.train_loss, Metrics{});
        log_metrics_line(log, epoch, "validation", 0.0, stats.validation);
        result.history.push_back(stats);

        if (validation_set.empty() || stats.validation.f1 > best_f1) {
            best_f1 = validation_set.empty() ? 0.0 : stats.validation.f1;
            best_epoch = epoch;
            best_params = snapshot_params(model);
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= config.patience) {
            if (log) (*log) << "early stop at epoch " << epoch << "\n";
            break;
        }
    }
    restore_params(model, best_params);
    result.best_epoch = best_epoch;
    result.best_validation_f1 = std::max(best_f1, 0.0);
    return result;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k,
                                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_folds: k must be >= 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw ConfigError("stratified_folds: labels must be binary");
        }
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) {
        throw ConfigError("stratified_folds: dataset must contain both classes");
    }
    Rng rng(seed);
    std::vector<int> fold(labels.size(), 0);
    // the fold counter continues across classes so all k folds fill evenly
    std::size_t next = 0;
    for (auto& cls : by_class) {
        std::shuffle(cls.begin(), cls.end(), rng);
        for (std::size_t member : cls) {
            fold[member] = static_cast<int>(next++ % static_cast<std::size_t>(k));
        }
    }
    return fold;
}

MetricsReport cross_validate(const std::vector<ArticleInput>& articles,
                             const ModelFactory& factory, const TrainConfig& config,
                             int k, Ablation ablation, std::ostream* log) {
    std::vector<int> labels;
    for (const auto& a : articles) labels.push_back(a.label.value_or(-1));
    std::vector<int> fold = stratified_folds(labels, k, config.seed);

    std::vector<Metrics> fold_metrics;
    for (int f = 0; f < k; ++f) {
        std::vector<ArticleInput> train_pool, test_set;
        for (std::size_t i = 0; i < articles.size(); ++i) {
            (fold[i] == f ? test_set : train_pool).push_back(articles[i]);
        }
        if (test_set.empty()) continue;
        // verify both classes survive in the training split
        int pos = 0, neg = 0;
        for (const auto& a : train_pool) (a.label.value_or(0) == 1 ? pos : neg) += 1;
        if (pos == 0 || neg == 0) {
            throw ConfigError("cross_validate: a class is absent from fold " +
                              std::to_string(f) + "'s training split");
        }
        // hold out a stratified slice of the training pool for early stopping
        std::vector<ArticleInput> train_set, val_set;
        if (static_cast<int>(train_pool.size()) >= 10 && pos >= 2 && neg >= 2) {
            std::vector<int> pool_labels;
            for (const auto& a : train_pool) pool_labels.push_back(*a.label);
            std::vector<int> val_fold = stratified_folds(
                pool_labels, 5, config.seed + static_cast<std::uint64_t>(f) + 1u);
            for (std::size_t i = 0; i < train_pool.size(); ++i) {
                (val_fold[i] == 0 ? val_set : train_set).push_back(train_pool[i]);
            }
        } else {
            train_set = train_pool;
        }
        ReasonerModel model = factory.make(config.seed + 1000u * static_cast<std::uint64_t>(f));
        if (log) (*log) << "fold " << f << ": train=" << train_set.size()
                        << " val=" << val_set.size() << " test=" << test_set.size() << "\n";
        train(model, train_set, val_set, config, ablation, log);
        Metrics m = evaluate(model, test_set, ablation).metrics;
        log_metrics_line(log, 0, "fold" + std::to_string(f), 0.0, m);
        fold_metrics.push_back(m);
    }
    return MetricsReport::aggregate(std::move(fold_metrics));
}

ModelWiring make_ablation(const std::string& variant) {
    ModelWiring w;
    w.ablation = parse_ablation(variant);
    w.uniform_evidence_sampling = (w.ablation == Ablation::NoRanking);
    return w;
}

GradientCheckResult gradient_check(ReasonerModel& model, const ArticleInput& sample,
                                   Ablation ablation, double lambda_reg, double epsilon,
                                   double subsample, std::uint64_t seed,
                                   double analytic_scale) {
    GradientCheckResult result;
    model.params().zero_grads();
    Tensor loss = article_loss(model, sample, ablation, lambda_reg);
    ad::backward(loss);

    std::unordered_map<std::string, ad::Matrix> analytic;
    model.params().for_each([&](const std::string& name, const Tensor& t) {
        analytic[name] = t.has_grad() ? t.grad()
                                      : ad::Matrix::Zero(t.rows(), t.cols());
    });

    Rng rng(seed);
    double global_max = 0.0;
    model.params().for_each([&](const std::string& name, Tensor& t) {
        auto& m = t.mutable_value();
        const auto total = static_cast<std::size_t>(m.size());
        std::size_t samples = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(subsample * static_cast<double>(total))));
        samples = std::min(samples, total);
        std::uniform_int_distribution<std::size_t> pick(0, total - 1);

        GradientCheckResult::Group group;
        group.name = name;
        for (std::size_t s = 0; s < samples; ++s) {
            const std::size_t flat = pick(rng);
            const auto r = static_cast<Eigen::Index>(flat % static_cast<std::size_t>(m.rows()));
            const auto c = static_cast<Eigen::Index>(flat / static_cast<std::size_t>(m.rows()));
            const double saved = m(r, c);
            m(r, c) = saved + epsilon;
            const double up = article_loss(model, sample, ablation, lambda_reg).item();
            m(r, c) = saved - epsilon;
            const double down = article_loss(model, sample, ablation, lambda_reg).item();
            m(r, c) = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic_scale * analytic[name](r, c);
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-3});
            group.max_rel_error = std::max(group.max_rel_error, rel);
            ++group.checked;
        }
        if (group.max_rel_error > global_max) {
            global_max = group.max_rel_error;
            result.worst_group = name;
        }
        result.groups.push_back(std::move(group));
    });
    result.max_rel_error = global_max;
    result.passed = global_max < 1e-4;
    model.params().zero_grads();
    return result;
}

nlohmann::json KernelSweepResult::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
        rows.push_back(nlohmann::json{
            {"kernels", e.kernel_count},
            {"auc", e.test.auc ? nlohmann::json(*e.test.auc) : nlohmann::json()},
            {"f1", e.test.f1},
            {"accuracy", e.test.accuracy}});
    }
    return nlohmann::json{{"sweep", rows}};
}

KernelSweepResult sweep_kernels(const std::vector<ArticleInput>& articles,
                                const ModelFactory& base_factory,
                                const TrainConfig& config,
                                const std::vector<int>& kernel_counts,
                                std::ostream* log) {
    // one stratified 80/20 split shared by every kernel count
    std::vector<ArticleInput> train_pool, test_set;
    int pos = 0, neg = 0;
    for (const auto& a : articles) (a.label.value_or(0) == 1 ? pos : neg) += 1;
    if (articles.size() < 5 || pos < 2 || neg < 2) {
        train_pool = articles;  // degenerate corpus: structural sweep only
        test_set = articles;
    } else {
        std::vector<int> labels;
        for (const auto& a : articles) labels.push_back(a.label.value_or(-1));
        std::vector<int> fold = stratified_folds(labels, 5, config.seed);
        for (std::size_t i = 0; i < articles.size(); ++i) {
            (fold[i] == 0 ? test_set : train_pool).push_back(articles[i]);
        }
    }

    KernelSweepResult result;
    Ablation ablation = parse_ablation(config.ablation);
    for (int kc : kernel_counts) {
        ModelFactory factory = base_factory;
        factory.reasoner.kernel_count = kc;
        ReasonerModel model = factory.make(config.seed);
        if (log) (*log) << "sweep: kernels=" << kc << "\n";
        train(model, train_pool, {}, config, ablation, log);
        KernelSweepEntry entry;
        entry.kernel_count = kc;
        entry.test = evaluate(model, test_set, ablation).metrics;
        log_metrics_line(log, 0, "kernels" + std::to_string(kc), 0.0, entry.test);
        result.entries.push_back(entry);
    }
    return result;
}

}  // namespace finerfact
