#include "ncdkit/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ncdkit/errors.hpp"
#include "ncdkit/matrix_io.hpp"
#include "ncdkit/rng.hpp"

namespace ncdkit::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- splits --

// Per-class allocation state. Part order: 0 = train, 1 = val, 2 = test.
// Quotas are exact rationals over denominator 10 (numerators 6nc, nc, 3nc),
// so every comparison below is integer-exact.
struct ClassAlloc {
    std::array<std::size_t, 3> cnt{};
    std::array<std::size_t, 3> floor{};
    std::array<int, 3> rem{};  // quota numerator mod 10

    bool can_gain(int p) const { return rem[p] > 0 && cnt[p] == floor[p]; }
    bool can_lose(int p) const { return cnt[p] > floor[p]; }
};

std::vector<ClassAlloc> allocate_counts(const std::vector<std::size_t>& class_sizes,
                                        std::size_t train_total, std::size_t val_total) {
    const std::size_t num_classes = class_sizes.size();
    std::vector<ClassAlloc> alloc(num_classes);

    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t nc = class_sizes[c];
        const std::array<std::size_t, 3> numer = {6 * nc, 1 * nc, 3 * nc};
        std::size_t assigned = 0;
        for (int p = 0; p < 3; ++p) {
            alloc[c].floor[p] = numer[p] / 10;
            alloc[c].rem[p] = static_cast<int>(numer[p] % 10);
            alloc[c].cnt[p] = alloc[c].floor[p];
            assigned += alloc[c].floor[p];
        }
        // Distribute the class leftover (0..2) by largest remainder; ties
        // favor train, then val.
        std::size_t leftover = nc - assigned;
        std::array<int, 3> order = {0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (alloc[c].rem[a] != alloc[c].rem[b]) return alloc[c].rem[a] > alloc[c].rem[b];
            return a < b;
        });
        for (std::size_t i = 0; i < leftover; ++i) ++alloc[c].cnt[order[i]];
    }

    auto total = [&](int p) {
        std::size_t s = 0;
        for (const auto& a : alloc) s += a.cnt[p];
        return s;
    };

    // Move one slot between two parts inside a single class, keeping every
    // count in [floor, ceil]. Returns the class moved, or -1.
    auto shift = [&](int gain, int lose) -> std::ptrdiff_t {
        std::ptrdiff_t best = -1;
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (!alloc[c].can_gain(gain) || !alloc[c].can_lose(lose)) continue;
            if (best < 0 || alloc[c].rem[gain] > alloc[static_cast<std::size_t>(best)].rem[gain])
                best = static_cast<std::ptrdiff_t>(c);
        }
        if (best >= 0) {
            ++alloc[static_cast<std::size_t>(best)].cnt[gain];
            --alloc[static_cast<std::size_t>(best)].cnt[lose];
        }
        return best;
    };

    // Net transfer of one slot from column `from` to column `to`, leaving
    // the third column's total unchanged: either a direct within-class move
    // or a two-class chain through the third column (a class below its
    // `from` quota may only have slack in that third column).
    auto transfer = [&](int from, int to) -> bool {
        if (shift(to, from) >= 0) return true;
        int mid = 3 - from - to;
        std::ptrdiff_t first = shift(mid, from);
        if (first < 0) return false;
        if (shift(to, mid) >= 0) return true;
        ++alloc[static_cast<std::size_t>(first)].cnt[from];  // revert
        --alloc[static_cast<std::size_t>(first)].cnt[mid];
        return false;
    };

    // Train totals first (direct moves provably suffice: a class whose train
    // count sits below its quota has val or test above quota, and vice
    // versa), then val against test with the train total frozen.
    while (total(0) < train_total)
        if (shift(0, 1) < 0 && shift(0, 2) < 0)
            throw_consistency("split allocation: cannot raise the train total");
    while (total(0) > train_total)
        if (shift(1, 0) < 0 && shift(2, 0) < 0)
            throw_consistency("split allocation: cannot lower the train total");
    while (total(1) < val_total)
        if (!transfer(2, 1)) throw_consistency("split allocation: cannot raise the val total");
    while (total(1) > val_total)
        if (!transfer(1, 2)) throw_consistency("split allocation: cannot lower the val total");
    return alloc;
}

}  // namespace

SplitPlan make_splits_labels(const std::vector<int>& labels,
                             const std::vector<std::string>& class_names,
                             std::size_t runs, std::uint64_t base_seed) {
    const std::size_t n = labels.size();
    if (n == 0) throw_data("EmptyDataset: cannot split an empty dataset");
    const std::size_t num_classes = class_names.size();

    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
            throw_data("label index out of range at record " + std::to_string(i));
        members[static_cast<std::size_t>(label)].push_back(i);
    }
    std::vector<std::size_t> class_sizes(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        class_sizes[c] = members[c].size();
        if (class_sizes[c] < 4)
            throw_data("ClassTooSmall: class '" + class_names[c] + "' has " +
                       std::to_string(class_sizes[c]) + " members, need >= 4");
    }

    // round-half-up totals on the exact tenth quotas
    const std::size_t train_total = (kTrainTenths * n + 5) / 10;
    const std::size_t val_total = (kValTenths * n + 5) / 10;

    SplitPlan plan;
    plan.base_seed = base_seed;
    for (std::size_t r = 0; r < runs; ++r) {
        const std::uint64_t seed = base_seed + r;
        plan.run_seeds.push_back(seed);
        SplitMix64 rng(seed);

        auto alloc = allocate_counts(class_sizes, train_total, val_total);

        SplitPlan::Split split;
        for (std::size_t c = 0; c < num_classes; ++c) {
            std::vector<std::size_t> order = members[c];
            shuffle(order, rng);
            std::size_t pos = 0;
            for (std::size_t i = 0; i < alloc[c].cnt[0]; ++i) split.train.push_back(order[pos++]);
            for (std::size_t i = 0; i < alloc[c].cnt[1]; ++i) split.val.push_back(order[pos++]);
            for (std::size_t i = 0; i < alloc[c].cnt[2]; ++i) split.test.push_back(order[pos++]);
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.val.begin(), split.val.end());
        std::sort(split.test.begin(), split.test.end());
        plan.runs.push_back(std::move(split));
    }
    return plan;
}

SplitPlan make_splits(const seqio::Dataset& d, std::size_t runs, std::uint64_t base_seed) {
    return make_splits_labels(d.label_ids(), d.classes, runs, base_seed);
}

// --------------------------------------------------------------- metrics --

Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<classify::ProbVector>& preds,
                        std::size_t num_classes) {
    const std::size_t m = y_true.size();
    if (preds.size() != m)
        throw_data("LengthMismatch: " + std::to_string(m) + " labels vs " +
                   std::to_string(preds.size()) + " predictions");
    if (m == 0) throw_data("LengthMismatch: no samples");
    for (const auto& p : preds) {
        if (p.size() != num_classes) throw_data("prediction vector has wrong class count");
        double sum = 0.0;
        for (double v : p) {
            if (v < 0.0) throw_data("negative probability in prediction");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw_data("prediction probabilities do not sum to 1");
    }

    std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0),
        support(num_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t truth = static_cast<std::size_t>(y_true[i]);
        if (truth >= num_classes) throw_data("true label out of range");
        const std::size_t pred = static_cast<std::size_t>(classify::argmax_class(preds[i]));
        ++support[truth];
        if (pred == truth) {
            ++correct;
            ++tp[truth];
        } else {
            ++fp[pred];
            ++fn[truth];
        }
    }

    Metrics out;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(m);

    double macro_f1 = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double tpc = static_cast<double>(tp[c]);
        const double prec = tp[c] + fp[c] == 0 ? 0.0 : tpc / static_cast<double>(tp[c] + fp[c]);
        const double rec = tp[c] + fn[c] == 0 ? 0.0 : tpc / static_cast<double>(tp[c] + fn[c]);
        const double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
        const double w = static_cast<double>(support[c]) / static_cast<double>(m);
        out.precision_weighted += w * prec;
        out.recall_weighted += w * rec;
        out.f1_weighted += w * f1;
        macro_f1 += f1;
    }
    out.f1_macro = macro_f1 / static_cast<double>(num_classes);

    // One-vs-rest ROC-AUC by the midrank method (equivalent to trapezoidal
    // integration with tied scores averaged). Classes lacking positives or
    // negatives are excluded; an empty average reports chance level.
    double auc_sum = 0.0;
    std::size_t auc_classes = 0;
    std::vector<std::pair<double, bool>> scored(m);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t npos = support[c];
        const std::size_t nneg = m - npos;
        if (npos == 0 || nneg == 0) continue;
        for (std::size_t i = 0; i < m; ++i)
            scored[i] = {preds[i][c], static_cast<std::size_t>(y_true[i]) == c};
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double pos_rank_sum = 0.0;
        std::size_t i = 0;
        while (i < m) {
            std::size_t j = i;
            std::size_t pos_in_tie = 0;
            while (j < m && scored[j].first == scored[i].first) {
                if (scored[j].second) ++pos_in_tie;
                ++j;
            }
            const double avg_rank = static_cast<double>(i + 1 + j) / 2.0;  // 1-based midrank
            pos_rank_sum += avg_rank * static_cast<double>(pos_in_tie);
            i = j;
        }
        const double npos_d = static_cast<double>(npos);
        auc_sum += (pos_rank_sum - npos_d * (npos_d + 1.0) / 2.0) /
                   (npos_d * static_cast<double>(nneg));
        ++auc_classes;
    }
    out.roc_auc = auc_classes == 0 ? 0.5 : auc_sum / static_cast<double>(auc_classes);
    return out;
}

// ------------------------------------------------------------ experiment --

const char* classifier_name(ClassifierKind c) {
    switch (c) {
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::logreg: return "logreg";
        case ClassifierKind::gnb: return "gnb";
        case ClassifierKind::ncd_knn: return "ncd-knn";
    }
    return "?";
}

ClassifierKind parse_classifier(std::string_view name) {
    if (name == "knn") return ClassifierKind::knn;
    if (name == "logreg" || name == "lr") return ClassifierKind::logreg;
    if (name == "gnb" || name == "nb") return ClassifierKind::gnb;
    if (name == "ncd-knn" || name == "ncd_knn") return ClassifierKind::ncd_knn;
    throw_data("unknown classifier: " + std::string(name));
}

namespace {

std::vector<double> gather_rows(const double* coords, std::size_t q,
                                const std::vector<std::size_t>& idx) {
    std::vector<double> out(idx.size() * q);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(coords + idx[r] * q, coords + (idx[r] + 1) * q, out.begin() + r * q);
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = labels[idx[r]];
    return out;
}

double accuracy_of(const std::vector<int>& y_true,
                   const std::vector<classify::ProbVector>& preds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (classify::argmax_class(preds[i]) == y_true[i]) ++correct;
    return y_true.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(y_true.size());
}

std::vector<std::size_t> tune_candidates(std::size_t train_size) {
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= 15; k += 2)
        if (k <= train_size) ks.push_back(k);
    return ks;
}

// Optional per-run prediction export.
void maybe_write_predictions(const ExperimentConfig& cfg, std::size_t run_index,
                             const std::vector<std::string>& all_ids,
                             const std::vector<std::size_t>& test_idx,
                             const std::vector<classify::ProbVector>& preds,
                             const std::vector<std::string>& class_names) {
    if (cfg.predictions_prefix.empty()) return;
    std::vector<std::string> ids;
    ids.reserve(test_idx.size());
    for (std::size_t idx : test_idx) ids.push_back(all_ids[idx]);
    io::write_predictions_csv(ids, preds, class_names,
                              cfg.predictions_prefix + ".run" + std::to_string(run_index) +
                                  ".csv");
}

// Evaluate one split on embedding coordinates.
RunResult run_on_coords(const double* coords, std::size_t q, const std::vector<int>& labels,
                        const std::vector<std::string>& class_names,
                        const std::vector<std::string>& all_ids,
                        const SplitPlan::Split& split, std::size_t run_index,
                        std::uint64_t seed, const ExperimentConfig& cfg) {
    classify::LabeledVectors train;
    train.d = q;
    train.class_names = class_names;

    RunResult result;
    result.seed = seed;

    auto t0 = Clock::now();
    train.x = gather_rows(coords, q, split.train);
    train.m = split.train.size();
    train.y = gather_labels(labels, split.train);
    double gather_time = seconds_since(t0);

    std::vector<double> test_x = gather_rows(coords, q, split.test);
    std::vector<int> test_y = gather_labels(labels, split.test);

    std::vector<classify::ProbVector> preds;
    double fit_time = gather_time;
    switch (cfg.clf) {
        case ClassifierKind::knn: {
            std::size_t k = cfg.knn_k;
            if (cfg.tune && !split.val.empty()) {
                std::vector<double> val_x = gather_rows(coords, q, split.val);
                std::vector<int> val_y = gather_labels(labels, split.val);
                double best_acc = -1.0;
                for (std::size_t cand : tune_candidates(train.m)) {
                    double acc = accuracy_of(
                        val_y, classify::knn_fit_predict(train, val_x, split.val.size(), cand));
                    if (acc > best_acc) {
                        best_acc = acc;
                        k = cand;
                    }
                }
                result.tuned_k = k;
            }
            preds = classify::knn_fit_predict(train, test_x, split.test.size(), k);
            break;
        }
        case ClassifierKind::logreg: {
            auto t1 = Clock::now();
            auto model = classify::logreg_fit(train, cfg.logreg);
            fit_time += seconds_since(t1);
            preds = classify::logreg_predict(model, test_x, split.test.size());
            break;
        }
        case ClassifierKind::gnb: {
            auto t1 = Clock::now();
            auto model = classify::gnb_fit(train, cfg.gnb_var_floor);
            fit_time += seconds_since(t1);
            preds = classify::gnb_predict(model, test_x, split.test.size());
            break;
        }
        case ClassifierKind::ncd_knn:
            throw_data("ncd-knn does not run on embeddings");
    }

    maybe_write_predictions(cfg, run_index, all_ids, split.test, preds, class_names);
    result.metrics = compute_metrics(test_y, preds, class_names.size());
    result.train_time_sec = cfg.measure_time ? fit_time : 0.0;
    return result;
}

RunResult run_ncd_knn(const ncd::DistanceMatrix& dprime, const std::vector<int>& labels,
                      const std::vector<std::string>& class_names,
                      const SplitPlan::Split& split, std::size_t run_index,
                      std::uint64_t seed, const ExperimentConfig& cfg) {
    RunResult result;
    result.seed = seed;
    std::size_t k = cfg.knn_k;
    if (cfg.tune && !split.val.empty()) {
        std::vector<int> val_y = gather_labels(labels, split.val);
        double best_acc = -1.0;
        for (std::size_t cand : tune_candidates(split.train.size())) {
            auto val_preds = classify::ncd_knn_predict(dprime, split.train, split.val, labels,
                                                       class_names.size(), cand);
            double acc = accuracy_of(val_y, val_preds);
            if (acc > best_acc) {
                best_acc = acc;
                k = cand;
            }
        }
        result.tuned_k = k;
    }
    auto preds =
        classify::ncd_knn_predict(dprime, split.train, split.test, labels, class_names.size(), k);
    maybe_write_predictions(cfg, run_index, dprime.ids, split.test, preds, class_names);
    result.metrics = compute_metrics(gather_labels(labels, split.test), preds, class_names.size());
    result.train_time_sec = 0.0;  // lazy learner, no fit work
    return result;
}

// Inductive split handling: each sequence's feature vector is its row of D'
// restricted to train columns, so no test geometry leaks into the fit.
RunResult run_inductive(const ncd::DistanceMatrix& dprime, const std::vector<int>& labels,
                        const std::vector<std::string>& class_names,
                        const SplitPlan::Split& split, std::size_t run_index,
                        std::uint64_t seed, const ExperimentConfig& cfg) {
    const std::size_t mtr = split.train.size();

    auto feature_rows = [&](const std::vector<std::size_t>& rows) {
        std::vector<double> f(rows.size() * mtr);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < mtr; ++c)
                f[r * mtr + c] = dprime.at(rows[r], split.train[c]);
        return f;
    };

    std::vector<double> sq_train;
    std::vector<double> f_train;
    if (cfg.kmode == kernel::KernelMode::row_feature) {
        f_train = feature_rows(split.train);
        sq_train = kernel::pairwise_sqdist(f_train.data(), mtr, mtr);
    } else {
        sq_train.resize(mtr * mtr);
        for (std::size_t i = 0; i < mtr; ++i)
            for (std::size_t j = 0; j < mtr; ++j) {
                double d = dprime.at(split.train[i], split.train[j]);
                sq_train[i * mtr + j] = d * d;
            }
    }

    double sigma2 = cfg.sigma.use_median ? kernel::median_offdiag(sq_train, mtr)
                                         : cfg.sigma.fixed_value;
    if (!(sigma2 > 0.0))
        throw_data("NonPositiveSigma: median of train squared distances is 0; "
                   "supply a fixed sigma2");

    kernel::KernelMatrix ktrain;
    ktrain.n = mtr;
    ktrain.values = kernel::gaussian_from_sqdist(sq_train, mtr, mtr, sigma2, /*unit_diag=*/true);
    ktrain.sigma2 = sigma2;
    ktrain.mode = cfg.kmode;
    ktrain.spec = dprime.spec;
    for (std::size_t i : split.train) ktrain.ids.push_back(dprime.ids[i]);

    auto model = kpca::kpca_fit(ktrain, std::min(cfg.components, mtr), cfg.center);
    const std::size_t q = model.embedding.q;

    auto project = [&](const std::vector<std::size_t>& rows) {
        std::vector<double> cross_sq;
        if (cfg.kmode == kernel::KernelMode::row_feature) {
            auto f = feature_rows(rows);
            cross_sq = kernel::cross_sqdist(f.data(), rows.size(), f_train.data(), mtr, mtr);
        } else {
            cross_sq.resize(rows.size() * mtr);
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t c = 0; c < mtr; ++c) {
                    double d = dprime.at(rows[r], split.train[c]);
                    cross_sq[r * mtr + c] = d * d;
                }
        }
        auto cross_k = kernel::gaussian_from_sqdist(cross_sq, rows.size(), mtr, sigma2,
                                                    /*unit_diag=*/false);
        return kpca::nystrom_project(model, cross_k, rows.size());
    };

    classify::LabeledVectors train;
    train.x = model.embedding.coords;
    train.m = mtr;
    train.d = q;
    train.y = gather_labels(labels, split.train);
    train.class_names = class_names;

    std::vector<double> test_x = project(split.test);
    std::vector<int> test_y = gather_labels(labels, split.test);

    RunResult result;
    result.seed = seed;
    result.sigma2 = sigma2;

    std::vector<classify::ProbVector> preds;
    double fit_time = 0.0;
    switch (cfg.clf) {
        case ClassifierKind::knn: {
            std::size_t k = cfg.knn_k;
            if (cfg.tune && !split.val.empty()) {
                std::vector<double> val_x = project(split.val);
                std::vector<int> val_y = gather_labels(labels, split.val);
                double best_acc = -1.0;
                for (std::size_t cand : tune_candidates(mtr)) {
                    double acc = accuracy_of(
                        val_y, classify::knn_fit_predict(train, val_x, split.val.size(), cand));
                    if (acc > best_acc) {
                        best_acc = acc;
                        k = cand;
                    }
                }
                result.tuned_k = k;
            }
            preds = classify::knn_fit_predict(train, test_x, split.test.size(), k);
            break;
        }
        case ClassifierKind::logreg: {
            auto t0 = Clock::now();
            auto m = classify::logreg_fit(train, cfg.logreg);
            fit_time = seconds_since(t0);
            preds = classify::logreg_predict(m, test_x, split.test.size());
            break;
        }
        case ClassifierKind::gnb: {
            auto t0 = Clock::now();
            auto m = classify::gnb_fit(train, cfg.gnb_var_floor);
            fit_time = seconds_since(t0);
            preds = classify::gnb_predict(m, test_x, split.test.size());
            break;
        }
        case ClassifierKind::ncd_knn:
            throw_data("ncd-knn has no inductive embedding path");
    }
    maybe_write_predictions(cfg, run_index, dprime.ids, split.test, preds, class_names);
    result.metrics = compute_metrics(test_y, preds, class_names.size());
    result.train_time_sec = cfg.measure_time ? fit_time : 0.0;
    return result;
}

ReportConfig base_echo(const ExperimentConfig& cfg, std::size_t n,
                       const std::vector<std::string>& classes, std::string source) {
    ReportConfig echo;
    echo.source = std::move(source);
    echo.classifier = classifier_name(cfg.clf);
    echo.knn_k = cfg.knn_k;
    echo.l2 = cfg.logreg.l2;
    echo.lr = cfg.logreg.lr;
    echo.epochs = cfg.logreg.epochs;
    echo.var_floor = cfg.gnb_var_floor;
    echo.runs = cfg.runs;
    echo.base_seed = cfg.base_seed;
    echo.inductive = cfg.inductive;
    echo.tune = cfg.tune;
    echo.timing = cfg.measure_time;
    echo.n = n;
    echo.classes = classes;
    return echo;
}

}  // namespace

EvalReport run_experiment(const seqio::Dataset& d, const ExperimentConfig& cfg) {
    auto dist = ncd::distance_matrix(d, cfg.spec, cfg.concat);
    return run_experiment_on_matrix(std::move(dist), d.label_ids(), d.classes, cfg);
}

EvalReport run_experiment_on_matrix(ncd::DistanceMatrix dist, const std::vector<int>& labels,
                                    const std::vector<std::string>& class_names,
                                    const ExperimentConfig& cfg) {
    const std::size_t n = dist.n;
    if (labels.size() != n) throw_consistency("IdMismatch: labels do not cover matrix rows");

    if (cfg.zero_diagonal) ncd::zero_diagonal(dist);
    auto dprime = ncd::symmetrize(dist);
    dist.values = {};  // raw buffer no longer needed

    auto plan = make_splits_labels(labels, class_names, cfg.runs, cfg.base_seed);

    EvalReport report;
    report.config = base_echo(cfg, n, class_names, "pipeline");
    report.config.compressor = compress::backend_name(dist.spec.backend);
    report.config.level = dist.spec.level;
    report.config.concat = ncd::concat_mode_name(cfg.concat);
    report.config.zero_diagonal = cfg.zero_diagonal;

    if (cfg.clf == ClassifierKind::ncd_knn) {
        for (std::size_t r = 0; r < cfg.runs; ++r)
            report.runs.push_back(run_ncd_knn(dprime, labels, class_names, plan.runs[r], r,
                                              plan.run_seeds[r], cfg));
        return report;
    }

    report.config.kernel_mode = kernel::kernel_mode_name(cfg.kmode);
    report.config.sigma2_policy = cfg.sigma.use_median ? "median" : "fixed";
    report.config.components = cfg.components;
    report.config.center = cfg.center;

    if (cfg.inductive) {
        for (std::size_t r = 0; r < cfg.runs; ++r)
            report.runs.push_back(run_inductive(dprime, labels, class_names, plan.runs[r], r,
                                                plan.run_seeds[r], cfg));
        return report;
    }

    // Transductive default: geometry (distances, kernel, components) is
    // label-free and computed once over all n sequences.
    double sigma2 = kernel::select_sigma2(dprime, cfg.sigma, cfg.kmode);
    report.config.sigma2 = sigma2;
    auto kmat = kernel::gaussian_kernel(dprime, sigma2, cfg.kmode);
    auto emb = kpca::kpca_embed(kmat, std::min(cfg.components, n), cfg.center);

    for (std::size_t r = 0; r < cfg.runs; ++r)
        report.runs.push_back(run_on_coords(emb.coords.data(), emb.q, labels, class_names,
                                            emb.ids, plan.runs[r], r, plan.run_seeds[r], cfg));
    return report;
}

EvalReport evaluate_embedding(const kpca::Embedding& emb, const std::vector<int>& labels,
                              const std::vector<std::string>& class_names,
                              const ExperimentConfig& cfg) {
    if (labels.size() != emb.n) throw_consistency("IdMismatch: labels do not cover embedding rows");
    auto plan = make_splits_labels(labels, class_names, cfg.runs, cfg.base_seed);

    EvalReport report;
    report.config = base_echo(cfg, emb.n, class_names, "embedding");
    report.config.components = emb.q;
    for (std::size_t r = 0; r < cfg.runs; ++r)
        report.runs.push_back(run_on_coords(emb.coords.data(), emb.q, labels, class_names,
                                            emb.ids, plan.runs[r], r, plan.run_seeds[r], cfg));
    return report;
}

EvalReport evaluate_ncd_knn(const ncd::DistanceMatrix& d, const std::vector<int>& labels,
                            const std::vector<std::string>& class_names,
                            const ExperimentConfig& cfg) {
    if (labels.size() != d.n) throw_consistency("IdMismatch: labels do not cover matrix rows");
    const ncd::DistanceMatrix* dprime = &d;
    ncd::DistanceMatrix sym;
    if (!d.symmetric) {
        sym = ncd::symmetrize(d);
        dprime = &sym;
    }
    auto plan = make_splits_labels(labels, class_names, cfg.runs, cfg.base_seed);

    EvalReport report;
    report.config = base_echo(cfg, d.n, class_names, "distmat");
    report.config.compressor = compress::backend_name(d.spec.backend);
    report.config.level = d.spec.level;
    for (std::size_t r = 0; r < cfg.runs; ++r)
        report.runs.push_back(run_ncd_knn(*dprime, labels, class_names, plan.runs[r], r,
                                          plan.run_seeds[r], cfg));
    return report;
}

// -------------------------------------------------------------- reporting --

MetricAggregate aggregate_metric(const EvalReport& report, double Metrics::* field) {
    MetricAggregate agg;
    const std::size_t r = report.runs.size();
    if (r == 0) return agg;
    for (const auto& run : report.runs) agg.mean += run.metrics.*field;
    agg.mean /= static_cast<double>(r);
    if (r > 1) {
        double ss = 0.0;
        for (const auto& run : report.runs) {
            double d = run.metrics.*field - agg.mean;
            ss += d * d;
        }
        agg.sd = std::sqrt(ss / static_cast<double>(r - 1));
    }
    return agg;
}

MetricAggregate aggregate_time(const EvalReport& report) {
    MetricAggregate agg;
    const std::size_t r = report.runs.size();
    if (r == 0) return agg;
    for (const auto& run : report.runs) agg.mean += run.train_time_sec;
    agg.mean /= static_cast<double>(r);
    if (r > 1) {
        double ss = 0.0;
        for (const auto& run : report.runs) {
            double d = run.train_time_sec - agg.mean;
            ss += d * d;
        }
        agg.sd = std::sqrt(ss / static_cast<double>(r - 1));
    }
    return agg;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json opt_str(const std::optional<std::string>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

const std::array<std::pair<const char*, double Metrics::*>, 6> kMetricFields = {{
    {"accuracy", &Metrics::accuracy},
    {"precision_weighted", &Metrics::precision_weighted},
    {"recall_weighted", &Metrics::recall_weighted},
    {"f1_weighted", &Metrics::f1_weighted},
    {"f1_macro", &Metrics::f1_macro},
    {"roc_auc", &Metrics::roc_auc},
}};

}  // namespace

std::string report_to_json(const EvalReport& report, int indent) {
    const ReportConfig& c = report.config;
    ordered_json j;
    ordered_json cfg;
    cfg["source"] = c.source;
    cfg["n"] = c.n;
    cfg["classes"] = c.classes;
    cfg["compressor"] = opt_str(c.compressor);
    cfg["level"] = c.level ? ordered_json(*c.level) : ordered_json(nullptr);
    cfg["concat"] = opt_str(c.concat);
    cfg["zero_diagonal"] =
        c.zero_diagonal ? ordered_json(*c.zero_diagonal) : ordered_json(nullptr);
    cfg["kernel_mode"] = opt_str(c.kernel_mode);
    cfg["sigma2_policy"] = opt_str(c.sigma2_policy);
    cfg["sigma2"] = c.sigma2 ? ordered_json(*c.sigma2) : ordered_json(nullptr);
    cfg["components"] = c.components ? ordered_json(*c.components) : ordered_json(nullptr);
    cfg["center"] = c.center ? ordered_json(*c.center) : ordered_json(nullptr);
    cfg["classifier"] = c.classifier;
    cfg["k"] = c.knn_k;
    cfg["l2"] = c.l2;
    cfg["lr"] = c.lr;
    cfg["epochs"] = c.epochs;
    cfg["var_floor"] = c.var_floor;
    cfg["runs"] = c.runs;
    cfg["base_seed"] = c.base_seed;
    ordered_json seeds = ordered_json::array();
    for (const auto& run : report.runs) seeds.push_back(run.seed);
    cfg["seeds"] = seeds;
    cfg["inductive"] = c.inductive;
    cfg["tune"] = c.tune;
    cfg["timing"] = c.timing;
    j["config"] = cfg;

    ordered_json runs = ordered_json::array();
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const RunResult& run = report.runs[r];
        ordered_json jr;
        jr["run"] = r;
        jr["seed"] = run.seed;
        for (const auto& [name, field] : kMetricFields) jr[name] = run.metrics.*field;
        jr["train_time_sec"] = run.train_time_sec;
        if (run.tuned_k) jr["tuned_k"] = *run.tuned_k;
        if (run.sigma2) jr["sigma2"] = *run.sigma2;
        runs.push_back(jr);
    }
    j["runs"] = runs;

    ordered_json agg;
    for (const auto& [name, field] : kMetricFields) {
        auto a = aggregate_metric(report, field);
        agg[name] = ordered_json{{"mean", a.mean}, {"sd", a.sd}};
    }
    auto t = aggregate_time(report);
    agg["train_time_sec"] = ordered_json{{"mean", t.mean}, {"sd", t.sd}};
    j["aggregate"] = agg;

    return j.dump(indent) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-5s %-10s %9s %9s %9s %9s %9s %9s %11s\n", "run",
                  "seed", "acc", "prec_w", "rec_w", "f1_w", "f1_macro", "roc_auc", "time_sec");
    out << line;
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const RunResult& run = report.runs[r];
        std::snprintf(line, sizeof(line),
                      "%-5zu %-10llu %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f %11.4f\n", r,
                      static_cast<unsigned long long>(run.seed), run.metrics.accuracy,
                      run.metrics.precision_weighted, run.metrics.recall_weighted,
                      run.metrics.f1_weighted, run.metrics.f1_macro, run.metrics.roc_auc,
                      run.train_time_sec);
        out << line;
    }
    auto t = aggregate_time(report);
    std::snprintf(line, sizeof(line), "%-5s %-10s", "mean", "");
    out << line;
    for (const auto& mf : kMetricFields) {
        std::snprintf(line, sizeof(line), " %9.4f", aggregate_metric(report, mf.second).mean);
        out << line;
    }
    std::snprintf(line, sizeof(line), " %11.4f\n", t.mean);
    out << line;
    std::snprintf(line, sizeof(line), "%-5s %-10s", "sd", "");
    out << line;
    for (const auto& mf : kMetricFields) {
        std::snprintf(line, sizeof(line), " %9.4f", aggregate_metric(report, mf.second).sd);
        out << line;
    }
    std::snprintf(line, sizeof(line), " %11.4f\n", t.sd);
    out << line;
    return out.str();
}

}  // namespace ncdkit::eval
