#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ncdkit/errors.hpp"
#include "ncdkit/eval.hpp"
#include "support/oracles.hpp"
#include "support/testgen.hpp"

using namespace ncdkit;
using classify::ProbVector;

namespace {

std::vector<int> balanced_labels(std::size_t n, std::size_t classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % classes);
    return y;
}

std::vector<std::string> names(std::size_t c) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < c; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
    return out;
}

// probability vector putting mass p on class `hot`, rest uniform
ProbVector one_hot_ish(std::size_t classes, std::size_t hot, double p = 0.9) {
    ProbVector v(classes, (1.0 - p) / static_cast<double>(classes - 1));
    v[hot] = p;
    return v;
}

void check_split_invariants(const eval::SplitPlan::Split& split, const std::vector<int>& labels,
                            std::size_t num_classes) {
    const std::size_t n = labels.size();
    const std::size_t train_total = (6 * n + 5) / 10;
    const std::size_t val_total = (n + 5) / 10;
    CHECK(split.train.size() == train_total);
    CHECK(split.val.size() == val_total);
    CHECK(split.test.size() == n - train_total - val_total);

    std::set<std::size_t> all;
    for (const auto* part : {&split.train, &split.val, &split.test})
        for (std::size_t idx : *part) {
            CHECK(idx < n);
            CHECK(all.insert(idx).second);  // disjoint
        }
    CHECK(all.size() == n);  // union covers everything

    // stratification: per-class count within +-1 of the exact quota,
    // checked in integer tenths
    std::vector<std::size_t> class_size(num_classes, 0);
    for (int y : labels) ++class_size[static_cast<std::size_t>(y)];
    const int tenths[3] = {6, 1, 3};
    const std::vector<std::size_t>* parts[3] = {&split.train, &split.val, &split.test};
    for (int p = 0; p < 3; ++p) {
        std::vector<std::size_t> count(num_classes, 0);
        for (std::size_t idx : *parts[p]) ++count[static_cast<std::size_t>(labels[idx])];
        for (std::size_t c = 0; c < num_classes; ++c) {
            long long dev10 = 10 * static_cast<long long>(count[c]) -
                              tenths[p] * static_cast<long long>(class_size[c]);
            CHECK(std::llabs(dev10) <= 10);
        }
    }
}

}  // namespace

TEST_CASE("splits: balanced 100-sample dataset lands on exact quotas") {
    auto labels = balanced_labels(100, 2);
    auto plan = eval::make_splits_labels(labels, names(2), 5, 0);
    REQUIRE(plan.runs.size() == 5);
    CHECK(plan.run_seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});

    for (const auto& split : plan.runs) {
        CHECK(split.train.size() == 60);
        CHECK(split.val.size() == 10);
        CHECK(split.test.size() == 30);
        std::vector<std::size_t> per_class(2, 0);
        for (std::size_t idx : split.train) ++per_class[static_cast<std::size_t>(labels[idx])];
        CHECK(per_class[0] == 30);
        CHECK(per_class[1] == 30);
        per_class = {0, 0};
        for (std::size_t idx : split.val) ++per_class[static_cast<std::size_t>(labels[idx])];
        CHECK(per_class[0] == 5);
        CHECK(per_class[1] == 5);
        check_split_invariants(split, labels, 2);
    }
}

TEST_CASE("splits: deterministic from the base seed") {
    auto labels = balanced_labels(50, 3);  // 17/17/16 members
    auto a = eval::make_splits_labels(labels, names(3), 3, 9);
    auto b = eval::make_splits_labels(labels, names(3), 3, 9);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(a.runs[r].train == b.runs[r].train);
        CHECK(a.runs[r].val == b.runs[r].val);
        CHECK(a.runs[r].test == b.runs[r].test);
    }
    auto c = eval::make_splits_labels(labels, names(3), 3, 10);
    CHECK(a.runs[0].train != c.runs[0].train);
}

TEST_CASE("splits: ten samples in a single class give 6/1/3") {
    auto labels = std::vector<int>(10, 0);
    auto plan = eval::make_splits_labels(labels, {"only"}, 1, 4);
    CHECK(plan.runs[0].train.size() == 6);
    CHECK(plan.runs[0].val.size() == 1);
    CHECK(plan.runs[0].test.size() == 3);
}

TEST_CASE("splits: classes below four members are rejected") {
    std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1};
    try {
        eval::make_splits_labels(labels, names(2), 1, 0);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("ClassTooSmall") != std::string::npos);
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
}

TEST_CASE("splits: invariants hold across fuzzed shapes and seeds") {
    SplitMix64 rng(60221023);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t num_classes = 1 + static_cast<std::size_t>(rng.below(7));
        std::vector<int> labels;
        for (std::size_t c = 0; c < num_classes; ++c) {
            std::size_t members = 4 + static_cast<std::size_t>(rng.below(60));
            for (std::size_t i = 0; i < members; ++i) labels.push_back(static_cast<int>(c));
        }
        // non-contiguous label order
        std::vector<int> shuffled = labels;
        ncdkit::shuffle(shuffled, rng);

        auto plan = eval::make_splits_labels(shuffled, names(num_classes), 2, rng.next());
        for (const auto& split : plan.runs)
            check_split_invariants(split, shuffled, num_classes);
    }
}

TEST_CASE("metrics: argmax accuracy on the tiny example") {
    std::vector<int> y = {1, 1, 0};
    std::vector<ProbVector> preds = {one_hot_ish(2, 1), one_hot_ish(2, 0), one_hot_ish(2, 0)};
    auto m = eval::compute_metrics(y, preds, 2);
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics: perfect separation scores AUC exactly 1") {
    std::vector<int> y = {0, 0, 1, 1};
    std::vector<ProbVector> preds = {{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.2, 0.8}};
    auto m = eval::compute_metrics(y, preds, 2);
    CHECK(m.roc_auc == 1.0);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1_macro == 1.0);
}

TEST_CASE("metrics: hand-enumerated three-class case") {
    // confusion matrix (rows = truth):
    //   a: ->a, ->b        tp_a=1 fn_a=1
    //   b: ->b, ->b        tp_b=2
    //   c: ->a, ->c        tp_c=1 fn_c=1, fp_a=1, fp_b=1
    std::vector<int> y = {0, 0, 1, 1, 2, 2};
    std::vector<ProbVector> preds = {one_hot_ish(3, 0), one_hot_ish(3, 1), one_hot_ish(3, 1),
                                     one_hot_ish(3, 1), one_hot_ish(3, 0), one_hot_ish(3, 2)};
    auto m = eval::compute_metrics(y, preds, 3);
    CHECK(m.accuracy == doctest::Approx(4.0 / 6.0));
    // precision: a=1/2, b=2/3, c=1/1; recall: a=1/2, b=1, c=1/2
    CHECK(m.precision_weighted ==
          doctest::Approx((2.0 / 6.0) * 0.5 + (2.0 / 6.0) * (2.0 / 3.0) + (2.0 / 6.0) * 1.0));
    CHECK(m.recall_weighted ==
          doctest::Approx((2.0 / 6.0) * 0.5 + (2.0 / 6.0) * 1.0 + (2.0 / 6.0) * 0.5));
    // f1: a=1/2, b=4/5, c=2/3
    CHECK(m.f1_weighted ==
          doctest::Approx((2.0 / 6.0) * 0.5 + (2.0 / 6.0) * 0.8 + (2.0 / 6.0) * (2.0 / 3.0)));
    CHECK(m.f1_macro == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3.0));

    auto oracle = oracle::metrics_bruteforce(y, preds, 3);
    CHECK(m.precision_weighted == doctest::Approx(oracle.precision_weighted).epsilon(1e-12));
    CHECK(m.recall_weighted == doctest::Approx(oracle.recall_weighted).epsilon(1e-12));
    CHECK(m.f1_weighted == doctest::Approx(oracle.f1_weighted).epsilon(1e-12));
    CHECK(m.f1_macro == doctest::Approx(oracle.f1_macro).epsilon(1e-12));
    CHECK(m.roc_auc == doctest::Approx(oracle.roc_auc).epsilon(1e-12));
}

TEST_CASE("metrics: agree with the brute-force oracle on random inputs") {
    SplitMix64 rng(505);
    for (int trial = 0; trial < 400; ++trial) {
        std::size_t classes = 2 + rng.below(2);
        std::size_t m = 1 + rng.below(8);
        std::vector<int> y;
        std::vector<ProbVector> preds;
        for (std::size_t i = 0; i < m; ++i) {
            y.push_back(static_cast<int>(rng.below(classes)));
            ProbVector p(classes);
            double sum = 0.0;
            for (double& v : p) {
                // quantized scores so ties actually occur
                v = static_cast<double>(1 + rng.below(4));
                sum += v;
            }
            for (double& v : p) v /= sum;
            preds.push_back(std::move(p));
        }
        auto got = eval::compute_metrics(y, preds, classes);
        auto expect = oracle::metrics_bruteforce(y, preds, classes);
        CHECK(got.accuracy == doctest::Approx(expect.accuracy).epsilon(1e-12));
        CHECK(got.precision_weighted ==
              doctest::Approx(expect.precision_weighted).epsilon(1e-12));
        CHECK(got.recall_weighted == doctest::Approx(expect.recall_weighted).epsilon(1e-12));
        CHECK(got.f1_weighted == doctest::Approx(expect.f1_weighted).epsilon(1e-12));
        CHECK(got.f1_macro == doctest::Approx(expect.f1_macro).epsilon(1e-12));
        CHECK(got.roc_auc == doctest::Approx(expect.roc_auc).epsilon(1e-12));
    }
}

TEST_CASE("metrics: input validation") {
    std::vector<int> y = {0, 1};
    std::vector<ProbVector> preds = {one_hot_ish(2, 0)};
    CHECK_THROWS_AS(eval::compute_metrics(y, preds, 2), Error);  // LengthMismatch

    preds = {{0.7, 0.7}, {0.5, 0.5}};
    CHECK_THROWS_AS(eval::compute_metrics(y, preds, 2), Error);  // not normalized

    preds = {{1.2, -0.2}, {0.5, 0.5}};
    CHECK_THROWS_AS(eval::compute_metrics(y, preds, 2), Error);  // negative probability
}

TEST_CASE("experiment: separable synthetic classes classify perfectly and stably") {
    auto d = testgen::two_class_dataset(20, 200, 51);
    eval::ExperimentConfig cfg;
    cfg.components = 8;
    cfg.runs = 5;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    REQUIRE(report.runs.size() == 5);

    auto acc = eval::aggregate_metric(report, &eval::Metrics::accuracy);
    CHECK(acc.mean == 1.0);
    for (auto field : {&eval::Metrics::accuracy, &eval::Metrics::precision_weighted,
                       &eval::Metrics::recall_weighted, &eval::Metrics::f1_weighted,
                       &eval::Metrics::f1_macro, &eval::Metrics::roc_auc}) {
        auto agg = eval::aggregate_metric(report, field);
        CHECK(agg.sd < 0.002);
        // aggregated mean lies between the per-run extremes
        double lo = 1e9, hi = -1e9;
        for (const auto& run : report.runs) {
            lo = std::min(lo, run.metrics.*field);
            hi = std::max(hi, run.metrics.*field);
        }
        CHECK(agg.mean >= lo - 1e-12);
        CHECK(agg.mean <= hi + 1e-12);
    }
}

TEST_CASE("experiment: shuffled labels collapse to chance accuracy") {
    auto d = testgen::two_class_dataset(20, 200, 51);
    // destroy the label signal deterministically
    SplitMix64 rng(8888);
    std::vector<std::string> labels;
    for (const auto& r : d.records) labels.push_back(r.label);
    ncdkit::shuffle(labels, rng);
    for (std::size_t i = 0; i < d.records.size(); ++i) d.records[i].label = labels[i];

    eval::ExperimentConfig cfg;
    cfg.components = 8;
    cfg.runs = 5;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    double mean_acc = eval::aggregate_metric(report, &eval::Metrics::accuracy).mean;

    std::size_t n_test = report.runs.empty() ? 1 : 12;  // 30% of 40
    double binom_sd = std::sqrt(0.25 / static_cast<double>(n_test * 5));
    CHECK(std::abs(mean_acc - 0.5) <= 3.0 * binom_sd);
}

TEST_CASE("experiment: report rerun is byte-identical with timing off") {
    auto d = testgen::two_class_dataset(10, 150, 77);
    eval::ExperimentConfig cfg;
    cfg.components = 4;
    cfg.runs = 3;
    cfg.measure_time = false;
    auto a = eval::report_to_json(eval::run_experiment(d, cfg));
    auto b = eval::report_to_json(eval::run_experiment(d, cfg));
    CHECK(a == b);
    CHECK(a.find("\"accuracy\"") != std::string::npos);
    CHECK(a.find("\"train_time_sec\": 0.0") != std::string::npos);
}

TEST_CASE("experiment: ncd-knn baseline path") {
    auto d = testgen::two_class_dataset(15, 200, 99);
    eval::ExperimentConfig cfg;
    cfg.clf = eval::ClassifierKind::ncd_knn;
    cfg.knn_k = 3;
    cfg.runs = 3;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    CHECK(eval::aggregate_metric(report, &eval::Metrics::accuracy).mean == 1.0);
    CHECK(report.config.classifier == "ncd-knn");
}

TEST_CASE("experiment: inductive mode also separates the synthetic classes") {
    auto d = testgen::two_class_dataset(15, 200, 123);
    eval::ExperimentConfig cfg;
    cfg.components = 6;
    cfg.runs = 3;
    cfg.inductive = true;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    CHECK(eval::aggregate_metric(report, &eval::Metrics::accuracy).mean == 1.0);
    for (const auto& run : report.runs) {
        REQUIRE(run.sigma2.has_value());
        CHECK(*run.sigma2 > 0.0);
    }
}

TEST_CASE("experiment: inductive mode covers both kernel modes and classifiers") {
    auto d = testgen::two_class_dataset(15, 200, 777);
    for (auto kmode : {kernel::KernelMode::row_feature, kernel::KernelMode::distance_substitution}) {
        for (auto clf : {eval::ClassifierKind::knn, eval::ClassifierKind::gnb}) {
            eval::ExperimentConfig cfg;
            cfg.kmode = kmode;
            cfg.clf = clf;
            cfg.components = 6;
            cfg.runs = 2;
            cfg.inductive = true;
            cfg.measure_time = false;
            auto report = eval::run_experiment(d, cfg);
            CHECK(eval::aggregate_metric(report, &eval::Metrics::accuracy).mean == 1.0);
        }
    }
}

TEST_CASE("experiment: tuning applies to the direct NCD baseline too") {
    auto d = testgen::two_class_dataset(15, 150, 2718);
    eval::ExperimentConfig cfg;
    cfg.clf = eval::ClassifierKind::ncd_knn;
    cfg.runs = 2;
    cfg.tune = true;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    CHECK(eval::aggregate_metric(report, &eval::Metrics::accuracy).mean == 1.0);
    for (const auto& run : report.runs) {
        REQUIRE(run.tuned_k.has_value());
        CHECK(*run.tuned_k % 2 == 1);
    }
}

TEST_CASE("experiment: gnb and logreg also separate the synthetic classes") {
    auto d = testgen::two_class_dataset(15, 200, 2001);
    for (auto clf : {eval::ClassifierKind::gnb, eval::ClassifierKind::logreg}) {
        eval::ExperimentConfig cfg;
        cfg.clf = clf;
        cfg.components = 6;
        cfg.runs = 2;
        cfg.measure_time = false;
        auto report = eval::run_experiment(d, cfg);
        CHECK(eval::aggregate_metric(report, &eval::Metrics::accuracy).mean == 1.0);
    }
}

TEST_CASE("experiment: tuning records the chosen k") {
    auto d = testgen::two_class_dataset(15, 150, 31415);
    eval::ExperimentConfig cfg;
    cfg.components = 6;
    cfg.runs = 2;
    cfg.tune = true;
    cfg.measure_time = false;
    auto report = eval::run_experiment(d, cfg);
    for (const auto& run : report.runs) {
        REQUIRE(run.tuned_k.has_value());
        CHECK(*run.tuned_k >= 1);
        CHECK(*run.tuned_k <= 15);
        CHECK(*run.tuned_k % 2 == 1);
    }
}

TEST_CASE("experiment: seven-class multi-alphabet dataset on both backends") {
    // same shape as the paper-scale run (7 classes, gzip and bz2), scaled down
    static const char* alphabets[7] = {"ACGT", "acgt", "WXYZ", "wxyz", "0123", "4567", "89+-"};
    SplitMix64 rng(0xABC);
    seqio::Dataset d;
    d.source = "testgen";
    for (int c = 0; c < 7; ++c) d.classes.push_back(std::string(1, static_cast<char>('A' + c)));
    for (std::size_t i = 0; i < 49; ++i) {
        std::size_t c = i % 7;
        d.records.push_back({"s" + std::to_string(i), d.classes[c],
                             testgen::random_seq(rng, 150, alphabets[c])});
    }

    eval::ExperimentConfig cfg;
    cfg.components = 10;
    cfg.runs = 2;
    cfg.measure_time = false;
    auto gzip_report = eval::run_experiment(d, cfg);
    double gzip_acc = eval::aggregate_metric(gzip_report, &eval::Metrics::accuracy).mean;
    CHECK(gzip_acc == 1.0);

    cfg.spec.backend = compress::Backend::bwt_bzip2;
    auto bz2_report = eval::run_experiment(d, cfg);
    double bz2_acc = eval::aggregate_metric(bz2_report, &eval::Metrics::accuracy).mean;
    CHECK(bz2_acc == 1.0);
}

TEST_CASE("experiment: evaluate_embedding rejects label mismatches") {
    kpca::Embedding emb;
    emb.n = 3;
    emb.q = 1;
    emb.coords = {0.0, 1.0, 2.0};
    emb.eigenvalues = {1.0};
    emb.ids = {"a", "b", "c"};
    eval::ExperimentConfig cfg;
    try {
        eval::evaluate_embedding(emb, {0, 1}, names(2), cfg);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Consistency);
    }
}
