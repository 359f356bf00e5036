#include <doctest.h>

#include <cmath>
#include <vector>

#include "ncdkit/classify.hpp"
#include "ncdkit/errors.hpp"
#include "ncdkit/ncd.hpp"
#include "support/oracles.hpp"
#include "support/testgen.hpp"

using namespace ncdkit;
using classify::LabeledVectors;

namespace {

LabeledVectors make_train(const std::vector<std::vector<double>>& x, std::vector<int> y,
                          std::vector<std::string> class_names) {
    LabeledVectors t;
    t.m = x.size();
    t.d = x.empty() ? 0 : x[0].size();
    for (const auto& row : x) t.x.insert(t.x.end(), row.begin(), row.end());
    t.y = std::move(y);
    t.class_names = std::move(class_names);
    return t;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& x) {
    std::vector<double> out;
    for (const auto& row : x) out.insert(out.end(), row.begin(), row.end());
    return out;
}

}  // namespace

TEST_CASE("knn: an exact training point wins at k=1") {
    auto train = make_train({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}, {0, 1, 0}, {"a", "b"});
    auto preds = classify::knn_fit_predict(train, {1.0, 1.0}, 1, 1);
    CHECK(preds[0] == classify::ProbVector{0.0, 1.0});
}

TEST_CASE("knn: probabilities are vote fractions") {
    auto train = make_train({{0.0}, {0.1}, {0.2}, {5.0}}, {0, 0, 1, 1}, {"a", "b"});
    auto preds = classify::knn_fit_predict(train, {0.0}, 1, 3);
    CHECK(preds[0][0] == doctest::Approx(2.0 / 3.0));
    CHECK(preds[0][1] == doctest::Approx(1.0 / 3.0));
    CHECK(classify::argmax_class(preds[0]) == 0);
}

TEST_CASE("knn: matches the exhaustive oracle on a random 30-point set") {
    SplitMix64 rng(321);
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<int> train_y;
    for (int i = 0; i < 30; ++i) {
        train_x.push_back({rng.unit(), rng.unit(), rng.unit()});
        train_y.push_back(static_cast<int>(rng.below(3)));
    }
    for (int i = 0; i < 12; ++i) test_x.push_back({rng.unit(), rng.unit(), rng.unit()});

    auto train = make_train(train_x, train_y, {"a", "b", "c"});
    auto got = classify::knn_fit_predict(train, flatten(test_x), test_x.size(), 5);
    auto expect = oracle::knn_bruteforce(train_x, train_y, 3, test_x, 5);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(got[i][c] == doctest::Approx(expect[i][c]).epsilon(1e-12));
}

TEST_CASE("knn: distance ties break toward the lower training index") {
    // two training points at the same location with different classes
    auto train = make_train({{1.0}, {1.0}, {9.0}}, {1, 0, 0}, {"a", "b"});
    auto preds = classify::knn_fit_predict(train, {1.0}, 1, 1);
    CHECK(classify::argmax_class(preds[0]) == 1);  // index 0 carries class b=1
}

TEST_CASE("knn: argmax class ties break toward the lower class index") {
    auto train = make_train({{0.0}, {2.0}}, {1, 0}, {"a", "b"});
    auto preds = classify::knn_fit_predict(train, {1.0}, 1, 2);
    CHECK(preds[0][0] == preds[0][1]);
    CHECK(classify::argmax_class(preds[0]) == 0);
}

TEST_CASE("knn: k domain errors") {
    auto train = make_train({{0.0}, {1.0}}, {0, 1}, {"a", "b"});
    CHECK_THROWS_AS(classify::knn_fit_predict(train, {0.5}, 1, 3), Error);
    CHECK_THROWS_AS(classify::knn_fit_predict(train, {0.5}, 1, 0), Error);
}

TEST_CASE("knn: invariant to scaling all features") {
    SplitMix64 rng(13);
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<int> train_y;
    for (int i = 0; i < 20; ++i) {
        train_x.push_back({rng.unit(), rng.unit()});
        train_y.push_back(static_cast<int>(rng.below(2)));
    }
    for (int i = 0; i < 8; ++i) test_x.push_back({rng.unit(), rng.unit()});

    auto train1 = make_train(train_x, train_y, {"a", "b"});
    auto p1 = classify::knn_fit_predict(train1, flatten(test_x), test_x.size(), 3);

    auto scale = [](std::vector<std::vector<double>> v) {
        for (auto& row : v)
            for (double& x : row) x *= 2.0;
        return v;
    };
    auto train2 = make_train(scale(train_x), train_y, {"a", "b"});
    auto p2 = classify::knn_fit_predict(train2, flatten(scale(test_x)), test_x.size(), 3);
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(classify::argmax_class(p1[i]) == classify::argmax_class(p2[i]));
}

TEST_CASE("logreg: separable toy problem reaches training accuracy 1") {
    auto train = make_train({{0.0, 0.0}, {0.2, 0.1}, {1.0, 1.0}, {0.9, 1.1}}, {0, 0, 1, 1},
                            {"a", "b"});
    auto model = classify::logreg_fit(train);
    auto preds = classify::logreg_predict(model, train.x, train.m);
    for (std::size_t i = 0; i < train.m; ++i)
        CHECK(classify::argmax_class(preds[i]) == train.y[i]);
    CHECK(model.halvings == 0);
}

TEST_CASE("logreg: analytic gradient matches central finite differences") {
    SplitMix64 rng(777);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 5; ++i) {
        x.push_back({rng.unit() - 0.5, rng.unit() - 0.5, rng.unit() - 0.5});
        y.push_back(static_cast<int>(rng.below(3)));
    }
    auto train = make_train(x, y, {"a", "b", "c"});
    const double l2 = 0.01;
    const std::size_t dim = (train.d + 1) * 3;

    for (int point = 0; point < 12; ++point) {
        std::vector<double> w(dim, 0.0);
        if (point > 0)
            for (double& v : w) v = (rng.unit() - 0.5) * 4.0;

        std::vector<double> grad;
        classify::logreg_loss_grad(train, w, l2, &grad);

        for (std::size_t i = 0; i < dim; ++i) {
            double h = 1e-5 * std::max(1.0, std::abs(w[i]));
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            double fd = (classify::logreg_loss_grad(train, wp, l2, nullptr) -
                         classify::logreg_loss_grad(train, wm, l2, nullptr)) /
                        (2.0 * h);
            CHECK(std::abs(grad[i] - fd) <=
                  1e-5 * std::max({1e-8, std::abs(grad[i]), std::abs(fd)}));
        }
    }
}

TEST_CASE("logreg: zero weights predict the uniform distribution") {
    classify::LogRegModel model;
    model.d = 4;
    model.c = 3;
    model.w.assign((model.d + 1) * model.c, 0.0);
    model.class_names = {"a", "b", "c"};
    auto preds = classify::logreg_predict(model, {1.0, -2.0, 0.5, 3.0}, 1);
    for (double p : preds[0]) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("logreg: oversized learning rate halves itself into stability") {
    auto train = make_train({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 0, 1, 1}, {"a", "b"});
    classify::LogRegConfig cfg;
    cfg.lr = 25.0;
    cfg.epochs = 200;
    auto model = classify::logreg_fit(train, cfg);
    CHECK(model.halvings > 0);
    CHECK(model.halvings <= 8);
    CHECK(std::isfinite(model.final_loss));
    CHECK(model.final_loss < std::log(2.0));  // better than the uniform model
}

TEST_CASE("logreg: probabilities normalize and batch equals per-sample") {
    SplitMix64 rng(99);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 12; ++i) {
        x.push_back({rng.unit(), rng.unit()});
        y.push_back(static_cast<int>(rng.below(3)));
    }
    auto train = make_train(x, y, {"a", "b", "c"});
    auto model = classify::logreg_fit(train);

    auto batch = classify::logreg_predict(model, train.x, train.m);
    for (std::size_t i = 0; i < train.m; ++i) {
        double sum = 0.0;
        for (double p : batch[i]) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        std::vector<double> one(train.x.begin() + static_cast<std::ptrdiff_t>(i * train.d),
                                train.x.begin() + static_cast<std::ptrdiff_t>((i + 1) * train.d));
        auto single = classify::logreg_predict(model, one, 1);
        CHECK(single[0] == batch[i]);
    }
}

TEST_CASE("logreg: permuting features with matching weights changes nothing") {
    auto train = make_train({{0.1, 0.9}, {0.8, 0.3}, {0.4, 0.6}, {0.9, 0.2}}, {0, 1, 0, 1},
                            {"a", "b"});
    auto model = classify::logreg_fit(train);

    classify::LogRegModel permuted = model;
    // swap the two feature rows of W (bias row stays)
    for (std::size_t c = 0; c < model.c; ++c)
        std::swap(permuted.w[0 * model.c + c], permuted.w[1 * model.c + c]);

    std::vector<double> x = {0.3, 0.7};
    std::vector<double> x_swapped = {0.7, 0.3};
    auto p1 = classify::logreg_predict(model, x, 1);
    auto p2 = classify::logreg_predict(permuted, x_swapped, 1);
    // summation order differs, so equality is up to rounding
    for (std::size_t c = 0; c < p1[0].size(); ++c)
        CHECK(p1[0][c] == doctest::Approx(p2[0][c]).epsilon(1e-12));
}

TEST_CASE("logreg: dimension and class-count preconditions") {
    auto train = make_train({{0.0}, {1.0}}, {0, 0}, {"a", "b"});
    CHECK_THROWS_AS(classify::logreg_fit(train), Error);  // single class present

    auto ok = make_train({{0.0}, {1.0}}, {0, 1}, {"a", "b"});
    auto model = classify::logreg_fit(ok);
    CHECK_THROWS_AS(classify::logreg_predict(model, {1.0, 2.0, 3.0}, 2), Error);
}

TEST_CASE("gnb: separated clusters classify perfectly") {
    SplitMix64 rng(2);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        double cx = i % 2 == 0 ? 0.0 : 10.0;
        x.push_back({cx + rng.unit(), cx + rng.unit()});
        y.push_back(i % 2);
    }
    auto train = make_train(x, y, {"a", "b"});
    auto preds = classify::gnb_fit_predict(train, flatten({{0.5, 0.5}, {10.5, 10.5}}), 2);
    CHECK(classify::argmax_class(preds[0]) == 0);
    CHECK(classify::argmax_class(preds[1]) == 1);
}

TEST_CASE("gnb: constant features survive via the variance floor") {
    auto train = make_train({{1.0, 0.2}, {1.0, 0.4}, {1.0, 0.9}, {1.0, 0.7}}, {0, 0, 1, 1},
                            {"a", "b"});
    auto preds = classify::gnb_fit_predict(train, {1.0, 0.3}, 1);
    CHECK(std::isfinite(preds[0][0]));
    CHECK(std::abs(preds[0][0] + preds[0][1] - 1.0) <= 1e-9);
    CHECK(classify::argmax_class(preds[0]) == 0);
}

TEST_CASE("gnb: posteriors match a direct density evaluation") {
    SplitMix64 rng(47);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        x.push_back({rng.unit() * 3, rng.unit() * 3, rng.unit() * 3});
        y.push_back(static_cast<int>(rng.below(3)));
    }
    auto train = make_train(x, y, {"a", "b", "c"});
    std::vector<std::vector<double>> test = {{0.5, 1.0, 2.0}, {2.5, 0.1, 0.1}};
    const double var_floor = 1e-9;
    auto got = classify::gnb_predict(classify::gnb_fit(train, var_floor), flatten(test), 2);

    // oracle: densities evaluated directly (not in log space)
    std::vector<std::size_t> count(3, 0);
    std::vector<std::vector<double>> mean(3, std::vector<double>(3, 0.0));
    std::vector<std::vector<double>> var(3, std::vector<double>(3, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++count[static_cast<std::size_t>(y[i])];
        for (int f = 0; f < 3; ++f) mean[static_cast<std::size_t>(y[i])][f] += x[i][f];
    }
    for (int c = 0; c < 3; ++c)
        for (int f = 0; f < 3; ++f) mean[c][f] /= static_cast<double>(count[c]);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (int f = 0; f < 3; ++f) {
            double d = x[i][f] - mean[static_cast<std::size_t>(y[i])][f];
            var[static_cast<std::size_t>(y[i])][f] += d * d;
        }
    for (int c = 0; c < 3; ++c)
        for (int f = 0; f < 3; ++f) var[c][f] = var[c][f] / static_cast<double>(count[c]) + var_floor;

    for (std::size_t t = 0; t < test.size(); ++t) {
        std::vector<double> joint(3);
        for (int c = 0; c < 3; ++c) {
            double p = static_cast<double>(count[c]) / static_cast<double>(x.size());
            for (int f = 0; f < 3; ++f) {
                double d = test[t][f] - mean[c][f];
                p *= std::exp(-d * d / (2.0 * var[c][f])) /
                     std::sqrt(2.0 * M_PI * var[c][f]);
            }
            joint[static_cast<std::size_t>(c)] = p;
        }
        double z = joint[0] + joint[1] + joint[2];
        for (int c = 0; c < 3; ++c)
            CHECK(got[t][static_cast<std::size_t>(c)] ==
                  doctest::Approx(joint[static_cast<std::size_t>(c)] / z).epsilon(1e-9));
    }
}

TEST_CASE("gnb: a class without training samples is rejected") {
    auto train = make_train({{0.0}, {1.0}}, {0, 0}, {"a", "b"});
    try {
        classify::gnb_fit(train);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("EmptyClass") != std::string::npos);
    }
}

TEST_CASE("ncd-knn: a duplicate sequence is its own nearest neighbor") {
    auto d = testgen::dna_corpus(6, 8, 300, 600);
    d.records[3].residues = d.records[0].residues;  // duplicate pair
    std::vector<int> labels = {0, 1, 1, 0, 1, 1};
    auto dprime = ncd::symmetrize(ncd::distance_matrix(d, {compress::Backend::deflate_gzip, 9}));

    auto preds = classify::ncd_knn_predict(dprime, {0, 1, 2, 4, 5}, {3}, labels, 2, 1);
    CHECK(preds[0] == classify::ProbVector{1.0, 0.0});
}

TEST_CASE("ncd-knn: k = all training points reproduces the class priors") {
    auto d = testgen::dna_corpus(7, 9, 100, 300);
    std::vector<int> labels = {0, 0, 1, 1, 1, 0, 1};
    auto dprime = ncd::symmetrize(ncd::distance_matrix(d, {compress::Backend::deflate_gzip, 9}));
    std::vector<std::size_t> train = {0, 1, 2, 3, 4};
    auto preds = classify::ncd_knn_predict(dprime, train, {5, 6}, labels, 2, 5);
    for (const auto& p : preds) {
        CHECK(p[0] == doctest::Approx(2.0 / 5.0));
        CHECK(p[1] == doctest::Approx(3.0 / 5.0));
    }
}

TEST_CASE("ncd-knn: invariant to squaring the distances") {
    auto d = testgen::dna_corpus(10, 14, 150, 500);
    std::vector<int> labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    auto dprime = ncd::symmetrize(ncd::distance_matrix(d, {compress::Backend::deflate_gzip, 9}));

    auto squared = dprime;
    for (double& v : squared.values) v = v * v;

    std::vector<std::size_t> train = {0, 1, 2, 3, 4, 5, 6};
    std::vector<std::size_t> test = {7, 8, 9};
    auto p1 = classify::ncd_knn_predict(dprime, train, test, labels, 2, 3);
    auto p2 = classify::ncd_knn_predict(squared, train, test, labels, 2, 3);
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(classify::argmax_class(p1[i]) == classify::argmax_class(p2[i]));
}

TEST_CASE("ncd-knn: distance ties break toward the lower train-list position") {
    // hand-built symmetric matrix where the test row is equidistant from two
    // training rows with different classes
    ncd::DistanceMatrix d;
    d.n = 3;
    d.symmetric = true;
    d.values = {0.0, 0.5, 0.5,
                0.5, 0.0, 0.9,
                0.5, 0.9, 0.0};
    d.ids = {"t", "a", "b"};
    std::vector<int> labels = {0, 1, 0};

    auto p1 = classify::ncd_knn_predict(d, {1, 2}, {0}, labels, 2, 1);
    CHECK(p1[0] == classify::ProbVector{0.0, 1.0});  // position 0 holds row 1 (class 1)
    auto p2 = classify::ncd_knn_predict(d, {2, 1}, {0}, labels, 2, 1);
    CHECK(p2[0] == classify::ProbVector{1.0, 0.0});  // reordering flips the winner
}

TEST_CASE("ncd-knn: index validation") {
    auto d = testgen::dna_corpus(4, 15, 50, 100);
    std::vector<int> labels = {0, 1, 0, 1};
    auto dprime = ncd::symmetrize(ncd::distance_matrix(d, {compress::Backend::deflate_gzip, 9}));
    try {
        classify::ncd_knn_predict(dprime, {0, 9}, {2}, labels, 2, 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("IndexOutOfRange") != std::string::npos);
    }
    CHECK_THROWS_AS(classify::ncd_knn_predict(dprime, {0, 1}, {1, 2}, labels, 2, 1), Error);
    CHECK_THROWS_AS(classify::ncd_knn_predict(dprime, {0, 1}, {2}, labels, 2, 5), Error);
}
