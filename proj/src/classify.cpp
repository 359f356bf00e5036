#include "ncdkit/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "ncdkit/errors.hpp"
#include "ncdkit/kernel.hpp"

namespace ncdkit::classify {

namespace {

void check_train(const LabeledVectors& train) {
    if (train.m == 0) throw_data("empty training set");
    if (train.x.size() != train.m * train.d) throw_data("train X buffer size mismatch");
    if (train.y.size() != train.m) throw_data("train label count mismatch");
    for (int label : train.y)
        if (label < 0 || static_cast<std::size_t>(label) >= train.class_names.size())
            throw_data("train label index out of range");
}

// Vote fractions over the k entries of `neighbor_labels`.
ProbVector vote(const std::vector<int>& neighbor_labels, std::size_t num_classes) {
    ProbVector p(num_classes, 0.0);
    for (int label : neighbor_labels) p[static_cast<std::size_t>(label)] += 1.0;
    for (double& v : p) v /= static_cast<double>(neighbor_labels.size());
    return p;
}

// Indices of the k smallest distances, ties toward the lower index.
std::vector<std::size_t> k_smallest(const std::vector<double>& dist, std::size_t k) {
    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                      });
    order.resize(k);
    return order;
}

}  // namespace

int argmax_class(const ProbVector& p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
        if (p[c] > p[best]) best = c;
    return static_cast<int>(best);
}

std::vector<ProbVector> knn_fit_predict(const LabeledVectors& train,
                                        const std::vector<double>& test_x,
                                        std::size_t m_test, std::size_t k) {
    check_train(train);
    if (k == 0 || k > train.m)
        throw_data("KTooLarge: k must be in 1..train size (" + std::to_string(train.m) +
                   "), got " + std::to_string(k));
    if (test_x.size() != m_test * train.d) throw_data("test X buffer size mismatch");

    const std::size_t num_classes = train.class_names.size();
    std::vector<ProbVector> out(m_test);
#pragma omp parallel
    {
        std::vector<double> dist(train.m);
        std::vector<int> neighbor_labels(k);
#pragma omp for schedule(static)
        for (std::ptrdiff_t tt = 0; tt < static_cast<std::ptrdiff_t>(m_test); ++tt) {
            const std::size_t t = static_cast<std::size_t>(tt);
            const double* xt = test_x.data() + t * train.d;
            for (std::size_t i = 0; i < train.m; ++i)
                dist[i] = kernel::row_sqdist(xt, train.x.data() + i * train.d, train.d);
            auto nearest = k_smallest(dist, k);
            for (std::size_t r = 0; r < k; ++r) neighbor_labels[r] = train.y[nearest[r]];
            out[t] = vote(neighbor_labels, num_classes);
        }
    }
    return out;
}

double logreg_loss_grad(const LabeledVectors& train, const std::vector<double>& w,
                        double l2, std::vector<double>* grad) {
    const std::size_t m = train.m, d = train.d;
    const std::size_t c = train.class_names.size();
    if (w.size() != (d + 1) * c) throw_data("weight buffer size mismatch");
    if (grad) grad->assign((d + 1) * c, 0.0);

    double loss = 0.0;
    std::vector<double> logits(c);
    for (std::size_t s = 0; s < m; ++s) {
        const double* xs = train.x.data() + s * d;
        for (std::size_t j = 0; j < c; ++j) {
            double z = w[d * c + j];  // bias row
            for (std::size_t f = 0; f < d; ++f) z += xs[f] * w[f * c + j];
            logits[j] = z;
        }
        double zmax = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (double z : logits) denom += std::exp(z - zmax);
        double log_denom = std::log(denom) + zmax;
        const std::size_t yi = static_cast<std::size_t>(train.y[s]);
        loss += log_denom - logits[yi];

        if (grad) {
            for (std::size_t j = 0; j < c; ++j) {
                double p = std::exp(logits[j] - log_denom);
                double delta = p - (j == yi ? 1.0 : 0.0);
                for (std::size_t f = 0; f < d; ++f)
                    (*grad)[f * c + j] += xs[f] * delta;
                (*grad)[d * c + j] += delta;
            }
        }
    }
    loss /= static_cast<double>(m);
    if (grad)
        for (double& g : *grad) g /= static_cast<double>(m);

    // l2 applies to the non-bias rows only.
    double penalty = 0.0;
    for (std::size_t f = 0; f < d; ++f)
        for (std::size_t j = 0; j < c; ++j) {
            double v = w[f * c + j];
            penalty += v * v;
            if (grad) (*grad)[f * c + j] += l2 * v;
        }
    return loss + 0.5 * l2 * penalty;
}

LogRegModel logreg_fit(const LabeledVectors& train, const LogRegConfig& cfg) {
    check_train(train);
    std::unordered_set<int> present(train.y.begin(), train.y.end());
    if (present.size() < 2)
        throw_data("SingleClassTraining: logistic regression needs >= 2 classes present");

    const std::size_t d = train.d;
    const std::size_t c = train.class_names.size();

    LogRegModel model;
    model.d = d;
    model.c = c;
    model.class_names = train.class_names;

    double lr = cfg.lr;
    std::vector<double> w, grad;
    constexpr int kMaxHalvings = 8;
    for (int attempt = 0;; ++attempt) {
        w.assign((d + 1) * c, 0.0);
        double prev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        for (std::size_t e = 0; e < cfg.epochs; ++e) {
            double loss = logreg_loss_grad(train, w, cfg.l2, &grad);
            if (loss > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
                monotone = false;
                break;
            }
            prev = loss;
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
        }
        if (monotone || attempt == kMaxHalvings) {
            model.w = std::move(w);
            model.final_loss = logreg_loss_grad(train, model.w, cfg.l2, nullptr);
            model.halvings = attempt;
            return model;
        }
        lr /= 2.0;
    }
}

std::vector<ProbVector> logreg_predict(const LogRegModel& model,
                                       const std::vector<double>& x, std::size_t m) {
    if (x.size() != m * model.d)
        throw_data("DimensionMismatch: prediction input is not m x " + std::to_string(model.d));

    std::vector<ProbVector> out(m);
    std::vector<double> logits(model.c);
    for (std::size_t s = 0; s < m; ++s) {
        const double* xs = x.data() + s * model.d;
        for (std::size_t j = 0; j < model.c; ++j) {
            double z = model.w[model.d * model.c + j];
            for (std::size_t f = 0; f < model.d; ++f) z += xs[f] * model.w[f * model.c + j];
            logits[j] = z;
        }
        double zmax = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (double z : logits) denom += std::exp(z - zmax);
        ProbVector p(model.c);
        for (std::size_t j = 0; j < model.c; ++j) p[j] = std::exp(logits[j] - zmax) / denom;
        out[s] = std::move(p);
    }
    return out;
}

GnbModel gnb_fit(const LabeledVectors& train, double var_floor) {
    check_train(train);
    const std::size_t d = train.d;
    const std::size_t c = train.class_names.size();

    std::vector<std::size_t> count(c, 0);
    for (int label : train.y) ++count[static_cast<std::size_t>(label)];
    for (std::size_t j = 0; j < c; ++j)
        if (count[j] == 0)
            throw_data("EmptyClass: class '" + train.class_names[j] + "' has no training samples");

    GnbModel model;
    model.d = d;
    model.c = c;
    model.mean.assign(c * d, 0.0);
    model.var.assign(c * d, 0.0);
    model.log_prior.resize(c);
    for (std::size_t s = 0; s < train.m; ++s) {
        const std::size_t j = static_cast<std::size_t>(train.y[s]);
        for (std::size_t f = 0; f < d; ++f) model.mean[j * d + f] += train.x[s * d + f];
    }
    for (std::size_t j = 0; j < c; ++j)
        for (std::size_t f = 0; f < d; ++f)
            model.mean[j * d + f] /= static_cast<double>(count[j]);
    for (std::size_t s = 0; s < train.m; ++s) {
        const std::size_t j = static_cast<std::size_t>(train.y[s]);
        for (std::size_t f = 0; f < d; ++f) {
            double diff = train.x[s * d + f] - model.mean[j * d + f];
            model.var[j * d + f] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t f = 0; f < d; ++f)
            model.var[j * d + f] = model.var[j * d + f] / static_cast<double>(count[j]) + var_floor;
        model.log_prior[j] =
            std::log(static_cast<double>(count[j]) / static_cast<double>(train.m));
    }
    return model;
}

std::vector<ProbVector> gnb_predict(const GnbModel& model, const std::vector<double>& x,
                                    std::size_t m) {
    if (x.size() != m * model.d) throw_data("test X buffer size mismatch");
    const std::size_t d = model.d, c = model.c;

    constexpr double kLog2Pi = 1.8378770664093453;
    std::vector<ProbVector> out(m);
    std::vector<double> log_post(c);
    for (std::size_t t = 0; t < m; ++t) {
        const double* xt = x.data() + t * d;
        for (std::size_t j = 0; j < c; ++j) {
            double lp = model.log_prior[j];
            for (std::size_t f = 0; f < d; ++f) {
                double v = model.var[j * d + f];
                double diff = xt[f] - model.mean[j * d + f];
                lp -= 0.5 * (kLog2Pi + std::log(v) + diff * diff / v);
            }
            log_post[j] = lp;
        }
        double mx = *std::max_element(log_post.begin(), log_post.end());
        double denom = 0.0;
        for (double lp : log_post) denom += std::exp(lp - mx);
        ProbVector p(c);
        for (std::size_t j = 0; j < c; ++j) p[j] = std::exp(log_post[j] - mx) / denom;
        out[t] = std::move(p);
    }
    return out;
}

std::vector<ProbVector> gnb_fit_predict(const LabeledVectors& train,
                                        const std::vector<double>& test_x,
                                        std::size_t m_test, double var_floor) {
    return gnb_predict(gnb_fit(train, var_floor), test_x, m_test);
}

std::vector<ProbVector> ncd_knn_predict(const ncd::DistanceMatrix& dprime,
                                        const std::vector<std::size_t>& train_idx,
                                        const std::vector<std::size_t>& test_idx,
                                        const std::vector<int>& labels,
                                        std::size_t num_classes, std::size_t k) {
    const std::size_t n = dprime.n;
    if (labels.size() != n) throw_data("label count does not match matrix rows");
    for (std::size_t idx : train_idx)
        if (idx >= n) throw_data("IndexOutOfRange: train index " + std::to_string(idx));
    for (std::size_t idx : test_idx)
        if (idx >= n) throw_data("IndexOutOfRange: test index " + std::to_string(idx));
    {
        std::unordered_set<std::size_t> seen(train_idx.begin(), train_idx.end());
        for (std::size_t idx : test_idx)
            if (seen.count(idx))
                throw_data("train and test indices overlap at " + std::to_string(idx));
    }
    if (k == 0 || k > train_idx.size())
        throw_data("KTooLarge: k must be in 1..train size (" +
                   std::to_string(train_idx.size()) + "), got " + std::to_string(k));

    std::vector<ProbVector> out(test_idx.size());
#pragma omp parallel
    {
        std::vector<double> dist(train_idx.size());
        std::vector<int> neighbor_labels(k);
#pragma omp for schedule(static)
        for (std::ptrdiff_t tt = 0; tt < static_cast<std::ptrdiff_t>(test_idx.size()); ++tt) {
            const std::size_t t = static_cast<std::size_t>(tt);
            for (std::size_t i = 0; i < train_idx.size(); ++i)
                dist[i] = dprime.at(test_idx[t], train_idx[i]);
            auto nearest = k_smallest(dist, k);
            for (std::size_t r = 0; r < k; ++r)
                neighbor_labels[r] = labels[train_idx[nearest[r]]];
            out[t] = vote(neighbor_labels, num_classes);
        }
    }
    return out;
}

}  // namespace ncdkit::classify
