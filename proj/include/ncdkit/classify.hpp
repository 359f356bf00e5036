#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ncdkit/ncd.hpp"

namespace ncdkit::classify {

struct LabeledVectors {
    std::vector<double> x;  // m x d row-major
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<int> y;  // class indices, < class_names.size()
    std::vector<std::string> class_names;
};

// Per-sample class probabilities; non-negative, sums to 1.
using ProbVector = std::vector<double>;

/// Argmax with ties broken toward the lower class index.
int argmax_class(const ProbVector& p);

/// Euclidean k-NN. Probability = vote fraction among the k nearest; distance
/// ties break toward the lower training index. Parallel over test samples.
std::vector<ProbVector> knn_fit_predict(const LabeledVectors& train,
                                        const std::vector<double>& test_x,
                                        std::size_t m_test, std::size_t k);

struct LogRegConfig {
    double l2 = 1e-4;
    std::size_t epochs = 500;
    double lr = 0.1;
    std::uint64_t seed = 0;  // echoed in reports; init is zero so unused
};

struct LogRegModel {
    std::size_t d = 0;
    std::size_t c = 0;
    std::vector<double> w;  // (d+1) x c row-major, last row is the bias
    std::vector<std::string> class_names;
    double final_loss = 0.0;
    int halvings = 0;  // lr halvings needed to get a non-increasing loss
};

/// Multinomial softmax regression trained by full-batch gradient descent on
/// cross-entropy + (l2/2)*||W||^2 (bias excluded from the penalty). Weights
/// start at zero. If the loss ever increases the learning rate is halved and
/// training restarts, at most 8 times.
LogRegModel logreg_fit(const LabeledVectors& train, const LogRegConfig& cfg = {});

std::vector<ProbVector> logreg_predict(const LogRegModel& model,
                                       const std::vector<double>& x, std::size_t m);

/// Mean loss and gradient of the logreg objective at arbitrary weights;
/// exposed for gradient checking.
double logreg_loss_grad(const LabeledVectors& train, const std::vector<double>& w,
                        double l2, std::vector<double>* grad);

struct GnbModel {
    std::size_t d = 0;
    std::size_t c = 0;
    std::vector<double> mean;  // c x d
    std::vector<double> var;   // c x d, floored
    std::vector<double> log_prior;
};

/// Gaussian naive Bayes: per-class/per-feature mean and MLE variance +
/// var_floor, class priors from training frequencies, log-space evaluation.
GnbModel gnb_fit(const LabeledVectors& train, double var_floor = 1e-9);
std::vector<ProbVector> gnb_predict(const GnbModel& model, const std::vector<double>& x,
                                    std::size_t m);
std::vector<ProbVector> gnb_fit_predict(const LabeledVectors& train,
                                        const std::vector<double>& test_x,
                                        std::size_t m_test, double var_floor = 1e-9);

/// Direct NCD baseline: k nearest training rows by D'[test][train], voting as
/// in knn_fit_predict; distance ties break toward the lower position in
/// train_idx. No kernel or embedding involved.
std::vector<ProbVector> ncd_knn_predict(const ncd::DistanceMatrix& dprime,
                                        const std::vector<std::size_t>& train_idx,
                                        const std::vector<std::size_t>& test_idx,
                                        const std::vector<int>& labels,
                                        std::size_t num_classes, std::size_t k);

}  // namespace ncdkit::classify
