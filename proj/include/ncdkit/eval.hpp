#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncdkit/classify.hpp"
#include "ncdkit/kernel.hpp"
#include "ncdkit/kpca.hpp"
#include "ncdkit/ncd.hpp"
#include "ncdkit/seqio.hpp"

namespace ncdkit::eval {

// Train/validation/test fractions of the split protocol.
inline constexpr int kTrainTenths = 6;
inline constexpr int kValTenths = 1;

struct SplitPlan {
    std::uint64_t base_seed = 0;
    std::vector<std::uint64_t> run_seeds;  // base_seed + r
    struct Split {
        std::vector<std::size_t> train, val, test;  // disjoint, sorted, cover 0..n-1
    };
    std::vector<Split> runs;
};

/// Repeated stratified 60-10-30 splits. |train| = round(0.6n),
/// |val| = round(0.1n), |test| = rest; per-class counts stay within +-1 of
/// the class quota. Deterministic from base_seed; run r uses base_seed + r.
/// Throws ClassTooSmall when any class has fewer than 4 members.
SplitPlan make_splits(const seqio::Dataset& d, std::size_t runs, std::uint64_t base_seed);
SplitPlan make_splits_labels(const std::vector<int>& labels,
                             const std::vector<std::string>& class_names,
                             std::size_t runs, std::uint64_t base_seed);

struct Metrics {
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double f1_macro = 0.0;
    double roc_auc = 0.0;  // one-vs-rest, macro-averaged
};

/// Metrics from true labels and probability predictions. Predicted class is
/// the probability argmax (ties to the lower class index). Weighted scores
/// weight per-class values by true support; macro F1 averages over all
/// `num_classes` classes with zero-denominator F1 defined as 0. ROC-AUC is
/// computed per class by the midrank (trapezoidal) method and averaged over
/// classes that have both positives and negatives; 0.5 if none qualify.
Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<classify::ProbVector>& preds,
                        std::size_t num_classes);

enum class ClassifierKind { knn, logreg, gnb, ncd_knn };
const char* classifier_name(ClassifierKind c);
ClassifierKind parse_classifier(std::string_view name);

struct ExperimentConfig {
    compress::CompressorSpec spec{};
    ncd::ConcatMode concat = ncd::ConcatMode::direct;
    bool zero_diagonal = false;
    kernel::KernelMode kmode = kernel::KernelMode::row_feature;
    kernel::Sigma2Policy sigma = kernel::Sigma2Policy::median();
    std::size_t components = kpca::kDefaultComponents;
    bool center = true;
    ClassifierKind clf = ClassifierKind::knn;
    std::size_t knn_k = 5;
    classify::LogRegConfig logreg{};
    double gnb_var_floor = 1e-9;
    std::size_t runs = 5;
    std::uint64_t base_seed = 0;
    bool inductive = false;  // fit kernel/kPCA on train rows, Nystrom for the rest
    bool tune = false;       // pick k on validation accuracy (knn / ncd-knn)
    bool measure_time = true;
    // When set, test-set predictions land in "<prefix>.run{r}.csv".
    std::string predictions_prefix;
};

struct RunResult {
    std::uint64_t seed = 0;
    Metrics metrics;
    double train_time_sec = 0.0;
    std::optional<std::size_t> tuned_k;
    std::optional<double> sigma2;  // per-run bandwidth in inductive mode
};

struct ReportConfig {
    std::string source;  // pipeline | embedding | distmat
    std::optional<std::string> compressor;
    std::optional<int> level;
    std::optional<std::string> concat;
    std::optional<std::string> kernel_mode;
    std::optional<std::string> sigma2_policy;
    std::optional<double> sigma2;
    std::optional<std::size_t> components;
    std::optional<bool> center;
    std::optional<bool> zero_diagonal;
    std::string classifier;
    std::size_t knn_k = 0;
    double l2 = 0.0;
    double lr = 0.0;
    std::size_t epochs = 0;
    double var_floor = 0.0;
    std::size_t runs = 0;
    std::uint64_t base_seed = 0;
    bool inductive = false;
    bool tune = false;
    bool timing = true;
    std::size_t n = 0;
    std::vector<std::string> classes;
};

struct MetricAggregate {
    double mean = 0.0;
    double sd = 0.0;  // sample SD (n-1); 0 for a single run
};

struct EvalReport {
    ReportConfig config;
    std::vector<RunResult> runs;
};

/// Mean and sample SD of one metric across runs. `field` selects a Metrics
/// member; time uses aggregate_time.
MetricAggregate aggregate_metric(const EvalReport& report, double Metrics::* field);
MetricAggregate aggregate_time(const EvalReport& report);

/// Full pipeline on a dataset: NCD matrix and kernel computed once on all n
/// sequences (transductive default; only classifier training sees labels),
/// classifier trained per run. --inductive restricts kernel/kPCA to train
/// rows and projects the rest via the Nystrom extension.
EvalReport run_experiment(const seqio::Dataset& d, const ExperimentConfig& cfg);

/// Same protocol starting from a precomputed (possibly cached) raw distance
/// matrix; applies zero_diagonal and symmetrization per cfg. Takes the
/// matrix by value so callers can move in and the raw buffer can be released
/// once the symmetrized copy exists (these are n^2 doubles).
EvalReport run_experiment_on_matrix(ncd::DistanceMatrix dist, const std::vector<int>& labels,
                                    const std::vector<std::string>& class_names,
                                    const ExperimentConfig& cfg);

/// Classifier evaluation over a precomputed embedding (transductive).
EvalReport evaluate_embedding(const kpca::Embedding& emb, const std::vector<int>& labels,
                              const std::vector<std::string>& class_names,
                              const ExperimentConfig& cfg);

/// Direct NCD-kNN baseline over a distance matrix (symmetrized internally
/// when needed); no kernel or embedding involved.
EvalReport evaluate_ncd_knn(const ncd::DistanceMatrix& d, const std::vector<int>& labels,
                            const std::vector<std::string>& class_names,
                            const ExperimentConfig& cfg);

/// Stable-key-order JSON document; byte-identical across reruns when timing
/// is off.
std::string report_to_json(const EvalReport& report, int indent = 2);

/// Human-readable aligned table.
std::string report_to_table(const EvalReport& report);

}  // namespace ncdkit::eval
