#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ncdkit/compress.hpp"
#include "ncdkit/ncd.hpp"

namespace ncdkit::kernel {

enum class KernelMode : std::uint8_t {
    // Each sequence is represented by its row of D'; K[i][j] is a Gaussian
    // RBF between those rows. PSD by construction.
    row_feature = 0,
    // Literal per-entry substitution K[i][j] = exp(-D'[i][j]^2 / sigma2).
    // Not guaranteed PSD; its spectrum is reported, never assumed.
    distance_substitution = 1,
};

const char* kernel_mode_name(KernelMode m);
KernelMode parse_kernel_mode(std::string_view name);

struct KernelMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major, symmetric, unit diagonal
    double sigma2 = 0.0;
    KernelMode mode = KernelMode::row_feature;
    compress::CompressorSpec spec;  // provenance from the distance stage
    std::vector<std::string> ids;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

struct Sigma2Policy {
    bool use_median = true;
    double fixed_value = 0.0;

    static Sigma2Policy median() { return {true, 0.0}; }
    static Sigma2Policy fixed(double v) { return {false, v}; }
};

/// Bandwidth selection. median_heuristic: median over i<j of the squared
/// Euclidean distance between rows i and j of D' (row_feature mode) or of
/// D'[i][j]^2 (distance_substitution mode). Throws NonPositiveSigma when the
/// median is 0 (all sequences identical); supply a fixed sigma2 instead.
double select_sigma2(const ncd::DistanceMatrix& dprime, const Sigma2Policy& policy,
                     KernelMode mode);

/// K[i][j] = exp(-sqdist(i,j) / sigma2) with the diagonal clamped to exactly
/// 1. Requires dprime.symmetric. Parallel over rows, schedule-deterministic.
KernelMatrix gaussian_kernel(const ncd::DistanceMatrix& dprime, double sigma2,
                             KernelMode mode);

/// Sequential reference; bit-identical to gaussian_kernel().
KernelMatrix gaussian_kernel_serial(const ncd::DistanceMatrix& dprime, double sigma2,
                                    KernelMode mode);

// --- feature-vector entry points (shared by the inductive evaluation path,
//     which restricts each sequence's feature vector to train columns) ---

/// Squared Euclidean distance between two d-vectors. Single shared kernel so
/// serial and parallel paths run identical machine code.
double row_sqdist(const double* a, const double* b, std::size_t d);

/// m x m matrix of pairwise squared distances between rows of X (m x d).
std::vector<double> pairwise_sqdist(const double* x, std::size_t m, std::size_t d);
std::vector<double> pairwise_sqdist_serial(const double* x, std::size_t m, std::size_t d);

/// ma x mb squared distances between rows of A and rows of B.
std::vector<double> cross_sqdist(const double* a, std::size_t ma, const double* b,
                                 std::size_t mb, std::size_t d);

/// Median over i<j of an m x m squared-distance matrix.
double median_offdiag(const std::vector<double>& sq, std::size_t m);

/// exp(-sq/sigma2) elementwise; `unit_diag` clamps [i][i] to exactly 1 for
/// square inputs.
std::vector<double> gaussian_from_sqdist(const std::vector<double>& sq, std::size_t rows,
                                         std::size_t cols, double sigma2, bool unit_diag);

}  // namespace ncdkit::kernel
