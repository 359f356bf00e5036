#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ncdkit/kernel.hpp"

namespace ncdkit::kpca {

struct Embedding {
    std::size_t n = 0;
    std::size_t q = 0;              // retained components
    std::vector<double> coords;     // n x q row-major, column k scaled by sqrt(lambda_k)
    std::vector<double> eigenvalues;  // q values, strictly positive, non-increasing
    std::vector<std::string> ids;

    double at(std::size_t i, std::size_t k) const { return coords[i * q + k]; }
};

/// K_c = K - 1K - K1 + 1K1 with 1 the n x n matrix of 1/n entries.
/// Output is exactly symmetric; row and column sums vanish up to rounding.
std::vector<double> center_kernel_values(const std::vector<double>& k, std::size_t n);
std::vector<double> center_kernel(const kernel::KernelMatrix& k);

// Everything the Nystrom extension needs to project new points onto the
// fitted components.
struct KpcaModel {
    Embedding embedding;
    std::vector<double> eigvecs;    // n x q row-major, unit eigenvectors
    std::vector<double> row_means;  // of the raw kernel (zeros when !centered)
    double total_mean = 0.0;
    bool centered = true;
    // Full-spectrum bounds of the (centered) kernel, reported for
    // distance_substitution inputs whose PSD-ness is not guaranteed.
    double lambda_min_full = 0.0;
    double lambda_max_full = 0.0;
};

/// Symmetric eigendecomposition of the (optionally centered) kernel.
/// Eigenpairs with lambda <= 1e-10 * lambda_max are dropped; q' = min(q,
/// retained). coords[:,k] = sqrt(lambda_k) * v_k with each eigenvector
/// flipped so its largest-magnitude entry is positive. Deterministic.
KpcaModel kpca_fit(const kernel::KernelMatrix& k, std::size_t q, bool center = true);

Embedding kpca_embed(const kernel::KernelMatrix& k, std::size_t q, bool center = true);

/// Project m out-of-sample points from their raw kernel rows against the
/// fitting set (m x n, row-major). Returns m x q coords. Projecting a
/// training row reproduces its fitted coordinates.
std::vector<double> nystrom_project(const KpcaModel& model,
                                    const std::vector<double>& kernel_rows,
                                    std::size_t m);

inline constexpr std::size_t kDefaultComponents = 64;

}  // namespace ncdkit::kpca
