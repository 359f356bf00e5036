#include "ncdkit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ncdkit/errors.hpp"

namespace ncdkit::kernel {

namespace {

void check_symmetric_input(const ncd::DistanceMatrix& dprime) {
    if (!dprime.symmetric)
        throw_data("AsymmetricInput: kernel requires a symmetrized distance matrix");
    if (dprime.n == 0) throw_data("EmptyDataset: kernel input has no rows");
}

void check_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw_data("NonPositiveSigma: sigma2 must be a positive finite value");
}

// Kernel values are mathematically > 0; exp underflow would break that, so
// clamp to the smallest normal double.
double gaussian_entry(double sqdist, double sigma2) {
    return std::max(std::exp(-sqdist / sigma2), std::numeric_limits<double>::min());
}

std::vector<double> mode_sqdist(const ncd::DistanceMatrix& dprime, KernelMode mode) {
    const std::size_t n = dprime.n;
    if (mode == KernelMode::row_feature)
        return pairwise_sqdist(dprime.values.data(), n, n);
    std::vector<double> sq(n * n);
    for (std::size_t i = 0; i < n * n; ++i) sq[i] = dprime.values[i] * dprime.values[i];
    return sq;
}

KernelMatrix assemble(const ncd::DistanceMatrix& dprime, double sigma2, KernelMode mode,
                      std::vector<double> values) {
    KernelMatrix k;
    k.n = dprime.n;
    k.values = std::move(values);
    k.sigma2 = sigma2;
    k.mode = mode;
    k.spec = dprime.spec;
    k.ids = dprime.ids;
    return k;
}

}  // namespace

const char* kernel_mode_name(KernelMode m) {
    return m == KernelMode::row_feature ? "row-feature" : "dist-sub";
}

KernelMode parse_kernel_mode(std::string_view name) {
    if (name == "row-feature" || name == "row_feature") return KernelMode::row_feature;
    if (name == "dist-sub" || name == "distance_substitution")
        return KernelMode::distance_substitution;
    throw_data("unknown kernel mode: " + std::string(name));
}

double row_sqdist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return acc;
}

std::vector<double> pairwise_sqdist(const double* x, std::size_t m, std::size_t d) {
    std::vector<double> sq(m * m, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::size_t j = i + 1; j < m; ++j) {
            double v = row_sqdist(x + i * d, x + j * d, d);
            sq[i * m + j] = v;
            sq[j * m + i] = v;
        }
    }
    return sq;
}

std::vector<double> pairwise_sqdist_serial(const double* x, std::size_t m, std::size_t d) {
    std::vector<double> sq(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double v = row_sqdist(x + i * d, x + j * d, d);
            sq[i * m + j] = v;
            sq[j * m + i] = v;
        }
    return sq;
}

std::vector<double> cross_sqdist(const double* a, std::size_t ma, const double* b,
                                 std::size_t mb, std::size_t d) {
    std::vector<double> sq(ma * mb);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(ma); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < mb; ++j)
            sq[i * mb + j] = row_sqdist(a + i * d, b + j * d, d);
    }
    return sq;
}

double median_offdiag(const std::vector<double>& sq, std::size_t m) {
    if (m < 2) throw_data("median heuristic needs at least 2 rows");
    std::vector<double> vals;
    vals.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) vals.push_back(sq[i * m + j]);
    std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    double hi = vals[mid];
    if (vals.size() % 2 == 1) return hi;
    double lo = *std::max_element(vals.begin(), vals.begin() + mid);
    return (lo + hi) / 2.0;
}

std::vector<double> gaussian_from_sqdist(const std::vector<double>& sq, std::size_t rows,
                                         std::size_t cols, double sigma2, bool unit_diag) {
    check_sigma2(sigma2);
    std::vector<double> out(rows * cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(rows); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < cols; ++j)
            out[i * cols + j] = gaussian_entry(sq[i * cols + j], sigma2);
    }
    if (unit_diag)
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) out[i * cols + i] = 1.0;
    return out;
}

double select_sigma2(const ncd::DistanceMatrix& dprime, const Sigma2Policy& policy,
                     KernelMode mode) {
    check_symmetric_input(dprime);
    if (!policy.use_median) {
        check_sigma2(policy.fixed_value);
        return policy.fixed_value;
    }
    if (dprime.n < 2) throw_data("median heuristic needs n >= 2");
    double med = median_offdiag(mode_sqdist(dprime, mode), dprime.n);
    if (!(med > 0.0))
        throw_data("NonPositiveSigma: median squared distance is 0 "
                   "(all sequences identical); supply a fixed sigma2");
    return med;
}

KernelMatrix gaussian_kernel(const ncd::DistanceMatrix& dprime, double sigma2,
                             KernelMode mode) {
    check_symmetric_input(dprime);
    check_sigma2(sigma2);
    const std::size_t n = dprime.n;
    auto values = gaussian_from_sqdist(mode_sqdist(dprime, mode), n, n, sigma2,
                                       /*unit_diag=*/true);
    return assemble(dprime, sigma2, mode, std::move(values));
}

KernelMatrix gaussian_kernel_serial(const ncd::DistanceMatrix& dprime, double sigma2,
                                    KernelMode mode) {
    check_symmetric_input(dprime);
    check_sigma2(sigma2);
    const std::size_t n = dprime.n;

    std::vector<double> sq;
    if (mode == KernelMode::row_feature) {
        sq = pairwise_sqdist_serial(dprime.values.data(), n, n);
    } else {
        sq.resize(n * n);
        for (std::size_t i = 0; i < n * n; ++i) sq[i] = dprime.values[i] * dprime.values[i];
    }
    std::vector<double> values(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            values[i * n + j] = gaussian_entry(sq[i * n + j], sigma2);
    for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
    return assemble(dprime, sigma2, mode, std::move(values));
}

}  // namespace ncdkit::kernel
