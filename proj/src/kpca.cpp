#include "ncdkit/kpca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "ncdkit/errors.hpp"

namespace ncdkit::kpca {

namespace {

constexpr double kEigenvalueDropRel = 1e-10;

void check_square_symmetric(const std::vector<double>& k, std::size_t n) {
    if (n == 0) throw_data("EmptyDataset: kernel has no rows");
    if (k.size() != n * n) throw_data("kernel buffer size does not match n*n");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (k[i * n + j] != k[j * n + i])
                throw_data("kernel matrix is not symmetric at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
}

}  // namespace

std::vector<double> center_kernel_values(const std::vector<double>& k, std::size_t n) {
    check_square_symmetric(k, n);
    std::vector<double> row_mean(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += k[i * n + j];
        row_mean[i] = s / static_cast<double>(n);
        total += s;
    }
    double total_mean = total / static_cast<double>(n * n);

    // Fill the upper triangle and mirror so the result is symmetric exactly,
    // not just up to rounding.
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double v = k[i * n + j] - row_mean[i] - row_mean[j] + total_mean;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    return out;
}

std::vector<double> center_kernel(const kernel::KernelMatrix& k) {
    return center_kernel_values(k.values, k.n);
}

KpcaModel kpca_fit(const kernel::KernelMatrix& k, std::size_t q, bool center) {
    const std::size_t n = k.n;
    check_square_symmetric(k.values, n);
    if (q < 1 || q > n)
        throw_data("component count must be in 1..n, got " + std::to_string(q));

    KpcaModel model;
    model.centered = center;
    model.row_means.assign(n, 0.0);
    model.total_mean = 0.0;

    // The solver copies its input, so the centered buffer is scoped to free
    // one n^2 block before the decomposition runs.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    {
        std::vector<double> work;
        if (center) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += k.values[i * n + j];
                model.row_means[i] = s / static_cast<double>(n);
                total += s;
            }
            model.total_mean = total / static_cast<double>(n * n);
            work = center_kernel_values(k.values, n);
        } else {
            work = k.values;
        }
        using RowMajorMap = Eigen::Map<
            const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
        solver.compute(
            RowMajorMap(work.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    }
    if (solver.info() != Eigen::Success) throw_data("eigendecomposition failed to converge");

    const auto& evals = solver.eigenvalues();   // ascending
    const auto& evecs = solver.eigenvectors();  // columns, unit norm
    model.lambda_min_full = evals(0);
    model.lambda_max_full = evals(static_cast<Eigen::Index>(n) - 1);

    double lambda_max = model.lambda_max_full;
    if (!(lambda_max > 0.0))
        throw_data("DegenerateKernel: no positive eigenvalues (all sequences identical?)");
    const double drop = kEigenvalueDropRel * lambda_max;

    std::size_t retained = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (evals(static_cast<Eigen::Index>(n - 1 - r)) > drop)
            ++retained;
        else
            break;
    }
    if (retained == 0)
        throw_data("DegenerateKernel: no positive eigenvalues (all sequences identical?)");

    const std::size_t qp = std::min(q, retained);
    Embedding& emb = model.embedding;
    emb.n = n;
    emb.q = qp;
    emb.coords.assign(n * qp, 0.0);
    emb.eigenvalues.resize(qp);
    emb.ids = k.ids;
    model.eigvecs.assign(n * qp, 0.0);

    for (std::size_t c = 0; c < qp; ++c) {
        const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - c);
        double lambda = evals(src);
        emb.eigenvalues[c] = lambda;

        // Sign convention: largest-magnitude entry positive (first such
        // index on exact ties).
        Eigen::Index arg = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            double mag = std::abs(evecs(i, src));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        double flip = evecs(arg, src) < 0.0 ? -1.0 : 1.0;
        double scale = std::sqrt(lambda);
        for (std::size_t i = 0; i < n; ++i) {
            double v = flip * evecs(static_cast<Eigen::Index>(i), src);
            model.eigvecs[i * qp + c] = v;
            emb.coords[i * qp + c] = scale * v;
        }
    }
    return model;
}

Embedding kpca_embed(const kernel::KernelMatrix& k, std::size_t q, bool center) {
    return kpca_fit(k, q, center).embedding;
}

std::vector<double> nystrom_project(const KpcaModel& model,
                                    const std::vector<double>& kernel_rows, std::size_t m) {
    const std::size_t n = model.embedding.n;
    const std::size_t q = model.embedding.q;
    if (kernel_rows.size() != m * n)
        throw_data("nystrom_project: kernel_rows must be m x n");

    std::vector<double> out(m * q, 0.0);
    std::vector<double> centered_row(n);
    for (std::size_t t = 0; t < m; ++t) {
        const double* row = kernel_rows.data() + t * n;
        if (model.centered) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += row[i];
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                centered_row[i] = row[i] - mean - model.row_means[i] + model.total_mean;
        } else {
            std::copy(row, row + n, centered_row.begin());
        }
        for (std::size_t c = 0; c < q; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                acc += centered_row[i] * model.eigvecs[i * q + c];
            out[t * q + c] = acc / std::sqrt(model.embedding.eigenvalues[c]);
        }
    }
    return out;
}

}  // namespace ncdkit::kpca
