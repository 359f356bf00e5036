// Timing comparison of the OpenMP kernels against their serial reference
// implementations, plus an equality check while we're at it.
//
// usage: ncdkit_bench [n_sequences] [seq_length]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "ncdkit/kernel.hpp"
#include "ncdkit/kpca.hpp"
#include "ncdkit/ncd.hpp"
#include "ncdkit/rng.hpp"
#include "ncdkit/seqio.hpp"

using namespace ncdkit;

namespace {

double now_sec() {
    using Clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(Clock::now().time_since_epoch()).count();
}

seqio::Dataset synthetic_dataset(std::size_t n, std::size_t len) {
    static const char* alphabets[2] = {"ACGT", "WXYZ"};
    SplitMix64 rng(2024);
    seqio::Dataset d;
    d.source = "bench";
    d.classes = {"a", "b"};
    for (std::size_t i = 0; i < n; ++i) {
        const char* alpha = alphabets[i % 2];
        std::string s;
        s.reserve(len);
        for (std::size_t j = 0; j < len; ++j) s.push_back(alpha[rng.below(4)]);
        d.records.push_back({"s" + std::to_string(i), d.classes[i % 2], std::move(s)});
    }
    return d;
}

// serial and parallel paths must agree bit for bit
bool equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a == b;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 120;
    std::size_t len = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 400;
    std::printf("bench: n=%zu len=%zu threads=%d\n", n, len, omp_get_max_threads());

    auto d = synthetic_dataset(n, len);
    compress::CompressorSpec spec{};

    double t0 = now_sec();
    auto dist_serial = ncd::distance_matrix_serial(d, spec);
    double t_serial = now_sec() - t0;

    t0 = now_sec();
    auto dist_par = ncd::distance_matrix(d, spec);
    double t_par = now_sec() - t0;

    std::printf("distance_matrix  serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n",
                t_serial, t_par, t_serial / t_par,
                equal(dist_serial.values, dist_par.values) ? "match" : "MISMATCH");

    auto dprime = ncd::symmetrize(dist_par);
    double sigma2 =
        kernel::select_sigma2(dprime, kernel::Sigma2Policy::median(), kernel::KernelMode::row_feature);

    t0 = now_sec();
    auto k_serial = kernel::gaussian_kernel_serial(dprime, sigma2, kernel::KernelMode::row_feature);
    double tk_serial = now_sec() - t0;

    t0 = now_sec();
    auto k_par = kernel::gaussian_kernel(dprime, sigma2, kernel::KernelMode::row_feature);
    double tk_par = now_sec() - t0;

    std::printf("gaussian_kernel  serial %8.3fs  parallel %8.3fs  speedup %5.2fx  %s\n",
                tk_serial, tk_par, tk_serial / tk_par,
                equal(k_serial.values, k_par.values) ? "match" : "MISMATCH");

    t0 = now_sec();
    auto emb = kpca::kpca_embed(k_par, std::min<std::size_t>(16, n));
    double t_kpca = now_sec() - t0;
    std::printf("kpca_embed(q=16)                  %8.3fs  (top eigenvalue %.4g)\n", t_kpca,
                emb.eigenvalues.empty() ? 0.0 : emb.eigenvalues[0]);
    return 0;
}
