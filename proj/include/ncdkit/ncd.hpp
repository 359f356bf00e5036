#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ncdkit/compress.hpp"
#include "ncdkit/seqio.hpp"

namespace ncdkit::ncd {

enum class ConcatMode : std::uint8_t {
    direct = 0,        // s1 s2, no separator
    space_joined = 1,  // s1 ' ' s2
};

const char* concat_mode_name(ConcatMode m);
ConcatMode parse_concat_mode(std::string_view name);

struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major n*n, dimensionless NCD
    bool symmetric = false;
    compress::CompressorSpec spec;
    ConcatMode concat_mode = ConcatMode::direct;
    std::vector<std::string> ids;
    // Ordered pairs whose concatenation exceeds the DEFLATE window; NCD
    // quality degrades for those under the gzip backend. Not persisted.
    std::size_t window_exceeded_pairs = 0;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

/// Eq-style NCD from three compressed lengths:
/// (l_xy - min(l_x, l_y)) / max(l_x, l_y), evaluated in double precision.
double ncd_value(std::size_t l_x, std::size_t l_y, std::size_t l_xy);

using ProgressFn = std::function<void(std::size_t rows_done, std::size_t total_rows)>;

/// Full pairwise NCD matrix over the dataset, parallel over rows.
/// Per-sequence lengths are computed once in a sequential pre-pass; every
/// entry is a pure function of the two sequences, so the result is
/// bit-identical for any worker count. Diagonal holds NCD(s,s) as computed.
DistanceMatrix distance_matrix(const seqio::Dataset& d,
                               const compress::CompressorSpec& spec,
                               ConcatMode mode = ConcatMode::direct,
                               const ProgressFn& progress = nullptr);

/// Reference implementation: sequential, no length cache (recompresses each
/// sequence inside the inner loop). Kept for equivalence tests and the
/// benchmark; must match distance_matrix() entry-by-entry, bit-exact.
DistanceMatrix distance_matrix_serial(const seqio::Dataset& d,
                                      const compress::CompressorSpec& spec,
                                      ConcatMode mode = ConcatMode::direct);

/// D'[i][j] = (D[i][j] + D[j][i]) / 2; diagonal unchanged. Idempotent.
DistanceMatrix symmetrize(const DistanceMatrix& d);

/// Single-pair convenience path, bit-identical to the matrix entry.
double ncd_direct(const seqio::SequenceRecord& a, const seqio::SequenceRecord& b,
                  const compress::CompressorSpec& spec,
                  ConcatMode mode = ConcatMode::direct);

/// Ablation helper: force the diagonal to zero.
void zero_diagonal(DistanceMatrix& d);

}  // namespace ncdkit::ncd
