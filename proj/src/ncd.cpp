#include "ncdkit/ncd.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "ncdkit/errors.hpp"

namespace ncdkit::ncd {

namespace {

void concat_into(std::string& buf, const std::string& a, const std::string& b,
                 ConcatMode mode) {
    buf.clear();
    buf.reserve(a.size() + b.size() + 1);
    buf.append(a);
    if (mode == ConcatMode::space_joined) buf.push_back(' ');
    buf.append(b);
}

// Sanity bound from the matrix invariant: real compressors can push NCD a
// little above 1 but a wildly larger value means a broken backend.
void check_entry(double v, std::size_t i, std::size_t j) {
    if (!(v >= 0.0 && v <= 1.5))
        throw_consistency("NCD entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") = " + std::to_string(v) + " outside [0, 1.5]");
}

std::size_t count_window_exceeded(const seqio::Dataset& d, ConcatMode mode) {
    std::size_t extra = mode == ConcatMode::space_joined ? 1 : 0;
    std::size_t count = 0;
    for (const auto& a : d.records)
        for (const auto& b : d.records)
            if (a.residues.size() + b.residues.size() + extra > compress::kDeflateWindowBytes)
                ++count;
    return count;
}

}  // namespace

const char* concat_mode_name(ConcatMode m) {
    return m == ConcatMode::direct ? "direct" : "space";
}

ConcatMode parse_concat_mode(std::string_view name) {
    if (name == "direct") return ConcatMode::direct;
    if (name == "space" || name == "space_joined") return ConcatMode::space_joined;
    throw_data("unknown concat mode: " + std::string(name));
}

double ncd_value(std::size_t l_x, std::size_t l_y, std::size_t l_xy) {
    std::size_t mx = std::max(l_x, l_y);
    if (mx == 0) throw_data("ZeroLength: max(L_x, L_y) == 0");
    return (static_cast<double>(l_xy) - static_cast<double>(std::min(l_x, l_y))) /
           static_cast<double>(mx);
}

DistanceMatrix distance_matrix(const seqio::Dataset& d,
                               const compress::CompressorSpec& spec, ConcatMode mode,
                               const ProgressFn& progress) {
    const std::size_t n = d.records.size();
    if (n == 0) throw_data("EmptyDataset: distance_matrix needs at least one record");

    DistanceMatrix out;
    out.n = n;
    out.values.assign(n * n, 0.0);
    out.symmetric = false;
    out.spec = spec;
    out.concat_mode = mode;
    out.ids = d.ids();
    out.window_exceeded_pairs =
        spec.backend == compress::Backend::deflate_gzip ? count_window_exceeded(d, mode) : 0;

    // Sequential pre-pass: per-sequence lengths, computed once and shared
    // read-only by all workers.
    std::vector<std::size_t> lens(n);
    for (std::size_t i = 0; i < n; ++i)
        lens[i] = compress::compressed_len(spec, d.records[i].residues);

    std::atomic<std::size_t> rows_done{0};

#pragma omp parallel
    {
        std::string buf;
#pragma omp for schedule(dynamic)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            double* row = out.values.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                concat_into(buf, d.records[i].residues, d.records[j].residues, mode);
                std::size_t l_ij = compress::compressed_len(spec, buf);
                double v = ncd_value(lens[i], lens[j], l_ij);
                check_entry(v, i, j);
                row[j] = v;
            }
            std::size_t done = rows_done.fetch_add(1) + 1;
            if (progress) {
#pragma omp critical(ncdkit_progress)
                progress(done, n);
            }
        }
    }
    return out;
}

DistanceMatrix distance_matrix_serial(const seqio::Dataset& d,
                                      const compress::CompressorSpec& spec,
                                      ConcatMode mode) {
    const std::size_t n = d.records.size();
    if (n == 0) throw_data("EmptyDataset: distance_matrix needs at least one record");

    DistanceMatrix out;
    out.n = n;
    out.values.assign(n * n, 0.0);
    out.symmetric = false;
    out.spec = spec;
    out.concat_mode = mode;
    out.ids = d.ids();
    out.window_exceeded_pairs =
        spec.backend == compress::Backend::deflate_gzip ? count_window_exceeded(d, mode) : 0;

    // Mirrors the nested-loop formulation: both per-sequence lengths are
    // recomputed inside the inner loop, no caching anywhere.
    std::string buf;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t l_i = compress::compressed_len(spec, d.records[i].residues);
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t l_j = compress::compressed_len(spec, d.records[j].residues);
            concat_into(buf, d.records[i].residues, d.records[j].residues, mode);
            std::size_t l_ij = compress::compressed_len(spec, buf);
            double v = ncd_value(l_i, l_j, l_ij);
            check_entry(v, i, j);
            out.at(i, j) = v;
        }
    }
    return out;
}

DistanceMatrix symmetrize(const DistanceMatrix& d) {
    DistanceMatrix out = d;
    out.symmetric = true;
    for (std::size_t i = 0; i < d.n; ++i)
        for (std::size_t j = i + 1; j < d.n; ++j) {
            double avg = (d.at(i, j) + d.at(j, i)) / 2.0;
            out.at(i, j) = avg;
            out.at(j, i) = avg;
        }
    return out;
}

double ncd_direct(const seqio::SequenceRecord& a, const seqio::SequenceRecord& b,
                  const compress::CompressorSpec& spec, ConcatMode mode) {
    std::size_t l_a = compress::compressed_len(spec, a.residues);
    std::size_t l_b = compress::compressed_len(spec, b.residues);
    std::string buf;
    concat_into(buf, a.residues, b.residues, mode);
    std::size_t l_ab = compress::compressed_len(spec, buf);
    return ncd_value(l_a, l_b, l_ab);
}

void zero_diagonal(DistanceMatrix& d) {
    for (std::size_t i = 0; i < d.n; ++i) d.at(i, i) = 0.0;
}

}  // namespace ncdkit::ncd
