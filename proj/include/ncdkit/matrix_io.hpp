#pragma once

#include <string>
#include <vector>

#include "ncdkit/kernel.hpp"
#include "ncdkit/kpca.hpp"
#include "ncdkit/ncd.hpp"

namespace ncdkit::io {

// Binary containers. All integers and IEEE-754 binary64 values are
// little-endian; ids are length-prefixed (u32) UTF-8 strings.
//
// NCDM: magic "NCDM", version u32=1, n u64, symmetric u8, compressor u8,
//       level u8, n*n f64 row-major, then n ids.
// NCDK: same layout with magic "NCDK" plus sigma2 f64 and mode u8 appended
//       to the header.
// NCDE: magic "NCDE", version u32=1, n u64, q u64, q f64 eigenvalues,
//       n*q f64 coords row-major, then n ids.

void write_ncdm(const ncd::DistanceMatrix& d, const std::string& path);
ncd::DistanceMatrix read_ncdm(const std::string& path);

void write_ncdk(const kernel::KernelMatrix& k, const std::string& path);
kernel::KernelMatrix read_ncdk(const std::string& path);

void write_ncde(const kpca::Embedding& e, const std::string& path);
kpca::Embedding read_ncde(const std::string& path);

/// Square matrix CSV: header "id,<id0>,...", one row per id, %.17g values.
void write_matrix_csv(const std::vector<std::string>& ids,
                      const std::vector<double>& values, std::size_t n,
                      const std::string& path);

/// Embedding CSV: optional leading "# key=value" comment lines, then header
/// "id,c0,...,c{q-1}", one row per record at full (17 significant digit)
/// precision.
void write_embedding_csv(const kpca::Embedding& e, const std::string& path,
                         const std::vector<std::string>& comments = {});

/// Reads the CSV form back; eigenvalues are not part of the CSV and come
/// back empty.
kpca::Embedding read_embedding_csv(const std::string& path);

/// Prediction CSV: header "id,pred_label,p_<class0>,...", one row per
/// sample, probabilities at full precision.
void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<std::vector<double>>& probs,
                           const std::vector<std::string>& class_names,
                           const std::string& path);

}  // namespace ncdkit::io
