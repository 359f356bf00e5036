#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ncdkit::seqio {

// One labeled sequence. `residues` holds the raw UTF-8 bytes of the input
// characters, taken verbatim (no case folding, no N-stripping) unless the
// caller opts into normalization.
struct SequenceRecord {
    std::string id;
    std::string label;
    std::string residues;

    bool operator==(const SequenceRecord&) const = default;
};

struct Dataset {
    std::vector<SequenceRecord> records;
    std::vector<std::string> classes;  // distinct labels, first-appearance order
    std::string source;

    std::size_t size() const { return records.size(); }

    // Class index per record, aligned with `records`.
    std::vector<int> label_ids() const;
    std::vector<std::string> ids() const;
};

struct LoadOptions {
    bool normalize_upper = false;  // ASCII-uppercase residues at ingestion
};

/// Load a tab-delimited file with a header row. Ids come from `id_col` when
/// given, otherwise they are synthesized as "row{k}" (k = 0-based data row).
Dataset load_tsv(const std::string& path, const std::string& seq_col,
                 const std::string& label_col, const std::string& id_col = "",
                 const LoadOptions& opts = {});

/// Load FASTA records plus an `id,label` CSV (header required). Multi-line
/// bodies are concatenated with all whitespace stripped.
Dataset load_fasta(const std::string& seq_path, const std::string& label_path,
                   const LoadOptions& opts = {});

/// id -> label pairs from a two-column CSV with header.
std::vector<std::pair<std::string, std::string>> load_label_csv(const std::string& path);

struct DatasetStats {
    std::size_t count = 0;
    std::size_t class_count = 0;
    std::size_t min_len = 0;
    std::size_t max_len = 0;
    double mean_len = 0.0;
};

DatasetStats stats(const Dataset& d);

/// Canonical TSV (header id/label/seq); load_tsv(path, "seq", "label", "id")
/// round-trips to an identical Dataset.
void dump_tsv(const Dataset& d, const std::string& path);

}  // namespace ncdkit::seqio
