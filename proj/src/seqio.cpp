#include "ncdkit/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ncdkit/errors.hpp"

namespace ncdkit::seqio {

namespace {

constexpr std::size_t kMaxSequenceBytes =
    static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max());

std::ifstream open_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open file: " + path);
    return in;
}

// Reads one line, stripping a trailing '\r' (CRLF input).
bool get_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

void strip_bom(std::string& line) {
    if (line.size() >= 3 && line[0] == '\xef' && line[1] == '\xbb' && line[2] == '\xbf')
        line.erase(0, 3);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

void apply_options(std::string& residues, const LoadOptions& opts) {
    if (opts.normalize_upper)
        std::transform(residues.begin(), residues.end(), residues.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
}

class DatasetBuilder {
public:
    explicit DatasetBuilder(std::string source) { d_.source = std::move(source); }

    void add(std::string id, std::string label, std::string residues,
             const std::string& where) {
        if (residues.empty())
            throw_data("EmptySequence: empty sequence at " + where);
        if (residues.size() > kMaxSequenceBytes)
            throw_data("sequence exceeds 2^31-1 bytes at " + where);
        if (id.empty()) throw_data("empty id at " + where);
        if (!seen_ids_.insert(id).second)
            throw_data("DuplicateId: duplicate id '" + id + "'");
        if (class_index_.find(label) == class_index_.end()) {
            class_index_.emplace(label, d_.classes.size());
            d_.classes.push_back(label);
        }
        d_.records.push_back({std::move(id), std::move(label), std::move(residues)});
    }

    Dataset take() { return std::move(d_); }

private:
    Dataset d_;
    std::unordered_set<std::string> seen_ids_;
    std::unordered_map<std::string, std::size_t> class_index_;
};

}  // namespace

std::vector<int> Dataset::label_ids() const {
    std::unordered_map<std::string_view, int> index;
    for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], static_cast<int>(c));
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(index.at(r.label));
    return out;
}

std::vector<std::string> Dataset::ids() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.id);
    return out;
}

Dataset load_tsv(const std::string& path, const std::string& seq_col,
                 const std::string& label_col, const std::string& id_col,
                 const LoadOptions& opts) {
    auto in = open_text(path);
    std::string line;
    if (!get_line(in, line)) throw_data("empty file (no header row): " + path);
    strip_bom(line);

    auto header = split(line, '\t');
    auto find_col = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw_data("MissingColumn: column '" + name + "' not in header of " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t seq_idx = find_col(seq_col);
    std::size_t label_idx = find_col(label_col);
    std::size_t id_idx = id_col.empty() ? std::string::npos : find_col(id_col);

    DatasetBuilder builder(path);
    std::size_t row = 0;
    while (get_line(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        std::size_t needed = std::max(seq_idx, label_idx);
        if (id_idx != std::string::npos) needed = std::max(needed, id_idx);
        if (fields.size() <= needed)
            throw_data("row " + std::to_string(row) + " has too few fields in " + path);
        std::string id = id_idx == std::string::npos ? "row" + std::to_string(row)
                                                     : fields[id_idx];
        std::string residues = fields[seq_idx];
        apply_options(residues, opts);
        builder.add(std::move(id), fields[label_idx], std::move(residues),
                    "row " + std::to_string(row));
        ++row;
    }
    return builder.take();
}

std::vector<std::pair<std::string, std::string>> load_label_csv(const std::string& path) {
    auto in = open_text(path);
    std::string line;
    if (!get_line(in, line)) throw_data("empty label csv: " + path);
    strip_bom(line);

    std::vector<std::pair<std::string, std::string>> out;
    while (get_line(in, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw_data("label csv row lacks a comma in " + path + ": " + line);
        out.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    }
    return out;
}

Dataset load_fasta(const std::string& seq_path, const std::string& label_path,
                   const LoadOptions& opts) {
    std::unordered_map<std::string, std::string> labels;
    for (auto& [id, label] : load_label_csv(label_path)) {
        auto [it, inserted] = labels.emplace(id, label);
        if (!inserted && it->second != label)
            throw_data("conflicting labels for id '" + id + "' in " + label_path);
    }

    auto in = open_text(seq_path);
    DatasetBuilder builder(seq_path + " + " + label_path);

    std::string line, id, body;
    std::size_t line_no = 0;
    bool have_record = false;
    auto flush = [&]() {
        if (!have_record) return;
        auto it = labels.find(id);
        if (it == labels.end())
            throw_data("UnlabeledSequence: FASTA id '" + id + "' missing from " + label_path);
        std::string residues = std::move(body);
        apply_options(residues, opts);
        builder.add(id, it->second, std::move(residues), "record '" + id + "'");
        body.clear();
    };

    bool first = true;
    while (get_line(in, line)) {
        ++line_no;
        if (first) {
            strip_bom(line);
            first = false;
        }
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            std::size_t end = line.find_first_of(" \t", 1);
            id = line.substr(1, end == std::string::npos ? std::string::npos : end - 1);
            if (id.empty())
                throw_data("MalformedFasta: empty header id at line " + std::to_string(line_no));
            have_record = true;
        } else {
            if (!have_record)
                throw_data("MalformedFasta: sequence data before any '>' header at line " +
                           std::to_string(line_no));
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) body.push_back(c);
        }
    }
    flush();
    return builder.take();
}

DatasetStats stats(const Dataset& d) {
    if (d.records.empty()) throw_data("EmptyDataset: no records");
    DatasetStats s;
    s.count = d.records.size();
    s.class_count = d.classes.size();
    s.min_len = std::numeric_limits<std::size_t>::max();
    double total = 0.0;
    for (const auto& r : d.records) {
        std::size_t len = r.residues.size();
        s.min_len = std::min(s.min_len, len);
        s.max_len = std::max(s.max_len, len);
        total += static_cast<double>(len);
    }
    s.mean_len = total / static_cast<double>(s.count);
    return s;
}

void dump_tsv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write file: " + path);
    out << "id\tlabel\tseq\n";
    for (const auto& r : d.records) {
        // TSV cannot carry tabs or newlines inside fields.
        for (const std::string* f : {&r.id, &r.label, &r.residues})
            if (f->find_first_of("\t\n") != std::string::npos)
                throw_data("record '" + r.id + "' contains tab/newline, not representable in TSV");
        out << r.id << '\t' << r.label << '\t' << r.residues << '\n';
    }
    if (!out) throw_io("write failed: " + path);
}

}  // namespace ncdkit::seqio
