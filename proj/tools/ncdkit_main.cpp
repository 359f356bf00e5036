// ncdkit command line: stats, dataset dump, distmat, embed, eval, pipeline.
//
// Exit codes: 0 success, 2 input-data error, 3 IO error, 4 format error,
// 5 consistency error.

#include <omp.h>
#include <sodium.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "ncdkit/errors.hpp"
#include "ncdkit/eval.hpp"
#include "ncdkit/matrix_io.hpp"

namespace fs = std::filesystem;
using namespace ncdkit;

namespace {

// ------------------------------------------------------------- utilities --

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw_io("read failed: " + path);
    return ss.str();
}

std::string blake2b_hex(const std::string& data) {
    unsigned char out[32];
    crypto_generichash(out, sizeof(out),
                       reinterpret_cast<const unsigned char*>(data.data()), data.size(),
                       nullptr, 0);
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (unsigned char b : out) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xf]);
    }
    return s;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw_data("config key '" + key + "' wants a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw_data("config key '" + key + "' wants a number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& v, const std::string& key) {
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw_data("config key '" + key + "' wants an integer, got '" + v + "'");
    return x;
}

kernel::Sigma2Policy parse_sigma(const std::string& v) {
    if (v == "median") return kernel::Sigma2Policy::median();
    return kernel::Sigma2Policy::fixed(parse_double(v, "sigma"));
}

// ----------------------------------------------------------------- input --

struct InputOpts {
    std::string input;  // TSV
    std::string seq_col = "seq";
    std::string label_col = "class";
    std::string id_col;
    std::string fasta;   // FASTA alternative
    std::string labels;  // id,label CSV for FASTA
    std::string normalize = "none";
};

void add_input_flags(CLI::App* cmd, InputOpts& io) {
    cmd->add_option("--input", io.input, "dataset TSV (tab-delimited, header row)");
    cmd->add_option("--seq-col", io.seq_col, "TSV sequence column name");
    cmd->add_option("--label-col", io.label_col, "TSV label column name");
    cmd->add_option("--id-col", io.id_col,
                    "TSV id column name (default: synthesize row{k} ids)");
    cmd->add_option("--fasta", io.fasta, "FASTA sequence file (use with --labels)");
    cmd->add_option("--labels", io.labels, "id,label CSV (header required)");
    cmd->add_option("--normalize", io.normalize, "none|upper: uppercase residues at ingestion")
        ->check(CLI::IsMember({"none", "upper"}));
}

seqio::Dataset load_input(const InputOpts& io) {
    seqio::LoadOptions opts;
    opts.normalize_upper = io.normalize == "upper";
    if (!io.fasta.empty()) {
        if (io.labels.empty()) throw_data("--fasta needs --labels <id,label csv>");
        return seqio::load_fasta(io.fasta, io.labels, opts);
    }
    if (io.input.empty()) throw_data("no input given: use --input <tsv> or --fasta + --labels");
    return seqio::load_tsv(io.input, io.seq_col, io.label_col, io.id_col, opts);
}

// Join labels onto row ids; missing id is a consistency error (exit 5).
std::pair<std::vector<int>, std::vector<std::string>> join_labels(
    const std::vector<std::string>& row_ids, const std::string& label_csv_path) {
    std::unordered_map<std::string, std::string> by_id;
    for (auto& [id, label] : seqio::load_label_csv(label_csv_path)) by_id[id] = label;

    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_index;
    labels.reserve(row_ids.size());
    for (const auto& id : row_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw_consistency("IdMismatch: id '" + id + "' missing from " + label_csv_path);
        auto [cit, inserted] = class_index.emplace(it->second, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(it->second);
        labels.push_back(cit->second);
    }
    return {std::move(labels), std::move(class_names)};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write file: " + path);
    out << content;
    if (!out) throw_io("write failed: " + path);
}

// Embedding CSVs carry "# key=value" comment lines written by the embed
// stage; recover them so eval reports can echo the bandwidth actually used.
void apply_embedding_comments(eval::ReportConfig& echo, const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(1, eq - 1);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && key.front() == ' ') key.erase(0, 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        if (key == "sigma2")
            echo.sigma2 = parse_double(value, "sigma2");
        else if (key == "mode")
            echo.kernel_mode = value;
        else if (key == "centered")
            echo.center = value == "1";
    }
}

// ------------------------------------------------------------- commands --

struct StatsCmd {
    InputOpts io;
    void run() const {
        auto d = load_input(io);
        auto s = seqio::stats(d);
        std::printf("%zu sequences, %zu classes, len %zu-%zu, mean %.2f\n", s.count,
                    s.class_count, s.min_len, s.max_len, s.mean_len);
    }
};

struct DumpCmd {
    InputOpts io;
    std::string out;
    void run() const {
        auto d = load_input(io);
        seqio::dump_tsv(d, out);
        std::printf("wrote %zu records to %s\n", d.size(), out.c_str());
    }
};

struct DistmatCmd {
    InputOpts io;
    std::string compressor = "gzip";
    int level = 9;
    std::string concat = "direct";
    bool zero_diag = false;
    int threads = 0;
    std::string out;
    std::string csv;

    void run() const {
        apply_threads(threads);
        auto d = load_input(io);
        compress::CompressorSpec spec{compress::parse_backend(compressor), level};
        auto mode = ncd::parse_concat_mode(concat);
        auto progress = [](std::size_t done, std::size_t total) {
            if (done % 1000 == 0 || done == total)
                std::fprintf(stderr, "distmat: %zu/%zu rows\n", done, total);
        };
        auto dist = ncd::distance_matrix(d, spec, mode, progress);
        if (zero_diag) ncd::zero_diagonal(dist);
        if (dist.window_exceeded_pairs > 0)
            std::fprintf(stderr,
                         "warning: %zu ordered pairs exceed the 32 KiB DEFLATE window; "
                         "NCD degrades for them\n",
                         dist.window_exceeded_pairs);
        io::write_ncdm(dist, out);
        if (!csv.empty()) io::write_matrix_csv(dist.ids, dist.values, dist.n, csv);
        std::printf("wrote %zux%zu distance matrix to %s\n", dist.n, dist.n, out.c_str());
    }
};

struct EmbedCmd {
    std::string dist;
    std::string mode = "row-feature";
    std::string sigma = "median";
    std::size_t components = kpca::kDefaultComponents;
    bool no_center = false;
    int threads = 0;
    std::string out;
    std::string binary;
    std::string kernel_out;

    void run() const {
        apply_threads(threads);
        auto dmat = io::read_ncdm(dist);
        auto dprime = dmat.symmetric ? dmat : ncd::symmetrize(dmat);
        auto kmode = kernel::parse_kernel_mode(mode);
        double sigma2 = kernel::select_sigma2(dprime, parse_sigma(sigma), kmode);
        auto kmat = kernel::gaussian_kernel(dprime, sigma2, kmode);
        if (!kernel_out.empty()) io::write_ncdk(kmat, kernel_out);

        std::size_t q = std::min(components, dprime.n);
        if (q == 0) throw_data("component count must be >= 1");
        auto model = kpca::kpca_fit(kmat, q, !no_center);
        if (kmode == kernel::KernelMode::distance_substitution)
            std::fprintf(stderr, "kernel spectrum: lambda_min=%.6g lambda_max=%.6g\n",
                         model.lambda_min_full, model.lambda_max_full);

        char buf[96];
        std::vector<std::string> comments;
        std::snprintf(buf, sizeof(buf), "sigma2=%.17g", sigma2);
        comments.emplace_back(buf);
        comments.emplace_back(std::string("mode=") + kernel::kernel_mode_name(kmode));
        comments.emplace_back(std::string("centered=") + (no_center ? "0" : "1"));
        io::write_embedding_csv(model.embedding, out, comments);
        if (!binary.empty()) io::write_ncde(model.embedding, binary);
        std::printf("wrote %zux%zu embedding to %s (sigma2=%.6g)\n", model.embedding.n,
                    model.embedding.q, out.c_str(), sigma2);
    }
};

struct EvalCmd {
    std::string embedding;
    std::string dist;
    std::string labels;
    std::string clf = "knn";
    std::size_t k = 5;
    double l2 = 1e-4;
    double lr = 0.1;
    std::size_t epochs = 500;
    double var_floor = 1e-9;
    std::size_t runs = 5;
    std::uint64_t seed = 0;
    bool tune = false;
    bool no_timing = false;
    int threads = 0;
    std::string report_path;
    std::string predictions_prefix;

    eval::ExperimentConfig config() const {
        eval::ExperimentConfig cfg;
        cfg.clf = eval::parse_classifier(clf);
        cfg.knn_k = k;
        cfg.logreg = {l2, epochs, lr, seed};
        cfg.gnb_var_floor = var_floor;
        cfg.runs = runs;
        cfg.base_seed = seed;
        cfg.tune = tune;
        cfg.measure_time = !no_timing;
        cfg.predictions_prefix = predictions_prefix;
        return cfg;
    }

    void run() const {
        apply_threads(threads);
        if (labels.empty()) throw_data("--labels is required");
        if (embedding.empty() == dist.empty())
            throw_data("give exactly one of --embedding or --dist");
        auto cfg = config();

        eval::EvalReport report;
        if (!embedding.empty()) {
            if (cfg.clf == eval::ClassifierKind::ncd_knn)
                throw_data("--clf ncd-knn needs --dist, not --embedding");
            auto emb = io::read_embedding_csv(embedding);
            auto [y, class_names] = join_labels(emb.ids, labels);
            report = eval::evaluate_embedding(emb, y, class_names, cfg);
            apply_embedding_comments(report.config, embedding);
        } else {
            if (cfg.clf != eval::ClassifierKind::ncd_knn)
                throw_data("--dist evaluation supports --clf ncd-knn only; run embed first "
                           "for kernel-based classifiers");
            auto dmat = io::read_ncdm(dist);
            auto [y, class_names] = join_labels(dmat.ids, labels);
            report = eval::evaluate_ncd_knn(dmat, y, class_names, cfg);
        }
        std::fputs(eval::report_to_table(report).c_str(), stdout);
        if (!report_path.empty()) write_text(report_path, eval::report_to_json(report));
    }
};

// ------------------------------------------------------------- pipeline --

const std::map<std::string, std::string> kPipelineDefaults = {
    {"input", ""},       {"seq_col", "seq"},     {"label_col", "class"},
    {"id_col", ""},      {"fasta", ""},          {"labels", ""},
    {"normalize", "none"}, {"compressor", "gzip"}, {"level", "9"},
    {"concat", "direct"}, {"zero_diagonal", "false"}, {"mode", "row-feature"},
    {"sigma", "median"}, {"components", "64"},   {"center", "true"},
    {"clf", "knn"},      {"k", "5"},             {"l2", "0.0001"},
    {"lr", "0.1"},       {"epochs", "500"},      {"var_floor", "1e-9"},
    {"runs", "5"},       {"seed", "0"},          {"inductive", "false"},
    {"tune", "false"},   {"threads", "0"},       {"timing", "true"},
    {"outdir", "out"},
};

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open config file: " + path);
    std::map<std::string, std::string> cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string();
            std::size_t b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw_data("config line " + std::to_string(line_no) + " is not key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (kPipelineDefaults.find(key) == kPipelineDefaults.end())
            throw_data("unknown config key '" + key + "' at line " + std::to_string(line_no));
        cfg[key] = value;
    }
    return cfg;
}

struct PipelineCmd {
    std::string config_path;
    std::vector<std::pair<CLI::Option*, std::string>> override_opts;  // option -> key
    std::map<std::string, std::string> override_values;

    // One artifact-producing stage with content-hash caching.
    static bool stage_cached(const std::string& stage, const std::string& artifact,
                             const std::string& key) {
        const std::string key_path = artifact + ".key";
        if (fs::exists(artifact) && fs::exists(key_path) && slurp(key_path) == key) {
            std::printf("pipeline: %s: skipped (cached)\n", stage.c_str());
            return true;
        }
        return false;
    }

    void run() const {
        if (sodium_init() < 0) throw_io("libsodium initialization failed");
        std::map<std::string, std::string> cfg = kPipelineDefaults;
        if (!config_path.empty())
            for (auto& [k, v] : parse_config_file(config_path)) cfg[k] = v;
        for (auto& [opt, key] : override_opts)
            if (opt->count() > 0) cfg[key] = override_values.at(key);

        apply_threads(static_cast<int>(parse_int(cfg.at("threads"), "threads")));
        const std::string outdir = cfg.at("outdir");
        fs::create_directories(outdir);

        // --- stage 1: dataset ingestion + canonical dump -------------------
        InputOpts io;
        io.input = cfg.at("input");
        io.seq_col = cfg.at("seq_col");
        io.label_col = cfg.at("label_col");
        io.id_col = cfg.at("id_col");
        io.fasta = cfg.at("fasta");
        io.labels = cfg.at("labels");
        io.normalize = cfg.at("normalize");

        std::string raw_inputs;
        if (!io.fasta.empty())
            raw_inputs = slurp(io.fasta) + "\x1f" + slurp(io.labels);
        else if (!io.input.empty())
            raw_inputs = slurp(io.input);
        else
            throw_data("pipeline config needs input= or fasta= + labels=");

        const std::string dataset_tsv = outdir + "/dataset.tsv";
        std::string dataset_key =
            blake2b_hex(raw_inputs + "|" + io.normalize + "|" + io.seq_col + "|" +
                        io.label_col + "|" + io.id_col);
        if (!stage_cached("dataset", dataset_tsv, dataset_key)) {
            auto d = load_input(io);
            auto s = seqio::stats(d);
            std::printf("pipeline: dataset: %zu sequences, %zu classes, len %zu-%zu, mean %.2f\n",
                        s.count, s.class_count, s.min_len, s.max_len, s.mean_len);
            seqio::dump_tsv(d, dataset_tsv);
            write_text(dataset_tsv + ".key", dataset_key);
        }
        auto dataset = seqio::load_tsv(dataset_tsv, "seq", "label", "id");

        // --- stage 2: distance matrix --------------------------------------
        compress::CompressorSpec spec{compress::parse_backend(cfg.at("compressor")),
                                      static_cast<int>(parse_int(cfg.at("level"), "level"))};
        auto concat = ncd::parse_concat_mode(cfg.at("concat"));
        bool zero_diag = parse_bool(cfg.at("zero_diagonal"), "zero_diagonal");

        const std::string dist_path = outdir + "/dist.ncdm";
        std::string dist_key =
            blake2b_hex(slurp(dataset_tsv) + "|" + cfg.at("compressor") + "|" +
                        cfg.at("level") + "|" + cfg.at("concat") + "|" +
                        cfg.at("zero_diagonal"));
        if (!stage_cached("distmat", dist_path, dist_key)) {
            auto progress = [](std::size_t done, std::size_t total) {
                if (done % 1000 == 0 || done == total)
                    std::fprintf(stderr, "distmat: %zu/%zu rows\n", done, total);
            };
            auto dist = ncd::distance_matrix(dataset, spec, concat, progress);
            if (zero_diag) ncd::zero_diagonal(dist);
            if (dist.window_exceeded_pairs > 0)
                std::fprintf(stderr,
                             "warning: %zu ordered pairs exceed the 32 KiB DEFLATE window\n",
                             dist.window_exceeded_pairs);
            io::write_ncdm(dist, dist_path);
            write_text(dist_path + ".key", dist_key);
            std::printf("pipeline: distmat: computed (%s)\n", dist_path.c_str());
        }

        // --- experiment config shared by embed/eval ------------------------
        eval::ExperimentConfig ecfg;
        ecfg.spec = spec;
        ecfg.concat = concat;
        ecfg.zero_diagonal = false;  // already baked into the artifact
        ecfg.kmode = kernel::parse_kernel_mode(cfg.at("mode"));
        ecfg.sigma = parse_sigma(cfg.at("sigma"));
        ecfg.components = static_cast<std::size_t>(parse_int(cfg.at("components"), "components"));
        ecfg.center = parse_bool(cfg.at("center"), "center");
        ecfg.clf = eval::parse_classifier(cfg.at("clf"));
        ecfg.knn_k = static_cast<std::size_t>(parse_int(cfg.at("k"), "k"));
        ecfg.logreg = {parse_double(cfg.at("l2"), "l2"),
                       static_cast<std::size_t>(parse_int(cfg.at("epochs"), "epochs")),
                       parse_double(cfg.at("lr"), "lr"),
                       static_cast<std::uint64_t>(parse_int(cfg.at("seed"), "seed"))};
        ecfg.gnb_var_floor = parse_double(cfg.at("var_floor"), "var_floor");
        ecfg.runs = static_cast<std::size_t>(parse_int(cfg.at("runs"), "runs"));
        ecfg.base_seed = static_cast<std::uint64_t>(parse_int(cfg.at("seed"), "seed"));
        ecfg.inductive = parse_bool(cfg.at("inductive"), "inductive");
        ecfg.tune = parse_bool(cfg.at("tune"), "tune");
        ecfg.measure_time = parse_bool(cfg.at("timing"), "timing");

        const bool embedding_stage =
            !ecfg.inductive && ecfg.clf != eval::ClassifierKind::ncd_knn;

        // --- stage 3: embedding (transductive kernel classifiers only) -----
        const std::string emb_path = outdir + "/embedding.csv";
        if (embedding_stage) {
            std::string emb_key =
                blake2b_hex(slurp(dist_path) + "|" + cfg.at("mode") + "|" + cfg.at("sigma") +
                            "|" + cfg.at("components") + "|" + cfg.at("center"));
            if (!stage_cached("embed", emb_path, emb_key)) {
                auto dmat = io::read_ncdm(dist_path);
                auto dprime = dmat.symmetric ? dmat : ncd::symmetrize(dmat);
                double sigma2 = kernel::select_sigma2(dprime, ecfg.sigma, ecfg.kmode);
                auto kmat = kernel::gaussian_kernel(dprime, sigma2, ecfg.kmode);
                auto model =
                    kpca::kpca_fit(kmat, std::min(ecfg.components, dprime.n), ecfg.center);
                char buf[96];
                std::vector<std::string> comments;
                std::snprintf(buf, sizeof(buf), "sigma2=%.17g", sigma2);
                comments.emplace_back(buf);
                comments.emplace_back(std::string("mode=") +
                                      kernel::kernel_mode_name(ecfg.kmode));
                comments.emplace_back(std::string("centered=") + (ecfg.center ? "1" : "0"));
                io::write_embedding_csv(model.embedding, emb_path, comments);
                write_text(emb_path + ".key", emb_key);
                std::printf("pipeline: embed: computed (%s, sigma2=%.6g)\n", emb_path.c_str(),
                            sigma2);
            }
        }

        // --- stage 4: evaluation -------------------------------------------
        const std::string report_path = outdir + "/report.json";
        std::string clf_cfg = cfg.at("clf") + "|" + cfg.at("k") + "|" + cfg.at("l2") + "|" +
                              cfg.at("lr") + "|" + cfg.at("epochs") + "|" +
                              cfg.at("var_floor") + "|" + cfg.at("runs") + "|" +
                              cfg.at("seed") + "|" + cfg.at("tune") + "|" + cfg.at("timing") +
                              "|" + cfg.at("inductive") + "|" + cfg.at("mode") + "|" +
                              cfg.at("sigma") + "|" + cfg.at("components") + "|" +
                              cfg.at("center");
        std::string eval_input = embedding_stage ? slurp(emb_path) : slurp(dist_path);
        std::string eval_key = blake2b_hex(eval_input + "|" + slurp(dataset_tsv) + "|" + clf_cfg);
        if (!stage_cached("eval", report_path, eval_key)) {
            eval::EvalReport report;
            auto labels = dataset.label_ids();
            if (embedding_stage) {
                auto emb = io::read_embedding_csv(emb_path);
                report = eval::evaluate_embedding(emb, labels, dataset.classes, ecfg);
                report.config.source = "pipeline";
                report.config.compressor = cfg.at("compressor");
                report.config.level = static_cast<int>(parse_int(cfg.at("level"), "level"));
                report.config.concat = cfg.at("concat");
                report.config.zero_diagonal = zero_diag;
                report.config.sigma2_policy = ecfg.sigma.use_median ? "median" : "fixed";
                apply_embedding_comments(report.config, emb_path);
            } else {
                auto dmat = io::read_ncdm(dist_path);
                report = eval::run_experiment_on_matrix(std::move(dmat), labels,
                                                        dataset.classes, ecfg);
                // zeroing was baked into the cached artifact, echo the truth
                report.config.zero_diagonal = zero_diag;
            }
            write_text(report_path, eval::report_to_json(report));
            write_text(report_path + ".key", eval_key);
            std::printf("pipeline: eval: computed (%s)\n", report_path.c_str());
            std::fputs(eval::report_to_table(report).c_str(), stdout);
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compression-distance embeddings for sequence classification"};
    app.require_subcommand(1);

    StatsCmd stats_cmd;
    auto* stats = app.add_subcommand("stats", "dataset summary (count, classes, lengths)");
    add_input_flags(stats, stats_cmd.io);

    DumpCmd dump_cmd;
    auto* dataset = app.add_subcommand("dataset", "dataset utilities");
    dataset->require_subcommand(1);
    auto* dump = dataset->add_subcommand("dump", "write the canonical TSV form");
    add_input_flags(dump, dump_cmd.io);
    dump->add_option("--out", dump_cmd.out, "output TSV path")->required();

    DistmatCmd distmat_cmd;
    auto* distmat = app.add_subcommand("distmat", "pairwise NCD distance matrix");
    add_input_flags(distmat, distmat_cmd.io);
    distmat->add_option("--compressor", distmat_cmd.compressor, "gzip|bz2")
        ->check(CLI::IsMember({"gzip", "bz2"}));
    distmat->add_option("--level", distmat_cmd.level, "compression level 1..9")
        ->check(CLI::Range(1, 9));
    distmat->add_option("--concat", distmat_cmd.concat, "pair concatenation: direct|space")
        ->check(CLI::IsMember({"direct", "space"}));
    distmat->add_flag("--zero-diagonal", distmat_cmd.zero_diag, "force the diagonal to zero");
    distmat->add_option("--threads", distmat_cmd.threads, "worker threads (0 = all cores)");
    distmat->add_option("--out", distmat_cmd.out, "output .ncdm path")->required();
    distmat->add_option("--csv", distmat_cmd.csv, "also write a CSV copy");

    EmbedCmd embed_cmd;
    auto* embed = app.add_subcommand("embed", "kernel PCA embedding from a distance matrix");
    embed->add_option("--dist", embed_cmd.dist, "input .ncdm path")->required();
    embed->add_option("--mode", embed_cmd.mode, "kernel mode: row-feature|dist-sub")
        ->check(CLI::IsMember({"row-feature", "dist-sub"}));
    embed->add_option("--sigma", embed_cmd.sigma, "bandwidth sigma^2: median | <positive value>");
    embed->add_option("--components", embed_cmd.components, "embedding dimensions (default 64)");
    embed->add_flag("--no-center", embed_cmd.no_center, "skip kernel centering");
    embed->add_option("--threads", embed_cmd.threads, "worker threads (0 = all cores)");
    embed->add_option("--out", embed_cmd.out, "output embedding CSV")->required();
    embed->add_option("--binary", embed_cmd.binary, "also write the binary .ncde form");
    embed->add_option("--kernel", embed_cmd.kernel_out, "also write the kernel matrix (.ncdk)");

    EvalCmd eval_cmd;
    auto* evalc = app.add_subcommand("eval", "repeated stratified-split classifier evaluation");
    evalc->add_option("--embedding", eval_cmd.embedding, "embedding CSV (kernel classifiers)");
    evalc->add_option("--dist", eval_cmd.dist, ".ncdm matrix (for --clf ncd-knn)");
    evalc->add_option("--labels", eval_cmd.labels, "id,label CSV")->required();
    evalc->add_option("--clf", eval_cmd.clf, "classifier: knn|logreg|gnb|ncd-knn")
        ->check(CLI::IsMember({"knn", "logreg", "gnb", "ncd-knn"}));
    evalc->add_option("--k", eval_cmd.k, "kNN neighbor count");
    evalc->add_option("--l2", eval_cmd.l2, "logreg l2 penalty");
    evalc->add_option("--lr", eval_cmd.lr, "logreg learning rate");
    evalc->add_option("--epochs", eval_cmd.epochs, "logreg epochs");
    evalc->add_option("--var-floor", eval_cmd.var_floor, "GNB variance floor");
    evalc->add_option("--runs", eval_cmd.runs, "number of repeated splits");
    evalc->add_option("--seed", eval_cmd.seed, "base seed; run r uses seed+r");
    evalc->add_flag("--tune", eval_cmd.tune, "pick k on validation accuracy (kNN variants)");
    evalc->add_flag("--no-timing", eval_cmd.no_timing,
                    "report train_time_sec as 0 for byte-reproducible output");
    evalc->add_option("--threads", eval_cmd.threads, "worker threads (0 = all cores)");
    evalc->add_option("--report", eval_cmd.report_path, "write the JSON report here");
    evalc->add_option("--predictions", eval_cmd.predictions_prefix,
                      "write test predictions to <prefix>.run{r}.csv");

    PipelineCmd pipe_cmd;
    auto* pipe = app.add_subcommand("pipeline",
                                    "stats -> distmat -> embed -> eval with stage caching");
    pipe->add_option("--config", pipe_cmd.config_path, "flat key=value config file");
    // every config key is overridable by a flag of the same name
    for (const auto& [key, def] : kPipelineDefaults) {
        std::string flag = "--" + key;
        for (auto& ch : flag)
            if (ch == '_') ch = '-';
        auto* opt = pipe->add_option(flag, pipe_cmd.override_values[key],
                                     "override config key " + key + " (default: " +
                                         (def.empty() ? "<empty>" : def) + ")");
        pipe_cmd.override_opts.emplace_back(opt, key);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (stats->parsed()) stats_cmd.run();
        if (dataset->parsed() && dump->parsed()) dump_cmd.run();
        if (distmat->parsed()) distmat_cmd.run();
        if (embed->parsed()) embed_cmd.run();
        if (evalc->parsed()) eval_cmd.run();
        if (pipe->parsed()) pipe_cmd.run();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
