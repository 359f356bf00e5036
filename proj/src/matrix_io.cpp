#include "ncdkit/matrix_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

#include "ncdkit/errors.hpp"

namespace ncdkit::io {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw_io("cannot write file: " + path);
    }

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(b, 4);
    }
    void u64(std::uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(b, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void magic(const char* m) { out_.write(m, 4); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void f64_array(const std::vector<double>& v) {
        if constexpr (std::endian::native == std::endian::little) {
            out_.write(reinterpret_cast<const char*>(v.data()),
                       static_cast<std::streamsize>(v.size() * sizeof(double)));
        } else {
            for (double x : v) f64(x);
        }
    }
    void finish() {
        out_.flush();
        if (!out_) throw_io("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw_io("cannot open file: " + path);
    }

    std::uint8_t u8() {
        int c = in_.get();
        if (c == EOF) fail();
        return static_cast<std::uint8_t>(c);
    }
    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void expect_magic(const char* m) {
        char got[4];
        read(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw_format("bad magic in " + path_ + " (expected " + m + ")");
    }
    void expect_version() {
        std::uint32_t v = u32();
        if (v != kFormatVersion)
            throw_format("unsupported format version " + std::to_string(v) + " in " + path_);
    }
    std::string str() {
        std::uint32_t len = u32();
        if (len > (1u << 20)) throw_format("absurd id length in " + path_);
        std::string s(len, '\0');
        read(s.data(), len);
        return s;
    }
    void f64_array(std::vector<double>& v, std::size_t count) {
        v.resize(count);
        if constexpr (std::endian::native == std::endian::little) {
            read(reinterpret_cast<char*>(v.data()), count * sizeof(double));
        } else {
            for (std::size_t i = 0; i < count; ++i) v[i] = f64();
        }
    }

private:
    void read(void* dst, std::size_t bytes) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
        if (static_cast<std::size_t>(in_.gcount()) != bytes) fail();
    }
    [[noreturn]] void fail() { throw_format("truncated or corrupt file: " + path_); }

    std::string path_;
    std::ifstream in_;
};

void write_ids(Writer& w, const std::vector<std::string>& ids) {
    for (const auto& id : ids) w.str(id);
}

std::vector<std::string> read_ids(Reader& r, std::size_t n) {
    std::vector<std::string> ids(n);
    for (auto& id : ids) id = r.str();
    return ids;
}

std::size_t checked_n(std::uint64_t n) {
    if (n == 0 || n > (1u << 20)) throw_format("unreasonable matrix dimension");
    return static_cast<std::size_t>(n);
}

}  // namespace

void write_ncdm(const ncd::DistanceMatrix& d, const std::string& path) {
    Writer w(path);
    w.magic("NCDM");
    w.u32(kFormatVersion);
    w.u64(d.n);
    w.u8(d.symmetric ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(d.spec.backend));
    w.u8(static_cast<std::uint8_t>(d.spec.level));
    w.f64_array(d.values);
    write_ids(w, d.ids);
    w.finish();
}

ncd::DistanceMatrix read_ncdm(const std::string& path) {
    Reader r(path);
    r.expect_magic("NCDM");
    r.expect_version();
    ncd::DistanceMatrix d;
    d.n = checked_n(r.u64());
    d.symmetric = r.u8() != 0;
    std::uint8_t tag = r.u8();
    if (tag > 1) throw_format("unknown compressor tag in " + path);
    d.spec.backend = static_cast<compress::Backend>(tag);
    d.spec.level = r.u8();
    if (d.spec.level < 1 || d.spec.level > 9)
        throw_format("compressor level out of range in " + path);
    r.f64_array(d.values, d.n * d.n);
    for (double v : d.values)
        if (!(v >= 0.0 && v <= 1.5))
            throw_format("distance entry outside [0, 1.5] in " + path);
    d.ids = read_ids(r, d.n);
    return d;
}

void write_ncdk(const kernel::KernelMatrix& k, const std::string& path) {
    Writer w(path);
    w.magic("NCDK");
    w.u32(kFormatVersion);
    w.u64(k.n);
    w.u8(1);  // kernel matrices are symmetric by construction
    w.u8(static_cast<std::uint8_t>(k.spec.backend));
    w.u8(static_cast<std::uint8_t>(k.spec.level));
    w.f64(k.sigma2);
    w.u8(static_cast<std::uint8_t>(k.mode));
    w.f64_array(k.values);
    write_ids(w, k.ids);
    w.finish();
}

kernel::KernelMatrix read_ncdk(const std::string& path) {
    Reader r(path);
    r.expect_magic("NCDK");
    r.expect_version();
    kernel::KernelMatrix k;
    k.n = checked_n(r.u64());
    r.u8();  // symmetric flag, always 1
    k.spec.backend = static_cast<compress::Backend>(r.u8());
    k.spec.level = r.u8();
    k.sigma2 = r.f64();
    k.mode = static_cast<kernel::KernelMode>(r.u8());
    r.f64_array(k.values, k.n * k.n);
    k.ids = read_ids(r, k.n);
    return k;
}

void write_ncde(const kpca::Embedding& e, const std::string& path) {
    Writer w(path);
    w.magic("NCDE");
    w.u32(kFormatVersion);
    w.u64(e.n);
    w.u64(e.q);
    for (double v : e.eigenvalues) w.f64(v);
    w.f64_array(e.coords);
    write_ids(w, e.ids);
    w.finish();
}

kpca::Embedding read_ncde(const std::string& path) {
    Reader r(path);
    r.expect_magic("NCDE");
    r.expect_version();
    kpca::Embedding e;
    e.n = checked_n(r.u64());
    std::uint64_t q = r.u64();
    if (q == 0 || q > e.n) throw_format("corrupt component count in " + path);
    e.q = static_cast<std::size_t>(q);
    e.eigenvalues.resize(e.q);
    for (double& v : e.eigenvalues) v = r.f64();
    r.f64_array(e.coords, e.n * e.q);
    e.ids = read_ids(r, e.n);
    return e;
}

void write_matrix_csv(const std::vector<std::string>& ids,
                      const std::vector<double>& values, std::size_t n,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write file: " + path);
    out << "id";
    for (const auto& id : ids) out << ',' << id;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < n; ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[i * n + j]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw_io("write failed: " + path);
}

void write_embedding_csv(const kpca::Embedding& e, const std::string& path,
                         const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write file: " + path);
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "id";
    for (std::size_t k = 0; k < e.q; ++k) out << ",c" << k;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < e.n; ++i) {
        out << e.ids[i];
        for (std::size_t k = 0; k < e.q; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", e.coords[i * e.q + k]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw_io("write failed: " + path);
}

void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<std::vector<double>>& probs,
                           const std::vector<std::string>& class_names,
                           const std::string& path) {
    if (ids.size() != probs.size()) throw_data("prediction row count does not match ids");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write file: " + path);
    out << "id,pred_label";
    for (const auto& name : class_names) out << ",p_" << name;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs[i].size(); ++c)
            if (probs[i][c] > probs[i][best]) best = c;
        out << ids[i] << ',' << class_names[best];
        for (double p : probs[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g", p);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw_io("write failed: " + path);
}

kpca::Embedding read_embedding_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open file: " + path);

    std::string line;
    bool have_header = false;
    std::size_t q = 0;
    kpca::Embedding e;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            std::size_t cols = 1 + static_cast<std::size_t>(
                                       std::count(line.begin(), line.end(), ','));
            if (cols < 2 || line.rfind("id,", 0) != 0)
                throw_format("embedding csv header malformed in " + path);
            q = cols - 1;
            have_header = true;
            continue;
        }
        std::size_t pos = line.find(',');
        if (pos == std::string::npos)
            throw_format("embedding csv row " + std::to_string(line_no) + " malformed");
        e.ids.push_back(line.substr(0, pos));
        const char* p = line.c_str() + pos;
        for (std::size_t k = 0; k < q; ++k) {
            if (*p != ',')
                throw_format("embedding csv row " + std::to_string(line_no) +
                             " has too few columns");
            ++p;
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p)
                throw_format("embedding csv row " + std::to_string(line_no) + " has a bad number");
            e.coords.push_back(v);
            p = end;
        }
        if (*p != '\0')
            throw_format("embedding csv row " + std::to_string(line_no) + " has extra columns");
    }
    if (!have_header) throw_format("embedding csv has no header: " + path);
    e.q = q;
    e.n = e.ids.size();
    if (e.n == 0) throw_format("embedding csv has no data rows: " + path);
    return e;
}

}  // namespace ncdkit::io
