#include <doctest.h>

#include <array>
#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "ncdkit/errors.hpp"
#include "ncdkit/matrix_io.hpp"
#include "support/testgen.hpp"

using namespace ncdkit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ncdkit_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

ncd::DistanceMatrix sample_matrix() {
    SplitMix64 rng(55);
    ncd::DistanceMatrix d;
    d.n = 4;
    d.values.resize(16);
    for (double& v : d.values) v = rng.unit();
    d.symmetric = false;
    d.spec = {compress::Backend::bwt_bzip2, 7};
    d.concat_mode = ncd::ConcatMode::direct;
    d.ids = {"a", "b", "c", "d"};
    return d;
}

void rewrite_with_value(const std::string& src, const std::string& dst, double value) {
    auto d = io::read_ncdm(src);
    d.values[1] = value;
    // bypass the writer's type by patching raw bytes: value starts after the
    // 19-byte header plus one f64
    std::ifstream in(src, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto raw = std::bit_cast<std::array<char, 8>>(value);
    std::copy(raw.begin(), raw.end(), bytes.begin() + 19 + 8);
    std::ofstream out(dst, std::ios::binary);
    out << bytes;
}

}  // namespace

TEST_CASE("matrix_io: NCDM golden bytes for the two-sequence fixture") {
    // NCD values pinned from the reference gzip binary:
    // L(ACGT)=24, L(GGC)=23, L(ACGTACGT)=26, L(ACGTGGC)=27, L(GGCACGT)=27,
    // L(GGCGGC)=26 -> matrix [[1/12, 1/6], [1/6, 3/23]].
    seqio::Dataset d;
    d.classes = {"human", "viral"};
    d.records = {{"row0", "human", "ACGT"}, {"row1", "viral", "GGC"}};
    auto m = ncd::distance_matrix(d, {compress::Backend::deflate_gzip, 9});
    CHECK(m.at(0, 0) == 1.0 / 12.0);
    CHECK(m.at(0, 1) == 1.0 / 6.0);
    CHECK(m.at(1, 0) == 1.0 / 6.0);
    CHECK(m.at(1, 1) == 3.0 / 23.0);

    TempDir tmp;
    io::write_ncdm(m, tmp.at("fixture.ncdm"));
    CHECK(hex(read_bytes(tmp.at("fixture.ncdm"))) ==
          "4e43444d010000000200000000000000000009"
          "555555555555b53f555555555555c53f555555555555c53f0b59c84216b2c03f"
          "04000000726f773004000000726f7731");
}

TEST_CASE("matrix_io: NCDM round trip preserves everything") {
    TempDir tmp;
    auto d = sample_matrix();
    io::write_ncdm(d, tmp.at("m.ncdm"));
    auto r = io::read_ncdm(tmp.at("m.ncdm"));
    CHECK(r.n == d.n);
    CHECK(r.values == d.values);
    CHECK(r.symmetric == d.symmetric);
    CHECK(r.spec == d.spec);
    CHECK(r.ids == d.ids);

    // rewriting produces identical bytes
    io::write_ncdm(r, tmp.at("m2.ncdm"));
    CHECK(read_bytes(tmp.at("m.ncdm")) == read_bytes(tmp.at("m2.ncdm")));
}

TEST_CASE("matrix_io: NCDK round trip keeps sigma2 and mode") {
    TempDir tmp;
    kernel::KernelMatrix k;
    k.n = 2;
    k.values = {1.0, 0.25, 0.25, 1.0};
    k.sigma2 = 0.125;
    k.mode = kernel::KernelMode::distance_substitution;
    k.spec = {compress::Backend::deflate_gzip, 9};
    k.ids = {"x", "y"};
    io::write_ncdk(k, tmp.at("k.ncdk"));
    auto r = io::read_ncdk(tmp.at("k.ncdk"));
    CHECK(r.values == k.values);
    CHECK(r.sigma2 == k.sigma2);
    CHECK(r.mode == k.mode);
    CHECK(r.spec == k.spec);
    CHECK(r.ids == k.ids);
}

TEST_CASE("matrix_io: NCDE round trip keeps eigenvalues and coords") {
    TempDir tmp;
    kpca::Embedding e;
    e.n = 3;
    e.q = 2;
    e.coords = {1.5, -0.25, 0.0, 2.0, 1.0 / 3.0, -7.125};
    e.eigenvalues = {4.0, 0.5};
    e.ids = {"r0", "r1", "r2"};
    io::write_ncde(e, tmp.at("e.ncde"));
    auto r = io::read_ncde(tmp.at("e.ncde"));
    CHECK(r.n == e.n);
    CHECK(r.q == e.q);
    CHECK(r.coords == e.coords);
    CHECK(r.eigenvalues == e.eigenvalues);
    CHECK(r.ids == e.ids);
}

TEST_CASE("matrix_io: corrupt magic and truncation are format errors") {
    TempDir tmp;
    {
        std::ofstream out(tmp.at("bad.ncdm"), std::ios::binary);
        out << "XXXX garbage";
    }
    try {
        io::read_ncdm(tmp.at("bad.ncdm"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }

    auto d = sample_matrix();
    io::write_ncdm(d, tmp.at("m.ncdm"));
    auto bytes = read_bytes(tmp.at("m.ncdm"));
    {
        std::ofstream out(tmp.at("trunc.ncdm"), std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    try {
        io::read_ncdm(tmp.at("trunc.ncdm"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }

    // wrong version
    bytes[4] = 2;
    {
        std::ofstream out(tmp.at("ver.ncdm"), std::ios::binary);
        out << bytes;
    }
    try {
        io::read_ncdm(tmp.at("ver.ncdm"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }

    try {
        io::read_ncdm(tmp.at("missing.ncdm"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("matrix_io: out-of-range distance entries are rejected on read") {
    TempDir tmp;
    io::write_ncdm(sample_matrix(), tmp.at("m.ncdm"));
    for (double bad : {std::numeric_limits<double>::quiet_NaN(), -0.5, 9.0}) {
        rewrite_with_value(tmp.at("m.ncdm"), tmp.at("bad.ncdm"), bad);
        try {
            io::read_ncdm(tmp.at("bad.ncdm"));
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Format);
        }
    }
}

TEST_CASE("matrix_io: matrix csv carries ids and full precision") {
    TempDir tmp;
    io::write_matrix_csv({"a", "b"}, {0.0, 1.0 / 3.0, 0.25, 1.0}, 2, tmp.at("m.csv"));
    CHECK(read_bytes(tmp.at("m.csv")) ==
          "id,a,b\n"
          "a,0,0.33333333333333331\n"
          "b,0.25,1\n");
}

TEST_CASE("matrix_io: embedding csv round-trips at 17 significant digits") {
    TempDir tmp;
    SplitMix64 rng(91);
    kpca::Embedding e;
    e.n = 5;
    e.q = 3;
    for (std::size_t i = 0; i < e.n * e.q; ++i)
        e.coords.push_back((rng.unit() - 0.5) * 1e3);
    e.eigenvalues = {3.0, 2.0, 1.0};
    for (std::size_t i = 0; i < e.n; ++i) e.ids.push_back("s" + std::to_string(i));

    io::write_embedding_csv(e, tmp.at("e.csv"), {"sigma2=0.5", "mode=row-feature"});
    auto r = io::read_embedding_csv(tmp.at("e.csv"));
    CHECK(r.n == e.n);
    CHECK(r.q == e.q);
    CHECK(r.ids == e.ids);
    CHECK(r.coords == e.coords);  // bit-exact round trip
    CHECK(r.eigenvalues.empty());
}

TEST_CASE("matrix_io: malformed embedding csv is a format error") {
    TempDir tmp;
    {
        std::ofstream out(tmp.at("bad.csv"), std::ios::binary);
        out << "id,c0\nrow0\n";  // missing the value column
    }
    try {
        io::read_embedding_csv(tmp.at("bad.csv"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }
}
