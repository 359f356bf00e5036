#include "ncdkit/compress.hpp"

#include <zlib.h>

#include <cstring>
#include <limits>
#include <string>

#include "ncdkit/errors.hpp"

// libbz2 ships only as a runtime shared object in some environments; the two
// one-shot entry points are declared here instead of #include <bzlib.h>.
extern "C" {
int BZ2_bzBuffToBuffCompress(char* dest, unsigned* destLen, char* source,
                             unsigned sourceLen, int blockSize100k,
                             int verbosity, int workFactor);
int BZ2_bzBuffToBuffDecompress(char* dest, unsigned* destLen, char* source,
                               unsigned sourceLen, int small, int verbosity);
}

namespace ncdkit::compress {

namespace {

constexpr int kBzOutbuffFull = -8;

void check_spec(const CompressorSpec& spec) {
    if (spec.level < 1 || spec.level > 9)
        throw_data("compressor level must be in 1..9, got " + std::to_string(spec.level));
}

// memLevel 9 gives the same 32K-symbol block buffer as the reference gzip
// binary, so block-split points (and therefore lengths) coincide with it.
constexpr int kMemLevel = 9;
constexpr int kGzipWindowBits = 15 + 16;  // 15-bit window, gzip wrapper

// One deflate stream per thread, reset between inputs. deflateReset is
// documented to behave exactly like a fresh deflateInit2, so outputs are
// identical to the one-shot path while skipping ~500 KB of allocation per
// call — that allocation dominates when compressing short sequences.
class GzipDeflater {
public:
    ~GzipDeflater() {
        if (initialized_) deflateEnd(&strm_);
    }

    // Compresses into `out` (grown as needed, never shrunk) and returns the
    // compressed byte count.
    std::size_t run(std::string_view data, int level, std::vector<std::uint8_t>& out) {
        if (!initialized_ || level != level_) {
            if (initialized_) deflateEnd(&strm_);
            std::memset(&strm_, 0, sizeof(strm_));
            if (deflateInit2(&strm_, level, Z_DEFLATED, kGzipWindowBits, kMemLevel,
                             Z_DEFAULT_STRATEGY) != Z_OK)
                throw_io("deflateInit2 failed");
            initialized_ = true;
            level_ = level;
        } else {
            deflateReset(&strm_);
        }

        // Pinned header: MTIME=0, OS=3 (the values `gzip -n` writes), no
        // name, comment or extra field. Output is reproducible bit-for-bit.
        std::memset(&header_, 0, sizeof(header_));
        header_.os = 3;
        deflateSetHeader(&strm_, &header_);

        uLong bound = deflateBound(&strm_, static_cast<uLong>(data.size())) + 32;
        if (out.size() < bound) out.resize(bound);
        strm_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
        strm_.avail_in = static_cast<uInt>(data.size());
        strm_.next_out = out.data();
        strm_.avail_out = static_cast<uInt>(out.size());
        int rc = deflate(&strm_, Z_FINISH);
        if (rc != Z_STREAM_END) throw_io("deflate failed, rc=" + std::to_string(rc));
        return strm_.total_out;
    }

private:
    z_stream strm_{};
    gz_header header_{};
    bool initialized_ = false;
    int level_ = -1;
};

std::vector<std::uint8_t> gzip_compress(std::string_view data, int level) {
    thread_local GzipDeflater deflater;
    std::vector<std::uint8_t> out;
    out.resize(deflater.run(data, level, out));
    return out;
}

std::size_t gzip_compressed_len(std::string_view data, int level) {
    thread_local GzipDeflater deflater;
    thread_local std::vector<std::uint8_t> scratch;
    return deflater.run(data, level, scratch);
}

std::vector<std::uint8_t> gzip_decompress(const std::vector<std::uint8_t>& payload) {
    z_stream strm{};
    if (inflateInit2(&strm, kGzipWindowBits) != Z_OK) throw_io("inflateInit2 failed");

    std::vector<std::uint8_t> out(payload.size() * 4 + 64);
    strm.next_in = const_cast<Bytef*>(payload.data());
    strm.avail_in = static_cast<uInt>(payload.size());
    std::size_t written = 0;
    for (;;) {
        strm.next_out = out.data() + written;
        strm.avail_out = static_cast<uInt>(out.size() - written);
        int rc = inflate(&strm, Z_NO_FLUSH);
        written = out.size() - strm.avail_out;
        if (rc == Z_STREAM_END) break;
        if (rc == Z_OK) {
            if (strm.avail_out == 0) out.resize(out.size() * 2 + 64);
            continue;
        }
        inflateEnd(&strm);
        if (rc == Z_BUF_ERROR && strm.avail_in == 0) throw_format("truncated gzip stream");
        throw_format("corrupt gzip stream, rc=" + std::to_string(rc));
    }
    inflateEnd(&strm);
    out.resize(written);
    return out;
}

std::vector<std::uint8_t> bzip2_compress(std::string_view data, int level) {
    if (data.size() > std::numeric_limits<unsigned>::max() - 600)
        throw_data("input too large for bzip2 backend");
    unsigned dest_len = static_cast<unsigned>(data.size() + data.size() / 100 + 600);
    std::vector<std::uint8_t> out(dest_len);
    int rc = BZ2_bzBuffToBuffCompress(reinterpret_cast<char*>(out.data()), &dest_len,
                                      const_cast<char*>(data.data()),
                                      static_cast<unsigned>(data.size()), level,
                                      /*verbosity=*/0, /*workFactor=*/0);
    if (rc != 0) throw_io("bzip2 compression failed, rc=" + std::to_string(rc));
    out.resize(dest_len);
    return out;
}

std::vector<std::uint8_t> bzip2_decompress(const std::vector<std::uint8_t>& payload) {
    if (payload.size() > std::numeric_limits<unsigned>::max())
        throw_data("input too large for bzip2 backend");
    std::size_t cap = payload.size() * 4 + 1024;
    for (;;) {
        std::vector<std::uint8_t> out(cap);
        unsigned dest_len = static_cast<unsigned>(out.size());
        int rc = BZ2_bzBuffToBuffDecompress(
            reinterpret_cast<char*>(out.data()), &dest_len,
            const_cast<char*>(reinterpret_cast<const char*>(payload.data())),
            static_cast<unsigned>(payload.size()), /*small=*/0, /*verbosity=*/0);
        if (rc == 0) {
            out.resize(dest_len);
            return out;
        }
        if (rc == kBzOutbuffFull) {
            cap = cap * 2 + 1024;
            continue;
        }
        throw_format("corrupt bzip2 stream, rc=" + std::to_string(rc));
    }
}

}  // namespace

const char* backend_name(Backend b) {
    return b == Backend::deflate_gzip ? "gzip" : "bz2";
}

Backend parse_backend(std::string_view name) {
    if (name == "gzip") return Backend::deflate_gzip;
    if (name == "bz2" || name == "bzip2") return Backend::bwt_bzip2;
    throw_data("unknown compressor backend: " + std::string(name));
}

std::vector<std::uint8_t> compress(const CompressorSpec& spec, std::string_view data) {
    check_spec(spec);
    return spec.backend == Backend::deflate_gzip ? gzip_compress(data, spec.level)
                                                 : bzip2_compress(data, spec.level);
}

std::vector<std::uint8_t> decompress(const CompressorSpec& spec,
                                     const std::vector<std::uint8_t>& payload) {
    check_spec(spec);
    return spec.backend == Backend::deflate_gzip ? gzip_decompress(payload)
                                                 : bzip2_decompress(payload);
}

std::size_t compressed_len(const CompressorSpec& spec, std::string_view data) {
    check_spec(spec);
    if (spec.backend == Backend::deflate_gzip)
        return gzip_compressed_len(data, spec.level);
    return bzip2_compress(data, spec.level).size();
}

long long conditional_bytes(std::size_t l_x, std::size_t l_xy) {
    return static_cast<long long>(l_xy) - static_cast<long long>(l_x);
}

}  // namespace ncdkit::compress
