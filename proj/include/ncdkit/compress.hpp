#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ncdkit::compress {

enum class Backend : std::uint8_t {
    deflate_gzip = 0,  // LZ77 + Huffman, RFC 1952 container
    bwt_bzip2 = 1,     // Burrows-Wheeler + MTF + Huffman, bzip2 container
};

struct CompressorSpec {
    Backend backend = Backend::deflate_gzip;
    int level = 9;  // 1..9

    bool operator==(const CompressorSpec&) const = default;
};

// DEFLATE back-reference window. Concatenations longer than this stop
// benefiting from cross-sequence matches under the gzip backend.
inline constexpr std::size_t kDeflateWindowBytes = 32768;

const char* backend_name(Backend b);
Backend parse_backend(std::string_view name);  // "gzip" | "bz2"

/// Compress `data` into the backend's standard container format.
/// Deterministic: the gzip header timestamp is pinned, so identical
/// (spec, data) always yields identical bytes across runs and platforms.
std::vector<std::uint8_t> compress(const CompressorSpec& spec, std::string_view data);

/// Inverse of compress(); accepts any stream in the backend's container format.
std::vector<std::uint8_t> decompress(const CompressorSpec& spec,
                                     const std::vector<std::uint8_t>& payload);

/// Byte length of compress(spec, data), container headers and trailers
/// included — the L_s measurement.
std::size_t compressed_len(const CompressorSpec& spec, std::string_view data);

/// Bytes needed to encode y given x: L_xy - L_x. May be <= 0 in degenerate
/// cases; returned as-is.
long long conditional_bytes(std::size_t l_x, std::size_t l_xy);

}  // namespace ncdkit::compress
