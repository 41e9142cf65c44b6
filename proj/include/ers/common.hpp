#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ers {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or a non-square/ragged input.
struct ShapeError : Error {
    using Error::Error;
};

// Math outside a primitive's domain (log of non-positive, normalizing a zero
// vector, non-finite result).
struct DomainError : Error {
    using Error::Error;
};

// Bad configuration text or an invalid field value; message names the key.
struct ConfigError : Error {
    using Error::Error;
};

// File problems: missing, truncated, corrupt, wrong version.
struct IoError : Error {
    using Error::Error;
};

// Training produced a non-finite loss or parameter.
struct DivergenceError : Error {
    using Error::Error;
};

// FNV-1a, 64-bit. Used for config/dataset/file digests.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed);

std::string digest_hex(std::uint64_t digest);
std::uint64_t parse_digest_hex(std::string_view hex);

// Canonical shortest text form of a double; round-trips bit-for-bit through
// strtod.
std::string format_double(double x);

}  // namespace ers
