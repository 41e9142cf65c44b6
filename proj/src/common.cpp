#include "ers/common.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace ers {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(text.data(), text.size());
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
    return fnv1a64(text.data(), text.size(), seed);
}

std::string digest_hex(std::uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(digest));
    return std::string(buf);
}

std::uint64_t parse_digest_hex(std::string_view hex) {
    if (hex.size() != 16) throw IoError("digest must be 16 hex characters");
    char buf[17];
    hex.copy(buf, 16);
    buf[16] = '\0';
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(buf, &end, 16);
    if (end != buf + 16) throw IoError("invalid digest hex: " + std::string(hex));
    return v;
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace ers
