#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace finerfact {

// Base error for every module; subcommands map these to exit status 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (names the offending line when known).
struct LoadError : Error {
    using Error::Error;
};

// Dangling cross-reference between records.
struct LinkError : Error {
    using Error::Error;
};

// Invalid or contradictory configuration.
struct ConfigError : Error {
    using Error::Error;
};

// A pipeline stage cannot produce a usable artifact (empty layer, no topics, ...).
struct ConstructionError : Error {
    using Error::Error;
};

// Numeric failure (singular solve, non-finite loss).
struct NumericError : Error {
    using Error::Error;
};

using Rng = std::mt19937_64;

// FNV-1a over bytes; used for config hashes and golden digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(s.data(), s.size());
}

std::string to_hex(std::uint64_t v);

}  // namespace finerfact
