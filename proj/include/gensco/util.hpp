#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gensco {

/// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

/// Digest of a list of fields; each field is length-prefixed so that
/// ("ab","c") and ("a","bc") never collide.
std::string digest_fields(std::span<const std::string_view> fields);

std::string trim(std::string_view s);
std::string ascii_lower(std::string_view s);

/// trim + ASCII case-fold + collapse runs of whitespace to a single space.
std::string normalize_whitespace_casefold(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one).
std::size_t utf8_length(std::string_view s);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

std::string read_file(const std::string& path);
/// Writes through a temporary sibling and renames over the target.
void write_file_atomic(const std::string& path, std::string_view content);

/// Portable seeded generator. std::uniform_int_distribution and std::shuffle
/// are implementation-defined, so seeded outputs would differ across
/// standard libraries; this one is fixed (splitmix64).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Folds a string into a seed, used to derive per-instance streams.
std::uint64_t seed_from(std::uint64_t base, std::string_view salt);

} // namespace gensco
