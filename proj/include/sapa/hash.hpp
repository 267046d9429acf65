#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <string_view>

// FNV-1a 64-bit hashing for reproducible configuration fingerprints. The
// hash is computed over exact byte patterns (doubles hashed by bit image),
// so identical inputs give identical fingerprints across runs.

namespace sapa {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t hash = kFnvOffset)
{
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= kFnvPrime;
    }
    return hash;
}

/// Incremental FNV-1a accumulator for mixed-type inputs.
class HashAccumulator {
public:
    HashAccumulator& add(std::string_view text)
    {
        hash_ = fnv1a64(text.data(), text.size(), hash_);
        return *this;
    }
    HashAccumulator& add(double value)
    {
        std::uint64_t bits = 0;
        static_assert(sizeof(bits) == sizeof(value));
        std::memcpy(&bits, &value, sizeof(bits));
        return add(bits);
    }
    HashAccumulator& add(std::uint64_t value)
    {
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) {
            bytes[i] = static_cast<unsigned char>(value >> (8 * i));
        }
        hash_ = fnv1a64(bytes, sizeof(bytes), hash_);
        return *this;
    }
    HashAccumulator& add(std::int64_t value)
    {
        return add(static_cast<std::uint64_t>(value));
    }

    template <typename Derived>
    HashAccumulator& add_matrix(const Derived& m)
    {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                add(static_cast<double>(m(i, j)));
            }
        }
        return *this;
    }

    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = kFnvOffset;
};

}  // namespace sapa
