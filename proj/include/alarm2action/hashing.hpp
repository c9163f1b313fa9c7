#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace a2a {

/// Incremental 64-bit FNV-1a. Used for vocabulary fingerprints, checkpoint
/// payload checksums and data-pipeline fingerprints; not cryptographic.
class Fnv1a {
public:
    Fnv1a& update(std::span<const std::byte> bytes);
    Fnv1a& update(std::string_view s);
    Fnv1a& update_u64(std::uint64_t v);
    Fnv1a& update_i64(std::int64_t v) { return update_u64(static_cast<std::uint64_t>(v)); }
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace a2a
