#include "alarm2action/hashing.hpp"

namespace a2a {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

Fnv1a& Fnv1a::update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
        state_ ^= static_cast<std::uint64_t>(b);
        state_ *= kPrime;
    }
    return *this;
}

Fnv1a& Fnv1a::update(std::string_view s) {
    update_u64(s.size());
    return update(std::as_bytes(std::span(s.data(), s.size())));
}

Fnv1a& Fnv1a::update_u64(std::uint64_t v) {
    // Little-endian byte order regardless of host.
    for (int i = 0; i < 8; ++i) {
        state_ ^= (v >> (8 * i)) & 0xffU;
        state_ *= kPrime;
    }
    return *this;
}

}  // namespace a2a
