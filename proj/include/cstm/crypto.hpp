#pragma once

// Cryptographic building blocks shared by every CSTM entity.
//
// One hash (SHA-256) is used for every h(x) in the protocol, so region and
// rendezvous identifiers computed by the TPS and by a UE agree bit for bit.
// Keys for a level are produced by a counter-mode PRF (HMAC-SHA256 keyed
// with the level seed), which lets the TPS jump to any past slot directly.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cstm {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);
// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

// Fixed-width 32-byte value. The tag keeps digests, keys and seeds apart
// at the type level even though they share a representation.
template <class Tag>
struct Bytes32 {
    std::array<std::uint8_t, 32> bytes{};

    ByteView view() const { return bytes; }
    std::string hex() const { return to_hex(bytes); }

    friend bool operator==(const Bytes32&, const Bytes32&) = default;
    friend auto operator<=>(const Bytes32&, const Bytes32&) = default;
};

struct DigestTag {};
struct KeyTag {};
struct SeedTag {};

using Digest = Bytes32<DigestTag>;
using Key = Bytes32<KeyTag>;
using Seed = Bytes32<SeedTag>;

// r_K = h(K): the mailbox handle a region's messages are stored under.
struct RegionId {
    Digest digest;
    friend bool operator==(const RegionId&, const RegionId&) = default;
    friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

// rp_K = h(r_K): selects the rendezvous point responsible for a region.
struct RpId {
    Digest digest;
    friend bool operator==(const RpId&, const RpId&) = default;
};

inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;

using Nonce = std::array<std::uint8_t, kNonceSize>;
using AuthTag = std::array<std::uint8_t, kTagSize>;

struct Ciphertext {
    Nonce nonce{};
    Bytes body;
    AuthTag tag{};
    friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

Digest hash(ByteView data);
Digest hmac_sha256(ByteView key, ByteView message);

Key derive_key(const Seed& seed, std::uint64_t level, std::uint64_t slot_index);

RegionId region_id(const Key& key);
RpId rp_id(const RegionId& region);

// (h(r) read as a big-endian 256-bit integer) mod num_rps.
// Throws std::invalid_argument when num_rps == 0.
std::uint64_t rp_index(const RegionId& region, std::uint64_t num_rps);

// 96-bit nonces built from a 32-bit sender prefix and a 64-bit counter.
// Each sender owns one sequence; the counter never repeats, so nonces are
// unique per key without coordination. Throws std::overflow_error when
// the counter is exhausted.
class NonceSequence {
public:
    explicit NonceSequence(std::uint32_t sender_prefix = 0) : prefix_(sender_prefix) {}
    Nonce next();
    std::uint64_t issued() const { return counter_; }

private:
    std::uint32_t prefix_;
    std::uint64_t counter_ = 0;
};

// AES-256-GCM.
Ciphertext encrypt(const Key& key, ByteView plaintext, ByteView associated_data,
                   NonceSequence& nonces);
Ciphertext encrypt_with_nonce(const Key& key, const Nonce& nonce, ByteView plaintext,
                              ByteView associated_data);

// nullopt signals an authentication failure: wrong key, wrong associated
// data, or a modified ciphertext. The causes are not distinguished.
std::optional<Bytes> decrypt(const Key& key, const Ciphertext& ct, ByteView associated_data);

struct RegionIdHash {
    std::size_t operator()(const RegionId& r) const noexcept {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i) {
            h = (h << 8) | r.digest.bytes[i];
        }
        return h;
    }
};

}  // namespace cstm
