#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace seqwm {

using ActionId = std::string;

/// 256-bit secret shared by encoder and detector. Two keys compare equal iff
/// their bytes are equal.
struct SecretKey {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const SecretKey&) const = default;

    static SecretKey from_hex(const std::string& hex);
    std::string to_hex() const;
};

/// Canonical seed payload: either (window ‖ channel) or a round index.
/// The encoding is injective across both families — window payloads never
/// start with 0x1E, round payloads always do.
struct SeedContext {
    std::string payload;

    bool operator==(const SeedContext&) const = default;
};

// Separator bytes of the context encoding. Actions containing either byte
// are rejected rather than escaped, keeping the encoding bit-exact.
inline constexpr char kUnitSep = '\x1f';    // between window actions
inline constexpr char kRecordSep = '\x1e';  // before channel / round index

/// payload = a_1 ‖ 0x1F ‖ … ‖ a_w ‖ 0x1E ‖ decimal(channel).
/// Throws InvalidParameter on an empty window or an action containing a
/// separator byte.
SeedContext encode_context(const std::vector<ActionId>& window, unsigned channel);

/// payload = 0x1E ‖ decimal(t), t ≥ 1. The leading separator keeps round
/// payloads disjoint from every window payload.
SeedContext encode_round(std::uint64_t t);

/// Round seed with a channel suffix: 0x1E ‖ decimal(t) ‖ 0x1E ‖ decimal(j).
SeedContext encode_round_channel(std::uint64_t t, unsigned channel);

/// HMAC-SHA-256(key, payload ‖ 0x00 ‖ big-endian-32(counter)). Deterministic
/// across runs and platforms; counter < 2^32.
std::array<std::uint8_t, 32> keystream_block(const SecretKey& key, const SeedContext& ctx,
                                             std::uint32_t counter);

/// First n_eff indices of a Fisher-Yates shuffle of [0, n_candidates), where
/// every shuffle draw is an unbiased index obtained by rejection sampling
/// over consecutive 8-byte big-endian chunks of the keystream (blocks read
/// from counter 0 upward; a chunk v for range r is accepted iff
/// v < floor(2^64 / r) * r, yielding v mod r).
std::vector<std::uint32_t> sample_subset_indices(const SecretKey& key, const SeedContext& ctx,
                                                 std::uint32_t n_candidates, std::uint32_t n_eff);

/// Keyed pseudorandom n_eff-subset of `candidates` (taken in their given
/// order). Pure function of (key, ctx, candidate order, n_eff).
std::vector<ActionId> sample_subset(const SecretKey& key, const SeedContext& ctx,
                                    const std::vector<ActionId>& candidates, std::uint32_t n_eff);

namespace detail {

// HMAC-SHA-256 with the key pads pre-absorbed once per key; scoring reuses
// one key across tens of thousands of short messages, so the cached states
// cut two of the four compression calls per MAC.
class HmacSha256 {
public:
    explicit HmacSha256(const SecretKey& key);

    std::array<std::uint8_t, 32> mac(const std::uint8_t* data, std::size_t len) const;

private:
    std::array<std::uint32_t, 8> inner_state_;
    std::array<std::uint32_t, 8> outer_state_;
};

}  // namespace detail

}  // namespace seqwm
