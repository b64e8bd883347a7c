#include "seqwm/keyed_subset.hpp"

#include <cstring>
#include <utility>

#include "seqwm/errors.hpp"

namespace seqwm {
namespace {

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4). Kept self-contained so the keyed-subset primitive has
// no library dependency and the pad-cached HMAC below can snapshot the
// compression state. Verified against the frozen vectors in tests/data/.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kInit[8] = {
    0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
};

constexpr std::uint32_t kRound[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

void compress(std::array<std::uint32_t, 8>& state, const std::uint8_t block[64]) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
        w[i] = (std::uint32_t(block[4 * i]) << 24) | (std::uint32_t(block[4 * i + 1]) << 16) |
               (std::uint32_t(block[4 * i + 2]) << 8) | std::uint32_t(block[4 * i + 3]);
    }
    for (int i = 16; i < 64; ++i) {
        const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
        const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
    std::uint32_t e = state[4], f = state[5], g = state[6], h = state[7];
    for (int i = 0; i < 64; ++i) {
        const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        const std::uint32_t ch = (e & f) ^ (~e & g);
        const std::uint32_t t1 = h + s1 + ch + kRound[i] + w[i];
        const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        const std::uint32_t t2 = s0 + maj;
        h = g; g = f; f = e; e = d + t1;
        d = c; c = b; b = a; a = t1 + t2;
    }
    state[0] += a; state[1] += b; state[2] += c; state[3] += d;
    state[4] += e; state[5] += f; state[6] += g; state[7] += h;
}

// Finish a SHA-256 computation from a snapshot: `state` has already absorbed
// `absorbed` whole blocks; `data` is the remaining message tail.
void finish(std::array<std::uint32_t, 8> state, std::size_t absorbed, const std::uint8_t* data,
            std::size_t len, std::uint8_t out[32]) {
    while (len >= 64) {
        compress(state, data);
        data += 64;
        len -= 64;
        ++absorbed;
    }
    std::uint8_t tail[128] = {};
    std::memcpy(tail, data, len);
    tail[len] = 0x80;
    const std::size_t pad = (len + 9 <= 64) ? 64 : 128;
    const std::uint64_t bits = (absorbed * 64 + len) * 8;
    for (int i = 0; i < 8; ++i) tail[pad - 1 - i] = std::uint8_t(bits >> (8 * i));
    compress(state, tail);
    if (pad == 128) compress(state, tail + 64);
    for (int i = 0; i < 8; ++i) {
        out[4 * i] = std::uint8_t(state[i] >> 24);
        out[4 * i + 1] = std::uint8_t(state[i] >> 16);
        out[4 * i + 2] = std::uint8_t(state[i] >> 8);
        out[4 * i + 3] = std::uint8_t(state[i]);
    }
}

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void append_decimal(std::string& out, std::uint64_t v) {
    out += std::to_string(v);
}

}  // namespace

namespace detail {

HmacSha256::HmacSha256(const SecretKey& key) {
    std::uint8_t pad[64];
    std::memcpy(inner_state_.data(), kInit, sizeof(kInit));
    std::memcpy(outer_state_.data(), kInit, sizeof(kInit));
    // 32-byte key never exceeds the block size, so no key hashing step.
    for (int i = 0; i < 64; ++i) pad[i] = (i < 32 ? key.bytes[i] : 0) ^ 0x36;
    compress(inner_state_, pad);
    for (int i = 0; i < 64; ++i) pad[i] = (i < 32 ? key.bytes[i] : 0) ^ 0x5c;
    compress(outer_state_, pad);
}

std::array<std::uint8_t, 32> HmacSha256::mac(const std::uint8_t* data, std::size_t len) const {
    std::uint8_t inner_digest[32];
    finish(inner_state_, 1, data, len, inner_digest);
    std::array<std::uint8_t, 32> out;
    finish(outer_state_, 1, inner_digest, 32, out.data());
    return out;
}

}  // namespace detail

SecretKey SecretKey::from_hex(const std::string& hex) {
    if (hex.size() != 64)
        throw ParseError(ParseError::Kind::KeyFormat, 0, "key must be 64 hex characters");
    SecretKey key;
    for (std::size_t i = 0; i < 32; ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw ParseError(ParseError::Kind::KeyFormat, 0, "key contains a non-hex character");
        key.bytes[i] = std::uint8_t(hi << 4 | lo);
    }
    return key;
}

std::string SecretKey::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : bytes) {
        out += digits[b >> 4];
        out += digits[b & 0xf];
    }
    return out;
}

SeedContext encode_context(const std::vector<ActionId>& window, unsigned channel) {
    if (window.empty()) throw InvalidParameter("encode_context: window must be non-empty");
    SeedContext ctx;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const ActionId& a = window[i];
        if (a.find(kUnitSep) != std::string::npos || a.find(kRecordSep) != std::string::npos)
            throw InvalidParameter("encode_context: action contains a separator byte: " + a);
        if (i > 0) ctx.payload += kUnitSep;
        ctx.payload += a;
    }
    ctx.payload += kRecordSep;
    append_decimal(ctx.payload, channel);
    return ctx;
}

SeedContext encode_round(std::uint64_t t) {
    if (t < 1) throw InvalidParameter("encode_round: round index must be >= 1");
    SeedContext ctx;
    ctx.payload += kRecordSep;
    append_decimal(ctx.payload, t);
    return ctx;
}

SeedContext encode_round_channel(std::uint64_t t, unsigned channel) {
    SeedContext ctx = encode_round(t);
    ctx.payload += kRecordSep;
    append_decimal(ctx.payload, channel);
    return ctx;
}

std::array<std::uint8_t, 32> keystream_block(const SecretKey& key, const SeedContext& ctx,
                                             std::uint32_t counter) {
    std::string msg = ctx.payload;
    msg += '\0';
    msg += char(counter >> 24);
    msg += char(counter >> 16 & 0xff);
    msg += char(counter >> 8 & 0xff);
    msg += char(counter & 0xff);
    return detail::HmacSha256(key).mac(reinterpret_cast<const std::uint8_t*>(msg.data()),
                                       msg.size());
}

namespace {

// Sequential 8-byte big-endian chunks of the keystream for one context.
class ChunkStream {
public:
    ChunkStream(const detail::HmacSha256& hmac, const SeedContext& ctx) : hmac_(hmac) {
        msg_ = ctx.payload;
        msg_ += '\0';
        msg_.append(4, '\0');  // counter slot, patched per block
    }

    std::uint64_t next() {
        if (pos_ == 4) {
            const std::size_t n = msg_.size();
            msg_[n - 4] = char(counter_ >> 24);
            msg_[n - 3] = char(counter_ >> 16 & 0xff);
            msg_[n - 2] = char(counter_ >> 8 & 0xff);
            msg_[n - 1] = char(counter_ & 0xff);
            block_ = hmac_.mac(reinterpret_cast<const std::uint8_t*>(msg_.data()), msg_.size());
            ++counter_;
            pos_ = 0;
        }
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | block_[8 * pos_ + i];
        ++pos_;
        return v;
    }

private:
    const detail::HmacSha256& hmac_;
    std::string msg_;
    std::array<std::uint8_t, 32> block_{};
    std::uint32_t counter_ = 0;
    int pos_ = 4;
};

}  // namespace

std::vector<std::uint32_t> sample_subset_indices(const SecretKey& key, const SeedContext& ctx,
                                                 std::uint32_t n_candidates, std::uint32_t n_eff) {
    if (n_eff < 1 || n_eff > n_candidates)
        throw InvalidParameter("sample_subset: n_eff must be in [1, |candidates|]");
    std::vector<std::uint32_t> arr(n_candidates);
    for (std::uint32_t i = 0; i < n_candidates; ++i) arr[i] = i;
    const detail::HmacSha256 hmac(key);
    ChunkStream chunks(hmac, ctx);
    for (std::uint32_t i = 0; i < n_eff; ++i) {
        const std::uint64_t r = n_candidates - i;
        const std::uint64_t mod = (~std::uint64_t{0} % r + 1) % r;  // 2^64 mod r
        std::uint64_t v = chunks.next();
        while (mod != 0 && v >= std::uint64_t{0} - mod) v = chunks.next();
        const std::uint32_t j = i + std::uint32_t(v % r);
        std::swap(arr[i], arr[j]);
    }
    arr.resize(n_eff);
    return arr;
}

std::vector<ActionId> sample_subset(const SecretKey& key, const SeedContext& ctx,
                                    const std::vector<ActionId>& candidates, std::uint32_t n_eff) {
    const auto idx = sample_subset_indices(key, ctx, std::uint32_t(candidates.size()), n_eff);
    std::vector<ActionId> out;
    out.reserve(idx.size());
    for (std::uint32_t i : idx) out.push_back(candidates[i]);
    return out;
}

}  // namespace seqwm
