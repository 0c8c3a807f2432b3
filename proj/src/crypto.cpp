#include "cstm/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <memory>
#include <stdexcept>

namespace cstm {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void put_be64(std::uint8_t* out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
}

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

CipherCtx new_cipher_ctx() {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    return ctx;
}

// OpenSSL wants a non-null pointer even for zero-length buffers.
const unsigned char* data_or_empty(ByteView v) {
    static const unsigned char empty = 0;
    return v.empty() ? &empty : v.data();
}

}  // namespace

std::string to_hex(ByteView bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex character");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Digest hash(ByteView data) {
    Digest d;
    SHA256(data_or_empty(data), data.size(), d.bytes.data());
    return d;
}

Digest hmac_sha256(ByteView key, ByteView message) {
    Digest out;
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), data_or_empty(key), static_cast<int>(key.size()),
             data_or_empty(message), message.size(), out.bytes.data(), &len) == nullptr ||
        len != out.bytes.size()) {
        throw std::runtime_error("HMAC-SHA256 failed");
    }
    return out;
}

Key derive_key(const Seed& seed, std::uint64_t level, std::uint64_t slot_index) {
    std::array<std::uint8_t, 16> block{};
    put_be64(block.data(), level);
    put_be64(block.data() + 8, slot_index);
    return Key{hmac_sha256(seed.view(), block).bytes};
}

RegionId region_id(const Key& key) { return RegionId{hash(key.view())}; }

RpId rp_id(const RegionId& region) { return RpId{hash(region.digest.view())}; }

std::uint64_t rp_index(const RegionId& region, std::uint64_t num_rps) {
    if (num_rps == 0) throw std::invalid_argument("num_rps must be at least 1");
    const RpId id = rp_id(region);
    __extension__ using u128 = unsigned __int128;
    u128 rem = 0;
    for (std::uint8_t b : id.digest.bytes) {
        rem = ((rem << 8) | b) % num_rps;
    }
    return static_cast<std::uint64_t>(rem);
}

Nonce NonceSequence::next() {
    if (counter_ == UINT64_MAX) throw std::overflow_error("nonce counter exhausted");
    Nonce n{};
    n[0] = static_cast<std::uint8_t>(prefix_ >> 24);
    n[1] = static_cast<std::uint8_t>(prefix_ >> 16);
    n[2] = static_cast<std::uint8_t>(prefix_ >> 8);
    n[3] = static_cast<std::uint8_t>(prefix_);
    put_be64(n.data() + 4, counter_++);
    return n;
}

Ciphertext encrypt(const Key& key, ByteView plaintext, ByteView associated_data,
                   NonceSequence& nonces) {
    return encrypt_with_nonce(key, nonces.next(), plaintext, associated_data);
}

Ciphertext encrypt_with_nonce(const Key& key, const Nonce& nonce, ByteView plaintext,
                              ByteView associated_data) {
    CipherCtx ctx = new_cipher_ctx();
    Ciphertext ct;
    ct.nonce = nonce;
    ct.body.resize(plaintext.size());

    int len = 0;
    bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr) == 1 &&
              EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), nonce.data()) == 1;
    if (ok && !associated_data.empty()) {
        ok = EVP_EncryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                               static_cast<int>(associated_data.size())) == 1;
    }
    if (ok && !plaintext.empty()) {
        ok = EVP_EncryptUpdate(ctx.get(), ct.body.data(), &len, plaintext.data(),
                               static_cast<int>(plaintext.size())) == 1;
    }
    std::uint8_t final_block[16];
    ok = ok && EVP_EncryptFinal_ex(ctx.get(), final_block, &len) == 1 &&
         EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, ct.tag.data()) == 1;
    if (!ok) throw std::runtime_error("AES-256-GCM encryption failed");
    return ct;
}

std::optional<Bytes> decrypt(const Key& key, const Ciphertext& ct, ByteView associated_data) {
    CipherCtx ctx = new_cipher_ctx();
    Bytes out(ct.body.size());
    AuthTag tag = ct.tag;

    int len = 0;
    bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr) == 1 &&
              EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), ct.nonce.data()) == 1;
    if (ok && !associated_data.empty()) {
        ok = EVP_DecryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                               static_cast<int>(associated_data.size())) == 1;
    }
    if (ok && !ct.body.empty()) {
        ok = EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.body.data(),
                               static_cast<int>(ct.body.size())) == 1;
    }
    if (!ok) throw std::runtime_error("AES-256-GCM decryption setup failed");

    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data()) != 1) {
        throw std::runtime_error("AES-256-GCM tag setup failed");
    }
    std::uint8_t final_block[16];
    if (EVP_DecryptFinal_ex(ctx.get(), final_block, &len) != 1) return std::nullopt;
    return out;
}

}  // namespace cstm
