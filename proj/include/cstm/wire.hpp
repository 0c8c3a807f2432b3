#pragma once

// Canonical byte encoding of protocol messages.
//
// Every message starts with a one-byte type tag. Integers are big-endian,
// doubles are their IEEE-754 binary64 bit pattern as a big-endian u64, and
// every byte string (digests, keys, nonces, bodies, tags, text) carries a
// u32 length prefix. Sequences carry a u32 element count.
//
//   DepositRequest  0x01 | rect(4 x f64) | a f64 | b f64 | payload | sender
//   StoredMessage   0x02 | region | ciphertext | deposited_at f64 | expires_at f64
//   PollRequest     0x03 | region
//   PollResponse    0x04 | count u32 | ciphertext*
//   Token           0x05 | cell i64 | announce f64 | count u32 | (start f64 | end f64 | key)*
//
//   ciphertext = nonce | body | tag

#include "cstm/protocol.hpp"

#include <cstdint>
#include <stdexcept>

namespace cstm::wire {

enum class MessageType : std::uint8_t {
    kDepositRequest = 0x01,
    kStoredMessage = 0x02,
    kPollRequest = 0x03,
    kPollResponse = 0x04,
    kToken = 0x05,
};

// Truncated input, trailing bytes, wrong tag or a bad fixed-size length.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Bytes encode(const DepositRequest& msg);
Bytes encode(const StoredMessage& msg);
Bytes encode(const PollRequest& msg);
Bytes encode(const PollResponse& msg);
Bytes encode(const Token& msg);

DepositRequest decode_deposit_request(ByteView data);
StoredMessage decode_stored_message(ByteView data);
PollRequest decode_poll_request(ByteView data);
PollResponse decode_poll_response(ByteView data);
Token decode_token(ByteView data);

}  // namespace cstm::wire
