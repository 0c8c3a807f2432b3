#include "cstm/wire.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

namespace cstm::wire {

namespace {

class Writer {
public:
    explicit Writer(MessageType type) { u8(static_cast<std::uint8_t>(type)); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    void u64(std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(ByteView v) {
        if (v.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw std::length_error("field too long for a u32 length prefix");
        }
        u32(static_cast<std::uint32_t>(v.size()));
        out_.insert(out_.end(), v.begin(), v.end());
    }
    void count(std::size_t n) {
        if (n > std::numeric_limits<std::uint32_t>::max()) throw std::length_error("too many elements");
        u32(static_cast<std::uint32_t>(n));
    }

    void region(const RegionId& r) { bytes(r.digest.view()); }
    void ciphertext(const Ciphertext& ct) {
        bytes(ct.nonce);
        bytes(ct.body);
        bytes(ct.tag);
    }

    Bytes finish() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    Reader(ByteView data, MessageType expected) : data_(data) {
        if (u8() != static_cast<std::uint8_t>(expected)) throw DecodeError("unexpected message type");
    }

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (std::uint8_t b : take(4)) v = (v << 8) | b;
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (std::uint8_t b : take(8)) v = (v << 8) | b;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    ByteView bytes() { return take(u32()); }

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        const ByteView v = bytes();
        if (v.size() != N) {
            throw DecodeError("expected a " + std::to_string(N) + "-byte field, got " +
                              std::to_string(v.size()));
        }
        std::array<std::uint8_t, N> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    RegionId region() { return RegionId{Digest{fixed<32>()}}; }
    Ciphertext ciphertext() {
        Ciphertext ct;
        ct.nonce = fixed<kNonceSize>();
        const ByteView body = bytes();
        ct.body.assign(body.begin(), body.end());
        ct.tag = fixed<kTagSize>();
        return ct;
    }

    void finish() const {
        if (pos_ != data_.size()) throw DecodeError("trailing bytes after message");
    }

private:
    ByteView take(std::size_t n) {
        if (data_.size() - pos_ < n) throw DecodeError("message truncated");
        ByteView v = data_.subspan(pos_, n);
        pos_ += n;
        return v;
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace

Bytes encode(const DepositRequest& msg) {
    Writer w(MessageType::kDepositRequest);
    w.f64(msg.area.x_min);
    w.f64(msg.area.y_min);
    w.f64(msg.area.x_max);
    w.f64(msg.area.y_max);
    w.f64(msg.window_start);
    w.f64(msg.window_end);
    w.bytes(msg.payload);
    w.bytes(as_bytes(msg.sender_id));
    return w.finish();
}

Bytes encode(const StoredMessage& msg) {
    Writer w(MessageType::kStoredMessage);
    w.region(msg.region);
    w.ciphertext(msg.ct);
    w.f64(msg.deposited_at);
    w.f64(msg.expires_at);
    return w.finish();
}

Bytes encode(const PollRequest& msg) {
    Writer w(MessageType::kPollRequest);
    w.region(msg.region);
    return w.finish();
}

Bytes encode(const PollResponse& msg) {
    Writer w(MessageType::kPollResponse);
    w.count(msg.messages.size());
    for (const Ciphertext& ct : msg.messages) w.ciphertext(ct);
    return w.finish();
}

Bytes encode(const Token& msg) {
    Writer w(MessageType::kToken);
    w.u64(static_cast<std::uint64_t>(msg.cell_id));
    w.f64(msg.announce_time);
    w.count(msg.entries.size());
    for (const TokenEntry& e : msg.entries) {
        w.f64(e.validity_start);
        w.f64(e.validity_end);
        w.bytes(e.key.view());
    }
    return w.finish();
}

DepositRequest decode_deposit_request(ByteView data) {
    Reader r(data, MessageType::kDepositRequest);
    DepositRequest msg;
    msg.area.x_min = r.f64();
    msg.area.y_min = r.f64();
    msg.area.x_max = r.f64();
    msg.area.y_max = r.f64();
    msg.window_start = r.f64();
    msg.window_end = r.f64();
    const ByteView payload = r.bytes();
    msg.payload.assign(payload.begin(), payload.end());
    const ByteView sender = r.bytes();
    msg.sender_id.assign(sender.begin(), sender.end());
    r.finish();
    return msg;
}

StoredMessage decode_stored_message(ByteView data) {
    Reader r(data, MessageType::kStoredMessage);
    StoredMessage msg;
    msg.region = r.region();
    msg.ct = r.ciphertext();
    msg.deposited_at = r.f64();
    msg.expires_at = r.f64();
    r.finish();
    return msg;
}

PollRequest decode_poll_request(ByteView data) {
    Reader r(data, MessageType::kPollRequest);
    PollRequest msg{r.region()};
    r.finish();
    return msg;
}

PollResponse decode_poll_response(ByteView data) {
    Reader r(data, MessageType::kPollResponse);
    PollResponse msg;
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) msg.messages.push_back(r.ciphertext());
    r.finish();
    return msg;
}

Token decode_token(ByteView data) {
    Reader r(data, MessageType::kToken);
    Token msg;
    msg.cell_id = static_cast<CellId>(r.u64());
    msg.announce_time = r.f64();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        TokenEntry e;
        e.validity_start = r.f64();
        e.validity_end = r.f64();
        e.key = Key{r.fixed<32>()};
        msg.entries.push_back(e);
    }
    r.finish();
    return msg;
}

}  // namespace cstm::wire
