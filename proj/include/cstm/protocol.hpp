#pragma once

// The four CSTM entities and the messages they exchange.
//
//   TPS  plans per-(level, cluster) seeds and deposits encrypted st-ds.
//   eNB  turns its seeds into a token every level-0 slot and on cell entry.
//   RP   stores ciphertexts under region ids and answers polls.
//   UE   keeps a token trail, polls RPs and decrypts what comes back.
//
// Entities share no state; everything crosses between them as a value.
// RP state holds region ids and ciphertexts only, never geography.

#include "cstm/crypto.hpp"
#include "cstm/token.hpp"
#include "cstm/topology.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cstm {

class SeedTable {
public:
    // Seed of the cluster `cell` belongs to at `level`. Throws ConfigError
    // for unknown cells or levels.
    Seed lookup(CellId cell, int level) const;
    // The λ seeds an eNB is provisioned with.
    std::vector<Seed> seeds_for_cell(CellId cell) const;
    SeedLookup as_lookup() const;

    const std::vector<Clustering>& clusterings() const { return clusterings_; }
    const std::map<std::pair<int, ClusterId>, Seed>& entries() const { return seeds_; }

    friend bool operator==(const SeedTable&, const SeedTable&) = default;

private:
    friend SeedTable tps_plan_seeds(const CellMap&, const TokenHierarchy&, std::vector<Clustering>,
                                    std::uint64_t);
    std::vector<Clustering> clusterings_;
    std::map<std::pair<int, ClusterId>, Seed> seeds_;
};

// One seed per (level, cluster), derived from master_seed. Requires one
// clustering per level covering every cell, with singletons at level 0;
// throws ConfigError otherwise.
SeedTable tps_plan_seeds(const CellMap& map, const TokenHierarchy& hierarchy,
                         std::vector<Clustering> clusterings, std::uint64_t master_seed);

struct DepositRequest {
    Rect area;
    Seconds window_start = 0;  // a
    Seconds window_end = 0;    // b
    Bytes payload;
    std::string sender_id;

    friend bool operator==(const DepositRequest&, const DepositRequest&) = default;
};

struct StoredMessage {
    RegionId region;
    Ciphertext ct;
    Seconds deposited_at = 0;
    Seconds expires_at = 0;

    friend bool operator==(const StoredMessage&, const StoredMessage&) = default;
};

struct PollRequest {
    RegionId region;
    friend bool operator==(const PollRequest&, const PollRequest&) = default;
};

struct PollResponse {
    std::vector<Ciphertext> messages;
    friend bool operator==(const PollResponse&, const PollResponse&) = default;
};

struct Deposit {
    std::uint64_t rp_index = 0;
    StoredMessage message;
};

using SenderPolicy = std::function<bool(const DepositRequest&)>;

inline bool allow_all_senders(const DepositRequest&) { return true; }

class Tps {
public:
    Tps(CellMap map, TokenHierarchy hierarchy, SeedTable seeds, std::uint64_t num_rps,
        SenderPolicy policy = allow_all_senders, std::uint32_t nonce_prefix = 0);

    // Encrypts the payload under every currently valid key of the addressed
    // (cell, level-0 slot) pairs, one copy per distinct key.
    //
    // Throws std::invalid_argument for a malformed request or a window that
    // is not entirely in the past, Unauthorized when the sender policy
    // refuses, and AddressingFailure when no cell overlaps the area or every
    // candidate token is already stale.
    std::vector<Deposit> deposit(const DepositRequest& request, Seconds now);

    // K_{c,t,l} for the token announced at `announce_time`.
    Key recover_key(CellId cell, int level, Seconds announce_time) const;

    const SeedTable& seeds() const { return seeds_; }
    const TokenHierarchy& hierarchy() const { return hierarchy_; }
    const CellMap& map() const { return map_; }
    std::uint64_t num_rps() const { return num_rps_; }

private:
    CellMap map_;
    TokenHierarchy hierarchy_;
    SeedTable seeds_;
    std::uint64_t num_rps_;
    SenderPolicy policy_;
    NonceSequence nonces_;
};

class Enb {
public:
    // `level_seeds[l]` is the seed for level l.
    Enb(CellId cell, std::vector<Seed> level_seeds);

    // Broadcast at a level-0 slot start; throws std::invalid_argument when
    // `now` is not aligned to one.
    Token tick(Seconds now, const TokenHierarchy& hierarchy) const;
    // Token for the ongoing slot, handed to a UE entering the cell.
    Token on_entry(Seconds now, const TokenHierarchy& hierarchy) const;

    CellId cell() const { return cell_; }

private:
    Token make(Seconds now, const TokenHierarchy& hierarchy) const;

    CellId cell_;
    std::vector<Seed> level_seeds_;
};

class RendezvousPoint {
public:
    void store(StoredMessage msg);
    // Every non-expired message stored under the polled region. Expired
    // entries of that region are dropped on the way.
    PollResponse poll(const PollRequest& request, Seconds now);
    void collect_garbage(Seconds now);

    std::size_t stored_count() const;
    std::vector<RegionId> regions() const;

private:
    std::unordered_map<RegionId, std::vector<StoredMessage>, RegionIdHash> mailbox_;
};

// Stands in for DNS: RP i is reachable under `prefix + i`.
class RpRegistry {
public:
    explicit RpRegistry(std::uint64_t num_rps, std::string prefix = "rp");

    RendezvousPoint& at(std::uint64_t index);
    const RendezvousPoint& at(std::uint64_t index) const;
    std::string name(std::uint64_t index) const;
    std::uint64_t size() const { return rps_.size(); }

    void store(std::uint64_t index, StoredMessage msg) { at(index).store(std::move(msg)); }
    PollResponse poll(std::uint64_t index, const PollRequest& request, Seconds now) {
        return at(index).poll(request, now);
    }

private:
    std::vector<RendezvousPoint> rps_;
    std::string prefix_;
};

struct OutgoingPoll {
    std::uint64_t rp_index = 0;
    PollRequest request;
};

class UserEquipment {
public:
    bool receive_token(Token token) { return trail_.insert(std::move(token)); }

    // Prunes the trail, then emits one poll per distinct region id. Keys
    // for the round are kept until the next round.
    std::vector<OutgoingPoll> poll_round(Seconds now, const TokenHierarchy& hierarchy,
                                         std::uint64_t num_rps);

    // Decrypts a response to one of this round's polls. Returns only payloads
    // not delivered before; authentication failures are counted and dropped.
    std::vector<Bytes> on_response(const PollRequest& request, const PollResponse& response);

    const TokenTrail& trail() const { return trail_; }
    std::uint64_t decrypt_failures() const { return decrypt_failures_; }
    std::uint64_t polls_sent() const { return polls_sent_; }
    std::uint64_t poll_rounds() const { return poll_rounds_; }

private:
    TokenTrail trail_;
    std::unordered_map<RegionId, Key, RegionIdHash> round_keys_;
    std::set<Digest> seen_payloads_;
    std::uint64_t decrypt_failures_ = 0;
    std::uint64_t polls_sent_ = 0;
    std::uint64_t poll_rounds_ = 0;
};

}  // namespace cstm
