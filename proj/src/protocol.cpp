#include "cstm/protocol.hpp"

#include "cstm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cstm {

namespace {

void append_be64(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

Digest master_key(std::uint64_t master_seed) {
    const ByteView label = as_bytes("cstm/seed-table");
    Bytes material(label.begin(), label.end());
    append_be64(material, master_seed);
    return hash(material);
}

Seed plan_seed(const Digest& master, int level, ClusterId cluster) {
    Bytes msg;
    append_be64(msg, static_cast<std::uint64_t>(level));
    append_be64(msg, static_cast<std::uint64_t>(cluster));
    return Seed{hmac_sha256(master.view(), msg).bytes};
}

}  // namespace

Seed SeedTable::lookup(CellId cell, int level) const {
    if (level < 0 || static_cast<std::size_t>(level) >= clusterings_.size()) {
        throw ConfigError("no seeds planned for level " + std::to_string(level));
    }
    const ClusterId cluster = clusterings_[static_cast<std::size_t>(level)].cluster_of(cell);
    auto it = seeds_.find({level, cluster});
    if (it == seeds_.end()) {
        throw ConfigError("missing seed for level " + std::to_string(level) + ", cluster " +
                          std::to_string(cluster));
    }
    return it->second;
}

std::vector<Seed> SeedTable::seeds_for_cell(CellId cell) const {
    std::vector<Seed> out;
    out.reserve(clusterings_.size());
    for (std::size_t l = 0; l < clusterings_.size(); ++l) {
        out.push_back(lookup(cell, static_cast<int>(l)));
    }
    return out;
}

SeedLookup SeedTable::as_lookup() const {
    return [this](CellId cell, int level) { return lookup(cell, level); };
}

SeedTable tps_plan_seeds(const CellMap& map, const TokenHierarchy& hierarchy,
                         std::vector<Clustering> clusterings, std::uint64_t master_seed) {
    if (clusterings.size() != hierarchy.depth()) {
        throw ConfigError("expected " + std::to_string(hierarchy.depth()) + " clusterings, got " +
                          std::to_string(clusterings.size()));
    }
    const Digest master = master_key(master_seed);
    SeedTable table;
    for (std::size_t l = 0; l < clusterings.size(); ++l) {
        Clustering& c = clusterings[l];
        c.level = static_cast<int>(l);
        if (c.assignment.size() != map.size()) {
            throw ConfigError("level-" + std::to_string(l) + " clustering does not cover every cell");
        }
        for (const Site& s : map.sites()) {
            if (!c.assignment.contains(s.cell_id)) {
                throw ConfigError("level-" + std::to_string(l) + " clustering misses cell " +
                                  std::to_string(s.cell_id));
            }
        }
        const auto members = c.members();
        if (l == 0 && members.size() != map.size()) {
            throw ConfigError("level-0 clustering must consist of singletons");
        }
        for (const auto& [cluster, cells] : members) {
            table.seeds_.emplace(std::make_pair(static_cast<int>(l), cluster),
                                 plan_seed(master, static_cast<int>(l), cluster));
        }
    }
    table.clusterings_ = std::move(clusterings);
    return table;
}

Tps::Tps(CellMap map, TokenHierarchy hierarchy, SeedTable seeds, std::uint64_t num_rps,
         SenderPolicy policy, std::uint32_t nonce_prefix)
    : map_(std::move(map)),
      hierarchy_(std::move(hierarchy)),
      seeds_(std::move(seeds)),
      num_rps_(num_rps),
      policy_(std::move(policy)),
      nonces_(nonce_prefix) {
    if (num_rps_ == 0) throw ConfigError("number of rendezvous points must be at least 1");
    if (seeds_.clusterings().size() != hierarchy_.depth()) {
        throw ConfigError("seed table depth does not match the hierarchy");
    }
}

Key Tps::recover_key(CellId cell, int level, Seconds announce_time) const {
    const HierarchyLevel& lv = hierarchy_.level(static_cast<std::size_t>(level));
    const auto slot = slot_index(announce_time, lv.slot_size, hierarchy_.epoch());
    return derive_key(seeds_.lookup(cell, level), static_cast<std::uint64_t>(level),
                      static_cast<std::uint64_t>(slot));
}

std::vector<Deposit> Tps::deposit(const DepositRequest& request, Seconds now) {
    if (!(request.window_start < request.window_end)) {
        throw std::invalid_argument("deposit window must satisfy a < b");
    }
    if (request.payload.empty()) throw std::invalid_argument("deposit payload is empty");
    if (!(request.area.x_min < request.area.x_max) || !(request.area.y_min < request.area.y_max)) {
        throw std::invalid_argument("deposit area is not a proper rectangle");
    }
    if (request.window_end > now) {
        throw std::invalid_argument("deposit window must lie entirely in the past");
    }
    if (request.window_start < hierarchy_.epoch()) {
        throw std::invalid_argument("deposit window starts before the epoch");
    }
    if (!policy_(request)) throw Unauthorized("sender '" + request.sender_id + "' refused");

    const std::set<CellId> cells = cells_overlapping(map_, request.area);
    if (cells.empty()) throw AddressingFailure("deposit area overlaps no cell");

    const Seconds s0 = hierarchy_.level(0).slot_size;
    const Seconds epoch = hierarchy_.epoch();
    const auto first = slot_index(request.window_start, s0, epoch);
    const auto last = slot_index(request.window_end, s0, epoch);

    // Distinct keys in first-seen order, each with the latest expiry among
    // the tokens that carry it.
    std::vector<std::pair<Key, Seconds>> keys;
    std::map<Key, std::size_t> key_pos;
    for (auto k = first; k <= last; ++k) {
        const Seconds announce = epoch + static_cast<double>(k) * s0;
        const auto level = current_level(hierarchy_, now - announce);
        if (!level) continue;
        const Seconds expires = announce + hierarchy_.horizon();
        for (CellId cell : cells) {
            const Key key = recover_key(cell, *level, announce);
            auto [it, inserted] = key_pos.try_emplace(key, keys.size());
            if (inserted) {
                keys.emplace_back(key, expires);
            } else {
                keys[it->second].second = std::max(keys[it->second].second, expires);
            }
        }
    }
    if (keys.empty()) throw AddressingFailure("every addressed token is already stale");

    std::vector<Deposit> out;
    out.reserve(keys.size());
    for (const auto& [key, expires] : keys) {
        const RegionId region = region_id(key);
        StoredMessage msg{region, encrypt(key, request.payload, region.digest.view(), nonces_), now,
                          expires};
        out.push_back(Deposit{rp_index(region, num_rps_), std::move(msg)});
    }
    return out;
}

Enb::Enb(CellId cell, std::vector<Seed> level_seeds)
    : cell_(cell), level_seeds_(std::move(level_seeds)) {}

Token Enb::make(Seconds now, const TokenHierarchy& hierarchy) const {
    if (level_seeds_.size() != hierarchy.depth()) {
        throw ConfigError("eNB of cell " + std::to_string(cell_) + " holds " +
                          std::to_string(level_seeds_.size()) + " seeds for a " +
                          std::to_string(hierarchy.depth()) + "-level hierarchy");
    }
    return make_token(cell_, now, hierarchy, [this](CellId cell, int level) {
        if (cell != cell_) throw ConfigError("eNB asked for a foreign cell's seed");
        return level_seeds_.at(static_cast<std::size_t>(level));
    });
}

Token Enb::tick(Seconds now, const TokenHierarchy& hierarchy) const {
    if (slot_start(now, hierarchy.level(0).slot_size, hierarchy.epoch()) != now) {
        throw std::invalid_argument("eNB tick must fall on a level-0 slot start");
    }
    return make(now, hierarchy);
}

Token Enb::on_entry(Seconds now, const TokenHierarchy& hierarchy) const {
    return make(now, hierarchy);
}

void RendezvousPoint::store(StoredMessage msg) {
    if (!(msg.deposited_at < msg.expires_at)) {
        throw std::invalid_argument("stored message expires before it is deposited");
    }
    mailbox_[msg.region].push_back(std::move(msg));
}

PollResponse RendezvousPoint::poll(const PollRequest& request, Seconds now) {
    PollResponse response;
    auto it = mailbox_.find(request.region);
    if (it == mailbox_.end()) return response;
    auto& box = it->second;
    std::erase_if(box, [now](const StoredMessage& m) { return m.expires_at <= now; });
    for (const StoredMessage& m : box) response.messages.push_back(m.ct);
    if (box.empty()) mailbox_.erase(it);
    return response;
}

void RendezvousPoint::collect_garbage(Seconds now) {
    for (auto it = mailbox_.begin(); it != mailbox_.end();) {
        std::erase_if(it->second, [now](const StoredMessage& m) { return m.expires_at <= now; });
        it = it->second.empty() ? mailbox_.erase(it) : std::next(it);
    }
}

std::size_t RendezvousPoint::stored_count() const {
    std::size_t n = 0;
    for (const auto& [region, box] : mailbox_) n += box.size();
    return n;
}

std::vector<RegionId> RendezvousPoint::regions() const {
    std::vector<RegionId> out;
    out.reserve(mailbox_.size());
    for (const auto& [region, box] : mailbox_) out.push_back(region);
    std::sort(out.begin(), out.end());
    return out;
}

RpRegistry::RpRegistry(std::uint64_t num_rps, std::string prefix)
    : rps_(num_rps), prefix_(std::move(prefix)) {
    if (num_rps == 0) throw ConfigError("number of rendezvous points must be at least 1");
}

RendezvousPoint& RpRegistry::at(std::uint64_t index) {
    if (index >= rps_.size()) throw std::out_of_range("no rendezvous point " + name(index));
    return rps_[index];
}

const RendezvousPoint& RpRegistry::at(std::uint64_t index) const {
    if (index >= rps_.size()) throw std::out_of_range("no rendezvous point " + name(index));
    return rps_[index];
}

std::string RpRegistry::name(std::uint64_t index) const {
    return prefix_ + std::to_string(index);
}

std::vector<OutgoingPoll> UserEquipment::poll_round(Seconds now, const TokenHierarchy& hierarchy,
                                                    std::uint64_t num_rps) {
    trail_.prune(now, hierarchy);
    round_keys_.clear();
    std::vector<OutgoingPoll> out;
    for (const PollTarget& t : trail_.poll_targets(hierarchy, now, num_rps)) {
        round_keys_.emplace(t.region, t.key);
        out.push_back(OutgoingPoll{t.rp_index, PollRequest{t.region}});
    }
    ++poll_rounds_;
    polls_sent_ += out.size();
    return out;
}

std::vector<Bytes> UserEquipment::on_response(const PollRequest& request,
                                              const PollResponse& response) {
    std::vector<Bytes> fresh;
    auto it = round_keys_.find(request.region);
    if (it == round_keys_.end()) {
        decrypt_failures_ += response.messages.size();
        return fresh;
    }
    for (const Ciphertext& ct : response.messages) {
        auto plain = decrypt(it->second, ct, request.region.digest.view());
        if (!plain) {
            ++decrypt_failures_;
            continue;
        }
        if (seen_payloads_.insert(hash(*plain)).second) fresh.push_back(std::move(*plain));
    }
    return fresh;
}

}  // namespace cstm
