#pragma once

// Token hierarchy, token construction and the UE-side token trail.
//
// A hierarchy level l has a slot size (how often its key changes) and a
// validity window [a_l, b_l) measured from the token's announce time, the
// start of the level-0 slot it was issued in. Windows tile [0, horizon).

#include "cstm/crypto.hpp"
#include "cstm/errors.hpp"
#include "cstm/topology.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace cstm {

using Seconds = double;

struct HierarchyLevel {
    int level = 0;
    Seconds slot_size = 0;
    Seconds validity_start = 0;
    Seconds validity_end = 0;

    friend bool operator==(const HierarchyLevel&, const HierarchyLevel&) = default;
};

// Raised by validate_hierarchy; level() names the offending entry.
class HierarchyError : public ConfigError {
public:
    HierarchyError(int level, const std::string& what)
        : ConfigError("hierarchy level " + std::to_string(level) + ": " + what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

class TokenHierarchy {
public:
    const std::vector<HierarchyLevel>& levels() const { return levels_; }
    const HierarchyLevel& level(std::size_t l) const { return levels_.at(l); }
    std::size_t depth() const { return levels_.size(); }
    Seconds epoch() const { return epoch_; }
    // b_{λ-1}: a token this old is stale.
    Seconds horizon() const { return levels_.back().validity_end; }

    friend bool operator==(const TokenHierarchy&, const TokenHierarchy&) = default;

private:
    friend TokenHierarchy validate_hierarchy(std::vector<HierarchyLevel>, Seconds);
    std::vector<HierarchyLevel> levels_;
    Seconds epoch_ = 0;
};

// Requires at least one level, levels numbered 0..λ-1 in order, positive
// slot sizes, a_l < b_l, a_0 = 0 and b_{l-1} = a_l.
TokenHierarchy validate_hierarchy(std::vector<HierarchyLevel> levels, Seconds epoch = 0);

// floor((time - epoch) / slot_size). Throws std::domain_error if time < epoch.
std::int64_t slot_index(Seconds time, Seconds slot_size, Seconds epoch);
Seconds slot_start(Seconds time, Seconds slot_size, Seconds epoch);

struct TokenEntry {
    Seconds validity_start = 0;
    Seconds validity_end = 0;
    Key key;
    friend bool operator==(const TokenEntry&, const TokenEntry&) = default;
};

struct Token {
    CellId cell_id = 0;
    Seconds announce_time = 0;
    std::vector<TokenEntry> entries;  // one per level
    friend bool operator==(const Token&, const Token&) = default;
};

// Seed held by the eNB of `cell` for `level`; throws ConfigError if absent.
using SeedLookup = std::function<Seed(CellId cell, int level)>;

// Token for the level-0 slot containing `now`. Every level's slot index is
// taken at the announce time, so a token handed out on cell entry equals
// the one broadcast at the start of the slot.
Token make_token(CellId cell, Seconds now, const TokenHierarchy& hierarchy,
                 const SeedLookup& seed_lookup);

// The level whose window contains `elapsed`, or nullopt once the token is
// stale (elapsed >= horizon). Throws std::domain_error for negative elapsed.
std::optional<int> current_level(const TokenHierarchy& hierarchy, Seconds elapsed);

struct PollTarget {
    std::uint64_t rp_index = 0;
    RegionId region;
    Key key;
};

// Tokens collected by one UE, ordered by (announce_time, cell).
class TokenTrail {
public:
    // Returns false when a token for the same (cell, announce_time) is already held.
    bool insert(Token token);
    // Drops tokens with now - announce_time >= horizon.
    void prune(Seconds now, const TokenHierarchy& hierarchy);

    // One target per distinct region id, in trail order. Stale tokens are skipped.
    std::vector<PollTarget> poll_targets(const TokenHierarchy& hierarchy, Seconds now,
                                         std::uint64_t num_rps) const;

    std::size_t size() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    const std::map<std::pair<Seconds, CellId>, Token>& tokens() const { return tokens_; }

private:
    std::map<std::pair<Seconds, CellId>, Token> tokens_;
};

}  // namespace cstm
