#include "cstm/token.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace cstm {

TokenHierarchy validate_hierarchy(std::vector<HierarchyLevel> levels, Seconds epoch) {
    if (levels.empty()) throw HierarchyError(0, "hierarchy needs at least one level");
    if (!std::isfinite(epoch)) throw HierarchyError(0, "epoch must be finite");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const HierarchyLevel& lv = levels[i];
        const int l = static_cast<int>(i);
        if (lv.level != l) throw HierarchyError(l, "levels must be numbered 0..n-1 in order");
        if (!(lv.slot_size > 0) || !std::isfinite(lv.slot_size)) {
            throw HierarchyError(l, "slot size must be positive");
        }
        if (!(lv.validity_start < lv.validity_end) || !std::isfinite(lv.validity_end)) {
            throw HierarchyError(l, "validity window must satisfy start < end");
        }
        if (l == 0 && lv.validity_start != 0) {
            throw HierarchyError(0, "validity of level 0 must start at 0");
        }
        if (l > 0 && levels[i - 1].validity_end != lv.validity_start) {
            throw HierarchyError(l, "validity window must start where level " +
                                        std::to_string(l - 1) + " ends");
        }
    }
    TokenHierarchy h;
    h.levels_ = std::move(levels);
    h.epoch_ = epoch;
    return h;
}

std::int64_t slot_index(Seconds time, Seconds slot_size, Seconds epoch) {
    if (time < epoch) throw std::domain_error("time lies before the epoch");
    if (!(slot_size > 0)) throw std::invalid_argument("slot size must be positive");
    return static_cast<std::int64_t>(std::floor((time - epoch) / slot_size));
}

Seconds slot_start(Seconds time, Seconds slot_size, Seconds epoch) {
    return epoch + static_cast<double>(slot_index(time, slot_size, epoch)) * slot_size;
}

Token make_token(CellId cell, Seconds now, const TokenHierarchy& hierarchy,
                 const SeedLookup& seed_lookup) {
    Token token;
    token.cell_id = cell;
    token.announce_time = slot_start(now, hierarchy.level(0).slot_size, hierarchy.epoch());
    token.entries.reserve(hierarchy.depth());
    for (const HierarchyLevel& lv : hierarchy.levels()) {
        const auto slot = slot_index(token.announce_time, lv.slot_size, hierarchy.epoch());
        token.entries.push_back(TokenEntry{
            lv.validity_start, lv.validity_end,
            derive_key(seed_lookup(cell, lv.level), static_cast<std::uint64_t>(lv.level),
                       static_cast<std::uint64_t>(slot))});
    }
    return token;
}

std::optional<int> current_level(const TokenHierarchy& hierarchy, Seconds elapsed) {
    if (elapsed < 0) throw std::domain_error("elapsed time must be non-negative");
    for (const HierarchyLevel& lv : hierarchy.levels()) {
        if (elapsed < lv.validity_end) return lv.level;
    }
    return std::nullopt;
}

bool TokenTrail::insert(Token token) {
    auto key = std::make_pair(token.announce_time, token.cell_id);
    return tokens_.try_emplace(key, std::move(token)).second;
}

void TokenTrail::prune(Seconds now, const TokenHierarchy& hierarchy) {
    const Seconds horizon = hierarchy.horizon();
    std::erase_if(tokens_, [&](const auto& entry) {
        return now - entry.second.announce_time >= horizon;
    });
}

std::vector<PollTarget> TokenTrail::poll_targets(const TokenHierarchy& hierarchy, Seconds now,
                                                 std::uint64_t num_rps) const {
    std::vector<PollTarget> out;
    std::set<RegionId> seen;
    for (const auto& [id, token] : tokens_) {
        const Seconds elapsed = now - token.announce_time;
        if (elapsed < 0) continue;
        const auto level = current_level(hierarchy, elapsed);
        if (!level) continue;
        const Key& key = token.entries.at(static_cast<std::size_t>(*level)).key;
        const RegionId region = region_id(key);
        if (!seen.insert(region).second) continue;
        out.push_back(PollTarget{rp_index(region, num_rps), region, key});
    }
    return out;
}

}  // namespace cstm
