#pragma once

// Radio-cell geometry. Coverage is the Voronoi diagram of the base-station
// sites, clipped to a bounding rectangle. Distances are planar meters.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace cstm {

using CellId = std::int64_t;
using ClusterId = std::int64_t;

struct Point {
    double x = 0;
    double y = 0;
};

struct Site {
    CellId cell_id = 0;
    double x = 0;
    double y = 0;
};

struct Rect {
    double x_min = 0;
    double y_min = 0;
    double x_max = 0;
    double y_max = 0;

    // Throws std::invalid_argument unless x_min < x_max and y_min < y_max.
    static Rect make(double x_min, double y_min, double x_max, double y_max);

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    bool intersects(const Rect& o) const {
        return x_min <= o.x_max && o.x_min <= x_max && y_min <= o.y_max && o.y_min <= y_max;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

inline constexpr double kDefaultMarginM = 1000.0;

class CellMap {
public:
    // Validates ids and coordinates; bounds are the site envelope grown by margin_m.
    // Throws LoadError on an empty list, duplicate ids, coincident or
    // non-finite coordinates.
    static CellMap from_sites(std::vector<Site> sites, double margin_m = kDefaultMarginM);

    const std::vector<Site>& sites() const { return sites_; }
    const Rect& bounds() const { return bounds_; }
    std::size_t size() const { return sites_.size(); }
    bool contains_cell(CellId id) const { return index_.contains(id); }
    const Site& site(CellId id) const;

private:
    CellMap() = default;

    std::vector<Site> sites_;  // sorted by cell_id
    Rect bounds_;
    std::unordered_map<CellId, std::size_t> index_;
};

// Header-less CSV `cell_id,x_m,y_m`.
CellMap load_sites(std::istream& in, double margin_m = kDefaultMarginM);
CellMap load_sites_file(const std::string& path, double margin_m = kDefaultMarginM);
void write_sites(std::ostream& out, const std::vector<Site>& sites);

// rows x cols lattice starting at the origin, ids in row-major order.
std::vector<Site> grid_sites(int rows, int cols, double spacing_m);
// n sites uniform in [0,width) x [0,height), resampled on exact coincidence.
std::vector<Site> random_sites(int n, double width_m, double height_m, std::uint64_t rng_seed);

// Nearest site, ties to the smaller cell_id. Throws std::domain_error for a
// point outside the map bounds.
CellId assign_cell(const CellMap& map, double x, double y);

// Cells whose clipped Voronoi region meets `rect` (closed). Empty when the
// rect misses the bounds entirely.
std::set<CellId> cells_overlapping(const CellMap& map, const Rect& rect);

struct Clustering {
    int level = 0;
    std::map<CellId, ClusterId> assignment;

    ClusterId cluster_of(CellId cell) const;
    std::map<ClusterId, std::vector<CellId>> members() const;
    friend bool operator==(const Clustering&, const Clustering&) = default;
};

// Every cell is its own cluster; cluster id == cell id.
Clustering identity_clustering(const CellMap& map, int level = 0);

// Shuffle the cell ids with the seeded generator and chunk them into groups
// of k. The last group holds the remainder. Throws std::invalid_argument for k < 1.
Clustering random_clusters(const CellMap& map, int k, std::uint64_t rng_seed, int level = 0);

}  // namespace cstm
