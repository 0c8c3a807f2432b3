#include "cstm/topology.hpp"

#include "cstm/errors.hpp"
#include "cstm/rng.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cstm {

Rect Rect::make(double x_min, double y_min, double x_max, double y_max) {
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw std::invalid_argument("rect requires x_min < x_max and y_min < y_max");
    }
    return Rect{x_min, y_min, x_max, y_max};
}

CellMap CellMap::from_sites(std::vector<Site> sites, double margin_m) {
    if (sites.empty()) throw LoadError("site list is empty");
    if (!(margin_m >= 0) || !std::isfinite(margin_m)) throw LoadError("site margin must be >= 0");

    std::sort(sites.begin(), sites.end(),
              [](const Site& a, const Site& b) { return a.cell_id < b.cell_id; });

    CellMap map;
    double x_lo = std::numeric_limits<double>::infinity(), y_lo = x_lo;
    double x_hi = -x_lo, y_hi = -x_lo;
    std::set<std::pair<double, double>> positions;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const Site& s = sites[i];
        if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
            throw LoadError("site " + std::to_string(s.cell_id) + " has non-finite coordinates");
        }
        if (!map.index_.emplace(s.cell_id, i).second) {
            throw LoadError("duplicate cell id " + std::to_string(s.cell_id));
        }
        if (!positions.emplace(s.x, s.y).second) {
            throw LoadError("site " + std::to_string(s.cell_id) + " coincides with another site");
        }
        x_lo = std::min(x_lo, s.x);
        y_lo = std::min(y_lo, s.y);
        x_hi = std::max(x_hi, s.x);
        y_hi = std::max(y_hi, s.y);
    }
    // A single site with zero margin would give a degenerate box.
    const double margin = std::max(margin_m, 1e-6);
    map.bounds_ = Rect{x_lo - margin, y_lo - margin, x_hi + margin, y_hi + margin};
    map.sites_ = std::move(sites);
    return map;
}

const Site& CellMap::site(CellId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown cell id " + std::to_string(id));
    return sites_[it->second];
}

CellMap load_sites(std::istream& in, double margin_m) {
    std::vector<Site> sites;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = csv::split_line(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) {
            throw LoadError("site file line " + std::to_string(line_no) + ": expected 3 fields");
        }
        Site s;
        auto id = csv::parse_int(fields[0]);
        auto x = csv::parse_double(fields[1]);
        auto y = csv::parse_double(fields[2]);
        if (!id || !x || !y) {
            throw LoadError("site file line " + std::to_string(line_no) + ": malformed number");
        }
        s.cell_id = *id;
        s.x = *x;
        s.y = *y;
        sites.push_back(s);
    }
    return CellMap::from_sites(std::move(sites), margin_m);
}

CellMap load_sites_file(const std::string& path, double margin_m) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open site file: " + path);
    try {
        return load_sites(in, margin_m);
    } catch (const LoadError& e) {
        throw LoadError(path + ": " + e.what());
    }
}

void write_sites(std::ostream& out, const std::vector<Site>& sites) {
    for (const Site& s : sites) {
        out << s.cell_id << ',' << csv::format_double(s.x) << ',' << csv::format_double(s.y)
            << '\n';
    }
}

std::vector<Site> grid_sites(int rows, int cols, double spacing_m) {
    if (rows < 1 || cols < 1 || !(spacing_m > 0)) {
        throw std::invalid_argument("grid needs rows, cols >= 1 and spacing > 0");
    }
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out.push_back(Site{static_cast<CellId>(r) * cols + c, c * spacing_m, r * spacing_m});
        }
    }
    return out;
}

std::vector<Site> random_sites(int n, double width_m, double height_m, std::uint64_t rng_seed) {
    if (n < 1 || !(width_m > 0) || !(height_m > 0)) {
        throw std::invalid_argument("random sites need n >= 1 and a positive area");
    }
    Rng rng(rng_seed);
    std::set<std::pair<double, double>> used;
    std::vector<Site> out;
    while (static_cast<int>(out.size()) < n) {
        const double x = rng.uniform(0, width_m);
        const double y = rng.uniform(0, height_m);
        if (!used.emplace(x, y).second) continue;
        out.push_back(Site{static_cast<CellId>(out.size()), x, y});
    }
    return out;
}

CellId assign_cell(const CellMap& map, double x, double y) {
    if (!map.bounds().contains(x, y)) {
        std::ostringstream msg;
        msg << "point (" << x << ", " << y << ") lies outside the map bounds";
        throw std::domain_error(msg.str());
    }
    // Sites are sorted by id, so a strict comparison keeps the smallest id on ties.
    const Site* best = nullptr;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const Site& s : map.sites()) {
        const double dx = x - s.x;
        const double dy = y - s.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = &s;
        }
    }
    return best->cell_id;
}

namespace {

using Polygon = std::vector<Point>;

// Keeps the part of a convex polygon with a*x + b*y <= c.
Polygon clip(const Polygon& poly, double a, double b, double c) {
    Polygon out;
    if (poly.empty()) return out;
    out.reserve(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        const double fp = a * p.x + b * p.y - c;
        const double fq = a * q.x + b * q.y - c;
        if (fp <= 0) out.push_back(p);
        if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
            const double t = fp / (fp - fq);
            out.push_back(Point{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
    }
    return out;
}

double area(const Polygon& poly) {
    double twice = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return std::abs(twice) / 2;
}

}  // namespace

std::set<CellId> cells_overlapping(const CellMap& map, const Rect& rect) {
    std::set<CellId> out;
    const Rect& b = map.bounds();
    if (!rect.intersects(b)) return out;
    const Rect r{std::max(rect.x_min, b.x_min), std::max(rect.y_min, b.y_min),
                 std::min(rect.x_max, b.x_max), std::min(rect.y_max, b.y_max)};
    const double rect_area = (r.x_max - r.x_min) * (r.y_max - r.y_min);

    const auto& sites = map.sites();
    for (const Site& si : sites) {
        // Work relative to si to keep magnitudes small.
        Polygon poly{{r.x_min - si.x, r.y_min - si.y},
                     {r.x_max - si.x, r.y_min - si.y},
                     {r.x_max - si.x, r.y_max - si.y},
                     {r.x_min - si.x, r.y_max - si.y}};
        for (const Site& sj : sites) {
            if (sj.cell_id == si.cell_id) continue;
            const double dx = sj.x - si.x;
            const double dy = sj.y - si.y;
            // |p|^2 <= |p - d|^2  <=>  2 d.p <= |d|^2
            poly = clip(poly, 2 * dx, 2 * dy, dx * dx + dy * dy);
            if (poly.empty()) break;
        }
        if (poly.empty()) continue;

        if (area(poly) > 1e-12 * rect_area) {
            out.insert(si.cell_id);
            continue;
        }
        // Zero-area contact (an edge or corner on a bisector): the cell only
        // owns those points if the tie rule hands them to it.
        Point centroid{0, 0};
        for (const Point& p : poly) {
            centroid.x += p.x / poly.size();
            centroid.y += p.y / poly.size();
        }
        poly.push_back(centroid);
        for (const Point& p : poly) {
            const double x = std::clamp(p.x + si.x, r.x_min, r.x_max);
            const double y = std::clamp(p.y + si.y, r.y_min, r.y_max);
            if (assign_cell(map, x, y) == si.cell_id) {
                out.insert(si.cell_id);
                break;
            }
        }
    }
    return out;
}

ClusterId Clustering::cluster_of(CellId cell) const {
    auto it = assignment.find(cell);
    if (it == assignment.end()) {
        throw ConfigError("cell " + std::to_string(cell) + " missing from level-" +
                          std::to_string(level) + " clustering");
    }
    return it->second;
}

std::map<ClusterId, std::vector<CellId>> Clustering::members() const {
    std::map<ClusterId, std::vector<CellId>> out;
    for (const auto& [cell, cluster] : assignment) out[cluster].push_back(cell);
    return out;
}

Clustering identity_clustering(const CellMap& map, int level) {
    Clustering c;
    c.level = level;
    for (const Site& s : map.sites()) c.assignment.emplace(s.cell_id, s.cell_id);
    return c;
}

Clustering random_clusters(const CellMap& map, int k, std::uint64_t rng_seed, int level) {
    if (k < 1) throw std::invalid_argument("cluster size k must be >= 1");
    std::vector<CellId> ids;
    ids.reserve(map.size());
    for (const Site& s : map.sites()) ids.push_back(s.cell_id);

    Rng rng(rng_seed);
    rng.shuffle(std::span<CellId>(ids));

    Clustering c;
    c.level = level;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        c.assignment.emplace(ids[i], static_cast<ClusterId>(i / static_cast<std::size_t>(k)));
    }
    return c;
}

}  // namespace cstm
