#include "cstm/errors.hpp"
#include "cstm/rng.hpp"
#include "cstm/topology.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace cstm;

namespace {

CellMap two_sites() { return CellMap::from_sites({{0, 0, 0}, {1, 10, 0}}); }

CellMap load(const std::string& csv, double margin = kDefaultMarginM) {
    std::istringstream in(csv);
    return load_sites(in, margin);
}

}  // namespace

TEST(LoadSites, SingleRow) {
    const CellMap map = load("0,100,100\n");
    ASSERT_EQ(map.size(), 1u);
    EXPECT_EQ(map.site(0).x, 100);
    EXPECT_EQ(map.bounds().x_min, 100 - kDefaultMarginM);
    EXPECT_EQ(map.bounds().y_max, 100 + kDefaultMarginM);
}

TEST(LoadSites, ManyRows) {
    std::ostringstream csv;
    for (int i = 0; i < 604; ++i) csv << i << ',' << (i % 30) * 250.0 << ',' << (i / 30) * 250.0 << '\n';
    EXPECT_EQ(load(csv.str()).size(), 604u);
}

TEST(LoadSites, Errors) {
    EXPECT_THROW(load(""), LoadError);
    EXPECT_THROW(load("0,1,1\n0,2,2\n"), LoadError);
    EXPECT_THROW(load("0,1,1\n1,1,1\n"), LoadError);
    EXPECT_THROW(load("0,1\n"), LoadError);
    EXPECT_THROW(load("a,1,1\n"), LoadError);
    EXPECT_THROW(load("0,nan,1\n"), LoadError);
    EXPECT_THROW(load_sites_file("/nonexistent/sites.csv"), LoadError);
}

TEST(LoadSites, ErrorNamesFile) {
    try {
        load_sites_file("/nonexistent/sites.csv");
        FAIL();
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/sites.csv"), std::string::npos);
    }
}

TEST(LoadSites, WriteReadRoundTrip) {
    const auto sites = random_sites(12, 5000, 3000, 4);
    std::ostringstream out;
    write_sites(out, sites);
    const CellMap map = load(out.str());
    ASSERT_EQ(map.size(), sites.size());
    for (const Site& s : sites) {
        EXPECT_EQ(map.site(s.cell_id).x, s.x);
        EXPECT_EQ(map.site(s.cell_id).y, s.y);
    }
}

TEST(GridSites, RowMajorIds) {
    const auto sites = grid_sites(2, 3, 100);
    ASSERT_EQ(sites.size(), 6u);
    EXPECT_EQ(sites[4].cell_id, 4);
    EXPECT_EQ(sites[4].x, 100);
    EXPECT_EQ(sites[4].y, 100);
}

TEST(AssignCell, Examples) {
    const CellMap single = CellMap::from_sites({{7, 0, 0}});
    EXPECT_EQ(assign_cell(single, 500, -300), 7);

    const CellMap map = two_sites();
    EXPECT_EQ(assign_cell(map, 2, 0), 0);
    EXPECT_EQ(assign_cell(map, 8, 0), 1);
    EXPECT_EQ(assign_cell(map, 5, 0), 0);
    EXPECT_EQ(assign_cell(map, 5, 123), 0);
}

TEST(AssignCell, TieGoesToSmallerIdRegardlessOfOrder) {
    const CellMap map = CellMap::from_sites({{9, 0, 0}, {3, 10, 0}});
    EXPECT_EQ(assign_cell(map, 5, 0), 3);
}

TEST(AssignCell, OutOfBounds) {
    const CellMap map = two_sites();
    EXPECT_THROW(assign_cell(map, 5000, 0), std::domain_error);
}

TEST(AssignCell, MatchesBruteForce) {
    const CellMap map = CellMap::from_sites(random_sites(25, 2000, 2000, 11), 200);
    Rng rng(12);
    const Rect& b = map.bounds();
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(b.x_min, b.x_max);
        const double y = rng.uniform(b.y_min, b.y_max);
        ASSERT_EQ(assign_cell(map, x, y), oracle::nearest_site(map.sites(), x, y));
    }
}

TEST(CellsOverlapping, Examples) {
    const CellMap single = CellMap::from_sites({{4, 0, 0}});
    EXPECT_EQ(cells_overlapping(single, Rect::make(-10, -10, 10, 10)), std::set<CellId>{4});

    const CellMap map = two_sites();
    EXPECT_EQ(cells_overlapping(map, Rect::make(1, -1, 3, 1)), std::set<CellId>{0});
    EXPECT_EQ(cells_overlapping(map, Rect::make(6, -1, 9, 1)), std::set<CellId>{1});
    EXPECT_EQ(cells_overlapping(map, Rect::make(4, -1, 6, 1)), (std::set<CellId>{0, 1}));
}

// Points on the bisector belong to the smaller id, as in assign_cell.
TEST(CellsOverlapping, BisectorContactFollowsTieRule) {
    const CellMap map = two_sites();
    EXPECT_EQ(cells_overlapping(map, Rect::make(1, -1, 5, 1)), std::set<CellId>{0});
    EXPECT_EQ(cells_overlapping(map, Rect::make(5, -1, 9, 1)), (std::set<CellId>{0, 1}));
    for (const Rect& r : {Rect::make(1, -1, 5, 1), Rect::make(5, -1, 9, 1)}) {
        EXPECT_EQ(cells_overlapping(map, r), oracle::sampled_overlap(map.sites(), map.bounds(), r, 0.1));
    }
}

TEST(CellsOverlapping, DisjointRectIsEmpty) {
    const CellMap map = two_sites();
    EXPECT_TRUE(cells_overlapping(map, Rect::make(5000, 5000, 5001, 5001)).empty());
}

TEST(CellsOverlapping, FullBoundsOfSmallGrid) {
    const CellMap map = CellMap::from_sites(grid_sites(3, 3, 10), 5);
    const std::set<CellId> exact = cells_overlapping(map, map.bounds());
    EXPECT_EQ(exact.size(), 9u);
    EXPECT_EQ(exact, oracle::sampled_overlap(map.sites(), map.bounds(), map.bounds(), 0.1));
}

TEST(CellsOverlapping, MatchesSampling) {
    const CellMap map = CellMap::from_sites(random_sites(20, 60, 60, 3), 5);
    Rng rng(4);
    const Rect& b = map.bounds();
    for (int i = 0; i < 40; ++i) {
        const double w = rng.uniform(1, 20);
        const double h = rng.uniform(1, 20);
        const double x = rng.uniform(b.x_min - 5, b.x_max - w + 5);
        const double y = rng.uniform(b.y_min - 5, b.y_max - h + 5);
        const Rect r = Rect::make(x, y, x + w, y + h);
        EXPECT_EQ(cells_overlapping(map, r), oracle::sampled_overlap(map.sites(), b, r, 0.1))
            << "rect " << i;
    }
}

TEST(Rect, MakeRejectsDegenerate) {
    EXPECT_THROW(Rect::make(1, 0, 1, 5), std::invalid_argument);
    EXPECT_THROW(Rect::make(0, 5, 1, 0), std::invalid_argument);
}

TEST(Clustering, SingletonsForKOne) {
    const CellMap map = CellMap::from_sites(grid_sites(2, 5, 100));
    const Clustering c = random_clusters(map, 1, 8);
    std::set<ClusterId> ids;
    for (const auto& [cell, cluster] : c.assignment) ids.insert(cluster);
    EXPECT_EQ(ids.size(), map.size());
}

TEST(Clustering, ChunkSizes) {
    const CellMap map = CellMap::from_sites(grid_sites(2, 5, 100));
    const Clustering c = random_clusters(map, 4, 8);
    std::multiset<std::size_t> sizes;
    std::set<CellId> seen;
    for (const auto& [id, members] : c.members()) {
        sizes.insert(members.size());
        for (CellId m : members) EXPECT_TRUE(seen.insert(m).second);
    }
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{2, 4, 4}));
    EXPECT_EQ(seen.size(), 10u);
}

TEST(Clustering, Deterministic) {
    const CellMap map = CellMap::from_sites(grid_sites(4, 4, 100));
    EXPECT_EQ(random_clusters(map, 3, 99).assignment, random_clusters(map, 3, 99).assignment);
    EXPECT_NE(random_clusters(map, 3, 99).assignment, random_clusters(map, 3, 100).assignment);
}

TEST(Clustering, Errors) {
    const CellMap map = two_sites();
    EXPECT_THROW(random_clusters(map, 0, 1), std::invalid_argument);
    EXPECT_THROW(identity_clustering(map).cluster_of(42), ConfigError);
    EXPECT_EQ(identity_clustering(map).cluster_of(1), 1);
}
