#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tracehide/hexgrid.hpp"
#include "tracehide/rng.hpp"

#include "oracles.hpp"

using namespace tracehide;

namespace {

TessellationConfig cfg_with(double radius, int resolution = 0, bool dedupe = true) {
    TessellationConfig cfg;
    cfg.base_circumradius = radius;
    cfg.resolution = resolution;
    cfg.dedupe_consecutive = dedupe;
    return cfg;
}

GeoPoint at(double lat, double lon, double t = 0.0) { return GeoPoint{lat, lon, t}; }

}  // namespace

TEST_CASE("grid origin maps to cell (0,0)") {
    const auto cell = latlon_to_cell(at(0.0, 0.0), cfg_with(0.01));
    CHECK(cell.q == 0);
    CHECK(cell.r == 0);
}

TEST_CASE("cell assignment is deterministic") {
    const auto cfg = cfg_with(0.02, 3);
    const GeoPoint p = at(41.89, 12.49, 5.0);
    const auto a = latlon_to_cell(p, cfg);
    const auto b = latlon_to_cell(p, cfg);
    CHECK(a == b);
}

TEST_CASE("resolution halves the circumradius") {
    TessellationConfig cfg = cfg_with(0.08, 0);
    CHECK(cfg.circumradius() == Catch::Approx(0.08));
    cfg.resolution = 3;
    CHECK(cfg.circumradius() == Catch::Approx(0.01));
}

TEST_CASE("displacement within half a radius stays, past the edge crosses") {
    const auto cfg = cfg_with(0.05);
    const double radius = cfg.circumradius();
    // start from the center of an arbitrary cell
    const HexCell home{3, -2};
    double cx, cy;
    cell_center(home, radius, cx, cy);
    REQUIRE(latlon_to_cell(at(cy, cx), cfg) == home);

    // east neighbor (q+1, r) center lies sqrt(3)R away; shared edge at sqrt(3)/2 R
    const HexCell east{home.q + 1, home.r};
    double ex, ey;
    cell_center(east, radius, ex, ey);
    const double ux = (ex - cx) / (sqrt3 * radius);
    const double uy = (ey - cy) / (sqrt3 * radius);

    const double inside = 0.4 * radius;
    CHECK(latlon_to_cell(at(cy + uy * inside, cx + ux * inside), cfg) == home);

    const double beyond = 0.95 * radius;  // past the edge at ~0.866R
    CHECK(latlon_to_cell(at(cy + uy * beyond, cx + ux * beyond), cfg) == east);
}

TEST_CASE("cell assignment matches the nearest-center oracle") {
    const auto cfg = cfg_with(0.05);
    const double radius = cfg.circumradius();
    Rng rng(20250809);
    for (int i = 0; i < 2000; ++i) {
        const double lon = rng.uniform(-1.0, 1.0);
        const double lat = rng.uniform(-1.0, 1.0);
        const auto got = latlon_to_cell(at(lat, lon), cfg);
        const auto expected = oracles::nearest_center_cell(lon, lat, radius);
        REQUIRE(got == expected);

        // containment: the point sits within the circumradius of its center
        double cx, cy;
        cell_center(got, radius, cx, cy);
        REQUIRE(std::hypot(lon - cx, lat - cy) <= radius + 1e-12);
    }
}

TEST_CASE("out-of-range coordinates are rejected") {
    const auto cfg = cfg_with(0.01);
    CHECK_THROWS_AS(latlon_to_cell(at(91.0, 0.0), cfg), input_error);
    CHECK_THROWS_AS(latlon_to_cell(at(0.0, -181.0), cfg), input_error);
    CHECK_THROWS_AS(latlon_to_cell(GeoPoint{0.0, 0.0, -1.0}, cfg), input_error);
    CHECK_THROWS_AS(latlon_to_cell(at(0.0, 0.0), cfg_with(-0.5)), input_error);
}

TEST_CASE("token dictionary interns densely and invertibly") {
    TokenDictionary dict;
    Rng rng(7);
    std::vector<std::pair<int, HexCell>> inserted;
    for (int i = 0; i < 500; ++i) {
        const HexCell cell{static_cast<std::int64_t>(rng.below(40)) - 20,
                           static_cast<std::int64_t>(rng.below(40)) - 20};
        const int res = static_cast<int>(rng.below(3));
        const int id = dict.intern(res, cell);
        inserted.emplace_back(id, cell);
        CHECK(dict.lookup(res, cell) == id);
        const auto& entry = dict.cell_of(id);
        CHECK(entry.resolution == res);
        CHECK(entry.cell == cell);
    }
    // identifiers dense in [0, |B|)
    for (std::size_t id = 0; id < dict.size(); ++id)
        CHECK_NOTHROW(dict.cell_of(static_cast<int>(id)));
    CHECK_THROWS_AS(dict.cell_of(static_cast<int>(dict.size())), input_error);
}

TEST_CASE("tokenize collapses consecutive duplicates when configured") {
    const auto cfg = cfg_with(0.1);
    TokenDictionary dict;
    // three points in the same cell
    const std::vector<GeoPoint> same = {at(0.001, 0.001, 1), at(0.002, -0.001, 2),
                                        at(-0.001, 0.002, 3)};
    CHECK(tokenize_trace(same, cfg, dict) == std::vector<int>{0});

    auto no_dedupe = cfg;
    no_dedupe.dedupe_consecutive = false;
    TokenDictionary dict2;
    CHECK(tokenize_trace(same, no_dedupe, dict2) == std::vector<int>{0, 0, 0});
}

TEST_CASE("tokenize keeps A,B,A as three tokens") {
    const auto cfg = cfg_with(0.1);
    const double radius = cfg.circumradius();
    TokenDictionary dict;
    double ax, ay, bx, by;
    cell_center(HexCell{0, 0}, radius, ax, ay);
    cell_center(HexCell{1, 0}, radius, bx, by);
    const std::vector<GeoPoint> points = {at(ay, ax, 1), at(by, bx, 2), at(ay, ax, 3)};
    const auto tokens = tokenize_trace(points, cfg, dict);
    CHECK(tokens == std::vector<int>{0, 1, 0});
}

TEST_CASE("eastward walk emits one token per crossed boundary") {
    const auto cfg = cfg_with(0.05);
    const double radius = cfg.circumradius();
    // sample a straight east-ward path densely enough to visit every cell
    std::vector<GeoPoint> points;
    const double y = 0.31 * radius;  // off-center latitude inside the row
    for (int i = 0; i <= 400; ++i)
        points.push_back(at(y, -4.0 * radius + i * 0.02 * radius, i + 1.0));

    TokenDictionary dict;
    const auto tokens = tokenize_trace(points, cfg, dict);

    // oracle: recompute the collapsed cell sequence point by point
    std::vector<HexCell> cells;
    for (const auto& p : points) {
        const auto cell = oracles::nearest_center_cell(p.lon, p.lat, radius);
        if (cells.empty() || !(cells.back() == cell)) cells.push_back(cell);
    }
    REQUIRE(tokens.size() == cells.size());
    CHECK(tokens.size() >= 4);  // crossed several boundaries
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& entry = dict.cell_of(tokens[i]);
        CHECK(entry.cell == cells[i]);
        if (i > 0) CHECK(cells_adjacent(cells[i - 1], cells[i]));
    }
}

TEST_CASE("tokenize validates ordering and emptiness") {
    const auto cfg = cfg_with(0.1);
    TokenDictionary dict;
    CHECK_THROWS_AS(tokenize_trace({}, cfg, dict), input_error);
    const std::vector<GeoPoint> unsorted = {at(0, 0, 2), at(0, 0, 1)};
    CHECK_THROWS_AS(tokenize_trace(unsorted, cfg, dict), input_error);
    const std::vector<GeoPoint> duplicate_t = {at(0, 0, 1), at(0.2, 0.2, 1)};
    CHECK_THROWS_AS(tokenize_trace(duplicate_t, cfg, dict), input_error);
}

TEST_CASE("tokenizing an already-collapsed path changes nothing") {
    const auto cfg = cfg_with(0.05);
    const double radius = cfg.circumradius();
    Rng rng(99);
    TokenDictionary dict;

    // random walk over cells, then place one point at each emitted cell center
    std::vector<GeoPoint> walk;
    for (int i = 0; i < 60; ++i)
        walk.push_back(at(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), i + 1.0));
    const auto tokens = tokenize_trace(walk, cfg, dict);

    std::vector<GeoPoint> collapsed;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        double cx, cy;
        cell_center(dict.cell_of(tokens[i]).cell, radius, cx, cy);
        collapsed.push_back(at(cy, cx, static_cast<double>(i + 1)));
    }
    CHECK(tokenize_trace(collapsed, cfg, dict) == tokens);
}

TEST_CASE("identical inputs and dictionary state give identical output") {
    const auto cfg = cfg_with(0.03, 1);
    Rng rng(5);
    std::vector<GeoPoint> points;
    for (int i = 0; i < 40; ++i)
        points.push_back(at(rng.uniform(-1, 1), rng.uniform(-1, 1), i + 1.0));

    TokenDictionary dict_a, dict_b;
    dict_a.intern(cfg.resolution, HexCell{9, 9});  // same pre-state on both
    dict_b.intern(cfg.resolution, HexCell{9, 9});
    CHECK(tokenize_trace(points, cfg, dict_a) == tokenize_trace(points, cfg, dict_b));
}

TEST_CASE("raw point CSV parses groups and rejects malformed rows") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tracehide_csv_test";
    fs::create_directories(dir);
    const fs::path good = dir / "good.csv";
    {
        std::ofstream out(good);
        out << "user_id,lat,lon,t,trace_id\n";
        out << "7,0.1,0.2,1,0\n";
        out << "7,0.2,0.3,2,0\n";
        out << "7,0.5,0.5,1,1\n";
        out << "3,0.0,0.0,1,0\n";
    }
    const auto traces = load_points_csv(good.string());
    REQUIRE(traces.size() == 3);
    CHECK(traces[0].user_id == 7);
    CHECK(traces[0].points.size() == 2);
    CHECK(traces[1].trace_id == 1);
    CHECK(traces[2].user_id == 3);

    const fs::path bad = dir / "bad.csv";
    {
        std::ofstream out(bad);
        out << "user_id,lat,lon,t\n";
        out << "1,0.1,0.2,1\n";
        out << "1,not_a_number,0.2,2\n";
    }
    try {
        load_points_csv(bad.string());
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }

    const fs::path out_of_range = dir / "range.csv";
    {
        std::ofstream out(out_of_range);
        out << "user_id,lat,lon,t\n";
        out << "1,95.0,0.2,1\n";
    }
    CHECK_THROWS_AS(load_points_csv(out_of_range.string()), parse_error);
    fs::remove_all(dir);
}
