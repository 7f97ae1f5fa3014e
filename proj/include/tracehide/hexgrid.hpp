#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tracehide/common.hpp"

namespace tracehide {

inline constexpr double sqrt3 = 1.7320508075688772;

struct GeoPoint {
    double lat = 0.0;  // degrees in [-90, 90]
    double lon = 0.0;  // degrees in [-180, 180]
    double t = 0.0;    // seconds since epoch
};

inline void validate(const GeoPoint& p) {
    if (!std::isfinite(p.lat) || p.lat < -90.0 || p.lat > 90.0)
        throw input_error("GeoPoint: latitude out of range [-90, 90]");
    if (!std::isfinite(p.lon) || p.lon < -180.0 || p.lon > 180.0)
        throw input_error("GeoPoint: longitude out of range [-180, 180]");
    if (!std::isfinite(p.t) || p.t < 0.0)
        throw input_error("GeoPoint: timestamp must be finite and non-negative");
}

// Pointy-top hexagonal tessellation of the raw lon/lat plane. The
// circumradius halves with every resolution step, mirroring how nested
// hierarchical grids refine.
struct TessellationConfig {
    int resolution = 0;
    double base_circumradius = 0.01;  // degrees, at resolution 0
    bool dedupe_consecutive = true;

    double circumradius() const {
        return base_circumradius / std::pow(2.0, resolution);
    }
};

inline void validate(const TessellationConfig& cfg) {
    if (cfg.resolution < 0)
        throw input_error("TessellationConfig: resolution must be non-negative");
    if (!(cfg.base_circumradius > 0.0) || !std::isfinite(cfg.base_circumradius))
        throw input_error("TessellationConfig: base_circumradius must be positive");
    if (!(cfg.circumradius() > 0.0))
        throw input_error("TessellationConfig: effective circumradius underflowed to zero");
}

// Axial coordinates, pointy-top orientation.
struct HexCell {
    std::int64_t q = 0;
    std::int64_t r = 0;

    bool operator==(const HexCell&) const = default;
};

// center of a cell in the lon/lat plane (x = lon, y = lat)
inline void cell_center(const HexCell& c, double radius, double& x, double& y) {
    x = radius * sqrt3 * (static_cast<double>(c.q) + static_cast<double>(c.r) / 2.0);
    y = radius * 1.5 * static_cast<double>(c.r);
}

// Standard cube rounding: round each cube coordinate, recompute the one
// with the largest rounding error so x + y + z = 0 again. Resolves edge
// and vertex ties deterministically.
inline HexCell cube_round(double qf, double rf) {
    const double xf = qf;
    const double zf = rf;
    const double yf = -xf - zf;

    double rx = std::round(xf);
    double ry = std::round(yf);
    double rz = std::round(zf);

    const double dx = std::fabs(rx - xf);
    const double dy = std::fabs(ry - yf);
    const double dz = std::fabs(rz - zf);

    if (dx > dy && dx > dz)
        rx = -ry - rz;
    else if (dy > dz)
        ry = -rx - rz;
    else
        rz = -rx - ry;

    return HexCell{static_cast<std::int64_t>(rx), static_cast<std::int64_t>(rz)};
}

inline HexCell latlon_to_cell(const GeoPoint& p, const TessellationConfig& cfg) {
    validate(p);
    validate(cfg);
    const double radius = cfg.circumradius();
    const double x = p.lon;
    const double y = p.lat;
    const double qf = (sqrt3 / 3.0 * x - y / 3.0) / radius;
    const double rf = (2.0 / 3.0 * y) / radius;
    return cube_round(qf, rf);
}

inline bool cells_adjacent(const HexCell& a, const HexCell& b) {
    const std::int64_t dq = b.q - a.q;
    const std::int64_t dr = b.r - a.r;
    return (dq == 1 && dr == 0) || (dq == -1 && dr == 0) || (dq == 0 && dr == 1) ||
           (dq == 0 && dr == -1) || (dq == 1 && dr == -1) || (dq == -1 && dr == 1);
}

// Interns (resolution, q, r) triples as dense token ids, in first-seen
// order. cell_to_id and id_to_cell stay exact inverses.
class TokenDictionary {
public:
    struct Entry {
        int resolution;
        HexCell cell;
    };

    int intern(int resolution, const HexCell& cell) {
        const Key key{resolution, cell.q, cell.r};
        auto it = cell_to_id_.find(key);
        if (it != cell_to_id_.end()) return it->second;
        const int id = static_cast<int>(id_to_cell_.size());
        cell_to_id_.emplace(key, id);
        id_to_cell_.push_back(Entry{resolution, cell});
        return id;
    }

    // -1 when the cell has not been registered
    int lookup(int resolution, const HexCell& cell) const {
        auto it = cell_to_id_.find(Key{resolution, cell.q, cell.r});
        return it == cell_to_id_.end() ? -1 : it->second;
    }

    const Entry& cell_of(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= id_to_cell_.size())
            throw input_error("TokenDictionary: token id out of range");
        return id_to_cell_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return id_to_cell_.size(); }

private:
    struct Key {
        int resolution;
        std::int64_t q;
        std::int64_t r;

        bool operator==(const Key&) const = default;
    };

    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            auto mix = [&h](std::uint64_t v) {
                h ^= v;
                h *= 0x100000001b3ULL;
            };
            mix(static_cast<std::uint64_t>(k.resolution));
            mix(static_cast<std::uint64_t>(k.q));
            mix(static_cast<std::uint64_t>(k.r));
            return static_cast<std::size_t>(h);
        }
    };

    std::unordered_map<Key, int, KeyHash> cell_to_id_;
    std::vector<Entry> id_to_cell_;
};

// Maps a time-ordered point sequence to interned cell tokens. Runs of
// identical consecutive tokens collapse to one when the config says so.
inline std::vector<int> tokenize_trace(const std::vector<GeoPoint>& points,
                                       const TessellationConfig& cfg,
                                       TokenDictionary& dict) {
    if (points.empty()) throw input_error("tokenize_trace: empty trajectory");
    validate(cfg);
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i - 1].t < points[i].t))
            throw input_error("tokenize_trace: timestamps must be strictly increasing");
    }
    std::vector<int> tokens;
    tokens.reserve(points.size());
    for (const GeoPoint& p : points) {
        const int id = dict.intern(cfg.resolution, latlon_to_cell(p, cfg));
        if (cfg.dedupe_consecutive && !tokens.empty() && tokens.back() == id) continue;
        tokens.push_back(id);
    }
    return tokens;
}

// One raw trace from the input CSV: all rows sharing (user_id, trace_id),
// in file order.
struct RawTrace {
    std::int64_t user_id = 0;
    std::int64_t trace_id = 0;
    std::vector<GeoPoint> points;
};

// Reads the raw point CSV: header `user_id,lat,lon,t` with an optional
// trailing `trace_id` column. Without trace_id every user contributes a
// single trace. Traces are returned in first-appearance order.
inline std::vector<RawTrace> load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");

    auto split_csv = [](const std::string& s) {
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(s);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!s.empty() && s.back() == ',') fields.emplace_back();
        return fields;
    };

    auto header = split_csv(line);
    for (auto& h : header) {
        while (!h.empty() && (h.back() == '\r' || h.back() == ' ')) h.pop_back();
    }
    const bool has_trace_id = header.size() == 5 && header[4] == "trace_id";
    if (!(header.size() == 4 || has_trace_id) || header[0] != "user_id" ||
        header[1] != "lat" || header[2] != "lon" || header[3] != "t")
        throw parse_error(path + ": expected header user_id,lat,lon,t[,trace_id]");

    std::vector<RawTrace> traces;
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> group_index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw parse_error(path + ":" + std::to_string(line_no) + ": wrong field count");
        try {
            RawTrace key;
            key.user_id = std::stoll(fields[0]);
            GeoPoint p{std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3])};
            key.trace_id = has_trace_id ? std::stoll(fields[4]) : 0;
            if (key.user_id < 0)
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": user_id must be non-negative");
            validate(p);
            const auto gk = std::make_pair(key.user_id, key.trace_id);
            auto it = group_index.find(gk);
            if (it == group_index.end()) {
                group_index.emplace(gk, traces.size());
                key.points.push_back(p);
                traces.push_back(std::move(key));
            } else {
                traces[it->second].points.push_back(p);
            }
        } catch (const parse_error&) {
            throw;
        } catch (const input_error& e) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception&) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    if (traces.empty()) throw parse_error(path + ": no data rows");
    return traces;
}

}  // namespace tracehide
