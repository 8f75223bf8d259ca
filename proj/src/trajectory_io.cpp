#include "fatigue/trajectory_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const std::string& where) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw ValidationError(where + ": empty value");
    const std::string t = s.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError(where + ": cannot parse number '" + t + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string node_label(const SpaceGrid& grid, int node) {
    const auto xy = grid.coordinate(node);
    if (grid.dimension == 1) return format_double(xy[0]);
    return format_double(xy[0]) + "|" + format_double(xy[1]);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& u, const Grids& grids,
                          const std::string& config_hash) {
    require_trajectory(u, grids, "write_trajectory_csv");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << 't';
    for (int i = 0; i < grids.space.node_count; ++i) out << ',' << node_label(grids.space, i);
    out << '\n';
    for (int k = 0; k <= grids.time.steps; ++k) {
        out << format_double(grids.time.t(k));
        for (int i = 0; i < grids.space.node_count; ++i) out << ',' << format_double(u[k][i]);
        out << '\n';
    }
    if (!out) throw ValidationError("write failed for " + path.string());
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, const Grids& grids) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open trajectory file " + path.string());
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        if (!header_seen) {
            header_seen = true;
            if (static_cast<int>(cells.size()) != grids.space.node_count + 1) {
                throw ValidationError(where + ": header has " + std::to_string(cells.size() - 1) +
                                      " node columns, grid has " + std::to_string(grids.space.node_count));
            }
            for (int i = 0; i < grids.space.node_count; ++i) {
                const auto xy = grids.space.coordinate(i);
                const auto parts = split(cells[static_cast<std::size_t>(i + 1)], '|');
                const double tol = 1e-9 * std::max(grids.space.extents[0], grids.space.extents[1]);
                if (std::abs(parse_number(parts[0], where) - xy[0]) > tol ||
                    (grids.space.dimension == 2 &&
                     (parts.size() < 2 || std::abs(parse_number(parts[1], where) - xy[1]) > tol))) {
                    throw ValidationError(where + ": column " + std::to_string(i + 1) +
                                          " coordinate does not match the grid");
                }
            }
            continue;
        }
        if (static_cast<int>(cells.size()) != grids.space.node_count + 1) {
            throw ValidationError(where + ": expected " + std::to_string(grids.space.node_count + 1) + " columns");
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c, where));
        rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != grids.time.steps + 1) {
        throw ValidationError(path.string() + ": expected " + std::to_string(grids.time.steps + 1) +
                              " time rows, found " + std::to_string(rows.size()));
    }
    Trajectory u = Trajectory::zeros(grids);
    for (int k = 0; k <= grids.time.steps; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        if (std::abs(r[0] - grids.time.t(k)) > 1e-9 * grids.time.final_time) {
            throw ValidationError(path.string() + ": row " + std::to_string(k) + " has time " + format_double(r[0]) +
                                  ", expected " + format_double(grids.time.t(k)));
        }
        for (int i = 0; i < grids.space.node_count; ++i) u[k][i] = r[static_cast<std::size_t>(i + 1)];
    }
    return u;
}

nlohmann::json grid_to_json(const Grids& grids) {
    const auto& s = grids.space;
    nlohmann::json j;
    j["dimension"] = s.dimension;
    j["extents"] = std::vector<double>(s.extents.begin(), s.extents.begin() + s.dimension);
    j["nodes_per_axis"] = std::vector<int>(s.nodes_per_axis.begin(), s.nodes_per_axis.begin() + s.dimension);
    j["T"] = grids.time.final_time;
    j["steps"] = grids.time.steps;
    return j;
}

nlohmann::json trajectory_to_json(const Trajectory& u, const Grids& grids) {
    require_trajectory(u, grids, "trajectory_to_json");
    nlohmann::json j;
    j["grid"] = grid_to_json(grids);
    std::vector<double> times;
    for (int k = 0; k <= grids.time.steps; ++k) times.push_back(grids.time.t(k));
    j["times"] = times;
    nlohmann::json values = nlohmann::json::array();
    for (int k = 0; k <= grids.time.steps; ++k) {
        values.push_back(std::vector<double>(u[k].data(), u[k].data() + u[k].size()));
    }
    j["values"] = std::move(values);
    return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j, const Grids& grids) {
    if (!j.contains("values") || !j["values"].is_array()) throw ValidationError("trajectory JSON lacks 'values'");
    const auto& values = j["values"];
    if (static_cast<int>(values.size()) != grids.time.steps + 1) {
        throw ValidationError("trajectory JSON has wrong number of time slots");
    }
    Trajectory u = Trajectory::zeros(grids);
    for (int k = 0; k <= grids.time.steps; ++k) {
        const auto& row = values[static_cast<std::size_t>(k)];
        if (!row.is_array() || static_cast<int>(row.size()) != grids.space.node_count) {
            throw ValidationError("trajectory JSON row " + std::to_string(k) + " has wrong length");
        }
        for (int i = 0; i < grids.space.node_count; ++i) u[k][i] = row[static_cast<std::size_t>(i)].get<double>();
    }
    return u;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fatigue
