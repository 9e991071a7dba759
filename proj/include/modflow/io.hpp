#pragma once

// Plain-text persistence: snapshot CSV, measure CSV and JSON-lines entropy
// reports. Doubles are written with 17 significant digits so that reading a
// file back reproduces every value bit for bit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modflow/errors.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/measures.hpp"

namespace modflow::io {

inline constexpr const char* kSnapshotSchema = "# modflow-snapshot v1";
inline constexpr const char* kMeasureSchema = "# modflow-measure v1";
inline constexpr const char* kSeriesSchema = "# modflow-series v1";
inline constexpr const char* kStepsSchema = "# modflow-steps v1";
inline constexpr int kEntropySchemaVersion = 1;

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError(where + ": trailing characters in '" + s + "'");
        return d;
    } catch (const std::logic_error&) {
        throw FormatError(where + ": not a number: '" + s + "'");
    }
}

inline long parse_long(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw FormatError(where + ": trailing characters in '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw FormatError(where + ": not an integer: '" + s + "'");
    }
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    return is;
}

inline std::string expect_line(std::istream& is, const std::string& where) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError(where + ": unexpected end of file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// ---------------------------------------------------------------------------
// Snapshots:
//   # modflow-snapshot v1
//   n1,n2,t
//   <n1>,<n2>,<t>
//   i,j,u,v
//   one row per node in row-major order

inline void write_snapshot(std::ostream& os, const MapState& s) {
    const DomainGrid& g = s.grid();
    os << kSnapshotSchema << "\n" << "n1,n2,t\n" << g.n1() << "," << g.n2() << "," << fmt(s.t()) << "\n" << "i,j,u,v\n";
    for (std::size_t i = 0; i < g.n1(); ++i) {
        for (std::size_t j = 0; j < g.n2(); ++j) {
            os << i << "," << j << "," << fmt(s.u()(i, j)) << "," << fmt(s.v()(i, j)) << "\n";
        }
    }
}

inline void write_snapshot(const std::filesystem::path& path, const MapState& s) {
    auto os = open_out(path);
    write_snapshot(os, s);
}

inline MapState read_snapshot(std::istream& is, const std::string& where = "snapshot") {
    if (expect_line(is, where) != kSnapshotSchema) throw FormatError(where + ": missing schema line");
    if (expect_line(is, where) != "n1,n2,t") throw FormatError(where + ": bad header");
    const auto dims = split(expect_line(is, where));
    if (dims.size() != 3) throw FormatError(where + ": bad dimension line");
    const long n1 = parse_long(dims[0], where);
    const long n2 = parse_long(dims[1], where);
    const double t = parse_double(dims[2], where);
    if (n1 < 1 || n2 < 1) throw FormatError(where + ": bad grid size");
    if (expect_line(is, where) != "i,j,u,v") throw FormatError(where + ": bad column header");
    const DomainGrid grid(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2));
    ScalarField u(grid);
    ScalarField v(grid);
    for (std::size_t i = 0; i < grid.n1(); ++i) {
        for (std::size_t j = 0; j < grid.n2(); ++j) {
            const std::string row_where = where + " row (" + std::to_string(i) + "," + std::to_string(j) + ")";
            const auto cols = split(expect_line(is, row_where));
            if (cols.size() != 4) throw FormatError(row_where + ": expected 4 columns");
            if (parse_long(cols[0], row_where) != static_cast<long>(i) ||
                parse_long(cols[1], row_where) != static_cast<long>(j)) {
                throw FormatError(row_where + ": rows out of order");
            }
            u(i, j) = parse_double(cols[2], row_where);
            v(i, j) = parse_double(cols[3], row_where);
        }
    }
    return {std::move(u), std::move(v), t};
}

inline MapState read_snapshot(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_snapshot(is, path.string());
}

// ---------------------------------------------------------------------------
// Measures:
//   # modflow-measure v1 nx=<nx> ny=<ny> y_max=<y_max> t=<t>
//   bin_ix,bin_iy,mass
//   one row per bin; the overflow bin is (-1,-1)

inline void write_measure(std::ostream& os, const FundamentalDomainBinning& b, std::span<const double> mass,
                          double t) {
    os << kMeasureSchema << " nx=" << b.nx() << " ny=" << b.ny() << " y_max=" << fmt(b.y_max()) << " t=" << fmt(t)
       << "\n"
       << "bin_ix,bin_iy,mass\n";
    for (std::size_t k = 0; k < b.size(); ++k) {
        const Bin& bin = b.bin(k);
        os << bin.ix << "," << bin.iy << "," << fmt(mass[k]) << "\n";
    }
}

inline void write_measure(const std::filesystem::path& path, const PushforwardMeasure& mu) {
    auto os = open_out(path);
    write_measure(os, mu.binning(), mu.masses(), mu.t());
}

inline PushforwardMeasure read_measure(std::istream& is, const std::string& where = "measure") {
    const std::string head = expect_line(is, where);
    if (head.rfind(kMeasureSchema, 0) != 0) throw FormatError(where + ": missing schema line");
    long nx = -1, ny = -1;
    double y_max = 0.0, t = 0.0;
    std::istringstream hs(head.substr(std::string(kMeasureSchema).size()));
    std::string tok;
    int seen = 0;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError(where + ": bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "nx") nx = parse_long(val, where);
        else if (key == "ny") ny = parse_long(val, where);
        else if (key == "y_max") y_max = parse_double(val, where);
        else if (key == "t") t = parse_double(val, where);
        else throw FormatError(where + ": unknown header key '" + key + "'");
        ++seen;
    }
    if (seen != 4) throw FormatError(where + ": incomplete header");
    auto binning = std::make_shared<const FundamentalDomainBinning>(static_cast<int>(nx), static_cast<int>(ny), y_max);
    if (expect_line(is, where) != "bin_ix,bin_iy,mass") throw FormatError(where + ": bad column header");
    std::vector<double> mass(binning->size());
    for (std::size_t k = 0; k < binning->size(); ++k) {
        const auto cols = split(expect_line(is, where));
        if (cols.size() != 3) throw FormatError(where + ": expected 3 columns");
        const Bin& bin = binning->bin(k);
        if (parse_long(cols[0], where) != bin.ix || parse_long(cols[1], where) != bin.iy) {
            throw FormatError(where + ": bin order does not match the binning");
        }
        mass[k] = parse_double(cols[2], where);
    }
    return {std::move(binning), std::move(mass), t};
}

inline PushforwardMeasure read_measure(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_measure(is, path.string());
}

// ---------------------------------------------------------------------------
// Entropy reports: a header object, then one JSON object per line.

inline nlohmann::json entropy_header() {
    return {{"schema", "modflow-entropy"}, {"version", kEntropySchemaVersion}};
}

inline nlohmann::json to_json(const EntropyReport& r) {
    return {{"t", r.t},
            {"H", r.entropy},
            {"rho_max", r.rho_max},
            {"tail_mass", r.tail_mass},
            {"degenerate_fraction", r.degenerate_fraction}};
}

inline EntropyReport entropy_from_json(const nlohmann::json& j) {
    EntropyReport r;
    r.t = j.at("t").get<double>();
    r.entropy = j.at("H").get<double>();
    r.rho_max = j.at("rho_max").get<double>();
    r.tail_mass = j.at("tail_mass").get<double>();
    r.degenerate_fraction = j.at("degenerate_fraction").get<double>();
    return r;
}

}  // namespace modflow::io
