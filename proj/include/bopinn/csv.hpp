#pragma once

// Small helpers shared by every CSV reader/writer: `#key=value` metadata
// comments, a header row, then comma-separated numeric rows.

#include <bopinn/error.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bopinn::csv {

/// Shortest form that round-trips a double exactly (17 significant digits).
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s) {
    std::string tmp(s);
    // trim
    const auto b = tmp.find_first_not_of(" \t\r");
    const auto e = tmp.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw IoError("empty numeric field");
    tmp = tmp.substr(b, e - b + 1);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size()) throw IoError("bad numeric field '" + tmp + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// In-memory form of a metadata-annotated CSV table.
struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    const std::string* find_meta(std::string_view key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return &v;
        return nullptr;
    }

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IoError("missing column '" + std::string(name) + "'");
    }
};

inline void write(const std::filesystem::path& path, const Table& t) {
    ensure_directory(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& [k, v] : t.meta) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << '\n';
    }
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline Table read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            const auto b = body.find_first_not_of(' ');
            body = b == std::string::npos ? "" : body.substr(b);
            const auto eq = body.find('=');
            if (eq != std::string::npos) t.meta.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (!have_header) {
            t.header = split(line);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& f : split(line)) row.push_back(parse_double(f));
        if (row.size() != t.header.size())
            throw IoError("row width mismatch in '" + path.string() + "'");
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoError("no header row in '" + path.string() + "'");
    return t;
}

}  // namespace bopinn::csv
