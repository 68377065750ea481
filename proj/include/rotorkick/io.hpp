#pragma once

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "rotorkick/common.hpp"

#ifndef ROTORKICK_VERSION
#define ROTORKICK_VERSION "dev"
#endif

namespace rotorkick {

inline const char* version_string() { return ROTORKICK_VERSION; }

// One rectangular data product.  `meta` is reproduced verbatim in the file
// header so every artifact carries its resolved parameters.
struct OutputTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string cell(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw ConfigError("cannot create directory '" + path.parent_path().string() +
                              "': " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

inline void write_csv(const std::filesystem::path& path, const OutputTable& t) {
    std::ofstream out = detail::open_out(path);
    for (const auto& [k, v] : t.meta) out << "# " << k << " = " << v << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out << t.columns[c] << (c + 1 < t.columns.size() ? "," : "");
    out << "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw DomainError("write_csv: row width does not match the column count");
        for (std::size_t c = 0; c < row.size(); ++c)
            out << detail::cell(row[c]) << (c + 1 < row.size() ? "," : "");
        out << "\n";
    }
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const OutputTable& t) {
    std::ofstream out = detail::open_out(path);
    out << "{\n  \"meta\": {";
    for (std::size_t i = 0; i < t.meta.size(); ++i)
        out << (i ? ",\n           " : "\n           ") << '"'
            << detail::json_escape(t.meta[i].first) << "\": \""
            << detail::json_escape(t.meta[i].second) << '"';
    out << "\n  },\n  \"columns\": [";
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out << (c ? ", " : "") << '"' << detail::json_escape(t.columns[c]) << '"';
    out << "],\n  \"rows\": [\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.columns.size())
            throw DomainError("write_json: row width does not match the column count");
        out << "    [";
        for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
            const double v = t.rows[r][c];
            out << (c ? ", " : "") << (std::isnan(v) ? "null" : detail::cell(v));
        }
        out << (r + 1 < t.rows.size() ? "],\n" : "]\n");
    }
    out << "  ]\n}\n";
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

inline void write_table(const std::filesystem::path& dir, const std::string& stem,
                        const std::string& format, const OutputTable& t) {
    if (format == "json")
        write_json(dir / (stem + ".json"), t);
    else
        write_csv(dir / (stem + ".csv"), t);
}

// Everything needed to rerun one job: the command, its label, and the full
// resolved key set.  The manifest is byte-stable for a given configuration
// except for the single `generated` timestamp line.
struct ManifestJob {
    std::string label;
    std::vector<std::pair<std::string, std::string>> resolved;
};

inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const std::string& preset,
                           const std::vector<ManifestJob>& jobs) {
    std::ofstream out = detail::open_out(path);
    out << "rotorkick " << version_string() << "\n";
    out << "command = " << command << "\n";
    if (!preset.empty()) out << "preset = " << preset << "\n";
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "generated = " << stamp << "\n";
    for (const auto& job : jobs) {
        out << "\n[" << job.label << "]\n";
        for (const auto& [k, v] : job.resolved) out << k << " = " << v << "\n";
    }
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

} // namespace rotorkick
