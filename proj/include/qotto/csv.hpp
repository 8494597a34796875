// csv.hpp: RFC-4180 tables with a provenance sidecar

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qotto/errors.hpp"

namespace qotto {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 17 significant digits: doubles round-trip exactly.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_optional(const std::optional<double>& x) {
    return x ? format_double(*x) : std::string();
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size()) {
            throw OutputError("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                              std::to_string(header.size()));
        }
        rows.push_back(std::move(row));
    }
};

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string to_csv(const CsvTable& t) {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_escape(fields[i]);
        os << "\r\n";
    };
    line(t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) throw OutputError("csv: schema mismatch");
        line(r);
    }
    return os.str();
}

inline CsvTable parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            rec.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(rec));
            rec.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw OutputError("csv: unterminated quoted field");
    if (any) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    CsvTable t;
    if (records.empty()) return t;
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) t.add_row(std::move(records[i]));
    return t;
}

// Writes path and path + ".meta". Existing files are kept unless overwrite is set.
inline void emit_csv(const CsvTable& table, const std::filesystem::path& path, const std::string& meta,
                     bool overwrite) {
    namespace fs = std::filesystem;
    fs::path meta_path = path;
    meta_path += ".meta";
    if (!overwrite) {
        for (const auto& p : {path, meta_path}) {
            if (fs::exists(p)) throw OutputError(p.string() + " exists (use --force to overwrite)");
        }
    }
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw OutputError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    const std::string body = to_csv(table);
    for (const auto& [p, content] : {std::pair{path, body}, std::pair{meta_path, meta}}) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw OutputError("cannot open " + p.string() + " for writing");
        out << content;
        if (!out) throw OutputError("write failed for " + p.string());
    }
}

}  // namespace qotto
