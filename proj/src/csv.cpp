#include "bcran/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bcran {

std::string format_sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string csv_escape(const std::string& field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw std::invalid_argument("CsvWriter: no columns");
}

void CsvWriter::set_provenance(std::string comment) { provenance_ = std::move(comment); }

void CsvWriter::add_row(std::vector<std::string> fields) {
    if (fields.size() != columns_.size())
        throw std::invalid_argument("CsvWriter: row width does not match header");
    rows_.push_back(std::move(fields));
}

std::string CsvWriter::to_string() const {
    std::ostringstream os;
    if (!provenance_.empty()) os << "# " << provenance_ << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os << (i ? "," : "") << csv_escape(columns_[i]);
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(row[i]);
        os << "\n";
    }
    return os.str();
}

void CsvWriter::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << to_string();
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace bcran
