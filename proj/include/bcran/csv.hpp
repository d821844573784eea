#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bcran {

std::string format_sig9(double v);  // 9 significant digits
std::string csv_escape(const std::string& field);

// RFC-4180-style table with an optional leading "# ..." provenance comment.
class CsvWriter {
 public:
    explicit CsvWriter(std::vector<std::string> columns);

    void set_provenance(std::string comment);  // written as "# <comment>"
    void add_row(std::vector<std::string> fields);

    std::string to_string() const;
    void write_file(const std::string& path) const;

    std::size_t rows() const { return rows_.size(); }

 private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
    std::string provenance_;
};

}  // namespace bcran
