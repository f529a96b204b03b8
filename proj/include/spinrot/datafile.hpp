#pragma once

// Delimiter-separated text with a '#'-prefixed "key = value" metadata header.
// A line "## section: <name>" opens a named table; its first line is the
// column header. Files without section markers hold one unnamed table.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spinrot {

struct DataTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // 1-based source line of each row, when read
};

struct DataFile {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<DataTable> tables;

    std::optional<std::string> meta(const std::string& key) const;
    /// Throws IoError when the key is absent or not a number.
    double meta_number(const std::string& key) const;
    const DataTable* table(const std::string& name) const;
    void set(std::string key, std::string value);
};

/// Shortest representation that reads back to the same double.
std::string format_number(double v);

std::string render(const DataFile& file);
void write_data_file(const std::filesystem::path& path, const DataFile& file);
/// Throws IoError with the file name and line number on malformed input.
DataFile read_data_file(const std::filesystem::path& path);
DataFile parse_data_file(const std::string& text, const std::string& source);

/// Parses a cell as a double; throws IoError naming source and line.
double parse_cell(const std::string& cell, const std::string& source, std::size_t line);

}  // namespace spinrot
