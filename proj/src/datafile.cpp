#include "spinrot/datafile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "spinrot/errors.hpp"

namespace spinrot {

namespace {

constexpr char kDelimiter = ',';
constexpr std::string_view kSection = "## section:";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, kDelimiter)) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == kDelimiter) cells.emplace_back();
    return cells;
}

std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += kDelimiter;
        out += cells[i];
    }
    return out;
}

}  // namespace

std::optional<std::string> DataFile::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return std::nullopt;
}

double DataFile::meta_number(const std::string& key) const {
    const auto v = meta(key);
    if (!v) throw IoError("missing metadata key '" + key + "'");
    try {
        std::size_t used = 0;
        const double x = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return x;
    } catch (const std::exception&) {
        throw IoError("metadata key '" + key + "' is not a number: '" + *v + "'");
    }
}

const DataTable* DataFile::table(const std::string& name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

void DataFile::set(std::string key, std::string value) {
    for (auto& [k, v] : metadata) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    metadata.emplace_back(std::move(key), std::move(value));
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{}", v);
}

std::string render(const DataFile& file) {
    std::string out;
    for (const auto& [k, v] : file.metadata) out += "# " + k + " = " + v + "\n";
    for (const auto& t : file.tables) {
        if (!t.name.empty()) out += std::string(kSection) + " " + t.name + "\n";
        out += join(t.columns) + "\n";
        for (const auto& row : t.rows) out += join(row) + "\n";
    }
    return out;
}

void write_data_file(const std::filesystem::path& path, const DataFile& file) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << render(file);
    if (!out) throw IoError("write failed for " + path.string());
}

DataFile parse_data_file(const std::string& text, const std::string& source) {
    DataFile file;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    DataTable* current = nullptr;
    bool expect_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.rfind(kSection, 0) == 0) {
            file.tables.push_back({trim(line.substr(kSection.size())), {}, {}, {}});
            current = &file.tables.back();
            expect_header = true;
            continue;
        }
        if (line.front() == '#') {
            const auto body = line.substr(1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;  // free comment
            file.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
            continue;
        }
        if (!current) {
            file.tables.push_back({});
            current = &file.tables.back();
            expect_header = true;
        }
        auto cells = split(line);
        if (expect_header) {
            current->columns = std::move(cells);
            expect_header = false;
            continue;
        }
        if (cells.size() != current->columns.size()) {
            throw IoError(fmt::format("{}:{}: expected {} columns, found {}", source, lineno,
                                      current->columns.size(), cells.size()));
        }
        current->rows.push_back(std::move(cells));
        current->row_lines.push_back(lineno);
    }
    return file;
}

DataFile read_data_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_data_file(text.str(), path.string());
}

double parse_cell(const std::string& cell, const std::string& source, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw IoError(fmt::format("{}:{}: not a number: '{}'", source, line, cell));
    }
}

}  // namespace spinrot
