#include "gfi/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gfi {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc()) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    return std::string(buf, res.ptr);
}

std::string format_int(long long v) { return std::to_string(v); }

int NumericCsv::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

NumericCsv parse_numeric_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    NumericCsv csv;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (!have_header) {
            csv.columns = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != csv.columns.size())
            throw std::runtime_error("csv: row " + std::to_string(lineno) +
                                     " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(csv.columns.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            try {
                std::size_t used = 0;
                row[i] = std::stod(cells[i], &used);
                if (used != cells[i].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::runtime_error("csv: non-numeric cell '" + cells[i] +
                                         "' at row " + std::to_string(lineno));
            }
        }
        csv.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("csv: missing header row");
    return csv;
}

NumericCsv read_numeric_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_numeric_csv(ss.str());
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : width_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buf_.push_back(',');
        buf_ += columns[i];
    }
    buf_.push_back('\n');
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_)
        throw std::invalid_argument("csv: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_.push_back(',');
        buf_ += cells[i];
    }
    buf_.push_back('\n');
}

void CsvWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    out << buf_;
}

} // namespace gfi
