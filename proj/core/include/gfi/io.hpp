#pragma once

#include <string>
#include <vector>

namespace gfi {

// Deterministic numeric formatting shared by every emitter: shortest form
// that round-trips a double (17 significant digits), plain decimal for
// integers. Fixed formatting keeps repeated runs byte-identical.
std::string format_double(double v);
std::string format_int(long long v);

// Headered CSV with purely numeric cells. Throws on missing file, ragged
// rows, or non-numeric payload cells.
struct NumericCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

NumericCsv read_numeric_csv(const std::string& path);
NumericCsv parse_numeric_csv(const std::string& text);

// Row-by-row CSV assembly with a fixed header.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);

    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return buf_; }
    void save(const std::string& path) const;

private:
    std::size_t width_;
    std::string buf_;
};

} // namespace gfi
