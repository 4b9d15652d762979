#include "membrane/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace membrane {

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns, std::uint64_t seed)
    : columns_(std::move(columns)), seed_(seed) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
        throw std::invalid_argument("CsvWriter: row width mismatch");
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    rows_.push_back(std::move(line));
}

void CsvWriter::add_numeric_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    add_row(cells);
}

std::string CsvWriter::str() const {
    std::ostringstream os;
    os << "# seed=" << seed_ << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) os << ',';
        os << columns_[i];
    }
    os << "\n";
    for (const std::string& r : rows_) os << r << "\n";
    return os.str();
}

void CsvWriter::write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("CsvWriter: cannot open " + path);
    f << str();
}

std::string gnuplot_script(const std::string& csv_path, const std::vector<std::string>& columns) {
    std::ostringstream os;
    os << "set datafile separator ','\n";
    os << "set logscale x\n";
    os << "set key left top\n";
    os << "set xlabel '" << (columns.empty() ? "x" : columns[0]) << "'\n";
    os << "plot ";
    for (std::size_t i = 1; i < columns.size(); ++i) {
        if (i > 1) os << ", \\\n     ";
        os << "'" << csv_path << "' using 1:" << (i + 1) << " with linespoints title '"
           << columns[i] << "'";
    }
    os << "\n";
    return os.str();
}

}  // namespace membrane
