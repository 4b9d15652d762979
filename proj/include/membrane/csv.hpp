#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Deterministic CSV output: fixed %.12g formatting, a seed comment header,
// rows emitted in a fixed order regardless of worker parallelism.

namespace membrane {

std::string format_number(double v);

class CsvWriter {
  public:
    CsvWriter(std::vector<std::string> columns, std::uint64_t seed);

    void add_row(const std::vector<std::string>& cells);
    void add_numeric_row(const std::vector<double>& values);

    std::string str() const;
    void write_file(const std::string& path) const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::string> rows_;
    std::uint64_t seed_;
};

// Emit a gnuplot script that reads the CSV at `csv_path`.
std::string gnuplot_script(const std::string& csv_path, const std::vector<std::string>& columns);

}  // namespace membrane
