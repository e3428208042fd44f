#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace coilpilot::telemetry {

// Shortest round-trip text for a double; identical on every platform.
std::string format_double(double v);

class CsvRow {
 public:
  CsvRow& operator<<(double v);
  CsvRow& operator<<(int v);
  CsvRow& operator<<(std::int64_t v);
  CsvRow& operator<<(std::uint64_t v);
  CsvRow& operator<<(bool v);
  CsvRow& operator<<(std::string_view v);
  CsvRow& operator<<(const char* v) { return *this << std::string_view(v); }
  CsvRow& operator<<(const std::string& v) { return *this << std::string_view(v); }

  const std::string& text() const { return text_; }
  std::size_t fields() const { return fields_; }

 private:
  void separate();
  std::string text_;
  std::size_t fields_ = 0;
};

// Writes a header line, rows, and a closing "# end <rows>" trailer.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write(const CsvRow& row);
  void close();
  std::size_t rows() const { return rows_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::vector<std::string> columns_;
  std::size_t rows_ = 0;
  bool closed_ = false;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Index of a column; throws kSchemaMismatch when absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  const std::string& text(std::size_t row, std::size_t col) const { return rows[row][col]; }
};

// Throws kSchemaMismatch when the trailer is missing or the row count or
// field counts disagree with it.
CsvTable read_csv(const std::string& path);

// Plain CSV without a trailer (reference data shipped with the project).
CsvTable read_plain_csv(const std::string& path);

}  // namespace coilpilot::telemetry
