#include "coilpilot/telemetry.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "coilpilot/error.hpp"

namespace coilpilot::telemetry {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void CsvRow::separate() {
  if (fields_++ > 0) text_ += ',';
}

CsvRow& CsvRow::operator<<(double v) {
  separate();
  text_ += format_double(v);
  return *this;
}

CsvRow& CsvRow::operator<<(int v) { return *this << static_cast<std::int64_t>(v); }

CsvRow& CsvRow::operator<<(std::int64_t v) {
  separate();
  text_ += std::to_string(v);
  return *this;
}

CsvRow& CsvRow::operator<<(std::uint64_t v) {
  separate();
  text_ += std::to_string(v);
  return *this;
}

CsvRow& CsvRow::operator<<(bool v) {
  separate();
  text_ += v ? '1' : '0';
  return *this;
}

CsvRow& CsvRow::operator<<(std::string_view v) {
  separate();
  for (char c : v) text_ += (c == ',' || c == '\n') ? ';' : c;
  return *this;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : out_(path, std::ios::binary), path_(path), columns_(std::move(columns)) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CsvWriter::write(const CsvRow& row) {
  if (row.fields() != columns_.size()) {
    throw Error(ErrorCode::kSchemaMismatch, path_ + ": row has " + std::to_string(row.fields()) +
                                                " fields, header has " +
                                                std::to_string(columns_.size()));
  }
  out_ << row.text() << '\n';
  ++rows_;
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_ << "# end " << rows_ << '\n';
  out_.close();
  if (!out_) throw Error(ErrorCode::kIo, "failed writing " + path_);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_lines(const std::string& path, bool require_trailer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw Error(ErrorCode::kSchemaMismatch, path + ": missing header");
  }
  if (line.back() == '\r') line.pop_back();
  table.columns = split(line);
  bool trailer = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trailer) throw Error(ErrorCode::kSchemaMismatch, path + ": data after trailer");
    if (line.rfind("# end ", 0) == 0) {
      trailer = true;
      const std::string count = line.substr(6);
      const auto r = std::from_chars(count.data(), count.data() + count.size(), declared);
      if (r.ec != std::errc() || r.ptr != count.data() + count.size()) {
        throw Error(ErrorCode::kSchemaMismatch, path + ": malformed trailer");
      }
      continue;
    }
    if (line.empty()) {
      if (require_trailer) throw Error(ErrorCode::kSchemaMismatch, path + ": empty row");
      continue;
    }
    auto row = split(line);
    if (row.size() != table.columns.size()) {
      throw Error(ErrorCode::kSchemaMismatch,
                  path + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (require_trailer) {
    if (!trailer) throw Error(ErrorCode::kSchemaMismatch, path + ": truncated (no end trailer)");
    if (declared != table.rows.size()) {
      throw Error(ErrorCode::kSchemaMismatch, path + ": trailer declares " +
                                                  std::to_string(declared) + " rows, found " +
                                                  std::to_string(table.rows.size()));
    }
  }
  return table;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error(ErrorCode::kSchemaMismatch, "missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows[row][col];
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "row " + std::to_string(row + 1) + ", column '" +
                                                columns[col] + "': not a number '" + s + "'");
  }
  return v;
}

CsvTable read_csv(const std::string& path) { return read_lines(path, true); }

CsvTable read_plain_csv(const std::string& path) { return read_lines(path, false); }

}  // namespace coilpilot::telemetry
