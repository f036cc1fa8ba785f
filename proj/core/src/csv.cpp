#include "dpslr/csv.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "dpslr/errors.hpp"
#include "dpslr/metrics.hpp"

namespace dpslr {

namespace {

double parse_field(const std::string& field, long line) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("expected a number, got '" + field + "'", line);
  }
  return value;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, RangePolicy policy) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty CSV input");
  ++lineno;
  // Tolerate an optional UTF-8 BOM and surrounding whitespace in the header.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  std::string header;
  for (char c : line) {
    if (!std::isspace(static_cast<unsigned char>(c))) header += c;
  }
  if (header != "x,y") {
    throw ParseError("expected header 'x,y', got '" + line + "'", lineno);
  }

  std::vector<DataPoint> points;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("expected two comma-separated columns", lineno);
    }
    if (line.find(',', comma + 1) != std::string::npos) {
      throw ParseError("expected exactly two columns", lineno);
    }
    double x = parse_field(line.substr(0, comma), lineno);
    double y = parse_field(line.substr(comma + 1), lineno);
    if (policy == RangePolicy::Reject) {
      if (x < 0 || x > 1 || y < 0 || y > 1) {
        throw ParseError("value outside [0,1]", lineno);
      }
    }
    points.push_back(DataPoint{x, y});
  }
  if (points.size() < 2) {
    throw ParseError("dataset needs at least 2 rows, got " +
                     std::to_string(points.size()));
  }
  return Dataset(std::move(points), policy);
}

Dataset read_dataset_csv_file(const std::string& path, RangePolicy policy) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_dataset_csv(in, policy);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << "x,y\n";
  for (const auto& p : d.points()) {
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
  }
}

void write_dataset_csv_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_dataset_csv(out, d);
}

}  // namespace dpslr
