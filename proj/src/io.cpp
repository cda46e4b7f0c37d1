#include "xband/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "xband/error.hpp"

namespace xband {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

double parse_double(const std::string& field, const char* what) {
  if (field == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw SchemaError(std::string("trailing characters in ") + what);
    return v;
  } catch (const std::logic_error&) {
    throw SchemaError(std::string("cannot parse ") + what + " from '" + field + "'");
  }
}

std::uint64_t parse_u64(const std::string& field, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw SchemaError(std::string("cannot parse ") + what + " from '" + field + "'");
  }
  return v;
}

bool skip_line(const std::string& line) { return line.empty() || line == "\r" || line.front() == '#'; }

}  // namespace

void write_constellation_csv(std::ostream& out, const Constellation3D& c) {
  out << "index,x_i,x_q,x_o\n";
  for (int i = 0; i < c.size(); ++i) {
    const auto& p = c.points[i];
    out << i << ',' << format_sig(p[0], 9) << ',' << format_sig(p[1], 9) << ',' << format_sig(p[2], 9) << '\n';
  }
}

std::vector<Vec3> read_constellation_csv(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && skip_line(line)) {
  }
  if (split_csv_line(line) != std::vector<std::string>{"index", "x_i", "x_q", "x_o"}) {
    throw SchemaError("constellation CSV must start with index,x_i,x_q,x_o");
  }
  std::vector<Vec3> points;
  while (std::getline(in, line)) {
    if (skip_line(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw SchemaError("constellation row needs 4 fields");
    if (parse_u64(f[0], "index") != points.size()) throw SchemaError("constellation indices must be 0..M-1 in order");
    points.push_back({parse_double(f[1], "x_i"), parse_double(f[2], "x_q"), parse_double(f[3], "x_o")});
  }
  return points;
}

std::string constellation_sidecar_json(const Constellation3D& c) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(c.kind));
  j["theta"] = c.map ? nlohmann::json(c.map->theta) : nlohmann::json(nullptr);
  j["i_d"] = c.map ? nlohmann::json(c.map->i_d) : nlohmann::json(nullptr);
  j["m"] = c.size();
  return j.dump();
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  for (int i = 0; i < cm.order; ++i) {
    for (int j = 0; j < cm.order; ++j) out << (j ? "," : "") << cm.at(i, j);
    out << '\n';
  }
}

void write_result_row(std::ostream& out, const ResultRow& row) {
  out << row.scheme << ',' << format_real(row.gamma1_db) << ',' << format_real(row.gamma2_db) << ',' << row.metric
      << ',' << format_real(row.value) << ',' << format_real(row.std_error) << ',' << row.n << ',' << row.seed
      << '\n';
}

std::vector<ResultRow> read_results(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && skip_line(line)) {
  }
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != kResultHeader) throw SchemaError("result CSV must start with " + std::string(kResultHeader));
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (skip_line(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw SchemaError("result row needs 8 fields: " + line);
    rows.push_back({f[0], parse_double(f[1], "gamma1_db"), parse_double(f[2], "gamma2_db"), f[3],
                    parse_double(f[4], "value"), parse_double(f[5], "stderr"), parse_u64(f[6], "n"),
                    parse_u64(f[7], "seed")});
  }
  return rows;
}

}  // namespace xband
