#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "xband/constellation.hpp"
#include "xband/estimate.hpp"

namespace xband {

/// Shortest round-trip-safe rendering used in every CSV value column.
std::string format_real(double value);
/// Fixed significant digits (constellation export uses 9).
std::string format_sig(double value, int digits);

std::vector<std::string> split_csv_line(std::string_view line);

/// `index,x_i,x_q,x_o`, one row per symbol, 9 significant digits.
void write_constellation_csv(std::ostream& out, const Constellation3D& c);
/// Parses the format above; the kind is not stored in the CSV.
std::vector<Vec3> read_constellation_csv(std::istream& in);

/// {"kind":..., "theta":..., "i_d":..., "m":...}; theta and i_d are null
/// unless the constellation carries a linear map.
std::string constellation_sidecar_json(const Constellation3D& c);

/// M x M grid of counts, one row per transmitted symbol.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);

/// One row of `scheme,gamma1_db,gamma2_db,metric,value,stderr,n,seed`.
struct ResultRow {
  std::string scheme;
  double gamma1_db = 0;
  double gamma2_db = 0;
  std::string metric;
  double value = 0;
  double std_error = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kResultHeader = "scheme,gamma1_db,gamma2_db,metric,value,stderr,n,seed";

void write_result_row(std::ostream& out, const ResultRow& row);
/// Skips `#` comment lines; throws SchemaError on a wrong header or row.
std::vector<ResultRow> read_results(std::istream& in);

}  // namespace xband
