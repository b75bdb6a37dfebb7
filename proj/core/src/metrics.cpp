#include "ptn/metrics.hpp"

#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ptn/errors.hpp"

namespace ptn {

std::string to_json_line(const LogRow& row) {
  nlohmann::json j{{"epoch", row.epoch},
                   {"split", row.split},
                   {"nll_per_variable", row.nll_per_variable},
                   {"wall_ms", row.wall_ms},
                   {"failures", row.failures}};
  if (row.peak_merged_bytes) j["peak_merged_bytes"] = *row.peak_merged_bytes;
  return j.dump();
}

void append_metrics(std::ostream& out, const LogRow& row) { out << to_json_line(row) << '\n'; }

void write_metrics(std::span<const LogRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw io_error("write_metrics: cannot open " + path.string());
  for (const LogRow& row : rows) append_metrics(out, row);
  out.flush();
  if (!out) throw io_error("write_metrics: write to " + path.string() + " failed");
}

}  // namespace ptn
