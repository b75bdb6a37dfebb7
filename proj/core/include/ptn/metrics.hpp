#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace ptn {

// One training-log row. Emitted per epoch and split by the trainers and
// serialized as JSON lines by write_metrics. peak_merged_bytes is only
// set by the two-site sweep trainer.
struct LogRow {
  int epoch = 0;
  std::string split;  // "train", "valid" or "test"
  double nll_per_variable = 0.0;
  double wall_ms = 0.0;
  int failures = 0;
  std::optional<std::size_t> peak_merged_bytes;
};

using EpochCallback = std::function<void(const LogRow&)>;

// Serializes one row as a single JSON line.
std::string to_json_line(const LogRow& row);

void append_metrics(std::ostream& out, const LogRow& row);

// Newline-delimited JSON records, appended to `path` (the file is
// created empty when rows is empty). Throws io_error on failure.
void write_metrics(std::span<const LogRow> rows, const std::filesystem::path& path);

}  // namespace ptn
