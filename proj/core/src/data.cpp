#include "ptn/data.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ptn/errors.hpp"
#include "ptn/sampling.hpp"

namespace ptn {

namespace {

constexpr std::string_view kCheckpointMagic = "ptn-checkpoint";
constexpr int kCheckpointVersion = 1;

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw io_error("truncated IDX file while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

void byteswap_doubles(std::vector<double>& values) {
  for (double& x : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    bits = __builtin_bswap64(bits);
    std::memcpy(&x, &bits, 8);
  }
}

}  // namespace

const char* to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::train:
      return "train";
    case SplitTag::valid:
      return "valid";
    case SplitTag::test:
      return "test";
  }
  return "?";
}

DiscreteDataset::DiscreteDataset(std::size_t columns, std::vector<int> cardinalities,
                                 std::vector<int> values, SplitTag tag)
    : columns_(columns),
      cardinalities_(std::move(cardinalities)),
      values_(std::move(values)),
      split_(tag) {
  if (columns_ == 0) throw shape_error("DiscreteDataset: zero columns");
  if (cardinalities_.size() != columns_)
    throw shape_error("DiscreteDataset: cardinality count does not match columns");
  if (values_.size() % columns_ != 0)
    throw shape_error("DiscreteDataset: value count is not a multiple of columns");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const int card = cardinalities_[i % columns_];
    if (values_[i] < 0 || values_[i] >= card)
      throw index_error("DiscreteDataset: value out of range in column " +
                        std::to_string(i % columns_));
  }
}

DiscreteDataset DiscreteDataset::from_rows(const std::vector<std::vector<int>>& rows,
                                           std::span<const int> cardinality_override,
                                           SplitTag tag) {
  if (rows.empty()) throw shape_error("DiscreteDataset::from_rows: no rows");
  const std::size_t cols = rows.front().size();
  std::vector<int> cards(cols, 1);
  if (!cardinality_override.empty()) {
    if (cardinality_override.size() != cols)
      throw shape_error("DiscreteDataset::from_rows: override length mismatch");
    cards.assign(cardinality_override.begin(), cardinality_override.end());
  }
  std::vector<int> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw shape_error("DiscreteDataset::from_rows: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (cardinality_override.empty()) cards[c] = std::max(cards[c], r[c] + 1);
      values.push_back(r[c]);
    }
  }
  return DiscreteDataset(cols, std::move(cards), std::move(values), tag);
}

DiscreteDataset DiscreteDataset::head(std::size_t count) const {
  const std::size_t n = std::min(count, rows());
  std::vector<int> values(values_.begin(),
                          values_.begin() + static_cast<std::ptrdiff_t>(n * columns_));
  return DiscreteDataset(columns_, cardinalities_, std::move(values), split_);
}

DiscreteDataset load_csv01(const std::filesystem::path& path, std::optional<char> delimiter,
                           std::span<const int> cardinality_override, SplitTag tag) {
  std::ifstream in(path);
  if (!in) throw io_error("load_csv01: cannot open " + path.string());

  std::vector<int> values;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  std::string line;
  char delim = delimiter.value_or('\0');

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (delim == '\0') delim = line.find(',') != std::string::npos ? ',' : ' ';

    std::size_t row_cols = 0;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() &&
             (line[pos] == delim || (delim == ' ' && std::isspace(static_cast<unsigned char>(line[pos])))))
        ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != delim &&
             !(delim == ' ' && std::isspace(static_cast<unsigned char>(line[end]))))
        ++end;
      const std::string token = line.substr(pos, end - pos);
      int value = 0;
      try {
        std::size_t used = 0;
        value = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw parse_error("load_csv01: non-integer token '" + token + "' in " + path.string(),
                          line_no);
      }
      if (value < 0)
        throw parse_error("load_csv01: negative value in " + path.string(), line_no);
      values.push_back(value);
      ++row_cols;
      pos = end;
    }
    if (row_cols == 0) continue;
    if (columns == 0) {
      columns = row_cols;
    } else if (row_cols != columns) {
      throw parse_error("load_csv01: ragged row, expected " + std::to_string(columns) +
                            " values but found " + std::to_string(row_cols) + " in " +
                            path.string(),
                        line_no);
    }
  }
  if (columns == 0) throw parse_error("load_csv01: no data rows in " + path.string(), line_no);

  std::vector<int> cards(columns, 1);
  if (!cardinality_override.empty()) {
    if (cardinality_override.size() != columns)
      throw shape_error("load_csv01: cardinality override length does not match columns");
    cards.assign(cardinality_override.begin(), cardinality_override.end());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] >= cards[i % columns])
        throw parse_error("load_csv01: value " + std::to_string(values[i]) +
                              " exceeds declared cardinality in column " +
                              std::to_string(i % columns) + " of " + path.string(),
                          i / columns + 1);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i)
      cards[i % columns] = std::max(cards[i % columns], values[i] + 1);
  }
  return DiscreteDataset(columns, std::move(cards), std::move(values), tag);
}

DiscreteDataset load_mnist_binarized(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path, int threshold,
                                     SplitTag tag) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw io_error("load_mnist_binarized: cannot open " + images_path.string());
  if (read_be32(img, "image magic") != 0x00000803u)
    throw parse_error("load_mnist_binarized: bad image magic in " + images_path.string(), 1);
  const std::uint32_t count = read_be32(img, "image count");
  const std::uint32_t rows = read_be32(img, "image rows");
  const std::uint32_t cols = read_be32(img, "image cols");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw io_error("load_mnist_binarized: cannot open " + labels_path.string());
  if (read_be32(lab, "label magic") != 0x00000801u)
    throw parse_error("load_mnist_binarized: bad label magic in " + labels_path.string(), 1);
  const std::uint32_t label_count = read_be32(lab, "label count");
  if (label_count != count)
    throw parse_error("load_mnist_binarized: label count " + std::to_string(label_count) +
                          " does not match image count " + std::to_string(count),
                      1);

  std::vector<int> values;
  values.reserve(static_cast<std::size_t>(count) * pixels);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t k = 0; k < count; ++k) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img)
      throw io_error("load_mnist_binarized: truncated image payload at image " +
                     std::to_string(k));
    for (std::size_t p = 0; p < pixels; ++p) values.push_back(buf[p] >= threshold ? 1 : 0);
  }
  std::vector<unsigned char> labels(count);
  if (count > 0) {
    lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
    if (!lab) throw io_error("load_mnist_binarized: truncated label payload");
  }
  std::vector<int> cards(pixels, 2);
  return DiscreteDataset(pixels, std::move(cards), std::move(values), tag);
}

void save_checkpoint(const MpsModel& model, const std::filesystem::path& path,
                     const std::string& metadata_json, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("save_checkpoint: cannot open " + path.string());
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "mode " << to_string(model.mode()) << '\n';
  out << "length " << model.length() << '\n';
  out << "dims";
  for (int d : model.dims()) out << ' ' << d;
  out << '\n';
  out << "ranks";
  for (std::size_t r : model.ranks()) out << ' ' << r;
  out << '\n';
  out << "seed " << seed << '\n';
  out << "meta " << (metadata_json.empty() ? "{}" : metadata_json) << '\n';
  out << "data\n";
  for (std::size_t n = 0; n < model.length(); ++n) {
    const Core& c = model.core(n);
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(c.data.data()),
                static_cast<std::streamsize>(c.data.size() * sizeof(double)));
    } else {
      std::vector<double> swapped = c.data;
      byteswap_doubles(swapped);
      out.write(reinterpret_cast<const char*>(swapped.data()),
                static_cast<std::streamsize>(swapped.size() * sizeof(double)));
    }
  }
  out.flush();
  if (!out) throw io_error("save_checkpoint: write to " + path.string() + " failed");
}

MpsModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_checkpoint: cannot open " + path.string());

  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw io_error("load_checkpoint: truncated header, missing " + std::string(what));
    return std::istringstream(line);
  };

  {
    auto ss = next_line("magic");
    std::string magic;
    int version = -1;
    ss >> magic >> version;
    if (magic != kCheckpointMagic)
      throw io_error("load_checkpoint: " + path.string() + " is not a checkpoint file");
    if (version != kCheckpointVersion)
      throw io_error("load_checkpoint: unsupported format version " + std::to_string(version) +
                     " (expected " + std::to_string(kCheckpointVersion) + ")");
  }

  std::string key;
  PositivityMode mode = PositivityMode::born;
  {
    auto ss = next_line("mode");
    std::string name;
    ss >> key >> name;
    const auto parsed = parse_positivity_mode(name);
    if (key != "mode" || !parsed)
      throw io_error("load_checkpoint: bad mode line '" + line + "'");
    mode = *parsed;
  }
  std::size_t length = 0;
  {
    auto ss = next_line("length");
    ss >> key >> length;
    if (key != "length" || length == 0)
      throw io_error("load_checkpoint: bad length line '" + line + "'");
  }
  std::vector<int> dims(length);
  {
    auto ss = next_line("dims");
    ss >> key;
    if (key != "dims") throw io_error("load_checkpoint: bad dims line");
    for (auto& d : dims)
      if (!(ss >> d) || d <= 0) throw io_error("load_checkpoint: bad dims line");
  }
  std::vector<std::size_t> ranks(length + 1);
  {
    auto ss = next_line("ranks");
    ss >> key;
    if (key != "ranks") throw io_error("load_checkpoint: bad ranks line");
    for (auto& r : ranks)
      if (!(ss >> r) || r == 0) throw io_error("load_checkpoint: bad ranks line");
  }
  if (ranks.front() != 1 || ranks.back() != 1)
    throw io_error("load_checkpoint: boundary ranks must be 1");
  {
    auto ss = next_line("seed");
    std::uint64_t seed = 0;
    ss >> key >> seed;
    if (key != "seed") throw io_error("load_checkpoint: bad seed line");
  }
  {
    auto ss = next_line("meta");
    ss >> key;
    if (key != "meta") throw io_error("load_checkpoint: bad meta line");
  }
  {
    next_line("data marker");
    if (line != "data") throw io_error("load_checkpoint: missing data marker");
  }

  std::vector<Core> cores;
  cores.reserve(length);
  for (std::size_t n = 0; n < length; ++n) {
    Core c(ranks[n], static_cast<std::size_t>(dims[n]), ranks[n + 1]);
    in.read(reinterpret_cast<char*>(c.data.data()),
            static_cast<std::streamsize>(c.data.size() * sizeof(double)));
    if (!in)
      throw io_error("load_checkpoint: truncated core payload at core " + std::to_string(n));
    if constexpr (std::endian::native != std::endian::little) byteswap_doubles(c.data);
    cores.push_back(std::move(c));
  }
  char extra;
  if (in.read(&extra, 1))
    throw io_error("load_checkpoint: trailing bytes after core payload");
  return MpsModel(std::move(cores), mode);
}

std::pair<MpsModel, DiscreteDataset> synth_teacher(std::uint64_t seed, std::size_t n_variables,
                                                   int dim, std::size_t rank,
                                                   PositivityMode mode, std::size_t samples) {
  Rng rng(seed);
  std::vector<int> dims(n_variables, dim);
  MpsModel teacher = MpsModel::random(mode, dims, rank, rng);
  std::vector<int> values;
  values.reserve(samples * n_variables);
  if (samples > 0) {
    const auto draws = sample(teacher, rng, samples);
    for (const auto& row : draws) values.insert(values.end(), row.begin(), row.end());
  }
  std::vector<int> cards(n_variables, dim);
  DiscreteDataset data(n_variables, std::move(cards), std::move(values));
  return {std::move(teacher), std::move(data)};
}

}  // namespace ptn
