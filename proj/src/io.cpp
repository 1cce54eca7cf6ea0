#include "diffwalker/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "diffwalker/errors.hpp"

namespace diffwalker::io {

namespace {

constexpr std::array<char, 8> kWeightMagic{'D', 'W', 'W', 'E', 'I', 'G', 'H', 'T'};

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct Pgm {
  Index height = 0;
  Index width = 0;
  int maxval = 0;
  std::vector<std::uint32_t> values;  // row-major
};

Pgm parse_pgm(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto next_int = [&]() -> long {
    skip_space();
    long value = 0;
    const auto [end, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
    if (ec != std::errc()) throw ValidationError(path.string() + ": malformed PGM header");
    pos = static_cast<std::size_t>(end - bytes.data());
    return value;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw ValidationError(path.string() + ": not a P2/P5 PGM file");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  Pgm pgm;
  pgm.width = next_int();
  pgm.height = next_int();
  pgm.maxval = static_cast<int>(next_int());
  if (pgm.width < 1 || pgm.height < 1 || pgm.maxval < 1 || pgm.maxval > 65535) {
    throw ValidationError(path.string() + ": invalid PGM dimensions or maxval");
  }
  const auto count = static_cast<std::size_t>(pgm.width * pgm.height);
  pgm.values.resize(count);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = pgm.maxval > 255 ? 2 : 1;
    if (bytes.size() < pos + count * bpp) throw ValidationError(path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < count; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos + i * bpp);
      pgm.values[i] = bpp == 2 ? (std::uint32_t{p[0]} << 8) | p[1] : p[0];
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) pgm.values[i] = static_cast<std::uint32_t>(next_int());
  }
  for (auto v : pgm.values) {
    if (v > static_cast<std::uint32_t>(pgm.maxval)) {
      throw ValidationError(path.string() + ": sample exceeds maxval");
    }
  }
  return pgm;
}

std::vector<std::vector<std::string>> parse_csv(const fs::path& path) {
  std::istringstream in(read_bytes(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream cells_in(line);
    std::string cell;
    while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_number(const std::string& text, const fs::path& path) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  const auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || end != last) {
    throw ValidationError(path.string() + ": cannot parse '" + text + "'");
  }
  return value;
}

template <typename T>
Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> read_grid(const fs::path& path) {
  const auto rows = parse_csv(path);
  if (rows.empty() || rows.front().empty()) throw ValidationError(path.string() + ": empty grid");
  Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw ValidationError(path.string() + ": ragged grid");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = parse_number<T>(rows[r][c], path);
  }
  return out;
}

bool is_csv(const fs::path& path) { return path.extension() == ".csv"; }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[at + i])} << (8 * i);
  return v;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_double(double value) {
  std::array<char, 32> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

Image<double> read_image(const fs::path& path) {
  const Pgm pgm = parse_pgm(path);
  Image<double> out(pgm.height, pgm.width);
  for (Index i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<double>(pgm.values[static_cast<std::size_t>(i)]) / pgm.maxval;
  return out;
}

Image<double> read_real_image(const fs::path& path) {
  return is_csv(path) ? read_grid<double>(path) : read_image(path);
}

LabelImage read_label_image(const fs::path& path) {
  if (is_csv(path)) {
    LabelImage out = read_grid<std::int32_t>(path);
    if ((out < 0).any()) throw ValidationError(path.string() + ": negative segment id");
    return out;
  }
  const Pgm pgm = parse_pgm(path);
  LabelImage out(pgm.height, pgm.width);
  for (Index i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<std::int32_t>(pgm.values[static_cast<std::size_t>(i)]);
  return out;
}

void write_label_image(const fs::path& path, const LabelImage& labels) {
  std::string out;
  if (is_csv(path)) {
    for (Index r = 0; r < labels.rows(); ++r) {
      for (Index c = 0; c < labels.cols(); ++c) {
        if (c) out += ',';
        out += std::to_string(labels(r, c));
      }
      out += '\n';
    }
  } else {
    if ((labels < 0).any() || (labels > 65535).any()) {
      throw ValidationError("label ids outside [0, 65535] do not fit a 16-bit PGM");
    }
    out = "P5\n" + std::to_string(labels.cols()) + " " + std::to_string(labels.rows()) + "\n65535\n";
    for (Index i = 0; i < labels.size(); ++i) {
      const auto v = static_cast<std::uint16_t>(labels.data()[i]);
      out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xff));
    }
  }
  write_text(path, out);
}

void write_real_grid(const fs::path& path, const Image<double>& values) {
  std::string out;
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_mask(const fs::path& path, const Mask& mask) {
  std::string out = "P5\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) + "\n255\n";
  for (Index i = 0; i < mask.size(); ++i) out.push_back(static_cast<char>(mask.data()[i] ? 255 : 0));
  write_text(path, out);
}

void write_weights(const fs::path& path, const LatticeGraph& graph,
                   const EdgeWeights<double>& weights) {
  if (weights.size() != graph.edge_count()) throw ValidationError("weight count does not match edges");
  std::string out(kWeightMagic.begin(), kWeightMagic.end());
  put_u32(out, static_cast<std::uint32_t>(graph.height()));
  put_u32(out, static_cast<std::uint32_t>(graph.width()));
  for (Index e = 0; e < weights.size(); ++e) {
    const auto bits = std::bit_cast<std::uint64_t>(weights[e]);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  write_text(path, out);
}

WeightFile read_weights(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() < 16 || !std::equal(kWeightMagic.begin(), kWeightMagic.end(), bytes.begin())) {
    throw ValidationError(path.string() + ": not a weight file");
  }
  WeightFile file;
  file.height = get_u32(bytes, 8);
  file.width = get_u32(bytes, 12);
  if (file.height < 1 || file.width < 1) throw ValidationError(path.string() + ": zero-sized grid");
  const LatticeGraph graph(file.height, file.width);
  if (bytes.size() != 16 + 8 * static_cast<std::size_t>(graph.edge_count())) {
    throw ValidationError(path.string() + ": payload does not match " +
                          std::to_string(graph.edge_count()) + " edges");
  }
  file.weights.resize(graph.edge_count());
  for (Index e = 0; e < graph.edge_count(); ++e) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= std::uint64_t{static_cast<unsigned char>(bytes[16 + 8 * e + i])} << (8 * i);
    file.weights[e] = std::bit_cast<double>(bits);
  }
  return file;
}

void write_seeds(const fs::path& path, const LatticeGraph& graph, const SeedSet& seeds) {
  std::string out = "row,col,label\n";
  for (const auto& s : seeds.entries()) {
    out += std::to_string(graph.row_of(s.vertex)) + "," + std::to_string(graph.col_of(s.vertex)) +
           "," + std::to_string(s.label) + "\n";
  }
  write_text(path, out);
}

SeedSet read_seeds(const fs::path& path, const LatticeGraph& graph) {
  const auto rows = parse_csv(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"row", "col", "label"}) {
    throw ValidationError(path.string() + ": seeds CSV must start with 'row,col,label'");
  }
  std::vector<Seed> seeds;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw ValidationError(path.string() + ": expected 3 columns");
    const auto r = parse_number<long>(rows[i][0], path);
    const auto c = parse_number<long>(rows[i][1], path);
    const auto a = parse_number<int>(rows[i][2], path);
    if (r < 0 || c < 0 || r >= graph.height() || c >= graph.width()) {
      throw ValidationError(path.string() + ": seed (" + rows[i][0] + "," + rows[i][1] +
                            ") outside the image");
    }
    seeds.push_back({graph.vertex(r, c), a});
  }
  return SeedSet(std::move(seeds));
}

void write_assignments(const fs::path& path, Index height, Index width,
                       const AssignmentMatrix<double>& assignments) {
  if (assignments.rows() != height * width) throw ValidationError("assignments do not match grid");
  std::string out = "row,col";
  for (Index a = 0; a < assignments.cols(); ++a) out += ",p" + std::to_string(a);
  out += '\n';
  for (Index v = 0; v < assignments.rows(); ++v) {
    out += std::to_string(v / width) + "," + std::to_string(v % width);
    for (Index a = 0; a < assignments.cols(); ++a) out += "," + format_double(assignments(v, a));
    out += '\n';
  }
  write_text(path, out);
}

nlohmann::json to_json(const EvalReport& report) {
  return {{"voi_split", report.voi_split},
          {"voi_merge", report.voi_merge},
          {"voi_total", report.voi_total},
          {"arand", report.arand},
          {"excluded_pixels", report.excluded_pixels}};
}

nlohmann::json to_json(const SolveReport& report) {
  return {{"method", report.method},
          {"residual_norms", report.residual_norms},
          {"iterations", report.iterations},
          {"factor_nonzeros", report.factor_nonzeros},
          {"max_row_sum_error", report.max_row_sum_error}};
}

void write_json(const fs::path& path, const nlohmann::json& document) {
  write_text(path, document.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_bytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace diffwalker::io
