#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "diffwalker/diffusion.hpp"
#include "diffwalker/lattice.hpp"
#include "diffwalker/metrics.hpp"
#include "diffwalker/seeding.hpp"
#include "diffwalker/types.hpp"

namespace diffwalker::io {

namespace fs = std::filesystem;

/// Grayscale PGM (P2 or P5, 8 or 16 bit), scaled to [0, 1] by maxval.
Image<double> read_image(const fs::path& path);

/// Real-valued grid: CSV (one row per line) when the extension is .csv,
/// otherwise a PGM scaled to [0, 1].
Image<double> read_real_image(const fs::path& path);

/// Segment ids from a 16-bit PGM (raw values) or a .csv grid.
LabelImage read_label_image(const fs::path& path);

/// 16-bit binary PGM, or a CSV grid when the extension is .csv.
void write_label_image(const fs::path& path, const LabelImage& labels);

/// CSV grid with round-trip precision.
void write_real_grid(const fs::path& path, const Image<double>& values);

/// 8-bit binary PGM, 255 where the mask is set.
void write_mask(const fs::path& path, const Mask& mask);

/// Binary weight file: 8-byte magic "DWWEIGHT", height and width as
/// little-endian uint32, then one little-endian float64 per edge in canonical
/// order.
void write_weights(const fs::path& path, const LatticeGraph& graph,
                   const EdgeWeights<double>& weights);

struct WeightFile {
  Index height = 0;
  Index width = 0;
  EdgeWeights<double> weights;
};
WeightFile read_weights(const fs::path& path);

/// Seeds CSV with header "row,col,label".
void write_seeds(const fs::path& path, const LatticeGraph& graph, const SeedSet& seeds);
SeedSet read_seeds(const fs::path& path, const LatticeGraph& graph);

/// Assignment CSV with header "row,col,p0,...,pK-1", one line per pixel in
/// row-major order.
void write_assignments(const fs::path& path, Index height, Index width,
                       const AssignmentMatrix<double>& assignments);

/// Shortest decimal string that round-trips the double.
std::string format_double(double value);

nlohmann::json to_json(const EvalReport& report);
/// Timing is left out so the document is reproducible.
nlohmann::json to_json(const SolveReport& report);

void write_json(const fs::path& path, const nlohmann::json& document);
nlohmann::json read_json(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);

}  // namespace diffwalker::io
