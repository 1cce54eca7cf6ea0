#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "diffwalker/errors.hpp"
#include "diffwalker/io.hpp"

using namespace diffwalker;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("diffwalker_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("weight file round-trips bit for bit") {
  TempDir dir;
  const LatticeGraph graph(4, 7);
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EdgeWeights<double> w(graph.edge_count());
  for (Index e = 0; e < w.size(); ++e) w[e] = u(rng);
  w[0] = std::numeric_limits<double>::denorm_min();
  w[1] = 0.1;
  io::write_weights(dir / "w.bin", graph, w);
  const auto file = io::read_weights(dir / "w.bin");
  CHECK(file.height == 4);
  CHECK(file.width == 7);
  REQUIRE(file.weights.size() == w.size());
  CHECK(std::memcmp(file.weights.data(), w.data(), sizeof(double) * w.size()) == 0);

  const std::string bytes = slurp(dir / "w.bin");
  CHECK(bytes.substr(0, 8) == "DWWEIGHT");
  CHECK(bytes.size() == 16 + 8 * static_cast<std::size_t>(graph.edge_count()));
  CHECK(static_cast<unsigned char>(bytes[8]) == 4);   // height, little-endian
  CHECK(static_cast<unsigned char>(bytes[12]) == 7);  // width

  io::write_text(dir / "short.bin", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(io::read_weights(dir / "short.bin"), ValidationError);
  io::write_text(dir / "magic.bin", "NOTMAGIC" + bytes.substr(8));
  CHECK_THROWS_AS(io::read_weights(dir / "magic.bin"), ValidationError);
  CHECK_THROWS_AS(io::write_weights(dir / "x.bin", graph, EdgeWeights<double>(3)), ValidationError);
}

TEST_CASE("ASCII PGM with comments") {
  TempDir dir;
  io::write_text(dir / "a.pgm", "P2\n# a comment\n3 2\n# another\n4\n0 1 2\n3 4 # tail\n0\n");
  const auto img = io::read_image(dir / "a.pgm");
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 3);
  CHECK(img(0, 1) == 0.25);
  CHECK(img(1, 1) == 1.0);
  const auto labels = io::read_label_image(dir / "a.pgm");
  CHECK(labels(1, 0) == 3);
}

TEST_CASE("binary PGM, 8 and 16 bit") {
  TempDir dir;
  std::string eight = "P5 2 1 255\n";
  eight += static_cast<char>(0);
  eight += static_cast<char>(255);
  io::write_text(dir / "b8.pgm", eight);
  const auto img8 = io::read_image(dir / "b8.pgm");
  CHECK(img8(0, 0) == 0.0);
  CHECK(img8(0, 1) == 1.0);

  LabelImage labels(3, 2);
  labels << 0, 1, 300, 65535, 7, 2;
  io::write_label_image(dir / "l.pgm", labels);
  CHECK((io::read_label_image(dir / "l.pgm") == labels).all());
  CHECK(io::read_image(dir / "l.pgm")(1, 1) == 1.0);

  io::write_text(dir / "trunc.pgm", "P5 4 4 255\nabc");
  CHECK_THROWS_AS(io::read_image(dir / "trunc.pgm"), ValidationError);
  io::write_text(dir / "p6.pgm", "P6 1 1 255\nabc");
  CHECK_THROWS_AS(io::read_image(dir / "p6.pgm"), ValidationError);
  io::write_text(dir / "over.pgm", "P2 1 1 3\n9\n");
  CHECK_THROWS_AS(io::read_image(dir / "over.pgm"), ValidationError);
  CHECK_THROWS_AS(io::read_image(dir / "missing.pgm"), IoError);
  CHECK_THROWS_AS(io::write_label_image(dir / "neg.pgm", LabelImage::Constant(1, 1, -1)), ValidationError);
}

TEST_CASE("label CSV grid round-trip") {
  TempDir dir;
  LabelImage labels(2, 4);
  labels << 5, 5, 1, 0, 9, 9, 9, 1;
  io::write_label_image(dir / "l.csv", labels);
  CHECK((io::read_label_image(dir / "l.csv") == labels).all());
  io::write_text(dir / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::read_label_image(dir / "ragged.csv"), ValidationError);
  io::write_text(dir / "neg.csv", "1,-2\n");
  CHECK_THROWS_AS(io::read_label_image(dir / "neg.csv"), ValidationError);
  io::write_text(dir / "text.csv", "1,x\n");
  CHECK_THROWS_AS(io::read_label_image(dir / "text.csv"), ValidationError);
}

TEST_CASE("real grid round-trips exactly") {
  TempDir dir;
  Image<double> values(2, 3);
  values << 0.1, 1.0 / 3.0, -2.5e-300, 7.0, 1e300, 0.0;
  io::write_real_grid(dir / "g.csv", values);
  CHECK((io::read_real_image(dir / "g.csv") == values).all());
}

TEST_CASE("seeds CSV round-trip and validation") {
  TempDir dir;
  const LatticeGraph graph(3, 5);
  const SeedSet seeds({{graph.vertex(0, 4), 1}, {graph.vertex(2, 0), 0}, {graph.vertex(1, 1), 2}});
  io::write_seeds(dir / "s.csv", graph, seeds);
  CHECK(slurp(dir / "s.csv").rfind("row,col,label\n", 0) == 0);
  const auto back = io::read_seeds(dir / "s.csv", graph);
  CHECK(back.entries() == seeds.entries());

  io::write_text(dir / "outside.csv", "row,col,label\n3,0,0\n");
  CHECK_THROWS_AS(io::read_seeds(dir / "outside.csv", graph), ValidationError);
  io::write_text(dir / "header.csv", "r,c,l\n0,0,0\n");
  CHECK_THROWS_AS(io::read_seeds(dir / "header.csv", graph), ValidationError);
  io::write_text(dir / "dup.csv", "row,col,label\n0,0,0\n0,0,1\n");
  CHECK_THROWS_AS(io::read_seeds(dir / "dup.csv", graph), ValidationError);
}

TEST_CASE("assignment CSV layout") {
  TempDir dir;
  AssignmentMatrix<double> z(2, 2);
  z << 0.25, 0.75, 1.0, 0.0;
  io::write_assignments(dir / "a.csv", 1, 2, z);
  CHECK(slurp(dir / "a.csv") == "row,col,p0,p1\n0,0,0.25,0.75\n0,1,1,0\n");
  CHECK_THROWS_AS(io::write_assignments(dir / "b.csv", 2, 2, z), ValidationError);
}

TEST_CASE("json helpers") {
  TempDir dir;
  io::write_json(dir / "d.json", {{"a", 1}, {"b", {1.5, 2.5}}});
  const auto doc = io::read_json(dir / "d.json");
  CHECK(doc["a"] == 1);
  CHECK(doc["b"][1] == 2.5);
  io::write_text(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(io::read_json(dir / "bad.json"), ValidationError);
  CHECK(io::format_double(0.1) == "0.1");
}
