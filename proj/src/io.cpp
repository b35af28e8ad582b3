#include "bevmap/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

constexpr const char* kStage = "load";
constexpr int kMaxDim = 1 << 16;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(kStage, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("save", "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("save", "write failed for '" + path.string() + "'");
}

void append_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

// Parses "<TAG> n1 n2 ...\n" and returns the byte offset of the payload.
std::size_t parse_header(const std::string& bytes, const std::string& tag, std::span<int> dims,
                         const std::filesystem::path& path) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos || eol > 256) {
    throw ValidationError(kStage, "'" + path.string() + "': missing header line");
  }
  std::istringstream header(bytes.substr(0, eol));
  std::string got;
  header >> got;
  if (got != tag) {
    throw ValidationError(kStage, "'" + path.string() + "': expected " + tag + " header, got '" + got + "'");
  }
  for (int& d : dims) {
    long long v = 0;
    if (!(header >> v) || v <= 0 || v > kMaxDim) {
      throw ValidationError(kStage, "'" + path.string() + "': bad dimension in header");
    }
    d = static_cast<int>(v);
  }
  std::string extra;
  if (header >> extra) throw ValidationError(kStage, "'" + path.string() + "': trailing header tokens");
  return eol + 1;
}

void check_payload(const std::string& bytes, std::size_t offset, std::size_t values,
                   const std::filesystem::path& path) {
  if (bytes.size() - offset != values * 8) {
    throw ValidationError(kStage, "'" + path.string() + "': payload has " + std::to_string(bytes.size() - offset) +
                                      " bytes, header implies " + std::to_string(values * 8));
  }
}

// PGM tokens are whitespace separated and may be interleaved with '#' comments.
class PgmHeaderReader {
 public:
  PgmHeaderReader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) t += bytes_[pos_++];
    if (t.empty()) throw ValidationError(kStage, "'" + path_.string() + "': truncated PGM header");
    return t;
  }

  int number() {
    const auto t = token();
    int v = 0;
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch)) || v > kMaxDim) {
        throw ValidationError(kStage, "'" + path_.string() + "': bad PGM header number '" + t + "'");
      }
      v = v * 10 + (ch - '0');
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ValidationError(kStage, "'" + path_.string() + "': missing separator after PGM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

GridFormat parse_grid_format(std::string_view name) {
  if (name == "label-pgm") return GridFormat::kLabelPgm;
  if (name == "prob-bin") return GridFormat::kProbBin;
  if (name == "depth-bin") return GridFormat::kDepthBin;
  throw ValidationError("args", "unknown grid format '" + std::string(name) + "'");
}

LabelGrid load_label_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  PgmHeaderReader reader(bytes, path);
  if (reader.token() != "P5") throw ValidationError(kStage, "'" + path.string() + "': not a binary PGM (P5)");
  const int width = reader.number();
  const int height = reader.number();
  const int maxval = reader.number();
  if (width <= 0 || height <= 0) throw ValidationError(kStage, "'" + path.string() + "': empty PGM");
  if (maxval <= 0 || maxval > 255) {
    throw ValidationError(kStage, "'" + path.string() + "': only 8-bit PGM is supported");
  }
  const auto offset = reader.payload_offset();
  const auto expected = static_cast<std::size_t>(width) * height;
  if (bytes.size() - offset != expected) {
    throw ValidationError(kStage, "'" + path.string() + "': PGM raster size does not match header");
  }
  LabelGrid grid(height, width);
  std::memcpy(grid.label.data(), bytes.data() + offset, expected);
  for (auto v : grid.label) {
    if (v > maxval) throw ValidationError(kStage, "'" + path.string() + "': label exceeds maxval");
  }
  return grid;
}

void save_label_pgm(const LabelGrid& grid, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(grid.label.data()), grid.label.size());
  write_file(path, out);
}

SemanticGrid load_prob_bin(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  int dims[3];
  const auto offset = parse_header(bytes, "PROB", dims, path);
  SemanticGrid g(dims[0], dims[1], dims[2]);
  check_payload(bytes, offset, g.data.size(), path);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = read_f64(bytes.data() + offset + 8 * i);
  try {
    check_distribution(g, kStage);
  } catch (const ValidationError& e) {
    throw ValidationError(kStage, "'" + path.string() + "': " + e.what());
  }
  return g;
}

void save_prob_bin(const SemanticGrid& grid, const std::filesystem::path& path) {
  std::string out = "PROB " + std::to_string(grid.height) + " " + std::to_string(grid.width) + " " +
                    std::to_string(grid.channels) + "\n";
  out.reserve(out.size() + grid.data.size() * 8);
  for (double v : grid.data) append_f64(out, v);
  write_file(path, out);
}

DepthMap load_depth_bin(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  int dims[2];
  const auto offset = parse_header(bytes, "DEPTH", dims, path);
  DepthMap d(dims[0], dims[1]);
  check_payload(bytes, offset, d.depth.size(), path);
  for (std::size_t i = 0; i < d.depth.size(); ++i) {
    const double v = read_f64(bytes.data() + offset + 8 * i);
    if (std::isnan(v)) continue;
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError(kStage, "'" + path.string() + "': nonpositive or infinite depth at index " +
                                        std::to_string(i));
    }
    d.depth[i] = v;
    d.valid[i] = 1;
  }
  return d;
}

void save_depth_bin(const DepthMap& depth, const std::filesystem::path& path) {
  std::string out = "DEPTH " + std::to_string(depth.height) + " " + std::to_string(depth.width) + "\n";
  out.reserve(out.size() + depth.depth.size() * 8);
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    append_f64(out, depth.valid[i] ? depth.depth[i] : std::numeric_limits<double>::quiet_NaN());
  }
  write_file(path, out);
}

AnyGrid load_grid(const std::filesystem::path& path, GridFormat format) {
  switch (format) {
    case GridFormat::kLabelPgm: return load_label_pgm(path);
    case GridFormat::kProbBin: return load_prob_bin(path);
    case GridFormat::kDepthBin: return load_depth_bin(path);
  }
  throw ValidationError(kStage, "unsupported format");
}

void save_grid(const AnyGrid& grid, const std::filesystem::path& path) {
  struct Saver {
    const std::filesystem::path& path;
    void operator()(const LabelGrid& g) const { save_label_pgm(g, path); }
    void operator()(const SemanticGrid& g) const { save_prob_bin(g, path); }
    void operator()(const DepthMap& g) const { save_depth_bin(g, path); }
  };
  std::visit(Saver{path}, grid);
}

}  // namespace bevmap
