#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trid/factors.hpp"
#include "trid/mals.hpp"
#include "trid/mask.hpp"
#include "trid/solver.hpp"
#include "trid/tensor.hpp"

namespace trid {

/// Malformed or inconsistent input data; carries "path:line:" context where a
/// line is known.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace internal {

[[noreturn]] inline void parseFail(const std::string& path, long line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

/// Shortest text that reads back to the identical double (17 significant
/// digits round-trip exactly).
inline std::string formatValue(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string stripCr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline bool parseDouble(std::string_view token, double& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parseIndex(std::string_view token, Index& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::vector<std::string_view> splitWhitespace(const std::string& line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(std::string_view(line).substr(start, i - start));
  }
  return tokens;
}

inline std::vector<std::string_view> splitCommas(const std::string& line) {
  std::vector<std::string_view> fields;
  std::string_view view(line);
  std::size_t start = 0;
  while (true) {
    std::size_t comma = view.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(view.substr(start));
      return fields;
    }
    fields.push_back(view.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Tns3File: "tns3 n1 n2 n3" header, then n1*n2*n3 reals in vec order.
// ---------------------------------------------------------------------------

inline void saveTns3(const std::string& path, const Tensor3d& x) {
  for (Index k = 0; k < x.size(); ++k)
    if (!std::isfinite(x.vec()[k]))
      throw std::invalid_argument("saveTns3: tensor contains a non-finite value");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "tns3 " << x.n1() << ' ' << x.n2() << ' ' << x.n3() << '\n';
  for (Index k = 0; k < x.size(); ++k) out << internal::formatValue(x.vec()[k]) << '\n';
  if (!out) throw ParseError(path + ": write failed");
}

inline Tensor3d loadTns3(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  long lineNo = 0;

  if (!std::getline(in, line)) internal::parseFail(path, 1, "missing header");
  ++lineNo;
  line = internal::stripCr(line);
  auto header = internal::splitWhitespace(line);
  if (header.size() != 4 || header[0] != "tns3")
    internal::parseFail(path, lineNo, "expected header 'tns3 <n1> <n2> <n3>'");
  Index dims[3];
  for (int k = 0; k < 3; ++k) {
    if (!internal::parseIndex(header[k + 1], dims[k]) || dims[k] < 1)
      internal::parseFail(path, lineNo, "invalid dimension '" + std::string(header[k + 1]) + "'");
  }

  Tensor3d x(dims[0], dims[1], dims[2]);
  Index count = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    line = internal::stripCr(line);
    for (auto token : internal::splitWhitespace(line)) {
      if (count >= x.size())
        internal::parseFail(path, lineNo, "more values than the header promises");
      double v;
      if (!internal::parseDouble(token, v))
        internal::parseFail(path, lineNo, "invalid value '" + std::string(token) + "'");
      if (!std::isfinite(v))
        internal::parseFail(path, lineNo, "non-finite value '" + std::string(token) + "'");
      x.vec()[count++] = v;
    }
  }
  if (count != x.size())
    internal::parseFail(path, lineNo, "expected " + std::to_string(x.size()) + " values, found " +
                                          std::to_string(count));
  return x;
}

// ---------------------------------------------------------------------------
// TripletCsv: "i,j,t,value" rows, 1-based indices.  A full tensor reads
// omitted entries as zero; a mask reads the rows present as observed.
// ---------------------------------------------------------------------------

namespace internal {

struct TripletRows {
  std::vector<std::pair<Index, double>> entries;  // (linear index, value), sorted
};

inline TripletRows loadTripletRows(const std::string& path, Index n1, Index n2, Index n3) {
  if (n1 < 1 || n2 < 1 || n3 < 1)
    throw std::invalid_argument("loadTripletRows: dimensions must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  long lineNo = 0;

  if (!std::getline(in, line)) parseFail(path, 1, "missing header");
  ++lineNo;
  if (stripCr(line) != "i,j,t,value")
    parseFail(path, lineNo, "expected header 'i,j,t,value'");

  TripletRows rows;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string stripped = stripCr(line);
    if (stripped.empty()) continue;
    auto fields = splitCommas(stripped);
    if (fields.size() != 4) parseFail(path, lineNo, "expected 4 comma-separated fields");
    Index ijk[3];
    const Index limits[3] = {n1, n2, n3};
    for (int k = 0; k < 3; ++k) {
      if (!parseIndex(fields[k], ijk[k]))
        parseFail(path, lineNo, "invalid index '" + std::string(fields[k]) + "'");
      if (ijk[k] < 1 || ijk[k] > limits[k])
        parseFail(path, lineNo, "index " + std::to_string(ijk[k]) + " out of range [1, " +
                                    std::to_string(limits[k]) + "]");
    }
    double v;
    if (!parseDouble(fields[3], v))
      parseFail(path, lineNo, "invalid value '" + std::string(fields[3]) + "'");
    if (!std::isfinite(v))
      parseFail(path, lineNo, "non-finite value '" + std::string(fields[3]) + "'");
    const Index linear = (ijk[0] - 1) + (ijk[1] - 1) * n1 + (ijk[2] - 1) * n1 * n2;
    rows.entries.emplace_back(linear, v);
  }

  std::sort(rows.entries.begin(), rows.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 1; k < rows.entries.size(); ++k)
    if (rows.entries[k].first == rows.entries[k - 1].first)
      throw ParseError(path + ": duplicate entry at linear index " +
                       std::to_string(rows.entries[k].first));
  return rows;
}

}  // namespace internal

inline Tensor3d loadTripletTensor(const std::string& path, Index n1, Index n2, Index n3) {
  auto rows = internal::loadTripletRows(path, n1, n2, n3);
  Tensor3d x(n1, n2, n3);
  for (const auto& [linear, value] : rows.entries) x.vec()[linear] = value;
  return x;
}

inline MaskOperator<double> loadMaskCsv(const std::string& path, Index n1, Index n2, Index n3) {
  auto rows = internal::loadTripletRows(path, n1, n2, n3);
  if (rows.entries.empty()) throw ParseError(path + ": mask has no observed entries");
  std::vector<Index> observed(rows.entries.size());
  Tensor3d::Vector d(static_cast<Index>(rows.entries.size()));
  for (std::size_t k = 0; k < rows.entries.size(); ++k) {
    observed[k] = rows.entries[k].first;
    d[static_cast<Index>(k)] = rows.entries[k].second;
  }
  return MaskOperator<double>::entries(n1, n2, n3, std::move(observed), std::move(d));
}

namespace internal {

inline void writeTripletRow(std::ofstream& out, Index linear, Index n1, Index n2, double value) {
  const Index i = linear % n1;
  const Index j = (linear / n1) % n2;
  const Index t = linear / (n1 * n2);
  out << (i + 1) << ',' << (j + 1) << ',' << (t + 1) << ',' << formatValue(value) << '\n';
}

}  // namespace internal

/// Writes the nonzero entries of x; loading with the same dims restores x.
inline void saveTripletCsv(const std::string& path, const Tensor3d& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "i,j,t,value\n";
  for (Index k = 0; k < x.size(); ++k) {
    if (x.vec()[k] == 0.0) continue;
    if (!std::isfinite(x.vec()[k]))
      throw std::invalid_argument("saveTripletCsv: tensor contains a non-finite value");
    internal::writeTripletRow(out, k, x.n1(), x.n2(), x.vec()[k]);
  }
  if (!out) throw ParseError(path + ": write failed");
}

/// Writes every observed entry of an entry mask (including observed zeros).
inline void saveMaskCsv(const std::string& path, const MaskOperator<double>& mask) {
  if (mask.kind() != MaskOperator<double>::Kind::Entries)
    throw std::invalid_argument("saveMaskCsv: only entry masks have a triplet representation");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "i,j,t,value\n";
  for (Index k = 0; k < mask.observedCount(); ++k)
    internal::writeTripletRow(out, mask.observedIndices()[static_cast<std::size_t>(k)], mask.n1(),
                              mask.n2(), mask.data()[k]);
  if (!out) throw ParseError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// PgmStack: 8-bit P2/P5 grayscale images stacked along mode 3, values
// rescaled to [0, 1].
// ---------------------------------------------------------------------------

namespace internal {

/// Reads the next PGM header token, skipping whitespace and '#' comments.
inline std::string nextPgmToken(std::istream& in, const std::string& path) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    token.push_back(static_cast<char>(c));
    while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
      token.push_back(static_cast<char>(in.get()));
    return token;
  }
  throw ParseError(path + ": truncated PGM header");
}

struct PgmImage {
  Index width = 0, height = 0;
  std::vector<double> pixels;  // row-major, already scaled to [0, 1]
};

inline PgmImage loadPgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  const std::string magic = nextPgmToken(in, path);
  if (magic != "P2" && magic != "P5")
    throw ParseError(path + ": not an 8-bit grayscale PGM (magic '" + magic + "')");

  auto headerNumber = [&](const char* what) {
    const std::string token = nextPgmToken(in, path);
    Index value = 0;
    if (!parseIndex(token, value) || value < 1)
      throw ParseError(path + ": invalid " + std::string(what) + " '" + token + "'");
    return value;
  };
  PgmImage img;
  img.width = headerNumber("width");
  img.height = headerNumber("height");
  if (img.width > 100000 || img.height > 100000)
    throw ParseError(path + ": implausible image dimensions");
  const Index maxval = headerNumber("maxval");
  if (maxval > 255)
    throw ParseError(path + ": maxval " + std::to_string(maxval) + " exceeds 8-bit range");

  const Index count = img.width * img.height;
  img.pixels.resize(static_cast<std::size_t>(count));
  if (magic == "P2") {
    for (Index k = 0; k < count; ++k) {
      const std::string token = nextPgmToken(in, path);
      Index value = 0;
      if (!parseIndex(token, value) || value < 0 || value > maxval)
        throw ParseError(path + ": pixel value '" + token + "' out of range");
      img.pixels[static_cast<std::size_t>(k)] = double(value) / double(maxval);
    }
  } else {
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) throw ParseError(path + ": malformed P5 header");
    std::vector<unsigned char> raw(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(raw.data()), count);
    if (in.gcount() != count) throw ParseError(path + ": truncated P5 pixel data");
    for (Index k = 0; k < count; ++k) {
      if (raw[static_cast<std::size_t>(k)] > maxval)
        throw ParseError(path + ": pixel value exceeds the stated maxval");
      img.pixels[static_cast<std::size_t>(k)] =
          double(raw[static_cast<std::size_t>(k)]) / double(maxval);
    }
  }
  return img;
}

}  // namespace internal

/// Stacks equally-sized grayscale images into a (height, width, count) tensor.
inline Tensor3d loadPgmStack(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("loadPgmStack: no images given");
  std::vector<internal::PgmImage> images;
  images.reserve(paths.size());
  for (const auto& path : paths) {
    images.push_back(internal::loadPgm(path));
    if (images.back().width != images.front().width ||
        images.back().height != images.front().height)
      throw ParseError(path + ": image size differs from the first image in the stack");
  }
  const Index h = images.front().height, w = images.front().width;
  Tensor3d x(h, w, static_cast<Index>(images.size()));
  for (std::size_t k = 0; k < images.size(); ++k)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j)
        x(i, j, static_cast<Index>(k)) = images[k].pixels[static_cast<std::size_t>(i * w + j)];
  return x;
}

/// Reads a ".pgms" list file: one image path per line (relative paths resolve
/// against the list's directory; blank lines and '#' comments are skipped).
inline Tensor3d loadPgmListFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  const auto baseDir = std::filesystem::path(path).parent_path();
  std::vector<std::string> paths;
  std::string line;
  while (std::getline(in, line)) {
    std::string stripped = internal::stripCr(line);
    const auto tokens = internal::splitWhitespace(stripped);
    if (tokens.empty() || stripped[0] == '#') continue;
    std::filesystem::path entry(stripped);
    if (entry.is_relative()) entry = baseDir / entry;
    paths.push_back(entry.string());
  }
  if (paths.empty()) throw ParseError(path + ": the list names no images");
  return loadPgmStack(paths);
}

/// Loads a tensor from a path by extension: ".tns3" or ".pgms" (image list).
inline Tensor3d loadTensorAuto(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".tns3") return loadTns3(path);
  if (ext == ".pgms") return loadPgmListFile(path);
  throw std::invalid_argument("unsupported tensor file extension '" + ext +
                              "' (expected .tns3 or .pgms)");
}

// ---------------------------------------------------------------------------
// Trace / curve CSV writers.  Traces carry no timing columns so identical
// seeds give byte-identical files.
// ---------------------------------------------------------------------------

inline void saveTraceCsv(const std::string& path, const SolveTrace<double>& trace,
                         bool recovery) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  if (recovery)
    out << "iter,objective,feasibility,rel_change_x,rel_change_a,rel_change_b,rel_change_c,"
           "decrease_slack\n";
  else
    out << "iter,objective,rel_change_a,rel_change_b,rel_change_c,decrease_slack\n";
  for (const auto& row : trace.rows) {
    out << row.iter << ',' << internal::formatValue(row.objective) << ',';
    if (recovery)
      out << internal::formatValue(row.feasibility) << ','
          << internal::formatValue(row.relChangeX) << ',';
    out << internal::formatValue(row.relChangeA) << ',' << internal::formatValue(row.relChangeB)
        << ',' << internal::formatValue(row.relChangeC) << ','
        << internal::formatValue(row.decreaseSlack) << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

inline void saveCurveCsv(const std::string& path, const SweepResult<double>& sweep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "r,relative_error,iterations,seconds\n";
  for (const auto& point : sweep.points) {
    char seconds[32];
    std::snprintf(seconds, sizeof seconds, "%.6f", point.seconds);
    out << point.rank << ',' << internal::formatValue(point.relativeError) << ','
        << point.iterations << ',' << seconds << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Factor directory layout: one Tns3File per factor plus meta.txt.
// ---------------------------------------------------------------------------

/// A matrix stored as a degenerate (rows, cols, 1) tensor.
inline Tensor3d matrixAsTensor(const Tensor3d::Matrix& m) {
  Tensor3d x(m.rows(), m.cols(), 1);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) x(i, j, 0) = m(i, j);
  return x;
}

inline Tensor3d::Matrix tensorAsMatrix(const Tensor3d& x) {
  if (x.n3() != 1)
    throw std::invalid_argument("tensorAsMatrix: expected a single-slice tensor");
  Tensor3d::Matrix m(x.n1(), x.n2());
  for (Index j = 0; j < x.n2(); ++j)
    for (Index i = 0; i < x.n1(); ++i) m(i, j) = x(i, j, 0);
  return m;
}

namespace internal {

inline void writeMeta(const std::filesystem::path& dir, const std::string& method,
                      Index rank, const SolverConfig<double>& cfg,
                      const SolveTrace<double>& trace) {
  std::ofstream out(dir / "meta.txt", std::ios::binary);
  if (!out) throw ParseError((dir / "meta.txt").string() + ": cannot open for writing");
  out << "method " << method << '\n';
  out << "rank " << rank << '\n';
  out << "gamma " << formatValue(cfg.gamma) << '\n';
  out << "lambda " << formatValue(trace.lambda) << '\n';
  out << "eps " << formatValue(cfg.eps) << '\n';
  out << "max_iter " << cfg.maxIter << '\n';
  out << "restarts " << cfg.restarts << '\n';
  out << "seed " << cfg.seed << '\n';
  out << "iterations " << trace.iterations << '\n';
  out << "termination " << toString(trace.termination) << '\n';
  out << "final_objective " << formatValue(trace.finalObjective) << '\n';
  out << "final_relative_error " << formatValue(trace.finalRelativeError) << '\n';
  for (const auto& warning : trace.warnings) out << "warning " << warning << '\n';
  if (!out) throw ParseError((dir / "meta.txt").string() + ": write failed");
}

}  // namespace internal

inline void saveTripleFactors(const std::string& dir, const TripleFactors<double>& f,
                              const SolverConfig<double>& cfg, const SolveTrace<double>& trace) {
  std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  saveTns3((base / "A.tns3").string(), f.A);
  saveTns3((base / "B.tns3").string(), f.B);
  saveTns3((base / "C.tns3").string(), f.C);
  internal::writeMeta(base, "triple", f.rank(), cfg, trace);
}

inline void saveCpFactors(const std::string& dir, const CPFactors<double>& f,
                          const SolverConfig<double>& cfg, const SolveTrace<double>& trace) {
  std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  saveTns3((base / "A.tns3").string(), matrixAsTensor(f.A));
  saveTns3((base / "B.tns3").string(), matrixAsTensor(f.B));
  saveTns3((base / "C.tns3").string(), matrixAsTensor(f.C));
  internal::writeMeta(base, "cp", f.rank(), cfg, trace);
}

inline void saveTuckerFactors(const std::string& dir, const TuckerFactors<double>& f,
                              const SolverConfig<double>& cfg, const SolveTrace<double>& trace) {
  std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  saveTns3((base / "core.tns3").string(), f.core);
  saveTns3((base / "U.tns3").string(), matrixAsTensor(f.U));
  saveTns3((base / "V.tns3").string(), matrixAsTensor(f.V));
  saveTns3((base / "W.tns3").string(), matrixAsTensor(f.W));
  internal::writeMeta(base, "tucker", f.core.n1(), cfg, trace);
}

}  // namespace trid
