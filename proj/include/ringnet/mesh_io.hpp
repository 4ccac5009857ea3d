#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ringnet/camera.hpp"
#include "ringnet/error.hpp"
#include "ringnet/mesh.hpp"

namespace ringnet {

namespace detail {

/// Shortest decimal text that parses back to the same double.
inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError(where + ": invalid number '" + tok + "'");
  return v;
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

inline std::ifstream open_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  return in;
}

inline std::ofstream create_text(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw FormatError("cannot write " + p.string());
  return out;
}

inline void check_faces(const Mesh& m, const std::string& source) {
  for (std::size_t f = 0; f < m.faces.size(); ++f)
    for (std::uint32_t v : m.faces[f])
      if (v >= m.vertices.size())
        throw FormatError(source + ": face " + std::to_string(f) + " references vertex " + std::to_string(v + 1) + " of " +
                          std::to_string(m.vertices.size()));
}

}  // namespace detail

/// Wavefront OBJ subset: `v` and `f` records; polygons are fan-triangulated,
/// `a/b/c` face tokens use the position index; other records are ignored.
inline Mesh parse_obj(std::istream& in, const std::string& source = "obj") {
  Mesh m;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tok = detail::tokens(line);
    if (tok.empty()) continue;
    const std::string where = source + ":" + std::to_string(n);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw FormatError(where + ": vertex needs three coordinates");
      m.vertices.emplace_back(detail::parse_double(tok[1], where), detail::parse_double(tok[2], where),
                              detail::parse_double(tok[3], where));
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw FormatError(where + ": face needs at least three vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string head = tok[i].substr(0, tok[i].find('/'));
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc() || ptr != head.data() + head.size()) throw FormatError(where + ": invalid face index '" + tok[i] + "'");
        if (v <= 0) throw FormatError(where + ": face indices must be positive, got " + std::to_string(v));
        if (static_cast<std::size_t>(v) > m.vertices.size())
          throw FormatError(where + ": face index " + std::to_string(v) + " exceeds the " + std::to_string(m.vertices.size()) +
                            " vertices read so far");
        idx.push_back(static_cast<std::uint32_t>(v - 1));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) m.faces.push_back({idx[0], idx[i], idx[i + 1]});
    }
  }
  return m;
}

inline Mesh read_obj(const std::filesystem::path& p) {
  auto in = detail::open_text(p);
  return parse_obj(in, p.string());
}

inline void write_obj(const Mesh& m, std::ostream& out) {
  for (const Vec3& v : m.vertices)
    out << "v " << detail::shortest(v.x()) << ' ' << detail::shortest(v.y()) << ' ' << detail::shortest(v.z()) << '\n';
  for (const Face& f : m.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void write_obj(const Mesh& m, const std::filesystem::path& p) {
  auto out = detail::create_text(p);
  write_obj(m, out);
}

/// ASCII PLY with `vertex` (x, y, z first) and `face` (vertex_indices list) elements.
inline Mesh parse_ply(std::istream& in, const std::string& source = "ply") {
  std::string line;
  std::size_t n = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++n;
      auto t = detail::tokens(line);
      if (!t.empty()) return t;
    }
    throw FormatError(source + ": unexpected end of file");
  };
  auto where = [&] { return source + ":" + std::to_string(n); };
  if (next() != std::vector<std::string>{"ply"}) throw FormatError(where() + ": missing 'ply' magic");
  std::size_t num_vertices = 0, num_faces = 0, vertex_props = 0;
  std::string current;
  for (;;) {
    const auto t = next();
    if (t[0] == "end_header") break;
    if (t[0] == "format") {
      if (t.size() < 2 || t[1] != "ascii") throw FormatError(where() + ": only ASCII PLY is supported");
    } else if (t[0] == "element" && t.size() == 3) {
      current = t[1];
      std::size_t count = 0;
      if (std::from_chars(t[2].data(), t[2].data() + t[2].size(), count).ec != std::errc())
        throw FormatError(where() + ": invalid element count");
      if (current == "vertex") num_vertices = count;
      else if (current == "face") num_faces = count;
      else if (count) throw FormatError(where() + ": unsupported element '" + current + "'");
    } else if (t[0] == "property" && current == "vertex") {
      ++vertex_props;
    }
  }
  if (num_vertices && vertex_props < 3) throw FormatError(source + ": vertex element needs x, y, z");
  Mesh m;
  for (std::size_t i = 0; i < num_vertices; ++i) {
    const auto t = next();
    if (t.size() < 3) throw FormatError(where() + ": vertex needs three coordinates");
    m.vertices.emplace_back(detail::parse_double(t[0], where()), detail::parse_double(t[1], where()),
                            detail::parse_double(t[2], where()));
  }
  for (std::size_t i = 0; i < num_faces; ++i) {
    const auto t = next();
    std::size_t k = 0;
    std::from_chars(t[0].data(), t[0].data() + t[0].size(), k);
    if (k < 3 || t.size() != k + 1) throw FormatError(where() + ": malformed face record");
    std::vector<std::uint32_t> idx;
    for (std::size_t j = 1; j <= k; ++j) {
      long long v = -1;
      std::from_chars(t[j].data(), t[j].data() + t[j].size(), v);
      if (v < 0 || static_cast<std::size_t>(v) >= num_vertices) throw FormatError(where() + ": face index out of range");
      idx.push_back(static_cast<std::uint32_t>(v));
    }
    for (std::size_t j = 1; j + 1 < idx.size(); ++j) m.faces.push_back({idx[0], idx[j], idx[j + 1]});
  }
  return m;
}

inline Mesh read_ply(const std::filesystem::path& p) {
  auto in = detail::open_text(p);
  return parse_ply(in, p.string());
}

inline void write_ply(const Mesh& m, std::ostream& out) {
  out << "ply\nformat ascii 1.0\nelement vertex " << m.vertices.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << m.faces.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : m.vertices)
    out << detail::shortest(v.x()) << ' ' << detail::shortest(v.y()) << ' ' << detail::shortest(v.z()) << '\n';
  for (const Face& f : m.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void write_ply(const Mesh& m, const std::filesystem::path& p) {
  auto out = detail::create_text(p);
  write_ply(m, out);
}

/// Picks the reader by extension (.obj or .ply).
inline Mesh read_mesh(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  Mesh m;
  if (ext == ".obj") m = read_obj(p);
  else if (ext == ".ply") m = read_ply(p);
  else throw FormatError("unsupported mesh extension '" + ext + "' for " + p.string());
  detail::check_faces(m, p.string());
  return m;
}

inline void write_mesh(const Mesh& m, const std::filesystem::path& p) {
  if (p.extension() == ".ply") write_ply(m, p);
  else write_obj(m, p);
}

/// One `x y confidence` line per landmark.
inline Landmarks2D read_landmarks_2d(const std::filesystem::path& p) {
  auto in = detail::open_text(p);
  std::vector<double> xy, conf;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = detail::tokens(line);
    if (t.empty()) continue;
    const std::string where = p.string() + ":" + std::to_string(n);
    if (t.size() != 3) throw FormatError(where + ": expected 'x y confidence'");
    xy.push_back(detail::parse_double(t[0], where));
    xy.push_back(detail::parse_double(t[1], where));
    conf.push_back(detail::parse_double(t[2], where));
  }
  Landmarks2D lm;
  lm.positions = DenseArray({conf.size(), 2}, std::move(xy));
  lm.confidence = std::move(conf);
  return lm;
}

inline void write_landmarks_2d(const Landmarks2D& lm, const std::filesystem::path& p) {
  auto out = detail::create_text(p);
  for (std::size_t i = 0; i < lm.size(); ++i)
    out << detail::shortest(lm.positions(i, 0)) << ' ' << detail::shortest(lm.positions(i, 1)) << ' '
        << detail::shortest(lm.confidence[i]) << '\n';
}

/// One `x y z` line per point.
inline std::vector<Vec3> read_points(const std::filesystem::path& p) {
  auto in = detail::open_text(p);
  std::vector<Vec3> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = detail::tokens(line);
    if (t.empty()) continue;
    const std::string where = p.string() + ":" + std::to_string(n);
    if (t.size() != 3) throw FormatError(where + ": expected 'x y z'");
    out.emplace_back(detail::parse_double(t[0], where), detail::parse_double(t[1], where), detail::parse_double(t[2], where));
  }
  return out;
}

inline void write_points(const std::vector<Vec3>& pts, const std::filesystem::path& p) {
  auto out = detail::create_text(p);
  for (const Vec3& v : pts)
    out << detail::shortest(v.x()) << ' ' << detail::shortest(v.y()) << ' ' << detail::shortest(v.z()) << '\n';
}

}  // namespace ringnet
