#include "hbndb/structure.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double deg(double rad) { return rad * 180.0 / units::kPi; }
double rad(double deg) { return deg * units::kPi / 180.0; }

Mat3 inverse(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (std::abs(det) < 1e-12) throw Error("bad_structure", "singular lattice");
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

// CIF numbers may carry a standard uncertainty in parentheses, e.g. 2.504(3).
double cif_number(const std::string& token) {
  const auto paren = token.find('(');
  try {
    return std::stod(token.substr(0, paren));
  } catch (const std::exception&) {
    throw Error("bad_structure", "bad CIF number '" + token + "'");
  }
}

std::string strip_digits(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalpha(static_cast<unsigned char>(c))) out += c;
    else break;
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8f", v == 0.0 ? 0.0 : v);  // no "-0.00000000"
  return buf;
}

}  // namespace

StructureFormat structure_format_from_name(std::string_view name) {
  if (name == "xyz") return StructureFormat::Xyz;
  if (name == "cif") return StructureFormat::Cif;
  throw Error("bad_format", "unknown structure format '" + std::string(name) + "'");
}

StructureFormat structure_format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  return structure_format_from_name(ext);
}

Structure read_xyz(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw Error("bad_structure", "XYZ needs a count line and a comment line");
  std::size_t n = 0;
  try {
    n = std::stoul(lines[0]);
  } catch (const std::exception&) {
    throw Error("bad_structure", "XYZ atom count is not an integer");
  }
  if (lines.size() < n + 2) throw Error("bad_structure", "XYZ truncated: fewer atom lines than declared");

  Structure s;
  s.title = lines[1];
  const auto lat = lines[1].find("Lattice=\"");
  if (lat != std::string::npos) {
    const auto start = lat + 9;
    const auto end = lines[1].find('"', start);
    std::istringstream in(lines[1].substr(start, end - start));
    Mat3 m{};
    for (auto& row : m)
      for (auto& v : row)
        if (!(in >> v)) throw Error("bad_structure", "XYZ Lattice needs 9 numbers");
    s.lattice = m;
    s.title.erase(lat, end + 1 - lat);
  }
  if (const auto props = s.title.find("Properties="); props != std::string::npos) {
    const auto stop = s.title.find(' ', props);
    s.title.erase(props, stop == std::string::npos ? std::string::npos : stop - props);
  }
  {
    while (!s.title.empty() && s.title.back() == ' ') s.title.pop_back();
    while (!s.title.empty() && s.title.front() == ' ') s.title.erase(0, 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream in(lines[i + 2]);
    Atom a;
    if (!(in >> a.symbol >> a.position[0] >> a.position[1] >> a.position[2])) {
      throw Error("bad_structure", "XYZ atom line " + std::to_string(i + 1) + " malformed");
    }
    s.atoms.push_back(a);
  }
  return s;
}

Structure read_cif(std::string_view text) {
  const auto lines = split_lines(text);
  Structure s;
  std::map<std::string, double> cell;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream in(lines[i]);
    std::string key;
    if (!(in >> key)) continue;
    if (key.rfind("data_", 0) == 0 && s.title.empty()) {
      s.title = key.substr(5);
    } else if (key.rfind("_cell_length_", 0) == 0 || key.rfind("_cell_angle_", 0) == 0) {
      std::string value;
      in >> value;
      cell[key] = cif_number(value);
    } else if (key == "loop_") {
      std::vector<std::string> columns;
      std::size_t j = i + 1;
      for (; j < lines.size(); ++j) {
        std::istringstream cin(lines[j]);
        std::string tok;
        if (!(cin >> tok) || tok[0] != '_') break;
        columns.push_back(tok);
      }
      auto col = [&](const std::string& name) -> int {
        for (std::size_t c = 0; c < columns.size(); ++c)
          if (columns[c] == name) return static_cast<int>(c);
        return -1;
      };
      const int fx = col("_atom_site_fract_x"), fy = col("_atom_site_fract_y"),
                fz = col("_atom_site_fract_z");
      const int sym = col("_atom_site_type_symbol"), label = col("_atom_site_label");
      if (fx < 0 || fy < 0 || fz < 0) {
        i = j - 1;
        continue;
      }
      if (cell.size() < 6) throw Error("bad_structure", "CIF cell parameters must precede the atom loop");
      const double a = cell["_cell_length_a"], b = cell["_cell_length_b"], c = cell["_cell_length_c"];
      const double al = rad(cell["_cell_angle_alpha"]), be = rad(cell["_cell_angle_beta"]),
                   ga = rad(cell["_cell_angle_gamma"]);
      Mat3 m{};
      m[0] = {a, 0.0, 0.0};
      m[1] = {b * std::cos(ga), b * std::sin(ga), 0.0};
      const double cx = c * std::cos(be);
      const double cy = c * (std::cos(al) - std::cos(be) * std::cos(ga)) / std::sin(ga);
      m[2] = {cx, cy, std::sqrt(std::max(0.0, c * c - cx * cx - cy * cy))};
      s.lattice = m;
      for (; j < lines.size(); ++j) {
        std::istringstream rin(lines[j]);
        std::vector<std::string> toks;
        std::string tok;
        while (rin >> tok) toks.push_back(tok);
        if (toks.empty() || toks[0][0] == '_' || toks[0] == "loop_" || toks[0][0] == '#') break;
        if (toks.size() < columns.size()) throw Error("bad_structure", "CIF atom row too short");
        Atom atom;
        atom.symbol = sym >= 0 ? toks[sym] : strip_digits(toks[label >= 0 ? label : 0]);
        const Vec3 f{cif_number(toks[fx]), cif_number(toks[fy]), cif_number(toks[fz])};
        for (int k = 0; k < 3; ++k) atom.position[k] = f[0] * m[0][k] + f[1] * m[1][k] + f[2] * m[2][k];
        s.atoms.push_back(atom);
      }
      i = j - 1;
    }
  }
  return s;
}

Structure read_structure(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable_file", "cannot read structure file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return structure_format_from_path(path) == StructureFormat::Xyz ? read_xyz(ss.str()) : read_cif(ss.str());
}

std::string write_xyz(const Structure& s) {
  std::string out = std::to_string(s.atoms.size()) + "\n";
  std::string comment;
  if (s.lattice) {
    comment = "Lattice=\"";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) comment += (r || c ? " " : "") + fmt((*s.lattice)[r][c]);
    comment += "\" Properties=species:S:1:pos:R:3";
  }
  if (!s.title.empty()) comment += (comment.empty() ? "" : " ") + s.title;
  out += comment + "\n";
  for (const auto& a : s.atoms) {
    out += a.symbol + " " + fmt(a.position[0]) + " " + fmt(a.position[1]) + " " + fmt(a.position[2]) + "\n";
  }
  return out;
}

std::string write_cif(const Structure& s) {
  if (!s.lattice) throw Error("bad_structure", "CIF export requires a periodic cell");
  const Mat3& m = *s.lattice;
  const double a = norm(m[0]), b = norm(m[1]), c = norm(m[2]);
  const double alpha = deg(std::acos(dot(m[1], m[2]) / (b * c)));
  const double beta = deg(std::acos(dot(m[0], m[2]) / (a * c)));
  const double gamma = deg(std::acos(dot(m[0], m[1]) / (a * b)));
  const Mat3 inv = inverse(m);

  std::string name = s.title.empty() ? "structure" : s.title;
  for (char& ch : name)
    if (std::isspace(static_cast<unsigned char>(ch))) ch = '_';

  std::string out = "data_" + name + "\n";
  out += "_symmetry_space_group_name_H-M   'P 1'\n";
  out += "_symmetry_Int_Tables_number      1\n";
  out += "_cell_length_a    " + fmt(a) + "\n";
  out += "_cell_length_b    " + fmt(b) + "\n";
  out += "_cell_length_c    " + fmt(c) + "\n";
  out += "_cell_angle_alpha " + fmt(alpha) + "\n";
  out += "_cell_angle_beta  " + fmt(beta) + "\n";
  out += "_cell_angle_gamma " + fmt(gamma) + "\n";
  out += "loop_\n_atom_site_label\n_atom_site_type_symbol\n";
  out += "_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n";
  std::map<std::string, int> counters;
  for (const auto& at : s.atoms) {
    Vec3 f{};
    // frac = pos * inv(lattice), lattice rows are cell vectors
    for (int k = 0; k < 3; ++k) f[k] = at.position[0] * inv[0][k] + at.position[1] * inv[1][k] + at.position[2] * inv[2][k];
    const std::string label = at.symbol + std::to_string(++counters[at.symbol]);
    out += label + " " + at.symbol + " " + fmt(f[0]) + " " + fmt(f[1]) + " " + fmt(f[2]) + "\n";
  }
  return out;
}

std::string write_structure(const Structure& s, StructureFormat format) {
  return format == StructureFormat::Xyz ? write_xyz(s) : write_cif(s);
}

}  // namespace hbndb
