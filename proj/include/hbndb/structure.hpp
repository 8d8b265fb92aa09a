#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hbndb {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

struct Atom {
  std::string symbol;
  Vec3 position{};  // Cartesian, Angstrom
};

// Periodic supercell. Lattice rows are the cell vectors in Angstrom.
struct Structure {
  std::string title;
  std::optional<Mat3> lattice;
  std::vector<Atom> atoms;
};

enum class StructureFormat { Xyz, Cif };

StructureFormat structure_format_from_name(std::string_view name);       // "xyz" | "cif"
StructureFormat structure_format_from_path(const std::filesystem::path& path);

// Plain or extended XYZ (Lattice="ax ay az bx by bz cx cy cz" on the comment line).
Structure read_xyz(std::string_view text);
// Minimal CIF: _cell_length_*/_cell_angle_* plus an _atom_site loop with fractional coordinates.
Structure read_cif(std::string_view text);
Structure read_structure(const std::filesystem::path& path);

// Deterministic writers, fixed 8-decimal formatting.
std::string write_xyz(const Structure& s);
std::string write_cif(const Structure& s);  // requires a lattice
std::string write_structure(const Structure& s, StructureFormat format);

}  // namespace hbndb
