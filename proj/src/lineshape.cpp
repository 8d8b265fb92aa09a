#include "hbndb/lineshape.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

using namespace units;

namespace {

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PhononSet parse_phonons(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line) || line.rfind("PHONONS v1", 0) != 0) {
    throw Error("bad_phonons", "missing 'PHONONS v1' magic line");
  }
  std::size_t n_atoms = 0, n_modes = 0;
  if (!next_content_line(in, line) || !(std::istringstream(line) >> n_atoms >> n_modes)) {
    throw Error("bad_phonons", "expected '<n_atoms> <n_modes>'");
  }
  PhononSet ph;
  for (std::size_t a = 0; a < n_atoms; ++a) {
    if (!next_content_line(in, line)) throw Error("bad_phonons", "truncated atom block");
    std::istringstream ls(line);
    std::string sym;
    double m = 0.0;
    Vec3 g{}, e{};
    if (!(ls >> sym >> m >> g[0] >> g[1] >> g[2] >> e[0] >> e[1] >> e[2])) {
      throw Error("bad_phonons", "malformed atom line " + std::to_string(a + 1));
    }
    ph.symbols.push_back(sym);
    ph.masses.push_back(m);
    ph.ground_positions.push_back(g);
    ph.excited_positions.push_back(e);
  }
  for (std::size_t k = 0; k < n_modes; ++k) {
    if (!next_content_line(in, line)) throw Error("bad_phonons", "truncated mode block");
    std::istringstream hs(line);
    std::string tag;
    PhononMode mode;
    if (!(hs >> tag >> mode.energy) || tag != "mode") {
      throw Error("bad_phonons", "expected 'mode <hbar_omega_eV>' for mode " + std::to_string(k + 1));
    }
    for (std::size_t a = 0; a < n_atoms; ++a) {
      if (!next_content_line(in, line)) throw Error("bad_phonons", "truncated displacement rows");
      Vec3 d{};
      if (!(std::istringstream(line) >> d[0] >> d[1] >> d[2])) {
        throw Error("bad_phonons", "malformed displacement row");
      }
      mode.displacement.push_back(d);
    }
    ph.modes.push_back(std::move(mode));
  }
  if (next_content_line(in, line)) throw Error("bad_phonons", "trailing content after declared modes");
  check_phonons(ph);
  return ph;
}

PhononSet parse_phonons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", "cannot read phonon file " + path.string());
  return parse_phonons(in);
}

std::string format_phonons(const PhononSet& ph) {
  std::string out = "PHONONS v1\n" + std::to_string(ph.masses.size()) + " " + std::to_string(ph.modes.size()) + "\n";
  for (std::size_t a = 0; a < ph.masses.size(); ++a) {
    out += ph.symbols[a] + " " + num(ph.masses[a]);
    for (double v : ph.ground_positions[a]) out += " " + num(v);
    for (double v : ph.excited_positions[a]) out += " " + num(v);
    out += "\n";
  }
  for (const auto& m : ph.modes) {
    out += "mode " + num(m.energy) + "\n";
    for (const auto& d : m.displacement) out += num(d[0]) + " " + num(d[1]) + " " + num(d[2]) + "\n";
  }
  return out;
}

void check_phonons(const PhononSet& ph) {
  const std::size_t n = ph.masses.size();
  if (ph.symbols.size() != n || ph.ground_positions.size() != n || ph.excited_positions.size() != n) {
    throw Error("bad_phonons", "atom counts differ between masses, symbols and positions");
  }
  for (double m : ph.masses)
    if (!(m > 0.0)) throw Error("bad_phonons", "atomic masses must be positive");
  for (std::size_t k = 0; k < ph.modes.size(); ++k) {
    const auto& mode = ph.modes[k];
    if (!(mode.energy > 0.0)) throw Error("bad_phonons", "mode " + std::to_string(k) + " has non-positive energy");
    if (mode.displacement.size() != n) {
      throw Error("bad_phonons", "mode " + std::to_string(k) + " displacement count differs from atom count");
    }
    double norm = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const auto& d = mode.displacement[a];
      norm += ph.masses[a] * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    }
    if (std::abs(norm - 1.0) > 1e-6) {
      throw Error("bad_phonons", "mode " + std::to_string(k) + " displacement is not mass-weighted normalized");
    }
  }
}

std::vector<double> configuration_coordinates(const PhononSet& ph) {
  check_phonons(ph);
  std::vector<double> q;
  q.reserve(ph.modes.size());
  for (const auto& mode : ph.modes) {
    double qk = 0.0;
    for (std::size_t a = 0; a < ph.masses.size(); ++a) {
      for (int i = 0; i < 3; ++i) {
        const double dr = ph.excited_positions[a][i] - ph.ground_positions[a][i];
        qk += ph.masses[a] * dr * mode.displacement[a][i];
      }
    }
    q.push_back(qk);
  }
  return q;
}

double hr_factor(double energy_ev, double q) {
  const double q_si_sq = q * q * kAtomicMassUnit * 1e-20;  // kg m^2
  return energy_ev * kJoulePerEv * q_si_sq / (2.0 * kHbar * kHbar);
}

HRSpectrum make_hr_spectrum(std::vector<HRFactor> partial) {
  HRSpectrum hr;
  hr.partial = std::move(partial);
  for (const auto& f : hr.partial) hr.total += f.s;
  return hr;
}

HRSpectrum hr_factors(const PhononSet& ph) {
  const auto q = configuration_coordinates(ph);
  std::vector<HRFactor> parts;
  parts.reserve(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) parts.push_back({ph.modes[k].energy, hr_factor(ph.modes[k].energy, q[k])});
  return make_hr_spectrum(std::move(parts));
}

std::vector<std::complex<double>> spectral_function_time(const HRSpectrum& hr, const TimeGrid& grid) {
  if (grid.count == 0) throw Error("empty_grid", "time grid has no samples");
  std::vector<std::complex<double>> out(grid.count);
  for (std::size_t j = 0; j < grid.count; ++j) {
    const double t = grid.start + static_cast<double>(j) * grid.step;
    std::complex<double> s;
    for (const auto& f : hr.partial) s += f.s * std::polar(1.0, -f.energy * t / kHbarEvFs);
    out[j] = s;
  }
  return out;
}

SpectralWindow default_window(double zpl) { return {zpl - 1.0, zpl + 0.25, 0.001}; }

PLSpectrum pl_spectrum(const HRSpectrum& hr, double zpl, double gamma, const SpectralWindow& w_in) {
  const SpectralWindow w = (w_in.lo == 0.0 && w_in.hi == 0.0) ? default_window(zpl) : w_in;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("bad_gamma", "gamma must be positive");
  if (!(w.step > 0.0) || !(w.hi > w.lo) || !(w.lo > 0.0)) {
    throw Error("bad_window", "spectral window needs 0 < lo < hi and a positive step");
  }
  if (zpl < w.lo || zpl > w.hi) throw Error("window_excludes_zpl", "spectral window does not cover the ZPL");

  double max_mode = 0.0;
  for (const auto& f : hr.partial) max_mode = std::max(max_mode, f.energy);
  const double half_width = std::max(zpl - w.lo, w.hi - zpl);

  // Time in units of hbar/eV: omega t = E tau.
  const double dtau = kPi / (4.0 * std::max(max_mode, half_width));
  const auto n_steps = static_cast<std::size_t>(std::ceil((10.0 / gamma) / dtau));

  std::vector<std::complex<double>> g(n_steps + 1);
  for (std::size_t j = 0; j <= n_steps; ++j) {
    const double tau = static_cast<double>(j) * dtau;
    std::complex<double> s;
    for (const auto& f : hr.partial) s += f.s * std::polar(1.0, -f.energy * tau);
    g[j] = std::exp(s - hr.total);
  }
  g.front() *= 0.5;
  g.back() *= 0.5;

  PLSpectrum out;
  out.zpl = zpl;
  out.gamma = gamma;
  out.time_step = dtau * kHbarEvFs;
  out.time_span = static_cast<double>(n_steps) * dtau * kHbarEvFs;

  const auto n_e = static_cast<std::size_t>(std::floor((w.hi - w.lo) / w.step + 1e-9)) + 1;
  out.energies.resize(n_e);
  out.spectral_function.resize(n_e);
  out.intensities.resize(n_e);

  // G(-t) = conj(G(t)), so the full-line integral is twice the real part of the half-line one.
  constexpr std::size_t kResync = 64;
  for (std::size_t i = 0; i < n_e; ++i) {
    const double e = w.lo + static_cast<double>(i) * w.step;
    const std::complex<double> a(-gamma, zpl - e);
    const std::complex<double> step = std::exp(a * dtau);
    std::complex<double> z(1.0, 0.0);
    std::complex<double> acc;
    for (std::size_t j = 0; j <= n_steps; ++j) {
      if (j % kResync == 0) z = std::exp(a * (static_cast<double>(j) * dtau));
      acc += g[j] * z;
      z *= step;
    }
    out.energies[i] = e;
    out.spectral_function[i] = dtau * acc.real() / kPi;
  }

  double peak = 0.0;
  for (std::size_t i = 0; i < n_e; ++i) {
    const double e = out.energies[i];
    out.intensities[i] = e * e * e * out.spectral_function[i];
    peak = std::max(peak, out.intensities[i]);
  }
  if (!(peak > 0.0)) throw Error("bad_window", "spectrum has no positive intensity inside the window");
  out.normalization = 1.0 / peak;
  for (auto& v : out.intensities) {
    v /= peak;
    if (v < 0.0) {
      out.max_ringing = std::max(out.max_ringing, -v);
      v = 0.0;
    }
  }
  return out;
}

std::string spectrum_csv(const PLSpectrum& s) {
  std::string out = "energy_eV,intensity\n";
  char buf[96];
  for (std::size_t i = 0; i < s.energies.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9e\n", s.energies[i], s.intensities[i]);
    out += buf;
  }
  return out;
}

std::vector<double> lorentzian_line_weights(const PLSpectrum& s, std::span<const double> centers) {
  const std::size_t n = centers.size();
  if (n == 0) return {};
  if (s.energies.size() < 2) throw Error("bad_window", "spectrum grid too small");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = centers[order[k]];
  for (std::size_t k = 1; k < n; ++k)
    if (c[k] == c[k - 1]) throw Error("bad_centers", "line centres must be distinct");

  const double de = s.energies[1] - s.energies[0];
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::size_t window = 0;
  for (std::size_t i = 0; i < s.energies.size(); ++i) {
    const double e = s.energies[i];
    while (window + 1 < n && e > 0.5 * (c[window] + c[window + 1])) ++window;
    const auto row = static_cast<Eigen::Index>(window);
    b[row] += s.spectral_function[i] * de;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = e - c[k];
      m(row, static_cast<Eigen::Index>(k)) += s.gamma / (kPi * (x * x + s.gamma * s.gamma)) * de;
    }
  }
  const Eigen::VectorXd w = m.partialPivLu().solve(b);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[order[k]] = w[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace hbndb
