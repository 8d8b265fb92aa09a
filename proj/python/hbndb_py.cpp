#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hbndb/api.hpp"
#include "hbndb/bundle.hpp"
#include "hbndb/error.hpp"
#include "hbndb/ingest.hpp"
#include "hbndb/lineshape.hpp"
#include "hbndb/photophysics.hpp"
#include "hbndb/polarization.hpp"
#include "hbndb/query.hpp"
#include "hbndb/record_io.hpp"
#include "hbndb/stats.hpp"
#include "hbndb/units.hpp"
#include "hbndb/wavefunction.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace hbndb;
using cvec3 = std::array<std::complex<double>, 3>;

namespace {

py::dict dipole_dict(const DipoleMoment& d) {
  py::dict out;
  out["mu"] = d.mu;
  out["mu_sq_debye2"] = d.mu_sq_debye2;
  return out;
}

AngleConvention parse_convention(const std::string& name) {
  if (name == "principal") return AngleConvention::PrincipalAxis;
  if (name == "moduli") return AngleConvention::ComponentModuli;
  throw Error("usage", "angle convention must be 'principal' or 'moduli'");
}

// Read-only view over a loaded bundle; JSON in, JSON out.
class Database {
 public:
  explicit Database(const fs::path& path) : index_(Index::from_bundle(load_bundle(path, {true}))) {}

  std::size_t size() const { return index_.defect_count(); }
  std::size_t transition_count() const { return index_.transition_count(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& r : index_.records()) out.push_back(r.id);
    return out;
  }

  std::string get(const std::string& id) const { return serialize_record(index_.get_defect(id)); }

  std::string identify(const std::string& signature) const {
    json body;
    try {
      body = json::parse(signature);
    } catch (const json::exception& e) {
      throw Error("invalid_signature", e.what());
    }
    json out = json::array();
    for (const auto& m : index_.identify(signature_from_json(body))) out.push_back(to_json(m));
    return out.dump();
  }

  std::string histogram(const std::string& property, double bin) const {
    return to_json(stats(index_.records(), parse_histogram_property(property), bin)).dump();
  }

 private:
  Index index_;
};

}  // namespace

PYBIND11_MODULE(_hbndb, m) {
  m.doc() = "hBN defect database core";

  py::exception<Error>(m, "HbndbError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("hbndb._hbndb").attr("HbndbError");
      py::object exc = type(e.what());
      exc.attr("code") = e.code();
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("compute_zpl", &compute_zpl, py::arg("ground_total"), py::arg("excited_total"));
  m.def("ev_to_nm", &units::ev_to_nm, py::arg("ev"));

  m.def(
      "radiative_rate",
      [](double zpl, double mu_sq, double n_d) {
        const auto r = radiative_rate(zpl, mu_sq, n_d);
        py::dict out;
        out["rate"] = r.rate;
        out["lifetime"] = r.lifetime;
        return out;
      },
      py::arg("zpl"), py::arg("mu_sq_debye2"), py::arg("refractive_index") = kDefaultRefractiveIndex);
  m.def("quantum_efficiency", &quantum_efficiency, py::arg("rate_r"), py::arg("rate_nr"));

  m.def(
      "transition_dipole",
      [](const fs::path& initial, const fs::path& final_) {
        return dipole_dict(transition_dipole(parse_wfc(initial), parse_wfc(final_)));
      },
      py::arg("initial_wfc"), py::arg("final_wfc"));

  m.def(
      "polarization",
      [](const cvec3& mu, const std::string& convention) {
        PolarizationOptions opt;
        opt.convention = parse_convention(convention);
        const auto p = polarization_from_dipole(DipoleMoment::from_e_angstrom(mu), opt);
        py::dict out;
        out["angle_deg"] = p.angle_deg;
        out["raw_dipole_angle_deg"] = p.raw_dipole_angle_deg;
        out["visibility"] = p.visibility;
        out["out_of_plane"] = p.out_of_plane;
        return out;
      },
      py::arg("mu"), py::arg("convention") = "principal");
  m.def("misalignment_deg", py::overload_cast<double, double>(&misalignment_deg), py::arg("a"), py::arg("b"));

  m.def("hr_factor", &hr_factor, py::arg("energy_ev"), py::arg("q_amu_angstrom"));
  m.def(
      "pl_spectrum",
      [](const std::vector<std::pair<double, double>>& modes, double zpl, double gamma) {
        std::vector<HRFactor> partial;
        for (const auto& [e, s] : modes) partial.push_back({e, s});
        const auto s = pl_spectrum(make_hr_spectrum(std::move(partial)), zpl, gamma);
        py::dict out;
        out["energies"] = s.energies;
        out["intensities"] = s.intensities;
        out["spectral_function"] = s.spectral_function;
        return out;
      },
      py::arg("modes"), py::arg("zpl"), py::arg("gamma") = kDefaultLineshapeGamma);

  m.def(
      "ingest",
      [](const fs::path& manifest, const fs::path& out, bool strict, unsigned jobs, double n_d) {
        IngestOptions opt;
        opt.strict = strict;
        opt.jobs = jobs;
        opt.refractive_index = n_d;
        IngestResult res;
        {
          py::gil_scoped_release release;
          res = ingest(parse_ingest_manifest(manifest), out, opt);
        }
        py::list failures;
        for (const auto& f : res.failures) {
          py::dict d;
          d["entry"] = f.entry;
          d["code"] = f.code;
          d["message"] = f.message;
          failures.append(d);
        }
        py::dict result;
        result["records"] = serialize_records(res.records);
        result["failures"] = failures;
        result["written"] = res.written;
        return result;
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("strict") = false, py::arg("jobs") = 1,
      py::arg("refractive_index") = kDefaultRefractiveIndex);

  m.def(
      "load_records", [](const fs::path& path) { return serialize_records(load_bundle(path, {true}).records); },
      py::arg("bundle"));

  py::class_<Database>(m, "Database")
      .def(py::init<const fs::path&>(), py::arg("bundle"))
      .def("__len__", &Database::size)
      .def_property_readonly("transition_count", &Database::transition_count)
      .def("ids", &Database::ids)
      .def("get", &Database::get, py::arg("id"))
      .def("identify", &Database::identify, py::arg("signature"))
      .def("histogram", &Database::histogram, py::arg("property"), py::arg("bin"));
}
