#include "hbndb/api.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <httplib.h>

#include "hbndb/error.hpp"
#include "hbndb/lineshape.hpp"
#include "hbndb/photophysics.hpp"
#include "hbndb/record_io.hpp"
#include "hbndb/stats.hpp"
#include "hbndb/structure.hpp"

namespace hbndb {

namespace {

constexpr const char* kPrefix = "/api/v1";
constexpr double kMinSpectrumGamma = 1e-4;  // eV; bounds the time grid length
constexpr std::size_t kMaxSpectrumPoints = 20001;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  ApiResponse r;
  r.status = status;
  r.body = json{{"error", {{"code", code}, {"message", message}}}}.dump();
  return r;
}

ApiResponse json_response(const json& body, int status = 200) {
  ApiResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const auto next = path.find('/', pos);
    const auto end = next == std::string::npos ? path.size() : next;
    if (end > pos) parts.push_back(path.substr(pos, end - pos));
    pos = end + 1;
  }
  return parts;
}

// Query-string accessor that enforces the endpoint's parameter whitelist.
class Params {
 public:
  Params(const std::multimap<std::string, std::string>& q, std::initializer_list<const char*> allowed) : q_(q) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : q_) {
      if (!ok.count(k)) throw HttpError{400, "unknown_parameter", "unknown query parameter '" + k + "'"};
      if (q_.count(k) > 1) throw HttpError{400, "duplicate_parameter", "parameter '" + k + "' given twice"};
    }
  }

  std::optional<std::string> str(const std::string& key) const {
    auto it = q_.find(key);
    if (it == q_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> num(const std::string& key) const {
    auto s = str(key);
    if (!s) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || ptr != s->data() + s->size() || !std::isfinite(v)) {
      throw HttpError{400, "bad_parameter", "parameter '" + key + "' must be a finite number"};
    }
    return v;
  }

  std::optional<long long> integer(const std::string& key) const {
    auto s = str(key);
    if (!s) return std::nullopt;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || ptr != s->data() + s->size()) {
      throw HttpError{400, "bad_parameter", "parameter '" + key + "' must be an integer"};
    }
    return v;
  }

 private:
  const std::multimap<std::string, std::string>& q_;
};

std::size_t page_size(const Params& p, const ApiConfig& cfg) {
  const auto v = p.integer("page_size");
  if (!v) return cfg.default_page_size;
  if (*v < 1 || static_cast<std::size_t>(*v) > cfg.max_page_size) {
    throw HttpError{400, "bad_parameter", "page_size must lie in [1, " + std::to_string(cfg.max_page_size) + "]"};
  }
  return static_cast<std::size_t>(*v);
}

json defect_summary(const DefectRecord& r) {
  json zpls = json::array();
  for (const auto& t : r.transitions) {
    json tj{{"spin_channel", std::string(to_string(t.spin_channel))}, {"zpl", t.zpl}};
    if (t.radiative_lifetime) {
      tj["radiative_lifetime"] = std::isinf(*t.radiative_lifetime) ? json("inf") : json(*t.radiative_lifetime);
    }
    zpls.push_back(tj);
  }
  return {{"id", r.id},
          {"formula", formula_label(r.composition)},
          {"charge", r.charge},
          {"spin_multiplicity", std::string(to_string(r.spin_multiplicity))},
          {"host_group", group_label(r)},
          {"elements", elements_of(r)},
          {"transitions", zpls}};
}

std::optional<SpinMultiplicity> spin_param(const Params& p) {
  auto s = p.str("spin");
  if (!s) return std::nullopt;
  try {
    return parse_spin_multiplicity(*s);
  } catch (const Error& e) {
    throw HttpError{400, "bad_parameter", e.what()};
  }
}

std::optional<std::string> group_param(const Params& p) {
  auto g = p.str("host_group");
  if (!g) return std::nullopt;
  const auto& groups = histogram_groups();
  if (std::find(groups.begin(), groups.end(), *g) == groups.end()) {
    throw HttpError{400, "bad_parameter", "host_group must be one of III, IV, V, VI, none"};
  }
  return g;
}

const DefectRecord& require_defect(const Index& index, const std::string& id) {
  const DefectRecord* r = index.find(id);
  if (!r) throw HttpError{404, "not_found", "no defect with id '" + id + "'"};
  return *r;
}

std::size_t require_transition(const DefectRecord& r, const std::string& n) {
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), idx);
  if (ec != std::errc() || ptr != n.data() + n.size()) {
    throw HttpError{400, "bad_parameter", "transition index must be a non-negative integer"};
  }
  if (idx >= r.transitions.size()) throw HttpError{404, "not_found", "no transition " + n + " on " + r.id};
  return idx;
}

}  // namespace

Signature signature_from_json(const json& body) {
  if (!body.is_object()) throw Error("invalid_signature", "signature must be a JSON object");
  static const std::set<std::string> known{"zpl",         "tol",    "lifetime_min", "lifetime_max",
                                           "visibility_min", "misalignment_max_deg", "spin", "charge",
                                           "elements",    "host_group"};
  for (const auto& [k, v] : body.items()) {
    if (!known.count(k)) throw Error("unknown_parameter", "unknown signature field '" + k + "'");
  }
  auto number = [&](const char* key) -> std::optional<double> {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    if (!body[key].is_number()) throw Error("invalid_signature", std::string(key) + " must be a number");
    return body[key].get<double>();
  };
  Signature s;
  const auto zpl = number("zpl");
  const auto tol = number("tol");
  if (tol && !zpl) throw Error("invalid_signature", "tol requires zpl");
  if (zpl) s.zpl = ZplCriterion{*zpl, tol.value_or(kDefaultZplTolerance)};
  const auto lmin = number("lifetime_min");
  const auto lmax = number("lifetime_max");
  if (lmin || lmax) {
    if (!lmin || !lmax) throw Error("invalid_signature", "lifetime_min and lifetime_max go together");
    s.lifetime = LifetimeCriterion{*lmin, *lmax};
  }
  s.visibility_min = number("visibility_min");
  s.misalignment_max_deg = number("misalignment_max_deg");
  if (body.contains("spin") && !body["spin"].is_null()) {
    if (!body["spin"].is_string()) throw Error("invalid_signature", "spin must be a string");
    try {
      s.spin = parse_spin_multiplicity(body["spin"].get<std::string>());
    } catch (const Error& e) {
      throw Error("invalid_signature", e.what());
    }
  }
  if (body.contains("charge") && !body["charge"].is_null()) {
    if (!body["charge"].is_number_integer()) throw Error("invalid_signature", "charge must be an integer");
    s.charge = body["charge"].get<int>();
  }
  if (body.contains("elements") && !body["elements"].is_null()) {
    if (!body["elements"].is_array()) throw Error("invalid_signature", "elements must be an array of symbols");
    for (const auto& e : body["elements"]) {
      if (!e.is_string()) throw Error("invalid_signature", "elements must be an array of symbols");
      s.must_contain_elements.push_back(e.get<std::string>());
    }
  }
  if (body.contains("host_group") && !body["host_group"].is_null()) {
    if (!body["host_group"].is_string()) throw Error("invalid_signature", "host_group must be a string");
    s.host_group = body["host_group"].get<std::string>();
  }
  validate_signature(s);
  return s;
}

json to_json(const Signature& s) {
  json j = json::object();
  if (s.zpl) {
    j["zpl"] = s.zpl->value;
    j["tol"] = s.zpl->tolerance;
  }
  if (s.lifetime) {
    j["lifetime_min"] = s.lifetime->min;
    j["lifetime_max"] = s.lifetime->max;
  }
  if (s.visibility_min) j["visibility_min"] = *s.visibility_min;
  if (s.misalignment_max_deg) j["misalignment_max_deg"] = *s.misalignment_max_deg;
  if (s.spin) j["spin"] = std::string(to_string(*s.spin));
  if (s.charge) j["charge"] = *s.charge;
  if (!s.must_contain_elements.empty()) j["elements"] = s.must_contain_elements;
  if (s.host_group) j["host_group"] = *s.host_group;
  return j;
}

json to_json(const Match& m) {
  return {{"defect_id", m.defect_id},
          {"transition_index", m.transition_index},
          {"matched_criteria", m.matched_criteria},
          {"score", {{"criteria_satisfied", m.criteria_satisfied}, {"zpl_distance_eV", m.zpl_distance}}},
          {"lifetime_distance_log10", m.lifetime_distance}};
}

void apply_refractive_index(DefectRecord& r, double n_d) {
  for (auto& t : r.transitions) {
    const auto& dip = t.emission_dipole ? t.emission_dipole : t.excitation_dipole;
    if (!dip) continue;
    const RadiativeResult rad = radiative_rate(t.zpl, dip->mu_sq_debye2, n_d);
    t.radiative_rate = rad.rate;
    t.radiative_lifetime = rad.lifetime;
    t.refractive_index = n_d;
    if (t.nonradiative_rate) t.quantum_efficiency = quantum_efficiency(rad.rate, *t.nonradiative_rate);
  }
}

ApiService::ApiService(ApiConfig config) : config_(std::move(config)) { snapshot_.swap(load_index()); }

ApiService::ApiService(ApiConfig config, std::shared_ptr<const Index> index) : config_(std::move(config)) {
  snapshot_.swap(std::move(index));
}

ApiService::~ApiService() = default;

std::shared_ptr<const Index> ApiService::load_index() const {
  Bundle bundle = load_bundle(config_.bundle_path, LoadOptions{true});
  if (config_.refractive_index) {
    for (auto& r : bundle.records) apply_refractive_index(r, *config_.refractive_index);
  }
  return std::make_shared<const Index>(Index::from_bundle(bundle));
}

bool ApiService::reload(std::string* error) {
  std::lock_guard lock(reload_mutex_);
  try {
    snapshot_.swap(load_index());
    last_reload_error_.clear();
    return true;
  } catch (const std::exception& e) {
    last_reload_error_ = e.what();
    if (error) *error = e.what();
    return false;
  }
}

ApiResponse ApiService::handle(const ApiRequest& req) const {
  const std::shared_ptr<const Index> index = snapshot_.get();
  ApiResponse res;
  try {
    const auto parts = split_path(req.path);
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "v1") {
      throw HttpError{404, "no_route", "unknown path " + req.path};
    }
    const std::vector<std::string> route(parts.begin() + 2, parts.end());
    auto require_method = [&](const char* m) {
      if (req.method != m) throw HttpError{405, "method_not_allowed", std::string("use ") + m};
    };

    if (route.size() == 1 && route[0] == "health") {
      require_method("GET");
      Params p(req.query, {});
      std::string reload_error;
      {
        std::lock_guard lock(reload_mutex_);
        reload_error = last_reload_error_;
      }
      json body{{"status", "ok"},
                {"defects", index->defect_count()},
                {"transitions", index->transition_count()},
                {"bundle_version", kBundleVersion}};
      if (!reload_error.empty()) body["last_reload_error"] = reload_error;
      res = json_response(body);
    } else if (route.size() == 1 && route[0] == "reload") {
      require_method("POST");
      Params p(req.query, {});
      std::string err;
      if (!const_cast<ApiService*>(this)->reload(&err)) {
        throw HttpError{503, "reload_failed", "bundle reload failed; previous snapshot still serving: " + err};
      }
      const auto fresh = snapshot_.get();
      res = json_response({{"status", "reloaded"}, {"defects", fresh->defect_count()}});
    } else if (route.size() == 1 && route[0] == "defects") {
      require_method("GET");
      Params p(req.query, {"page_size", "cursor", "spin", "charge", "element", "host_group", "zpl_min", "zpl_max"});
      ListQuery q;
      q.page_size = page_size(p, config_);
      q.cursor = p.str("cursor").value_or("");
      q.spin = spin_param(p);
      if (auto c = p.integer("charge")) q.charge = static_cast<int>(*c);
      q.element = p.str("element");
      q.host_group = group_param(p);
      q.zpl_min = p.num("zpl_min");
      q.zpl_max = p.num("zpl_max");
      const Page page = index->list_defects(q);
      json items = json::array();
      for (const auto* r : page.items) items.push_back(defect_summary(*r));
      json body{{"items", items}, {"total", page.total}, {"next_cursor", nullptr}};
      if (page.next_cursor) body["next_cursor"] = *page.next_cursor;
      res = json_response(body);
    } else if (route.size() == 2 && route[0] == "defects") {
      require_method("GET");
      Params p(req.query, {"refractive_index"});
      const DefectRecord& r = require_defect(*index, route[1]);
      if (auto n = p.num("refractive_index")) {
        if (!(*n > 0.0)) throw HttpError{400, "bad_parameter", "refractive_index must be positive"};
        DefectRecord copy = r;
        apply_refractive_index(copy, *n);
        res.body = serialize_record(copy);
      } else {
        res.body = serialize_record(r);
      }
    } else if (route.size() == 3 && route[0] == "defects" && route[2] == "structure") {
      require_method("GET");
      Params p(req.query, {"format"});
      const DefectRecord& r = require_defect(*index, route[1]);
      const std::string fmt = p.str("format").value_or("xyz");
      if (fmt != "xyz" && fmt != "cif") throw HttpError{400, "bad_parameter", "format must be xyz or cif"};
      const auto source = index->root() / r.structure_ref;
      const StructureFormat want = structure_format_from_name(fmt);
      if (structure_format_from_path(source) == want) {
        res.body = read_text_file(source);
      } else {
        res.body = write_structure(read_structure(source), want);
      }
      res.content_type = fmt == "cif" ? "chemical/x-cif" : "chemical/x-xyz";
      res.headers["Content-Disposition"] = "attachment; filename=\"" + r.id + "." + fmt + "\"";
    } else if (route.size() == 5 && route[0] == "defects" && route[2] == "transitions" && route[4] == "spectrum") {
      require_method("GET");
      Params p(req.query, {"gamma", "lo", "hi", "step", "format"});
      const DefectRecord& r = require_defect(*index, route[1]);
      const std::size_t n = require_transition(r, route[3]);
      const double gamma = p.num("gamma").value_or(kDefaultLineshapeGamma);
      if (!(gamma > 0.0)) throw HttpError{400, "bad_parameter", "gamma must be positive"};
      if (gamma < kMinSpectrumGamma || gamma > 1.0) {
        throw HttpError{400, "bad_parameter", "gamma must lie in [1e-4, 1] eV"};
      }
      const std::string fmt = p.str("format").value_or("json");
      if (fmt != "json" && fmt != "csv") throw HttpError{400, "bad_parameter", "format must be json or csv"};
      const HRSpectrum* hr = index->hr_spectrum(r.id, n);
      if (!hr) throw HttpError{404, "no_lineshape", "transition has no phonon data"};
      const double zpl = r.transitions[n].zpl;
      SpectralWindow w = default_window(zpl);
      w.lo = p.num("lo").value_or(w.lo);
      w.hi = p.num("hi").value_or(w.hi);
      w.step = p.num("step").value_or(w.step);
      if (!(w.step > 0.0) || !(w.hi > w.lo) || (w.hi - w.lo) / w.step + 1 > kMaxSpectrumPoints) {
        throw HttpError{400, "bad_parameter", "spectral window must satisfy lo < hi, step > 0, <= 20001 points"};
      }
      PLSpectrum s;
      try {
        s = pl_spectrum(*hr, zpl, gamma, w);
      } catch (const Error& e) {
        throw HttpError{400, e.code(), e.what()};
      }
      if (fmt == "csv") {
        res.body = spectrum_csv(s);
        res.content_type = "text/csv";
      } else {
        res = json_response({{"defect_id", r.id},
                             {"transition_index", n},
                             {"zpl", s.zpl},
                             {"gamma", s.gamma},
                             {"total_hr_factor", hr->total},
                             {"normalization", s.normalization},
                             {"energies", s.energies},
                             {"intensities", s.intensities}});
      }
    } else if (route.size() == 1 && route[0] == "identify") {
      require_method("POST");
      Params p(req.query, {"page_size", "cursor"});
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) throw HttpError{400, "invalid_json", "request body is not valid JSON"};
      Signature sig;
      try {
        sig = signature_from_json(body);
      } catch (const Error& e) {
        throw HttpError{400, e.code(), e.what()};
      }
      const auto matches = index->identify(sig);
      const std::size_t size = page_size(p, config_);
      std::size_t offset = 0;
      if (auto c = p.str("cursor")) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(c->data() + std::min<std::size_t>(3, c->size()), c->data() + c->size(), v);
        if (c->rfind("o1.", 0) != 0 || ec != std::errc() || ptr != c->data() + c->size()) {
          throw HttpError{400, "bad_cursor", "malformed cursor"};
        }
        offset = v;
      }
      json items = json::array();
      for (std::size_t i = offset; i < matches.size() && i < offset + size; ++i) {
        json m = to_json(matches[i]);
        const auto& t = index->get_defect(matches[i].defect_id).transitions[matches[i].transition_index];
        m["zpl"] = t.zpl;
        m["spin_channel"] = std::string(to_string(t.spin_channel));
        items.push_back(m);
      }
      json out{{"matches", items}, {"total", matches.size()}, {"next_cursor", nullptr}, {"signature", to_json(sig)}};
      if (offset + size < matches.size()) out["next_cursor"] = "o1." + std::to_string(offset + size);
      res = json_response(out);
    } else if (route.size() == 2 && route[0] == "stats" && route[1] == "histogram") {
      require_method("GET");
      Params p(req.query, {"property", "bin", "format"});
      const auto prop = p.str("property");
      if (!prop) throw HttpError{400, "bad_parameter", "property is required"};
      HistogramProperty hp;
      try {
        hp = parse_histogram_property(*prop);
      } catch (const Error& e) {
        throw HttpError{400, e.code(), e.what()};
      }
      const double default_bin = hp == HistogramProperty::Zpl ? 0.25 : hp == HistogramProperty::Lifetime ? 0.5 : 5.0;
      const double bin = p.num("bin").value_or(default_bin);
      if (!(bin > 0.0)) throw HttpError{400, "bad_parameter", "bin must be positive"};
      const std::string fmt = p.str("format").value_or("json");
      if (fmt != "json" && fmt != "csv") throw HttpError{400, "bad_parameter", "format must be json or csv"};
      const HistogramReport rep = stats(index->records(), hp, bin);
      if (fmt == "csv") {
        res.body = histogram_csv(rep);
        res.content_type = "text/csv";
      } else {
        res = json_response(to_json(rep));
      }
    } else {
      throw HttpError{404, "no_route", "unknown path " + req.path};
    }
  } catch (const HttpError& e) {
    res = error_response(e.status, e.code, e.message);
  } catch (const Error& e) {
    const int status = e.code() == "not_found" ? 404 : e.code() == "unreadable_file" ? 500 : 400;
    res = error_response(status, e.code(), e.what());
  } catch (const std::exception& e) {
    res = error_response(500, "internal", e.what());
  }

  if (auto origin = req.headers.find("Origin"); origin != req.headers.end()) {
    const auto& allow = config_.cors_allow;
    if (std::find(allow.begin(), allow.end(), "*") != allow.end()) {
      res.headers["Access-Control-Allow-Origin"] = "*";
    } else if (std::find(allow.begin(), allow.end(), origin->second) != allow.end()) {
      res.headers["Access-Control-Allow-Origin"] = origin->second;
      res.headers["Vary"] = "Origin";
    }
  }
  return res;
}

void ApiService::install_routes() {
  server_ = std::make_unique<httplib::Server>();
  auto bridge = [this](const httplib::Request& hreq, httplib::Response& hres) {
    ApiRequest req;
    req.method = hreq.method;
    req.path = hreq.path;
    // URL query only; a form-encoded body would otherwise land in params
    httplib::Params url_params;
    if (const auto q = hreq.target.find('?'); q != std::string::npos) {
      httplib::detail::parse_query_text(hreq.target.substr(q + 1), url_params);
    }
    for (const auto& [k, v] : url_params) req.query.emplace(k, v);
    req.body = hreq.body;
    if (hreq.has_header("Origin")) req.headers["Origin"] = hreq.get_header_value("Origin");
    const ApiResponse res = handle(req);
    hres.status = res.status;
    for (const auto& [k, v] : res.headers) hres.set_header(k, v);
    hres.set_content(res.body, res.content_type);
  };
  const std::string pattern = std::string(kPrefix) + "(/.*)?";
  server_->Get(pattern, bridge);
  server_->Post(pattern, bridge);
  server_->Options(pattern, [this](const httplib::Request& hreq, httplib::Response& hres) {
    const auto origin = hreq.get_header_value("Origin");
    const auto& allow = config_.cors_allow;
    const bool any = std::find(allow.begin(), allow.end(), "*") != allow.end();
    if (any || std::find(allow.begin(), allow.end(), origin) != allow.end()) {
      hres.set_header("Access-Control-Allow-Origin", any ? "*" : origin);
      hres.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      hres.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
    hres.status = 204;
  });
  if (!config_.static_dir.empty()) server_->set_mount_point("/", config_.static_dir.string());
}

void ApiService::serve() {
  install_routes();
  if (!server_->listen(config_.host, config_.port)) {
    throw Error("bind_failed", "cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  }
}

int ApiService::bind_any_port() {
  install_routes();
  const int port = server_->bind_to_any_port(config_.host);
  if (port < 0) throw Error("bind_failed", "cannot bind " + config_.host);
  return port;
}

void ApiService::serve_bound() {
  if (!server_) throw Error("not_bound", "call bind_any_port() first");
  server_->listen_after_bind();
}

void ApiService::stop() {
  if (server_) server_->stop();
}

}  // namespace hbndb
