#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "hbndb/api.hpp"
#include "hbndb/bundle.hpp"
#include "hbndb/ingest.hpp"
#include "hbndb/record_io.hpp"
#include "support.hpp"

using namespace hbndb;
using testsupport::TempDir;

namespace {

struct Fixture {
  TempDir tmp{"api"};
  std::unique_ptr<ApiService> svc;

  Fixture() {
    ingest(parse_ingest_manifest(testsupport::anchor_manifest()), tmp / "b");
    ApiConfig cfg;
    cfg.bundle_path = tmp / "b";
    cfg.default_page_size = 2;
    cfg.cors_allow = {"http://localhost:5173"};
    svc = std::make_unique<ApiService>(cfg);
  }

  ApiResponse get(const std::string& path, std::multimap<std::string, std::string> q = {}) const {
    ApiRequest r;
    r.path = path;
    r.query = std::move(q);
    return svc->handle(r);
  }

  ApiResponse post(const std::string& path, const std::string& body, std::multimap<std::string, std::string> q = {}) const {
    ApiRequest r;
    r.method = "POST";
    r.path = path;
    r.body = body;
    r.query = std::move(q);
    return svc->handle(r);
  }
};

std::string error_code(const ApiResponse& r) { return json::parse(r.body)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("health and defects list") {
  Fixture fx;
  const auto h = fx.get("/api/v1/health");
  CHECK(h.status == 200);
  CHECK(json::parse(h.body)["defects"] == 3);

  std::vector<std::string> ids;
  std::multimap<std::string, std::string> q;
  for (int guard = 0; guard < 10; ++guard) {
    const auto r = fx.get("/api/v1/defects", q);
    REQUIRE(r.status == 200);
    const auto body = json::parse(r.body);
    CHECK(body["total"] == 3);
    for (const auto& item : body["items"]) ids.push_back(item["id"]);
    if (body["next_cursor"].is_null()) break;
    q = {{"cursor", body["next_cursor"].get<std::string>()}};
  }
  CHECK(ids == std::vector<std::string>{"CBVN_q0_triplet", "CN_q0_doublet", "VB_q-1_triplet"});

  const auto filtered = fx.get("/api/v1/defects", {{"element", "C"}, {"spin", "triplet"}});
  CHECK(json::parse(filtered.body)["total"] == 1);
  CHECK(fx.get("/api/v1/defects", {{"colour", "red"}}).status == 400);
  CHECK(error_code(fx.get("/api/v1/defects", {{"colour", "red"}})) == "unknown_parameter");
  CHECK(fx.get("/api/v1/defects", {{"page_size", "0"}}).status == 400);
  CHECK(fx.get("/api/v1/defects", {{"charge", "x"}}).status == 400);
  CHECK(fx.get("/api/v1/defects", {{"cursor", "zz"}}).status == 400);
}

TEST_CASE("defect detail") {
  Fixture fx;
  const auto r = fx.get("/api/v1/defects/VB_q-1_triplet");
  CHECK(r.status == 200);
  CHECK(r.body == serialize_record(fx.svc->snapshot()->get_defect("VB_q-1_triplet")));

  const auto missing = fx.get("/api/v1/defects/nope");
  CHECK(missing.status == 404);
  CHECK(error_code(missing) == "not_found");

  const auto n2 = fx.get("/api/v1/defects/VB_q-1_triplet", {{"refractive_index", "2.0"}});
  const auto rec = parse_record_line(n2.body);
  const auto base = parse_record_line(r.body);
  CHECK(*rec.transitions[0].radiative_rate / *base.transitions[0].radiative_rate == doctest::Approx(2.0 / 1.85).epsilon(1e-12));
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet", {{"refractive_index", "-1"}}).status == 400);
}

TEST_CASE("spectrum endpoint") {
  Fixture fx;
  const auto js = fx.get("/api/v1/defects/VB_q-1_triplet/transitions/0/spectrum", {{"gamma", "0.01"}});
  REQUIRE(js.status == 200);
  const auto body = json::parse(js.body);
  CHECK(body["gamma"] == 0.01);
  CHECK(body["energies"].size() == body["intensities"].size());

  const auto csv = fx.get("/api/v1/defects/VB_q-1_triplet/transitions/0/spectrum", {{"format", "csv"}});
  CHECK(csv.content_type == "text/csv");
  // default gamma reproduces the stored lineshape file
  const auto& rec = fx.svc->snapshot()->get_defect("VB_q-1_triplet");
  CHECK(csv.body == read_text_file(fx.tmp / "b" / *rec.transitions[0].lineshape_ref));

  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet/transitions/0/spectrum", {{"gamma", "0"}}).status == 400);
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet/transitions/5/spectrum").status == 404);
  CHECK(fx.get("/api/v1/defects/CN_q0_doublet/transitions/0/spectrum").status == 404);
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet/transitions/0/spectrum", {{"lo", "3"}, {"hi", "4"}}).status == 400);
}

TEST_CASE("structure endpoint") {
  Fixture fx;
  const auto xyz = fx.get("/api/v1/defects/VB_q-1_triplet/structure", {{"format", "xyz"}});
  CHECK(xyz.status == 200);
  CHECK(xyz.body == read_text_file(testsupport::fixture_dir() / "anchor/VB/structure.xyz"));
  const auto cif = fx.get("/api/v1/defects/VB_q-1_triplet/structure", {{"format", "cif"}});
  CHECK(cif.status == 200);
  CHECK(cif.body.rfind("data_", 0) == 0);
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet/structure", {{"format", "cif"}}).body == cif.body);
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet/structure", {{"format", "pdb"}}).status == 400);
}

TEST_CASE("identify endpoint") {
  Fixture fx;
  const auto r = fx.post("/api/v1/identify", R"({"zpl": 2.0, "tol": 0.4})");
  REQUIRE(r.status == 200);
  const auto body = json::parse(r.body);
  CHECK(body["total"] == 2);
  CHECK(body["matches"][0]["defect_id"] == "VB_q-1_triplet");

  // thin facade: equals the engine call, including across pages
  Signature s;
  s.zpl = ZplCriterion{2.0, 3.0};
  const auto direct = fx.svc->snapshot()->identify(s);
  std::vector<std::string> paged;
  std::multimap<std::string, std::string> q{{"page_size", "1"}};
  for (int guard = 0; guard < 10; ++guard) {
    const auto page = json::parse(fx.post("/api/v1/identify", R"({"zpl": 2.0, "tol": 3.0})", q).body);
    for (const auto& m : page["matches"]) paged.push_back(m["defect_id"]);
    if (page["next_cursor"].is_null()) break;
    q = {{"page_size", "1"}, {"cursor", page["next_cursor"].get<std::string>()}};
  }
  REQUIRE(paged.size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(paged[i] == direct[i].defect_id);

  CHECK(fx.post("/api/v1/identify", "{}").status == 400);
  CHECK(fx.post("/api/v1/identify", "not json").status == 400);
  CHECK(fx.post("/api/v1/identify", R"({"zpl": 2.0, "tol": -1})").status == 400);
  CHECK(fx.post("/api/v1/identify", R"({"zpl": 2.0, "shape": 1})").status == 400);
  CHECK(fx.get("/api/v1/identify").status == 405);
}

TEST_CASE("histogram endpoint") {
  Fixture fx;
  const auto r = fx.get("/api/v1/stats/histogram", {{"property", "zpl"}, {"bin", "0.5"}});
  REQUIRE(r.status == 200);
  CHECK(json::parse(r.body)["total"] == 3);
  CHECK(fx.get("/api/v1/stats/histogram", {{"property", "zpl"}, {"format", "csv"}}).content_type == "text/csv");
  CHECK(fx.get("/api/v1/stats/histogram", {{"property", "colour"}}).status == 400);
  CHECK(fx.get("/api/v1/stats/histogram", {{"property", "zpl"}, {"bin", "-1"}}).status == 400);
}

TEST_CASE("responses are pure functions of the request") {
  Fixture fx;
  const std::vector<std::string> paths{"/api/v1/defects", "/api/v1/defects/CBVN_q0_triplet",
                                       "/api/v1/stats/histogram?", "/api/v1/nowhere"};
  for (const auto& p : paths) {
    const auto a = fx.get(p, p.find("histogram") != std::string::npos
                                 ? std::multimap<std::string, std::string>{{"property", "lifetime"}}
                                 : std::multimap<std::string, std::string>{});
    const auto b = fx.get(p, p.find("histogram") != std::string::npos
                                 ? std::multimap<std::string, std::string>{{"property", "lifetime"}}
                                 : std::multimap<std::string, std::string>{});
    CHECK(a.status == b.status);
    CHECK(a.body == b.body);
  }
  CHECK(fx.get("/api/v1/nowhere").status == 404);
}

TEST_CASE("reload failure keeps the old snapshot") {
  Fixture fx;
  const auto before = fx.svc->snapshot();
  std::filesystem::remove(fx.tmp / "b" / kManifestName);
  const auto r = fx.post("/api/v1/reload", "");
  CHECK(r.status == 503);
  CHECK(fx.svc->snapshot().get() == before.get());
  CHECK(fx.get("/api/v1/defects/VB_q-1_triplet").status == 200);
  CHECK(json::parse(fx.get("/api/v1/health").body).contains("last_reload_error"));

  write_text_file(fx.tmp / "b" / kManifestName, bundle_manifest_text(kBundleVersion));
  CHECK(fx.post("/api/v1/reload", "").status == 200);
  CHECK(fx.svc->snapshot().get() != before.get());
}

TEST_CASE("CORS allow-list") {
  Fixture fx;
  ApiRequest r;
  r.path = "/api/v1/health";
  r.headers["Origin"] = "http://localhost:5173";
  CHECK(fx.svc->handle(r).headers.at("Access-Control-Allow-Origin") == "http://localhost:5173");
  r.headers["Origin"] = "http://evil.example";
  CHECK(fx.svc->handle(r).headers.count("Access-Control-Allow-Origin") == 0);
}

TEST_CASE("served over HTTP") {
  Fixture fx;
  const int port = fx.svc->bind_any_port();
  std::thread server([&] { fx.svc->serve_bound(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 50 && !client.Get("/api/v1/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto res = client.Get("/api/v1/defects/VB_q-1_triplet");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == fx.get("/api/v1/defects/VB_q-1_triplet").body);

  res = client.Post("/api/v1/identify", R"({"zpl": 2.0, "tol": 0.1})", "application/json");
  REQUIRE(res);
  CHECK(json::parse(res->body)["matches"].size() == 1);
  // a form content type must not turn the body into query parameters
  res = client.Post("/api/v1/identify", R"({"zpl": 2.0, "tol": 0.1})", "application/x-www-form-urlencoded");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Get("/api/v1/defects/unknown");
  REQUIRE(res);
  CHECK(res->status == 404);

  // concurrent readers across a reload
  std::vector<std::thread> readers;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 10; ++i) {
        auto r = c.Get("/api/v1/defects");
        if (r && r->status == 200) ++ok;
      }
    });
  }
  client.Post("/api/v1/reload", "", "application/json");
  for (auto& t : readers) t.join();
  CHECK(ok == 40);

  fx.svc->stop();
  server.join();
}
