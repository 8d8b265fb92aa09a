#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbndb/query.hpp"

namespace httplib {
class Server;
}

namespace hbndb {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path bundle_path;
  std::size_t default_page_size = 50;
  std::size_t max_page_size = 500;
  std::vector<std::string> cors_allow;  // exact origins, or "*"
  std::optional<double> refractive_index;  // recompute rates/lifetimes with this n_D
  std::filesystem::path static_dir;        // optional web UI assets
};

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

// Request body of POST /api/v1/identify. Keys: zpl, tol, lifetime_min, lifetime_max,
// visibility_min, misalignment_max_deg, spin, charge, elements, host_group
// (plus page_size/cursor handled by the endpoint). Unknown keys are rejected.
Signature signature_from_json(const nlohmann::json& body);
nlohmann::json to_json(const Signature& signature);
nlohmann::json to_json(const Match& match);

// Replaces radiative rate/lifetime (and quantum efficiency) using refractive index n_d.
void apply_refractive_index(DefectRecord& record, double n_d);

// Read-only HTTP facade over an immutable index snapshot. handle() is a pure
// function of (snapshot, request) and is safe to call from many threads.
class ApiService {
 public:
  // Loads the bundle at config.bundle_path; throws Error when it cannot be loaded.
  explicit ApiService(ApiConfig config);
  ApiService(ApiConfig config, std::shared_ptr<const Index> index);
  ~ApiService();

  ApiResponse handle(const ApiRequest& request) const;

  // Re-reads the bundle and swaps the snapshot; on failure the old snapshot stays live.
  bool reload(std::string* error = nullptr);

  std::shared_ptr<const Index> snapshot() const { return snapshot_.get(); }
  const ApiConfig& config() const { return config_; }

  // Blocking HTTP/1.1 server on config.host:config.port. Returns when stop() is called.
  void serve();
  // Binds to an ephemeral port and returns it; pair with serve_bound().
  int bind_any_port();
  void serve_bound();
  void stop();

 private:
  std::shared_ptr<const Index> load_index() const;
  void install_routes();

  ApiConfig config_;
  IndexSnapshot snapshot_;
  std::string last_reload_error_;
  mutable std::mutex reload_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace hbndb
