#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "visa/json_io.hpp"

namespace visa::cli {

/// One manifest.json per output directory. Everything except the timing
/// fields is a pure function of the inputs and configuration.
class RunManifest {
 public:
  RunManifest(std::string command, std::string config_toml);

  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void backend(const std::string& role, const std::string& identity) { backends_[role] = identity; }
  void input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p.string()); }
  void count(const std::string& name, std::size_t n) { counts_[name] = n; }
  json& extra() { return extra_; }

  json to_json() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::string config_toml_;
  json seeds_ = json::object();
  json backends_ = json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json counts_ = json::object();
  json extra_ = json::object();
  std::chrono::system_clock::time_point started_ = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace visa::cli
