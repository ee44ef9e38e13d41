#include "manifest.hpp"

#include <ctime>

namespace visa::cli {

RunManifest::RunManifest(std::string command, std::string config_toml)
    : command_(std::move(command)), config_toml_(std::move(config_toml)) {}

json RunManifest::to_json() const {
  const std::time_t t = std::chrono::system_clock::to_time_t(started_);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  return json{{"command", command_},
              {"tool", "visa 0.1.0"},
              {"config", config_toml_},
              {"seeds", seeds_},
              {"backends", backends_},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"counts", counts_},
              {"details", extra_},
              {"started_at", stamp},
              {"wall_clock_seconds", secs}};
}

void RunManifest::write(const std::filesystem::path& dir) const {
  write_text_file(dir / "manifest.json", to_json().dump(2) + "\n");
}

}  // namespace visa::cli
