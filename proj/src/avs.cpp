#include "visa/avs.hpp"

#include "visa/mock_backend.hpp"

namespace visa {

std::string_view update_mode_name(UpdateMode m) { return m == UpdateMode::Literal ? "literal" : "mean_shift"; }

UpdateMode parse_update_mode(std::string_view s) {
  if (s == "literal") return UpdateMode::Literal;
  if (s == "mean_shift" || s == "meanshift") return UpdateMode::MeanShift;
  throw ConfigError("unknown update mode '" + std::string(s) + "' (literal|mean_shift)");
}

void SearchConfig::validate() const {
  if (K < 2) throw ConfigError("search K must be >= 2");
  if (T < 1) throw ConfigError("search T must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("search alpha must be > 0");
  if (!(eps_I > 0.0)) throw ConfigError("search eps_I must be > 0");
  if (!(init_sigma > 0.0)) throw ConfigError("search init_sigma must be > 0");
  if (!(adv_eps > 0.0)) throw ConfigError("search adv_eps must be > 0");
  if (!(convergence_tol >= 0.0)) throw ConfigError("search convergence_tol must be >= 0");
  if (parallelism < 1) throw ConfigError("search parallelism must be >= 1");
  if (!init_mu.allFinite() || init_mu.cwiseAbs().maxCoeff() > 1.0) throw ConfigError("search init_mu must lie in [-1, 1]");
}

namespace {

json coeffs_json(const ValueCoeffs<double>& c) {
  json j = json::object();
  for (ValueDimension d : kAllDimensions) j[std::string(dimension_name(d))] = c(index_of(d));
  return j;
}

}  // namespace

json to_json(const TraceRecord& r) {
  return json{{"iteration", r.iteration},
              {"mu", coeffs_json(r.mu)},
              {"trace_sigma", r.trace_sigma},
              {"min_eigenvalue", r.min_eigenvalue},
              {"iteration_best", r.iteration_best},
              {"mean_reward", r.mean_reward},
              {"best_so_far", r.best_so_far},
              {"n_positive", r.n_positive},
              {"clamp_active", r.clamp_active}};
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::vector<json> lines;
  for (const auto& r : trace) lines.push_back(to_json(r));
  return to_jsonl(lines);
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "iteration,trace_sigma,min_eigenvalue,iteration_best,mean_reward,best_so_far,n_positive,clamp_active\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iteration) + ',' + format_real(r.trace_sigma) + ',' + format_real(r.min_eigenvalue) + ',' +
           format_real(r.iteration_best) + ',' + format_real(r.mean_reward) + ',' + format_real(r.best_so_far) + ',' +
           std::to_string(r.n_positive) + ',' + (r.clamp_active ? "1" : "0") + '\n';
  }
  return out;
}

json to_json(const SearchConfig& cfg) {
  return json{{"K", cfg.K},
              {"T", cfg.T},
              {"alpha", cfg.alpha},
              {"eps_I", cfg.eps_I},
              {"update_mode", update_mode_name(cfg.update_mode)},
              {"clip_samples", cfg.clip_samples},
              {"seed", cfg.seed},
              {"convergence_tol", cfg.convergence_tol},
              {"init_sigma", cfg.init_sigma},
              {"init_mu", coeffs_json(cfg.init_mu)},
              {"adv_eps", cfg.adv_eps},
              {"parallelism", cfg.parallelism}};
}

}  // namespace visa
