#pragma once

// Configuration-driven experiments: the logic behind `rnflow run|sweep|check`.

#include "rnflow/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

namespace rnflow {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kHypothesisFailed = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalAbort = 3;
}  // namespace exit_code

struct ExperimentConfig {
  ConvexFunction problem;
  Flow flow = Flow::RnTikhonov;
  double mu = 1.0;
  Schedule schedule = Schedule::zero();
  Vector x0;
  std::optional<Vector> v0;
  double T = 0.0;
  double h = 1e-3;
  int sample_stride = 10;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  reject_unknown_keys(j, {"problem", "flow", "mu", "schedule", "x0", "v0", "T", "h", "sample_stride", "output_dir", "seed"},
                      "config");
  ExperimentConfig cfg;
  cfg.problem = function_from_json(require(j, "problem", "config"), "problem");
  if (j.contains("flow")) {
    try {
      cfg.flow = flow_from_string(get_string(j["flow"], "flow"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("flow: ") + e.what());
    }
  }
  if (j.contains("mu")) cfg.mu = get_number(j["mu"], "mu");
  if (!(cfg.mu > 0)) throw ConfigError("mu: must be > 0");
  cfg.schedule = schedule_from_json(require(j, "schedule", "config"));
  cfg.x0 = get_vector(require(j, "x0", "config"), "x0");
  if (cfg.x0.size() != cfg.problem.dim()) throw ConfigError("x0: dimension does not match problem");
  if (j.contains("v0") && !j["v0"].is_null()) {
    cfg.v0 = get_vector(j["v0"], "v0");
    if (cfg.v0->size() != cfg.problem.dim()) throw ConfigError("v0: dimension does not match problem");
  }
  cfg.T = get_number(require(j, "T", "config"), "T");
  if (!(cfg.T >= 0)) throw ConfigError("T: must be >= 0");
  if (j.contains("h")) cfg.h = get_number(j["h"], "h");
  if (!(cfg.h > 0)) throw ConfigError("h: must be > 0");
  if (j.contains("sample_stride")) {
    if (!j["sample_stride"].is_number_integer() || j["sample_stride"].get<long long>() < 1) {
      throw ConfigError("sample_stride: must be a positive integer");
    }
    cfg.sample_stride = j["sample_stride"].get<int>();
  }
  if (j.contains("output_dir")) cfg.output_dir = get_string(j["output_dir"], "output_dir");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  return cfg;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json j = {
      {"problem", function_to_json(cfg.problem)},
      {"flow", to_string(cfg.flow)},
      {"mu", cfg.mu},
      {"schedule", schedule_to_json(cfg.schedule)},
      {"x0", detail::vector_json(cfg.x0)},
      {"T", cfg.T},
      {"h", cfg.h},
      {"sample_stride", cfg.sample_stride},
      {"output_dir", cfg.output_dir},
      {"seed", cfg.seed},
  };
  if (cfg.v0) j["v0"] = detail::vector_json(*cfg.v0);
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// Output directory, with RNFLOW_OUT taking precedence over the config.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("RNFLOW_OUT"); env && *env) return env;
  return cfg.output_dir;
}

/// v0, auto-filled with ∇Φ(x0) when absent and Φ is smooth.
inline Vector resolve_v0(const ExperimentConfig& cfg) {
  if (cfg.v0) return *cfg.v0;
  if (!is_smooth(cfg.problem)) throw ConfigError("v0: required for a nonsmooth problem");
  return gradient(cfg.problem, cfg.x0);
}

/// Validated dynamic spec; the problem is shifted to zero minimum.
inline DynamicSpec to_dynamic_spec(const ExperimentConfig& cfg) {
  DynamicSpec spec;
  try {
    spec.f = shift_to_zero_min(cfg.problem);
    spec.flow = cfg.flow;
    spec.mu = cfg.mu;
    spec.schedule = cfg.schedule;
    spec.x0 = cfg.x0;
    spec.v0 = resolve_v0(cfg);
    spec.horizon = cfg.T;
    spec.integrator = {cfg.h, cfg.sample_stride};
    (void)prox(spec.f, spec.mu, spec.x0);  // surfaces NoProxRule before integrating
    validate(spec);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {  // InvalidSpec, NoProxRule, UnboundedBelow, ...
    throw ConfigError(e.what());
  }
  return spec;
}

struct RunResult {
  Trajectory trajectory;
  Report report;
};

inline RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const DynamicSpec spec = to_dynamic_spec(cfg);
  RunResult res{integrate(spec), {}};
  res.report = convergence_report(res.trajectory, spec.f, spec.mu, spec.schedule);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "trajectory.csv");
    write_trajectory_csv(csv, res.trajectory);
  }
  {
    std::ofstream rep(out_dir / "report.json");
    rep << report_to_json(res.report).dump(2) << '\n';
  }
  return res;
}

inline int cmd_run(const std::filesystem::path& config_path, bool dump_config, std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig cfg = load_config(config_path);
    if (dump_config) {
      // Echo the resolved config; v0 is included when it could be determined.
      if (!cfg.v0 && is_smooth(cfg.problem)) cfg.v0 = gradient(cfg.problem, cfg.x0);
      out << config_to_json(cfg).dump(2) << '\n';
      return exit_code::kOk;
    }
    run_experiment(cfg, resolve_output_dir(cfg));
    return exit_code::kOk;
  } catch (const ConfigError& e) {
    err << "rnflow: config error: " << e.what() << '\n';
    return exit_code::kConfigError;
  } catch (const NumericalAbort& e) {
    err << "rnflow: numerical abort: " << e.what() << '\n';
    return exit_code::kNumericalAbort;
  }
}

enum class SweepAxis { P, C, Mu };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "p") return SweepAxis::P;
  if (s == "c") return SweepAxis::C;
  if (s == "mu") return SweepAxis::Mu;
  throw ConfigError("axis: expected one of p, c, mu (got '" + s + "')");
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::P:
      return "p";
    case SweepAxis::C:
      return "c";
    case SweepAxis::Mu:
      break;
  }
  return "mu";
}

inline ExperimentConfig with_axis_value(ExperimentConfig cfg, SweepAxis axis, double value) {
  const auto& s = cfg.schedule;
  try {
    switch (axis) {
      case SweepAxis::P:
        if (s.family() != Schedule::Family::PowerLaw) throw ConfigError("axis p: schedule family must be power");
        cfg.schedule = Schedule::power_law(s.c(), value);
        break;
      case SweepAxis::C:
        if (s.family() == Schedule::Family::PowerLaw) {
          cfg.schedule = Schedule::power_law(value, s.p());
        } else if (s.family() == Schedule::Family::Constant) {
          cfg.schedule = Schedule::constant(value);
        } else {
          throw ConfigError("axis c: schedule family zero has no c");
        }
        break;
      case SweepAxis::Mu:
        if (!(value > 0)) throw ConfigError("axis mu: values must be > 0");
        cfg.mu = value;
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("axis ") + to_string(axis) + ": " + e.what());
  }
  return cfg;
}

/// Comma-separated numbers; blank entries and trailing garbage are rejected.
inline std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("values: empty entry in '" + text + "'");
    const std::string tok = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw ConfigError("values: '" + tok + "' is not a number");
    }
    out.push_back(v);
  }
  if (!text.empty() && text.back() == ',') throw ConfigError("values: empty entry in '" + text + "'");
  return out;
}

struct SweepRow {
  double value;
  int status = exit_code::kOk;
  std::string error;
  std::optional<Report> report;
};

/// One run per value, executed concurrently; a failed cell is recorded and the sweep continues.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                                       const std::filesystem::path& out_dir) {
  auto cell = [&base, axis, out_dir](double value) {
    SweepRow row{value, exit_code::kOk, {}, std::nullopt};
    try {
      const ExperimentConfig cfg = with_axis_value(base, axis, value);
      row.report = run_experiment(cfg, out_dir / (to_string(axis) + "_" + format_shortest(value))).report;
    } catch (const ConfigError& e) {
      row.status = exit_code::kConfigError;
      row.error = e.what();
    } catch (const NumericalAbort& e) {
      row.status = exit_code::kNumericalAbort;
      row.error = e.what();
    }
    return row;
  };
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (std::size_t start = 0; start < values.size(); start += workers) {
    std::vector<std::future<SweepRow>> batch;
    for (std::size_t i = start; i < std::min(values.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, cell, values[i]));
    }
    for (auto& f : batch) rows.push_back(f.get());
  }
  return rows;
}

/// Columns: value,dist_to_target,phi_gap,v_norm_final,slow,in_L2. Failed cells carry nan.
inline void write_sweep_summary(std::ostream& os, const ExperimentConfig& base, SweepAxis axis, const std::vector<SweepRow>& rows) {
  os << "value,dist_to_target,phi_gap,v_norm_final,slow,in_L2\n";
  for (const auto& r : rows) {
    ScheduleClass cls{false, false};
    try {
      cls = classify(with_axis_value(base, axis, r.value).schedule);
    } catch (const ConfigError&) {
      cls = classify(base.schedule);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    os << format_shortest(r.value) << ',' << format_g17(r.report ? r.report->dist_to_target : nan) << ','
       << format_g17(r.report ? r.report->phi_gap : nan) << ',' << format_g17(r.report ? r.report->v_norm_final : nan) << ','
       << (cls.slow ? "true" : "false") << ',' << (cls.in_l2 ? "true" : "false") << '\n';
  }
}

inline int cmd_sweep(const std::filesystem::path& config_path, const std::string& axis_name, const std::string& value_list,
                     std::ostream& err) {
  try {
    const ExperimentConfig base = load_config(config_path);
    const SweepAxis axis = sweep_axis_from_string(axis_name);
    const std::vector<double> values = parse_value_list(value_list);
    if (values.empty()) throw ConfigError("values: empty list");
    const auto out_dir = resolve_output_dir(base);
    const auto rows = run_sweep(base, axis, values, out_dir);
    std::filesystem::create_directories(out_dir);
    std::ofstream summary(out_dir / "sweep_summary.csv");
    write_sweep_summary(summary, base, axis, rows);
    int code = exit_code::kOk;
    for (const auto& r : rows) {
      if (r.status != exit_code::kOk) {
        err << "rnflow: sweep cell " << to_string(axis) << "=" << format_shortest(r.value) << " failed: " << r.error << '\n';
        code = std::max(code, r.status);
      }
    }
    return code;
  } catch (const ConfigError& e) {
    err << "rnflow: config error: " << e.what() << '\n';
    return exit_code::kConfigError;
  }
}

struct HypothesisReport {
  bool slow = false;
  bool in_l2 = false;
  std::optional<double> h2_k;
  std::optional<double> h1_model_r;
  bool phi0_finite = false;
  bool h2_holds = false;
  bool h1_holds = false;

  bool all_pass() const { return slow && h2_holds && h1_holds && phi0_finite; }
};

inline HypothesisReport check_hypotheses(const ExperimentConfig& cfg) {
  ConvexFunction f;
  try {
    f = shift_to_zero_min(cfg.problem);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  HypothesisReport r;
  const auto cls = classify(cfg.schedule);
  r.slow = cls.slow;
  r.in_l2 = cls.in_l2;
  const H2Report h2 = h2_check(cfg.schedule);
  r.h2_k = h2.k;
  r.h2_holds = h2.holds();
  const H1ModelReport h1 = h1_model_report(f, cfg.schedule);
  r.h1_model_r = h1.r;
  r.h1_holds = h1.holds;
  r.phi0_finite = evaluate(f, Vector::Zero(f.dim())).is_finite();
  return r;
}

inline json hypothesis_to_json(const HypothesisReport& r) {
  return {{"slow", r.slow},
          {"in_L2", r.in_l2},
          {"h2_k", detail::optional_json(r.h2_k)},
          {"h1_model_r", detail::optional_json(r.h1_model_r)},
          {"phi0_finite", r.phi0_finite}};
}

inline int cmd_check(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = load_config(config_path);
    const HypothesisReport r = check_hypotheses(cfg);
    out << hypothesis_to_json(r).dump(2) << '\n';
    return r.all_pass() ? exit_code::kOk : exit_code::kHypothesisFailed;
  } catch (const ConfigError& e) {
    err << "rnflow: config error: " << e.what() << '\n';
    return exit_code::kConfigError;
  }
}

}  // namespace rnflow
