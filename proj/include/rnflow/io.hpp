#pragma once

// JSON for function trees, schedules and reports; CSV for trajectories.

#include "rnflow/diagnostics.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <set>
#include <string>

namespace rnflow {

using json = nlohmann::json;

/// Malformed or invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(path + ": unknown key '" + key + "'");
  }
}

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + ": missing key '" + key + "'");
  return j.at(key);
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline Vector get_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = get_vector(j[static_cast<std::size_t>(r)], path + "[" + std::to_string(r) + "]");
    if (row.size() != cols) throw ConfigError(path + ": ragged matrix");
    m.row(r) = row.transpose();
  }
  return m;
}

inline std::vector<double> get_list(const json& j, const std::string& path) {
  const Vector v = get_vector(j, path);
  return {v.data(), v.data() + v.size()};
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

/// Build a function from its JSON expression tree. Errors carry the JSON path.
inline ConvexFunction function_from_json(const json& j, const std::string& path = "problem") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const std::string type = get_string(require(j, "type", path), path + ".type");
  auto field = [&](const char* k) { return path + "." + k; };
  auto children = [&](const json& arr, const std::string& p) {
    if (!arr.is_array()) throw ConfigError(p + ": expected an array");
    std::vector<ConvexFunction> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(function_from_json(arr[i], p + "[" + std::to_string(i) + "]"));
    return out;
  };
  try {
    if (type == "quadratic") {
      reject_unknown_keys(j, {"type", "A", "b", "c"}, path);
      const Matrix A = get_matrix(require(j, "A", path), field("A"));
      const Vector b = j.contains("b") ? get_vector(j["b"], field("b")) : Vector(Vector::Zero(A.rows()));
      const double c = j.contains("c") ? get_number(j["c"], field("c")) : 0.0;
      return ConvexFunction::quadratic(A, b, c);
    }
    if (type == "abs") {
      reject_unknown_keys(j, {"type"}, path);
      return ConvexFunction::abs_value();
    }
    if (type == "box") {
      reject_unknown_keys(j, {"type", "lo", "hi"}, path);
      return ConvexFunction::indicator_box(get_vector(require(j, "lo", path), field("lo")),
                                           get_vector(require(j, "hi", path), field("hi")));
    }
    if (type == "halfspace") {
      reject_unknown_keys(j, {"type", "a", "beta"}, path);
      return ConvexFunction::indicator_halfspace(get_vector(require(j, "a", path), field("a")),
                                                 get_number(require(j, "beta", path), field("beta")));
    }
    if (type == "affine") {
      reject_unknown_keys(j, {"type", "A", "b"}, path);
      return ConvexFunction::indicator_affine(get_matrix(require(j, "A", path), field("A")),
                                              get_vector(require(j, "b", path), field("b")));
    }
    if (type == "norm1") {
      reject_unknown_keys(j, {"type", "dim"}, path);
      return ConvexFunction::norm_one(require(j, "dim", path).get<Eigen::Index>());
    }
    if (type == "half_sq_dist_box") {
      reject_unknown_keys(j, {"type", "lo", "hi"}, path);
      return ConvexFunction::half_sq_dist_to_box(get_vector(require(j, "lo", path), field("lo")),
                                                 get_vector(require(j, "hi", path), field("hi")));
    }
    if (type == "abs_sum") {
      reject_unknown_keys(j, {"type", "kinks", "weights"}, path);
      const auto kinks = get_list(require(j, "kinks", path), field("kinks"));
      auto weights = j.contains("weights") ? get_list(j["weights"], field("weights")) : std::vector<double>(kinks.size(), 1.0);
      return ConvexFunction::abs_sum(kinks, weights);
    }
    if (type == "separable_sum") {
      reject_unknown_keys(j, {"type", "children"}, path);
      return ConvexFunction::separable_sum(children(require(j, "children", path), field("children")));
    }
    if (type == "sum") {
      reject_unknown_keys(j, {"type", "children"}, path);
      return ConvexFunction::sum(children(require(j, "children", path), field("children")));
    }
    if (type == "translate") {
      reject_unknown_keys(j, {"type", "f", "shift"}, path);
      return ConvexFunction::translate(function_from_json(require(j, "f", path), field("f")),
                                       get_vector(require(j, "shift", path), field("shift")));
    }
    if (type == "add_linear") {
      reject_unknown_keys(j, {"type", "f", "slope"}, path);
      return ConvexFunction::add_linear(function_from_json(require(j, "f", path), field("f")),
                                        get_vector(require(j, "slope", path), field("slope")));
    }
    if (type == "scale") {
      reject_unknown_keys(j, {"type", "f", "alpha"}, path);
      return ConvexFunction::scale(function_from_json(require(j, "f", path), field("f")),
                                   get_number(require(j, "alpha", path), field("alpha")));
    }
    if (type == "shift_value") {
      reject_unknown_keys(j, {"type", "f", "value"}, path);
      return ConvexFunction::shift_value(function_from_json(require(j, "f", path), field("f")),
                                         get_number(require(j, "value", path), field("value")));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".type: unknown function type '" + type + "'");
}

inline json function_to_json(const ConvexFunction& f) {
  using detail::matrix_json;
  using detail::vector_json;
  return std::visit(
      detail::overloaded{
          [](const atoms::Quadratic& q) -> json { return {{"type", "quadratic"}, {"A", matrix_json(q.A)}, {"b", vector_json(q.b)}, {"c", q.c}}; },
          [](const atoms::AbsValue&) -> json { return {{"type", "abs"}}; },
          [](const atoms::IndicatorBox& b) -> json { return {{"type", "box"}, {"lo", vector_json(b.lo)}, {"hi", vector_json(b.hi)}}; },
          [](const atoms::IndicatorHalfspace& h) -> json { return {{"type", "halfspace"}, {"a", vector_json(h.a)}, {"beta", h.beta}}; },
          [](const atoms::IndicatorAffine& h) -> json { return {{"type", "affine"}, {"A", matrix_json(h.A)}, {"b", vector_json(h.b)}}; },
          [](const atoms::NormOne& n) -> json { return {{"type", "norm1"}, {"dim", n.n}}; },
          [](const atoms::HalfSqDistToBox& d) -> json {
            return {{"type", "half_sq_dist_box"}, {"lo", vector_json(d.box.lo)}, {"hi", vector_json(d.box.hi)}};
          },
          [](const atoms::AbsSum1D& a) -> json { return {{"type", "abs_sum"}, {"kinks", a.kinks}, {"weights", a.weights}}; },
          [](const comb::SeparableSum& s) -> json {
            json c = json::array();
            for (const auto& ch : s.children) c.push_back(function_to_json(ch));
            return {{"type", "separable_sum"}, {"children", c}};
          },
          [](const comb::Sum& s) -> json {
            json c = json::array();
            for (const auto& ch : s.children) c.push_back(function_to_json(ch));
            return {{"type", "sum"}, {"children", c}};
          },
          [](const comb::Translate& t) -> json { return {{"type", "translate"}, {"f", function_to_json(t.f)}, {"shift", vector_json(t.shift)}}; },
          [](const comb::AddLinear& t) -> json { return {{"type", "add_linear"}, {"f", function_to_json(t.f)}, {"slope", vector_json(t.slope)}}; },
          [](const comb::Scale& t) -> json { return {{"type", "scale"}, {"f", function_to_json(t.f)}, {"alpha", t.alpha}}; },
          [](const comb::ShiftValue& t) -> json { return {{"type", "shift_value"}, {"f", function_to_json(t.f)}, {"value", t.value}}; },
      },
      f.node().v);
}

inline Schedule schedule_from_json(const json& j, const std::string& path = "schedule") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const std::string family = get_string(require(j, "family", path), path + ".family");
  try {
    if (family == "power") {
      reject_unknown_keys(j, {"family", "c", "p"}, path);
      return Schedule::power_law(get_number(require(j, "c", path), path + ".c"), get_number(require(j, "p", path), path + ".p"));
    }
    if (family == "constant") {
      reject_unknown_keys(j, {"family", "c"}, path);
      return Schedule::constant(get_number(require(j, "c", path), path + ".c"));
    }
    if (family == "zero") {
      reject_unknown_keys(j, {"family"}, path);
      return Schedule::zero();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".family: unknown schedule family '" + family + "'");
}

inline json schedule_to_json(const Schedule& s) {
  switch (s.family()) {
    case Schedule::Family::PowerLaw:
      return {{"family", "power"}, {"c", s.c()}, {"p", s.p()}};
    case Schedule::Family::Constant:
      return {{"family", "constant"}, {"c", s.c()}};
    case Schedule::Family::Zero:
      break;
  }
  return {{"family", "zero"}};
}

inline json report_to_json(const Report& r) {
  using detail::optional_json;
  return {
      {"target", detail::vector_json(r.target)},
      {"dist_to_target", r.dist_to_target},
      {"phi_gap", r.phi_gap},
      {"v_norm_final", r.v_norm_final},
      {"xy_gap_final", r.xy_gap_final},
      {"theta_over_eps_final", optional_json(r.theta_over_eps_final)},
      {"theta_integral", r.theta_integral},
      {"energy_sum", r.energy_sum},
      {"energy_bound", optional_json(r.energy_bound)},
      {"slow", r.hypothesis_flags.slow},
      {"in_L2", r.hypothesis_flags.in_l2},
      {"h2_k", optional_json(r.hypothesis_flags.h2_k)},
      {"h1_model_r", optional_json(r.hypothesis_flags.h1_model_r)},
  };
}

/// 17 significant digits; "inf"/"nan" for non-finite values.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest representation that round-trips.
inline std::string format_shortest(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

/// Header: t,y_0..y_{n-1},x_0..x_{n-1},v_0..v_{n-1},phi_x,norm_x,ydot_norm
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto n = traj.samples.empty() ? 0 : traj.samples.front().y.size();
  os << "t";
  for (const char* name : {"y", "x", "v"}) {
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << name << '_' << i;
  }
  os << ",phi_x,norm_x,ydot_norm\n";
  for (const auto& s : traj.samples) {
    os << format_g17(s.t);
    for (const Vector* vec : {&s.y, &s.x, &s.v}) {
      for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_g17((*vec)(i));
    }
    os << ',' << format_g17(s.phi_x) << ',' << format_g17(s.norm_x) << ',' << format_g17(s.ydot_norm) << '\n';
  }
}

}  // namespace rnflow
