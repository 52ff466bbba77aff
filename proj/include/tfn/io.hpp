#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tfn/adjoint.hpp"
#include "tfn/covering.hpp"
#include "tfn/identity.hpp"
#include "tfn/measure.hpp"
#include "tfn/ot.hpp"
#include "tfn/plan.hpp"
#include "tfn/simple.hpp"
#include "tfn/transfunction.hpp"

namespace tfn::io {

/// Insertion-ordered JSON so that reports are byte-stable.
using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::InvalidInput, where + ": " + what);
}

inline const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, std::string("missing key \"") + key + "\"");
  return *it;
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(where, "non-finite number");
  return v;
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline int positive_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1) bad(where, "expected a positive integer");
  return j.get<int>();
}

inline Point point(const Json& j, int d, const std::string& where) {
  std::vector<double> c = numbers(j, where);
  if (static_cast<int>(c.size()) != d)
    throw Error(ErrorKind::DimensionMismatch, where + ": point has " + std::to_string(c.size()) + " coordinates, expected " + std::to_string(d));
  return Point(std::span<const double>(c));
}

inline Eigen::VectorXd vector(const Json& j, const std::string& where) {
  std::vector<double> v = numbers(j, where);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline Json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Measures

inline DiscreteMeasure measure_from_json(const Json& j, const std::string& where = "measure") {
  const int d = detail::positive_int(detail::member(j, "dimension", where), where + ".dimension");
  const Json& pts = detail::member(j, "points", where);
  if (!pts.is_array()) detail::bad(where + ".points", "expected an array");
  std::vector<double> w = detail::numbers(detail::member(j, "weights", where), where + ".weights");
  if (pts.size() != w.size())
    detail::bad(where, "points and weights differ in length (" + std::to_string(pts.size()) + " vs " + std::to_string(w.size()) + ")");
  std::vector<Point> ps;
  for (std::size_t k = 0; k < pts.size(); ++k) ps.push_back(detail::point(pts[k], d, where + ".points[" + std::to_string(k) + "]"));
  if (ps.empty()) return DiscreteMeasure(d);
  return DiscreteMeasure(ps, w);
}

inline Json to_json(const DiscreteMeasure& m) {
  Json pts = Json::array(), w = Json::array();
  for (const auto& a : m.atoms()) {
    pts.push_back(std::vector<double>(a.point.coords().begin(), a.point.coords().end()));
    w.push_back(a.weight);
  }
  return Json{{"dimension", m.dimension()}, {"points", pts}, {"weights", w}};
}

inline DiscreteMeasure load_measure(const std::string& path) { return measure_from_json(parse_file(path), path); }

// ---------------------------------------------------------------------------
// Plans

inline DiscretePlan plan_from_json(const Json& j, const std::string& where = "plan") {
  const int nx = detail::positive_int(detail::member(j, "n_x", where), where + ".n_x");
  const int ny = detail::positive_int(detail::member(j, "n_y", where), where + ".n_y");
  const Json& rows = detail::member(j, "matrix", where);
  if (!rows.is_array() || rows.empty()) detail::bad(where + ".matrix", "expected a nonempty array of rows");
  std::vector<std::vector<double>> m;
  for (std::size_t i = 0; i < rows.size(); ++i) m.push_back(detail::numbers(rows[i], where + ".matrix[" + std::to_string(i) + "]"));
  for (const auto& r : m)
    if (r.size() != m.front().size()) detail::bad(where + ".matrix", "rows differ in length");
  Eigen::MatrixXd k(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j2 = 0; j2 < k.cols(); ++j2) k(i, j2) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j2)];
  Eigen::VectorXd mu = detail::vector(detail::member(j, "mu", where), where + ".mu");
  Eigen::VectorXd nu = detail::vector(detail::member(j, "nu", where), where + ".nu");
  return DiscretePlan(std::move(k), std::move(mu), std::move(nu), nx, ny);
}

inline Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Json to_json(const DiscretePlan& p) {
  return Json{{"n_x", p.n_x()}, {"n_y", p.n_y()}, {"matrix", to_json(p.matrix())}, {"mu", to_json(p.mu())}, {"nu", to_json(p.nu())}};
}

inline DiscretePlan load_plan(const std::string& path) { return plan_from_json(parse_file(path), path); }

// ---------------------------------------------------------------------------
// Simple transfunctions
//
// {"dimension": d, "output_dimension": e (optional, defaults to d),
//  "terms": [{"field": {...}, "out": <measure>}, ...]}
//
// Field kinds: constant {value}; indicator {points}; ball {center, radius};
// bump {center, inner, outer}; affine {slope, offset, clamp};
// distance {anchor, cap}.

inline ScalarField field_from_json(const Json& j, int d, const std::string& where) {
  const Json& kind = detail::member(j, "kind", where);
  if (!kind.is_string()) detail::bad(where + ".kind", "expected a string");
  const std::string k = kind.get<std::string>();
  auto num = [&](const char* key) { return detail::number(detail::member(j, key, where), where + "." + key); };
  auto pt = [&](const char* key) { return detail::point(detail::member(j, key, where), d, where + "." + key); };
  if (k == "constant") return ScalarField::constant(num("value"));
  if (k == "indicator") {
    const Json& pts = detail::member(j, "points", where);
    if (!pts.is_array()) detail::bad(where + ".points", "expected an array");
    std::vector<Point> ps;
    for (std::size_t i = 0; i < pts.size(); ++i) ps.push_back(detail::point(pts[i], d, where + ".points[" + std::to_string(i) + "]"));
    return ScalarField::point_indicator(std::move(ps));
  }
  if (k == "ball") return ScalarField::ball_indicator(pt("center"), num("radius"));
  if (k == "bump") return ScalarField::bump(pt("center"), num("inner"), num("outer"));
  if (k == "affine") {
    auto slope = detail::numbers(detail::member(j, "slope", where), where + ".slope");
    if (static_cast<int>(slope.size()) != d) throw Error(ErrorKind::DimensionMismatch, where + ".slope: wrong length");
    return ScalarField::clamped_affine(std::move(slope), num("offset"), num("clamp"));
  }
  if (k == "distance") return ScalarField::capped_distance(pt("anchor"), num("cap"));
  detail::bad(where + ".kind", "unknown field kind \"" + k + "\"");
}

inline SimpleTransfunction transfunction_from_json(const Json& j, const std::string& where = "transfunction") {
  const int d = detail::positive_int(detail::member(j, "dimension", where), where + ".dimension");
  int e = d;
  if (j.contains("output_dimension")) e = detail::positive_int(j["output_dimension"], where + ".output_dimension");
  const Json& terms = detail::member(j, "terms", where);
  if (!terms.is_array()) detail::bad(where + ".terms", "expected an array");
  SimpleTransfunction phi(d, e);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const std::string at = where + ".terms[" + std::to_string(k) + "]";
    ScalarField f = field_from_json(detail::member(terms[k], "field", at), d, at + ".field");
    DiscreteMeasure out = measure_from_json(detail::member(terms[k], "out", at), at + ".out");
    require_same_dimension(out.dimension(), e, "transfunction term output");
    phi.add_term(std::move(f), std::move(out));
  }
  return phi;
}

inline SimpleTransfunction load_transfunction(const std::string& path) { return transfunction_from_json(parse_file(path), path); }

// ---------------------------------------------------------------------------
// Reports

/// Centers, radii and the p(n) table per level.
inline Json covering_summary(const Covering& cov) {
  Json levels = Json::array();
  for (int n : cov.levels()) levels.push_back(Json{{"n", n}, {"p", cov.count(n)}, {"radius", 1.0 / n}});
  Json centers = Json::array(), radii = Json::array();
  for (std::size_t i = 0; i < cov.size(); ++i) {
    const Point c = cov.center(i);
    centers.push_back(std::vector<double>(c.coords().begin(), c.coords().end()));
    radii.push_back(cov.radius(i));
  }
  return Json{{"box", Json{{"lo", cov.box().lo}, {"hi", cov.box().hi}}}, {"levels", levels}, {"centers", centers}, {"radii", radii}};
}

inline Json to_json(const MarkovReport& r) {
  Json rows = Json::array();
  for (const auto& e : r.entries)
    rows.push_back(Json{{"probe", e.label}, {"negative_mass", e.negative_mass}, {"mass_defect", e.mass_defect}, {"additivity", e.additivity}});
  return Json{{"seed", r.seed},
              {"tolerance", r.tolerance},
              {"passed", r.passed()},
              {"violated", r.failure()},
              {"worst_negative_mass", r.worst_negative()},
              {"worst_mass_defect", r.worst_mass_defect()},
              {"worst_additivity", r.worst_additivity()},
              {"geometric_residual", r.geometric_residual},
              {"geometric_tolerance", r.geometric_tolerance},
              {"residuals", rows}};
}

inline Json to_json(const WarehouseReport& r) {
  Json j{{"level", r.level},
         {"alpha", r.alpha},
         {"power", r.power},
         {"mass", r.mass},
         {"source_cells", r.source_cells.size()},
         {"target_cells", r.target_cells.size()},
         {"first", r.first},
         {"middle", r.middle},
         {"last", r.last},
         {"total", r.total()},
         {"end_step_budget", r.end_step_budget()},
         {"error_budget", r.error_budget()},
         {"end_steps_within_budget", r.end_steps_within_budget()}};
  if (r.assignment) {
    const auto& a = *r.assignment;
    j["assignment_route"] = Json{{"vertices", a.vertices}, {"z", a.z}, {"raw_cost", a.raw_cost}, {"feasible_cost", a.feasible_cost},
                                 {"marginal_defect", a.marginal_defect}, {"slack", a.slack}};
  } else {
    j["assignment_route"] = nullptr;
  }
  return j;
}

inline Json to_json(const PairingReport& r) {
  return Json{{"max_residual", r.max_residual},
              {"norm_transfunction", r.norm_transfunction},
              {"norm_adjoint", r.norm_adjoint},
              {"norm_gap", r.norm_gap()},
              {"fields", r.residuals.size()},
              {"measures", r.residuals.empty() ? 0 : r.residuals.front().size()},
              {"closure_fields", r.closure_fields},
              {"closure_measures", r.closure_measures}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) { return tfn::detail::fmt_double(v); }

/// Header plus rows; cells are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : width_(header.size()) { line(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorKind::InvalidInput, "csv row has the wrong width");
    line(cells);
  }

  const std::string& str() const noexcept { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) text_ += (k ? "," : "") + cells[k];
    text_ += '\n';
  }

  std::size_t width_;
  std::string text_;
};

/// Pairing residual table: one row per (field, measure) pair.
inline CsvTable residual_csv(const PairingReport& r) {
  CsvTable t({"field_id", "field", "measure_id", "residual"});
  for (std::size_t a = 0; a < r.residuals.size(); ++a)
    for (std::size_t b = 0; b < r.residuals[a].size(); ++b)
      t.row({std::to_string(a), r.field_names[a], std::to_string(b), csv_number(r.residuals[a][b])});
  return t;
}

inline CsvTable residual_csv(const MarkovReport& r) {
  CsvTable t({"probe", "negative_mass", "mass_defect", "additivity"});
  for (const auto& e : r.entries) t.row({e.label, csv_number(e.negative_mass), csv_number(e.mass_defect), csv_number(e.additivity)});
  return t;
}

}  // namespace tfn::io
