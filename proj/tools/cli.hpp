#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tfn/adjoint.hpp"
#include "tfn/io.hpp"
#include "tfn/ot.hpp"
#include "tfn/random.hpp"

namespace tfn::cli {

enum ExitCode : int { kOk = 0, kInvalid = 2, kCheckFailed = 3 };

struct RunConfig {
  std::string command;
  std::string input, target, transfunction, plan;
  std::string box;                  // "lo:hi,lo:hi"
  std::vector<int> levels{2, 4, 8};
  double alpha = 1.0, power = 1.0;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::size_t fields = 16, measures = 16;
  std::size_t vertex_budget = 1000;
  std::string out;                  // directory; empty writes the report to stdout
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"discretize", "transport", "approx-plan", "markov-check", "adjoint-check"};
  return names;
}

/// Parses "0:1,0:1" into a box.
inline Box parse_box(const std::string& text) {
  if (text.empty()) throw Error(ErrorKind::InvalidInput, "--box is required for this command");
  std::vector<double> lo, hi;
  std::stringstream axes(text);
  std::string axis;
  while (std::getline(axes, axis, ',')) {
    const auto colon = axis.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::InvalidInput, "--box: axis \"" + axis + "\" is not lo:hi");
    try {
      std::size_t used = 0;
      const std::string a = axis.substr(0, colon), b = axis.substr(colon + 1);
      lo.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      hi.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidInput, "--box: axis \"" + axis + "\" is not numeric");
    }
  }
  return Box(lo, hi);
}

/// Parses "2,4,8"; levels must be positive and strictly ascending.
inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error(ErrorKind::InvalidInput, "--levels: \"" + item + "\" is not an integer");
    out.push_back(n);
  }
  return out;
}

inline void validate(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidInput, m); };
  bool known = false;
  for (const auto& n : commands()) known = known || n == c.command;
  if (!known) bad("unknown command \"" + c.command + "\"");
  if (c.levels.empty()) bad("--levels: at least one level is required");
  for (std::size_t k = 0; k < c.levels.size(); ++k) {
    if (c.levels[k] < 1) bad("--levels: levels must be >= 1");
    if (k > 0 && c.levels[k] <= c.levels[k - 1]) bad("--levels: levels must be sorted ascending without repeats");
  }
  if (!(c.tol > 0.0) || !std::isfinite(c.tol)) bad("--tol must be > 0");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) bad("--alpha must be > 0");
  if (!(c.power > 0.0) || !std::isfinite(c.power)) bad("--power must be > 0");
  if (c.fields == 0 || c.measures == 0) bad("battery sizes must be positive");
}

namespace detail {

using io::Json;

inline void require_in_box(const DiscreteMeasure& m, const Box& box, const char* what) {
  require_same_dimension(m.dimension(), box.dimension(), what);
  for (const auto& a : m.atoms())
    if (!box.contains(a.point)) throw Error(ErrorKind::Uncovered, std::string(what) + ": support point " + a.point.str() + " lies outside --box");
}

inline Point random_point(const Box& box, Rng& rng) {
  std::vector<double> c;
  for (int k = 0; k < box.dimension(); ++k) c.push_back(rng.uniform(box.lo[k], box.hi[k]));
  return Point(std::span<const double>(c));
}

inline std::vector<double> unit_vector(int d, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(d));
  double n = 0.0;
  while (n < 1e-3) {
    n = 0.0;
    for (auto& x : v) {
      x = rng.uniform(-1.0, 1.0);
      n += x * x;
    }
    n = std::sqrt(n);
  }
  for (auto& x : v) x /= n;
  return v;
}

/// Seeded 1-Lipschitz battery: the constant 1 (Lipschitz 0), then capped
/// distances and clamped unit-slope affine functions in turn.
inline std::vector<ScalarField> lipschitz_battery(const Box& box, std::size_t count, Rng& rng) {
  std::vector<ScalarField> out{ScalarField::constant(1.0).renamed("one")};
  const double diam = std::max(box.diameter(), 1.0);
  for (std::size_t k = 1; k < count; ++k) {
    if (k % 2 == 1) {
      out.push_back(ScalarField::capped_distance(random_point(box, rng), diam).renamed("dist" + std::to_string(k)));
    } else {
      auto slope = unit_vector(box.dimension(), rng);
      out.push_back(ScalarField::clamped_affine(std::move(slope), rng.uniform(-1.0, 1.0), diam).renamed("affine" + std::to_string(k)));
    }
  }
  return out;
}

/// Bounded continuous fields for pairing tests: bumps, distances, affine.
inline std::vector<ScalarField> mixed_battery(const Box& box, std::size_t count, Rng& rng) {
  std::vector<ScalarField> out;
  const double diam = std::max(box.diameter(), 1e-3);
  for (std::size_t k = 0; k < count; ++k) {
    switch (k % 3) {
      case 0: {
        const double inner = rng.uniform(0.0, 0.3) * diam;
        out.push_back(ScalarField::bump(random_point(box, rng), inner, inner + rng.uniform(0.05, 0.5) * diam));
        break;
      }
      case 1: out.push_back(ScalarField::capped_distance(random_point(box, rng), rng.uniform(0.2, 1.0) * diam)); break;
      default: out.push_back(ScalarField::clamped_affine(unit_vector(box.dimension(), rng), rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0))); break;
    }
    out.back() = out.back().renamed("field" + std::to_string(k));
  }
  return out;
}

inline std::vector<DiscreteMeasure> signed_battery(const Box& box, std::size_t count, Rng& rng) {
  std::vector<DiscreteMeasure> out;
  for (std::size_t k = 0; k < count; ++k) {
    MeasureBuilder b(box.dimension());
    const std::size_t atoms = 1 + rng.index(4);
    for (std::size_t a = 0; a < atoms; ++a) b.add(random_point(box, rng), rng.uniform(-1.0, 1.0));
    out.push_back(std::move(b).build());
  }
  return out;
}

inline Json levels_json(const std::vector<int>& levels) { return Json(levels); }

struct Output {
  Json report;
  std::vector<std::pair<std::string, io::CsvTable>> tables;
  int status = kOk;
};

// -------------------------------------------------------------------------

inline Output discretize(const RunConfig& c) {
  const Box box = parse_box(c.box);
  if (c.input.empty()) throw Error(ErrorKind::InvalidInput, "discretize needs --input");
  const DiscreteMeasure lambda = io::load_measure(c.input);
  require_in_box(lambda, box, "--input");
  DiscreteMeasure reference(box.dimension());
  if (!c.target.empty()) {
    reference = io::load_measure(c.target);
    require_in_box(reference, box, "--target");
  } else {
    std::vector<double> ones(lambda.size(), 1.0);
    reference = lambda.empty() ? DiscreteMeasure(box.dimension()) : DiscreteMeasure(lambda.support(), ones);
  }
  const Covering cov = build_covering(box, c.levels);
  Rng rng(c.seed);
  const auto battery = lipschitz_battery(box, c.fields, rng);
  const double norm = lambda.total_variation();

  Output o;
  Json fields = Json::array();
  for (std::size_t k = 0; k < battery.size(); ++k)
    fields.push_back(Json{{"id", k}, {"name", battery[k].name()}, {"lipschitz", battery[k].lipschitz().value_or(0.0)}});
  Json settings = Json::array();
  bool ok = true;
  for (IdentitySetting s : {IdentitySetting::PointMass, IdentitySetting::Continuous, IdentitySetting::Measurable}) {
    std::vector<DiscreteMeasure> seq;
    double rate = 1.0;
    for (int n : c.levels) {
      IdentityApproximation approx{s, cov, n, s == IdentitySetting::Measurable ? std::optional<DiscreteMeasure>(reference) : std::nullopt};
      rate = approx.rate_constant();
      seq.push_back(approx.transfunction()(lambda));
    }
    const WeakGapTable table = weak_gap(seq, lambda, battery);
    io::CsvTable csv({"level", "field_id", "gap", "bound"});
    Json rows = Json::array();
    bool within = true, monotone = true;
    for (std::size_t r = 0; r < seq.size(); ++r) {
      const int n = c.levels[r];
      for (std::size_t f = 0; f < battery.size(); ++f) {
        const double bound = rate * battery[f].lipschitz().value_or(0.0) * norm / n;
        const double gap = table.gaps[r][f];
        within = within && gap <= bound + 1e-12;
        csv.row({std::to_string(n), std::to_string(f), io::csv_number(gap), io::csv_number(bound)});
        rows.push_back(Json{{"level", n}, {"field_id", f}, {"gap", gap}, {"bound", bound}});
      }
      if (r > 0 && table.row_max[r] > table.row_max[r - 1] + 1e-12) monotone = false;
    }
    ok = ok && within;
    settings.push_back(Json{{"setting", to_string(s)},
                            {"rate_constant", rate},
                            {"row_max", table.row_max},
                            {"within_bound", within},
                            {"monotone", monotone},
                            {"rows", rows}});
    o.tables.emplace_back(std::string("weak_gap_") + to_string(s) + ".csv", std::move(csv));
  }
  o.report = Json{{"command", c.command},
                  {"seed", c.seed},
                  {"levels", levels_json(c.levels)},
                  {"norm", norm},
                  {"reference", c.target.empty() ? "counting measure on supp input" : "target"},
                  {"covering", io::covering_summary(cov)},
                  {"fields", fields},
                  {"settings", settings},
                  {"passed", ok}};
  o.status = ok ? kOk : kCheckFailed;
  return o;
}

inline Output transport(const RunConfig& c) {
  const Box box = parse_box(c.box);
  if (c.input.empty() || c.target.empty()) throw Error(ErrorKind::InvalidInput, "transport needs --input and --target");
  const DiscreteMeasure lambda = io::load_measure(c.input), rho = io::load_measure(c.target);
  require_in_box(lambda, box, "--input");
  require_in_box(rho, box, "--target");
  const Covering cov = build_covering(box, c.levels);
  const CostFunction cost = CostFunction::power_distance(c.alpha, c.power);

  constexpr std::size_t kExactLimit = 600;
  std::optional<double> exact;
  if (lambda.size() <= kExactLimit && rho.size() <= kExactLimit && !lambda.empty()) {
    std::vector<double> a, b;
    for (const auto& at : lambda.atoms()) a.push_back(at.weight);
    for (const auto& at : rho.atoms()) b.push_back(at.weight);
    const auto sol = discrete_ot_exact(Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size())),
                                       Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())),
                                       cost.matrix(lambda.support(), rho.support()));
    exact = sol.cost;
  }

  Output o;
  Json levels = Json::array();
  io::CsvTable csv({"level", "first", "middle", "last", "total", "assignment_feasible", "end_step_budget", "error_budget", "error"});
  bool ok = true;
  for (int n : c.levels) {
    const auto rep = warehouse_strategy(lambda, rho, cost, CellPartition(cov, n), WarehouseOptions{c.vertex_budget});
    Json j = io::to_json(rep);
    bool level_ok = rep.end_steps_within_budget();
    std::string err = "";
    if (exact) {
      const double e = std::abs(rep.total() - *exact);
      const bool within = e <= rep.error_budget() + 1e-12;
      j["error"] = e;
      j["within_error_budget"] = within;
      level_ok = level_ok && within;
      err = io::csv_number(e);
    }
    j["passed"] = level_ok;
    ok = ok && level_ok;
    csv.row({std::to_string(n), io::csv_number(rep.first), io::csv_number(rep.middle), io::csv_number(rep.last), io::csv_number(rep.total()),
             rep.assignment ? io::csv_number(rep.assignment->feasible_cost) : "", io::csv_number(rep.end_step_budget()),
             io::csv_number(rep.error_budget()), err});
    levels.push_back(std::move(j));
  }
  o.tables.emplace_back("warehouse.csv", std::move(csv));
  o.report = Json{{"command", c.command},
                  {"seed", c.seed},
                  {"cost", cost.describe()},
                  {"exact_cost", exact ? Json(*exact) : Json(nullptr)},
                  {"levels", levels},
                  {"passed", ok}};
  o.status = ok ? kOk : kCheckFailed;
  return o;
}

/// Phi from --transfunction, or from --plan with --input (mu) and --target
/// (nu) at the plan's cell levels.
inline SimpleTransfunction load_phi(const RunConfig& c, const std::optional<Box>& box) {
  if (!c.transfunction.empty() && !c.plan.empty()) throw Error(ErrorKind::InvalidInput, "give either --transfunction or --plan, not both");
  if (!c.transfunction.empty()) return io::load_transfunction(c.transfunction);
  if (c.plan.empty()) throw Error(ErrorKind::InvalidInput, c.command + " needs --transfunction or --plan");
  if (!box) throw Error(ErrorKind::InvalidInput, "--plan needs --box");
  if (c.input.empty() || c.target.empty()) throw Error(ErrorKind::InvalidInput, "--plan needs --input (mu) and --target (nu)");
  const DiscretePlan plan = io::load_plan(c.plan);
  const DiscreteMeasure mu = io::load_measure(c.input), nu = io::load_measure(c.target);
  require_in_box(mu, *box, "--input");
  require_in_box(nu, *box, "--target");
  const Covering cov = build_covering(*box, {plan.n_x(), plan.n_y()});
  return plan_to_transfunction(plan, mu, nu, CellPartition(cov, plan.n_x()), CellPartition(cov, plan.n_y()));
}

inline std::optional<Box> optional_box(const RunConfig& c) {
  if (c.box.empty()) return std::nullopt;
  return parse_box(c.box);
}

inline Output markov(const RunConfig& c) {
  const auto box = optional_box(c);
  const SimpleTransfunction phi = load_phi(c, box);
  if (c.input.empty()) throw Error(ErrorKind::InvalidInput, "markov-check needs --input (the basis measure)");
  const DiscreteMeasure mu = io::load_measure(c.input);
  require_same_dimension(mu.dimension(), phi.input_dimension(), "--input vs transfunction");
  if (!mu.is_positive()) throw Error(ErrorKind::InvalidInput, "--input must be a positive measure");
  std::vector<DiscreteMeasure> basis;
  for (const auto& a : mu.atoms()) basis.push_back(DiscreteMeasure::dirac(a.point, a.weight));
  const MarkovReport rep = markov_check(phi, basis, c.seed, std::min(c.tol, 1e-10));
  Output o;
  o.report = Json{{"command", c.command}, {"basis", basis.size()}, {"markov", io::to_json(rep)}, {"passed", rep.passed()}};
  o.tables.emplace_back("residuals.csv", io::residual_csv(rep));
  o.status = rep.passed() ? kOk : kCheckFailed;
  return o;
}

inline Output approx_plan(const RunConfig& c) {
  const Box box = parse_box(c.box);
  const SimpleTransfunction phi = load_phi(c, box);
  if (c.input.empty()) throw Error(ErrorKind::InvalidInput, "approx-plan needs --input (mu)");
  const DiscreteMeasure mu = io::load_measure(c.input);
  require_in_box(mu, box, "--input");
  require_same_dimension(phi.input_dimension(), phi.output_dimension(), "approx-plan transfunction");
  const Covering cov = build_covering(box, c.levels);

  Rng rng(c.seed);
  const auto xs = mixed_battery(box, c.fields, rng);
  const auto ys = mixed_battery(box, c.fields, rng);
  std::vector<PairField> battery;
  const CostFunction cost = CostFunction::power_distance(c.alpha, c.power);
  battery.emplace_back(cost.describe(), [cost](const Point& x, const Point& y) { return cost(x, y); });
  for (std::size_t k = 0; k < c.fields; ++k) battery.push_back(PairField::product(xs[k], ys[k]));

  Output o;
  Json levels = Json::array();
  io::CsvTable csv({"level", "field", "measured", "beta_max", "kappa_mass", "bound", "weighted", "within"});
  bool ok = true;
  try {
    for (int n : c.levels) {
      const CellPartition cells(cov, n);
      const auto approx = simple_markov_approx(phi, mu, cells, cells, std::span<const PairField>(battery), c.seed);
      const double mass = approx.kappa.total();
      const bool marg = approx.marginal_residual <= 1e-12 * std::max(1.0, mass);
      const bool proj = approx.projection_residual <= c.tol * std::max(1.0, mass);
      bool osc = true;
      Json oscs = Json::array();
      for (const auto& r : approx.oscillations) {
        osc = osc && r.within();
        oscs.push_back(Json{{"field", r.field}, {"measured", r.measured}, {"beta_max", r.beta_max}, {"bound", r.bound()},
                            {"weighted", r.weighted}, {"within", r.within()}});
        csv.row({std::to_string(n), r.field, io::csv_number(r.measured), io::csv_number(r.beta_max), io::csv_number(r.kappa_mass),
                 io::csv_number(r.bound()), io::csv_number(r.weighted), r.within() ? "true" : "false"});
      }
      ok = ok && marg && proj && osc;
      levels.push_back(Json{{"level", n},
                            {"kappa_n", io::to_json(approx.kappa_n)},
                            {"m_n", io::to_json(approx.m_n.entries())},
                            {"marginal_residual", approx.marginal_residual},
                            {"projection_residual", approx.projection_residual},
                            {"beta_max", approx.beta_max()},
                            {"max_gap", approx.max_gap()},
                            {"oscillations", oscs},
                            {"passed", marg && proj && osc}});
    }
  } catch (const MarkovCheckError& e) {
    o.report = Json{{"command", c.command}, {"seed", c.seed}, {"error", "check_failed"}, {"message", e.what()},
                    {"markov", io::to_json(e.report())}, {"passed", false}};
    o.tables.emplace_back("residuals.csv", io::residual_csv(e.report()));
    o.status = kCheckFailed;
    return o;
  }
  o.tables.emplace_back("oscillations.csv", std::move(csv));
  o.report = Json{{"command", c.command}, {"seed", c.seed}, {"cost", cost.describe()}, {"levels", levels}, {"passed", ok}};
  o.status = ok ? kOk : kCheckFailed;
  return o;
}

inline Output adjoint(const RunConfig& c) {
  const auto box = optional_box(c);
  const SimpleTransfunction phi = load_phi(c, box);
  if (!box) throw Error(ErrorKind::InvalidInput, "adjoint-check needs --box for its random batteries");
  require_same_dimension(phi.input_dimension(), box->dimension(), "--box vs transfunction");
  Rng rng(c.seed);
  const auto fields = mixed_battery(*box, c.fields, rng);
  const auto measures = signed_battery(*box, c.measures, rng);
  const PairingReport cont = pairing_residual(phi, adjoint_of_simple(phi), std::span<const ScalarField>(fields),
                                              std::span<const DiscreteMeasure>(measures));
  Output o;
  bool ok = cont.max_residual <= c.tol && cont.norm_gap() <= c.tol;
  Json j = io::to_json(cont);
  j["passed"] = ok;
  o.report = Json{{"command", c.command}, {"seed", c.seed}, {"tolerance", c.tol}, {"continuous", j}};
  o.tables.emplace_back("residuals_continuous.csv", io::residual_csv(cont));

  if (!c.input.empty()) {
    // measurable setting on cell-step densities at the first level
    const DiscreteMeasure mu = io::load_measure(c.input);
    require_in_box(mu, *box, "--input");
    const int n = c.levels.front();
    const Covering cov = build_covering(*box, {n});
    const CellPartition cells(cov, n);
    const DiscreteMeasure nu = c.target.empty() ? phi(mu) : io::load_measure(c.target);
    require_in_box(nu, *box, "--target");
    const AdjointOperator s = measurable_adjoint(phi, mu, nu, cells, cells);
    std::vector<ScalarField> steps;
    for (std::size_t k = 0; k < c.fields; ++k) {
      std::vector<double> values;
      std::vector<double> per_cell(cells.size());
      for (auto& v : per_cell) v = rng.uniform(-1.0, 1.0);
      for (const auto& a : nu.atoms()) values.push_back(per_cell[cells.index_or_throw(a.point)]);
      steps.push_back(ScalarField::lookup(nu.support(), values, "step" + std::to_string(k)));
    }
    std::vector<DiscreteMeasure> lambdas;
    for (std::size_t k = 0; k < c.measures; ++k) {
      std::vector<double> per_cell(cells.size());
      for (auto& v : per_cell) v = rng.uniform(-1.0, 1.0);
      Density f;
      for (const auto& a : mu.atoms()) f.push_back(per_cell[cells.index_or_throw(a.point)]);
      lambdas.push_back(to_measure(f, mu));
    }
    const PairingReport meas = pairing_residual(phi, s, std::span<const ScalarField>(steps), std::span<const DiscreteMeasure>(lambdas), false);
    const bool mok = meas.max_residual <= c.tol;
    Json m = io::to_json(meas);
    m["level"] = n;
    m["passed"] = mok;
    o.report["measurable"] = m;
    o.tables.emplace_back("residuals_measurable.csv", io::residual_csv(meas));
    ok = ok && mok;
  }
  o.report["passed"] = ok;
  o.status = ok ? kOk : kCheckFailed;
  return o;
}

}  // namespace detail

/// Machine-readable diagnostic for a failed run.
inline std::string diagnostic(const std::string& kind, const std::string& message) {
  return io::Json{{"error", kind}, {"message", message}}.dump() + "\n";
}

/// Runs one subcommand. The report goes to `out` (or <dir>/report.json with
/// CSV tables beside it); diagnostics go to `err` as one JSON line.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    detail::Output o;
    if (config.command == "discretize") o = detail::discretize(config);
    else if (config.command == "transport") o = detail::transport(config);
    else if (config.command == "approx-plan") o = detail::approx_plan(config);
    else if (config.command == "markov-check") o = detail::markov(config);
    else o = detail::adjoint(config);

    const std::string text = o.report.dump(2) + "\n";
    if (config.out.empty()) {
      out << text;
    } else {
      std::filesystem::create_directories(config.out);
      const std::filesystem::path dir(config.out);
      io::write_file((dir / "report.json").string(), text);
      for (const auto& [name, table] : o.tables) io::write_file((dir / name).string(), table.str());
    }
    if (o.status != kOk) err << diagnostic("check_failed", config.command + ": numerical check failed; see report");
    return o.status;
  } catch (const Error& e) {
    err << diagnostic(to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::CheckFailed ? kCheckFailed : kInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    err << diagnostic("invalid_input", e.what());
    return kInvalid;
  }
}

}  // namespace tfn::cli
