#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadratura/errors.hpp"
#include "quadratura/integral.hpp"
#include "quadratura/ode_lab.hpp"
#include "quadratura/parse.hpp"
#include "quadratura/problem_file.hpp"
#include "quadratura/reduction.hpp"
#include "quadratura/report.hpp"

namespace fs = std::filesystem;
using namespace quadratura;
using json = nlohmann::ordered_json;

namespace {

constexpr int kPass = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;

struct GlobalOptions {
  std::optional<double> tol_ode;
  std::optional<double> tol_constancy;
  std::optional<std::string> box;
  std::optional<std::uint64_t> seed;
  std::size_t grid = 33;
  std::string out = ".";
};

class UsageError : public Error {
 public:
  using Error::Error;
};

std::uint64_t parse_seed(const std::string& text, const char* origin) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw UsageError(std::string(origin) + ": seed must be a non-negative integer, got '" + text + "'");
  return v;
}

Interval parse_box(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--box expects lo,hi");
  double lo = 0.0, hi = 0.0;
  const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
  auto ra = std::from_chars(a.data(), a.data() + a.size(), lo);
  auto rb = std::from_chars(b.data(), b.data() + b.size(), hi);
  if (ra.ec != std::errc() || ra.ptr != a.data() + a.size() || rb.ec != std::errc() ||
      rb.ptr != b.data() + b.size())
    throw UsageError("--box expects two numbers lo,hi");
  if (!(lo <= 0.0 && 0.0 <= hi && lo < hi)) throw UsageError("--box must satisfy lo <= 0 <= hi, lo < hi");
  return {lo, hi};
}

struct Context {
  ProblemFile pf;
  ToleranceConfig tol;
  Interval box{-2.0, 2.0};
  std::size_t grid = 33;
  fs::path out;
};

Context make_context(const std::string& file, const GlobalOptions& g) {
  Context ctx;
  ctx.pf = load_problem(file);
  ctx.tol = ctx.pf.tolerances;
  if (g.seed) {
    ctx.tol.seed = *g.seed;
  } else if (!ctx.pf.has_seed) {
    if (const char* env = std::getenv("QUADRATURA_SEED"); env && *env)
      ctx.tol.seed = parse_seed(env, "QUADRATURA_SEED");
  }
  if (g.tol_ode) ctx.tol.ode_tol = *g.tol_ode;
  if (g.tol_constancy) ctx.tol.constancy_tol = *g.tol_constancy;
  try {
    ctx.tol.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  if (ctx.pf.box) ctx.box = *ctx.pf.box;
  if (g.box) ctx.box = parse_box(*g.box);
  if (g.grid < 2) throw UsageError("--grid must be at least 2");
  ctx.grid = g.grid;
  ctx.out = g.out;
  fs::create_directories(ctx.out);
  return ctx;
}

template <class Map>
const auto& lookup(const Map& m, const std::string& name, const char* kind) {
  auto it = m.find(name);
  if (it == m.end()) throw UsageError("no [" + std::string(kind) + " " + name + "] section");
  return it->second;
}

std::string num(double v) { return format_number(v); }

json header_line(const char* command, const Context& ctx) {
  json h;
  h["kind"] = "header";
  h["command"] = command;
  h["seed"] = ctx.tol.seed;
  h["tolerances"] = json::parse(tolerances_json(ctx.tol));
  h["box"] = {ctx.box.lo, ctx.box.hi};
  h["grid"] = ctx.grid;
  return h;
}

void write(const Context& ctx, const std::string& name, const std::string& content) {
  write_file_atomic((ctx.out / name).string(), content);
}

// ------------------------------------------------------------------ check

struct CheckLine {
  std::string name;
  bool pass;
  double value;
  double threshold;
  std::string relation;  // how value is compared to threshold
  std::string detail;
};

int cmd_check(const Context& ctx, const std::string& target) {
  const QuadratureIntegral& q = lookup(ctx.pf.integrals, target, "integral");
  const std::size_t n = q.size();
  const ToleranceConfig& tol = ctx.tol;
  std::vector<CheckLine> lines;

  const auto ind = check_independence(q.sys, tol.sample_count, tol);
  {
    std::ostringstream d;
    d << "witnesses tried " << ind.witnesses_tried << ", matrix norm " << num(ind.matrix_norm);
    lines.push_back({"independence", ind.independent, ind.smallest_singular_value,
                     tol.rank_threshold * std::max(1.0, ind.matrix_norm), ">=", d.str()});
  }

  const WorkingBox wbox = WorkingBox::uniform(n, ctx.box.lo, ctx.box.hi);
  const auto adm = check_admissible(q.F, n, wbox, tol);
  lines.push_back({"admissible-F", adm.admissible, adm.min_abs_partial, kNonvanishingFloor, ">=",
                   adm.diagnostic});

  const auto xs = chebyshev_points(q.sys.interval(), ctx.grid);
  const auto th = check_theta(q.theta, xs, ctx.box, tol);
  lines.push_back({"admissible-theta", th.admissible, th.min_abs_partial, kNonvanishingFloor, ">=",
                   th.diagnostic});

  if (ind.independent && adm.admissible && th.admissible) {
    auto fam = std::make_shared<IntegralFamily>(q);
    const auto cs = wbox.sample(tol.sample_count, tol.seed);
    const auto eff = effective_parameter_test(fam, xs, cs, tol);
    std::ostringstream d;
    for (const auto& [ij, r] : eff.pair_residuals)
      d << "(" << ij.first + 1 << "," << ij.second + 1 << ")=" << num(r) << " ";
    lines.push_back({"fundamental-equality", eff.max_residual < tol.constancy_tol, eff.max_residual,
                     tol.constancy_tol, "<", d.str()});
    lines.push_back({"effective-parameter", eff.passed, eff.reconstruction_gap, tol.equiv_tol, "<",
                     eff.diagnostic});
  } else {
    lines.push_back({"fundamental-equality", false, NAN, tol.constancy_tol, "<",
                     "skipped: prerequisite checks failed"});
    lines.push_back({"effective-parameter", false, NAN, tol.equiv_tol, "<",
                     "skipped: prerequisite checks failed"});
  }

  bool all = true;
  std::ostringstream txt, jl;
  txt << "check " << target << " (seed " << tol.seed << ")\n";
  jl << header_line("check", ctx).dump() << "\n";
  for (const auto& l : lines) {
    all = all && l.pass;
    txt << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << num(l.value) << " " << l.relation << " "
        << num(l.threshold);
    if (!l.detail.empty()) txt << "  [" << l.detail << "]";
    txt << "\n";
    json j;
    j["kind"] = "check";
    j["name"] = l.name;
    j["pass"] = l.pass;
    j["value"] = std::isfinite(l.value) ? json(l.value) : json(nullptr);
    j["relation"] = l.relation;
    j["threshold"] = l.threshold;
    j["detail"] = l.detail;
    jl << j.dump() << "\n";
  }
  txt << (all ? "result: pass\n" : "result: fail\n");
  write(ctx, "check.txt", txt.str());
  write(ctx, "check.jsonl", jl.str());
  std::cout << txt.str();
  return all ? kPass : kNegative;
}

// ------------------------------------------------------------------ reduce

ReductionOptions reduction_options(const Context& ctx) {
  ReductionOptions o;
  o.tol = ctx.tol;
  o.box = ctx.box;
  o.grid_points = ctx.grid;
  return o;
}

int cmd_reduce(const Context& ctx, const std::string& target) {
  const QuadratureIntegral& q = lookup(ctx.pf.integrals, target, "integral");
  try {
    const auto r = reduce_to_normal_form(q, reduction_options(ctx));
    write(ctx, "normalform.txt", normal_form_text(r.nf));
    write(ctx, "trace.txt", trace_text(r.trace));
    write(ctx, "trace.jsonl", trace_jsonl(r.trace, ctx.tol));
    write(ctx, "equivalence.txt", equivalence_text(r.equivalence, ctx.tol));
    std::cout << normal_form_text(r.nf) << "rules:";
    for (const auto& rule : r.trace.rules()) std::cout << " " << rule;
    std::cout << "\nequivalence gap " << num(r.equivalence.max_gap) << "\n";
    return r.equivalence.equivalent ? kPass : kNegative;
  } catch (const ReductionError& e) {
    write(ctx, "trace.txt", trace_text(e.trace()) + "error: " + e.what() + "\n");
    write(ctx, "trace.jsonl", trace_jsonl(e.trace(), ctx.tol));
    std::cerr << "reduction failed: " << e.what() << "\n";
    return kNegative;
  }
}

// ------------------------------------------------------------------ prufer

int cmd_prufer(const Context& ctx, const std::string& target) {
  const SecondOrderProblem& sp = lookup(ctx.pf.secondorders, target, "secondorder");
  const SecondOrderEq& eq = sp.eq;
  const ToleranceConfig& tol = ctx.tol;

  std::vector<double> xs(ctx.grid);
  for (std::size_t i = 0; i < ctx.grid; ++i)
    xs[i] = eq.interval.lo + eq.interval.length() * static_cast<double>(i) / static_cast<double>(ctx.grid - 1);
  const auto traj = prufer_forward(eq, sp.u0, sp.du0, xs, tol);

  std::ostringstream csv;
  csv << "x,theta,logrho,u,du\n";
  for (std::size_t i = 0; i < traj.x.size(); ++i)
    csv << num(traj.x[i]) << "," << num(traj.theta[i]) << "," << num(traj.logrho[i]) << ","
        << num(traj.u[i]) << "," << num(traj.du[i]) << "\n";
  write(ctx, "trajectory.csv", csv.str());

  const double h = 1e-3 * eq.interval.length();
  std::vector<double> interior;
  for (double x : xs)
    if (x - 2 * h >= eq.interval.lo && x + 2 * h <= eq.interval.hi) interior.push_back(x);
  const double recon = prufer_reconstruction_residual(eq, sp.u0, sp.du0, interior, h, tol);

  std::ostringstream txt;
  json jl_head = header_line("prufer", ctx);
  json j;
  txt << "prufer " << target << " (seed " << tol.seed << ")\n";
  txt << "Q = " << eq.Q.str() << "\n";
  txt << "reconstruction residual |u''+Qu| = " << num(recon) << "\n";
  j["kind"] = "report";
  j["Q"] = eq.Q.str();
  j["reconstruction_residual"] = recon;

  bool pass = false;
  if (!eq.Q.depends_on("x")) {
    const double Q = eval_expr(eq.Q, {}, tol);
    const auto w = restricted_integrability_witness(Q, traj, tol);
    pass = !w.singular && w.max_deviation < tol.constancy_tol;
    txt << "branch: constant Q = " << num(Q) << "\n";
    txt << "first integral: " << w.first_integral.str() << "\n";
    txt << "witness deviation = " << num(w.max_deviation) << " (threshold " << num(tol.constancy_tol)
        << ")\n";
    if (w.closed_form_deviation) txt << "closed-form deviation = " << num(*w.closed_form_deviation) << "\n";
    if (!w.diagnostic.empty()) txt << "note: " << w.diagnostic << "\n";
    j["branch"] = "witness";
    j["Q_value"] = Q;
    j["singular"] = w.singular;
    j["witness_deviation"] = w.max_deviation;
    j["closed_form_deviation"] = w.closed_form_deviation ? json(*w.closed_form_deviation) : json(nullptr);
  } else {
    const double x1 = eq.interval.lo, x2 = eq.interval.hi;
    const std::vector<std::pair<double, double>> pairs{{std::numbers::pi / 4, std::numbers::pi / 3}};
    std::vector<double> ys;
    for (int k = 1; k <= 8; ++k) ys.push_back(std::numbers::pi * k / 9.0);
    const auto ob = nonconstancy_obstruction(eq, x1, x2, pairs, ys, var("y"), tol);
    pass = ob.derivable && ob.max_abs_det >= 0.5;
    txt << "branch: non-constant Q, Q(" << num(x1) << ") = " << num(ob.Q1) << ", Q(" << num(x2)
        << ") = " << num(ob.Q2) << "\n";
    txt << "obstruction determinant at (pi/4, pi/3) = " << num(ob.determinants.front()) << "\n";
    if (ob.pointwise_residual) txt << "residual of the first identity with phi = y: " << num(*ob.pointwise_residual) << "\n";
    if (ob.derivative_residual) txt << "residual of the second identity with phi = y: " << num(*ob.derivative_residual) << "\n";
    if (!ob.diagnostic.empty()) txt << "note: " << ob.diagnostic << "\n";
    j["branch"] = "obstruction";
    j["derivable"] = ob.derivable;
    j["Q1"] = ob.Q1;
    j["Q2"] = ob.Q2;
    j["determinants"] = ob.determinants;
    j["pointwise_residual"] = ob.pointwise_residual ? json(*ob.pointwise_residual) : json(nullptr);
    j["derivative_residual"] = ob.derivative_residual ? json(*ob.derivative_residual) : json(nullptr);
  }
  j["pass"] = pass;
  txt << (pass ? "result: pass\n" : "result: fail\n");
  write(ctx, "report.txt", txt.str());
  write(ctx, "report.jsonl", jl_head.dump() + "\n" + j.dump() + "\n");
  std::cout << txt.str();
  return pass ? kPass : kNegative;
}

// ------------------------------------------------------------------ solve-linear

int cmd_solve_linear(const Context& ctx, const std::string& target) {
  const LinearProblem& lp = lookup(ctx.pf.linears, target, "linear");
  const auto xs = chebyshev_points(lp.eq.interval, ctx.grid);
  const auto traj = solve_linear_first_order(lp.eq, lp.y0, xs, ctx.tol);
  std::ostringstream csv;
  csv << "x,y\n";
  for (std::size_t i = 0; i < traj.x.size(); ++i) csv << num(traj.x[i]) << "," << num(traj.y[i]) << "\n";
  write(ctx, "solution.csv", csv.str());
  const bool pass = traj.max_residual < ctx.tol.constancy_tol;
  std::ostringstream txt;
  txt << "solve-linear " << target << "\n";
  txt << "closed form: y = " << linear_closed_form(lp.eq, cst(lp.y0)).str() << "\n";
  txt << "max residual |y'+py-q| = " << num(traj.max_residual) << " (threshold "
      << num(ctx.tol.constancy_tol) << ")\n";
  txt << (pass ? "result: pass\n" : "result: fail\n");
  json j;
  j["kind"] = "report";
  j["max_residual"] = traj.max_residual;
  j["threshold"] = ctx.tol.constancy_tol;
  j["pass"] = pass;
  write(ctx, "report.txt", txt.str());
  write(ctx, "report.jsonl", header_line("solve-linear", ctx).dump() + "\n" + j.dump() + "\n");
  std::cout << txt.str();
  return pass ? kPass : kNegative;
}

// ------------------------------------------------------------------ equiv

int cmd_equiv(const Context& ctx, const std::string& a_name, const std::string& b_name) {
  const QuadratureIntegral& a = lookup(ctx.pf.integrals, a_name, "integral");
  const QuadratureIntegral& b = lookup(ctx.pf.integrals, b_name, "integral");
  if (a.sys.x0() != b.sys.x0() || a.sys.interval().lo != b.sys.interval().lo ||
      a.sys.interval().hi != b.sys.interval().hi)
    throw UsageError("equiv needs both integrals on the same x0 and interval");
  IntegralFamily fa(a), fb(b);
  const auto xs = chebyshev_points(a.sys.interval(), ctx.grid);
  const auto sa = WorkingBox::uniform(a.size(), ctx.box.lo, ctx.box.hi).sample(ctx.tol.sample_count, ctx.tol.seed);
  const auto sb =
      WorkingBox::uniform(b.size(), ctx.box.lo, ctx.box.hi).sample(ctx.tol.sample_count, ctx.tol.seed + 1);
  const auto rep = check_equivalence(fa, fb, xs, sa, sb, ctx.tol);
  const std::string txt = equivalence_text(rep, ctx.tol);
  write(ctx, "equivalence.txt", txt);
  std::cout << txt;
  return rep.equivalent ? kPass : kNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis and reduction of integrals by quadratures"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--tol-ode", g.tol_ode, "ODE and quadrature tolerance");
  app.add_option("--tol-constancy", g.tol_constancy, "Tolerance for sampled constancy checks");
  app.add_option("--box", g.box, "Working box lo,hi for sampled constants");
  app.add_option("--seed", g.seed, "Sampling seed");
  app.add_option("--grid", g.grid, "Number of grid points")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::string file, target, target_b;
  auto add = [&](const char* name, const char* help, const char* kind) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("file", file, "Problem file")->required();
    sub->add_option("target", target, std::string("Name of the [") + kind + "] section")->required();
    return sub;
  };
  auto* check = add("check", "Independence, admissibility and one-parametricity checks", "integral");
  auto* reduce = add("reduce", "Reduce an integral to its two-quadrature normal form", "integral");
  auto* prufer = add("prufer", "Prufer transform, witness and obstruction report", "secondorder");
  auto* linear = add("solve-linear", "Solve a first-order linear equation", "linear");
  auto* equiv = add("equiv", "Compare two integral families", "integral");
  equiv->add_option("target_b", target_b, "Second [integral] section")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const Context ctx = make_context(file, g);
    if (check->parsed()) return cmd_check(ctx, target);
    if (reduce->parsed()) return cmd_reduce(ctx, target);
    if (prufer->parsed()) return cmd_prufer(ctx, target);
    if (linear->parsed()) return cmd_solve_linear(ctx, target);
    if (equiv->parsed()) return cmd_equiv(ctx, target, target_b);
  } catch (const ProblemError& e) {
    std::cerr << file << ": " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNegative;
  }
  return kUsage;
}
