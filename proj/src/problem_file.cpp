#include "quadratura/problem_file.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "quadratura/parse.hpp"

namespace quadratura {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  std::size_t line;
};

struct Section {
  std::string kind;
  std::string name;
  std::size_t line;
  std::map<std::string, Entry> entries;
};

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ProblemError("line " + std::to_string(line) + ": " + msg);
}

double number(const Entry& e, const std::string& key) {
  double v = 0.0;
  const std::string& s = e.value;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(e.line, "'" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

std::vector<double> numbers(const Entry& e, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number({trim(item), e.line}, key));
  return out;
}

Interval interval(const Entry& e, const std::string& key) {
  const auto v = numbers(e, key);
  if (v.size() != 2 || !(v[0] < v[1])) fail(e.line, "'" + key + "' expects 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

Expr expression(const Entry& e, const std::string& key) {
  try {
    return parse_expr(e.value);
  } catch (const ParseError& err) {
    fail(e.line, "in '" + key + "': " + err.what());
  }
}

class Reader {
 public:
  explicit Reader(const Section& s) : s_(s) {}

  const Entry* find(const std::string& key) {
    used_.insert(key);
    auto it = s_.entries.find(key);
    return it == s_.entries.end() ? nullptr : &it->second;
  }
  const Entry& need(const std::string& key) {
    const Entry* e = find(key);
    if (!e) fail(s_.line, "section [" + s_.kind + " " + s_.name + "] is missing '" + key + "'");
    return *e;
  }
  void finish() const {
    for (const auto& [k, e] : s_.entries) {
      if (!used_.contains(k)) fail(e.line, "unknown key '" + k + "' in [" + s_.kind + "]");
    }
  }

 private:
  const Section& s_;
  std::set<std::string> used_;
};

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      std::istringstream hs(line.substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      hs >> s.kind >> s.name;
      std::string extra;
      if (hs >> extra) fail(line_no, "section header has too many words");
      out.push_back(std::move(s));
      continue;
    }
    if (out.empty()) fail(line_no, "key outside of any section");
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (!out.back().entries.emplace(key, Entry{value, line_no}).second) {
      fail(line_no, "duplicate key '" + key + "'");
    }
  }
  return out;
}

std::vector<double> optional_breakpoints(Reader& r) {
  const Entry* e = r.find("breakpoints");
  return e ? numbers(*e, "breakpoints") : std::vector<double>{};
}

}  // namespace

ProblemFile parse_problem(std::string_view text) {
  const auto sections = split_sections(text);
  ProblemFile pf;
  std::set<std::string> names;
  std::vector<const Section*> integrals;

  for (const auto& s : sections) {
    const bool named = s.kind == "system" || s.kind == "integral" || s.kind == "linear" ||
                       s.kind == "secondorder";
    if (!named && s.kind != "tolerances" && s.kind != "box") {
      fail(s.line, "unknown section type '" + s.kind + "'");
    }
    if (named) {
      if (s.name.empty()) fail(s.line, "[" + s.kind + "] needs a name");
      if (!names.insert(s.kind + " " + s.name).second)
        fail(s.line, "duplicate section [" + s.kind + " " + s.name + "]");
    } else if (!s.name.empty()) {
      fail(s.line, "[" + s.kind + "] takes no name");
    }
    Reader r(s);
    try {
      if (s.kind == "system") {
        std::vector<Expr> phis;
        for (std::size_t k = 1;; ++k) {
          const Entry* e = r.find("phi" + std::to_string(k));
          if (!e) break;
          phis.push_back(expression(*e, "phi" + std::to_string(k)));
        }
        if (phis.empty()) fail(s.line, "system '" + s.name + "' has no integrands (phi1, phi2, ...)");
        const double x0 = number(r.need("x0"), "x0");
        const Interval I = interval(r.need("interval"), "interval");
        auto bps = optional_breakpoints(r);
        r.finish();
        pf.systems.emplace(s.name, QuadratureSystem(x0, I, std::move(phis), std::move(bps)));
      } else if (s.kind == "integral") {
        r.need("system");
        r.need("F");
        r.find("theta");
        r.finish();
        integrals.push_back(&s);
      } else if (s.kind == "linear") {
        LinearProblem lp;
        lp.eq.p = expression(r.need("p"), "p");
        lp.eq.q = expression(r.need("q"), "q");
        lp.eq.x0 = number(r.need("x0"), "x0");
        lp.eq.interval = interval(r.need("interval"), "interval");
        if (const Entry* e = r.find("y0")) lp.y0 = number(*e, "y0");
        lp.eq.breakpoints = optional_breakpoints(r);
        r.finish();
        if (!lp.eq.interval.contains(lp.eq.x0)) fail(s.line, "x0 lies outside the interval");
        pf.linears.emplace(s.name, std::move(lp));
      } else if (s.kind == "secondorder") {
        SecondOrderProblem sp;
        sp.eq.Q = expression(r.need("Q"), "Q");
        sp.eq.x0 = number(r.need("x0"), "x0");
        sp.eq.interval = interval(r.need("interval"), "interval");
        if (const Entry* e = r.find("u0")) sp.u0 = number(*e, "u0");
        if (const Entry* e = r.find("du0")) sp.du0 = number(*e, "du0");
        sp.eq.breakpoints = optional_breakpoints(r);
        r.finish();
        if (!sp.eq.interval.contains(sp.eq.x0)) fail(s.line, "x0 lies outside the interval");
        if (sp.u0 == 0.0 && sp.du0 == 0.0) fail(s.line, "u0 and du0 must not both vanish");
        pf.secondorders.emplace(s.name, std::move(sp));
      } else if (s.kind == "tolerances") {
        if (pf.has_tolerances) fail(s.line, "more than one [tolerances] section");
        pf.has_tolerances = true;
        ToleranceConfig& t = pf.tolerances;
        if (const Entry* e = r.find("ode_tol")) t.ode_tol = number(*e, "ode_tol");
        if (const Entry* e = r.find("diff_step_scale")) t.diff_step_scale = number(*e, "diff_step_scale");
        if (const Entry* e = r.find("constancy_tol")) t.constancy_tol = number(*e, "constancy_tol");
        if (const Entry* e = r.find("rank_threshold")) t.rank_threshold = number(*e, "rank_threshold");
        if (const Entry* e = r.find("equiv_tol")) t.equiv_tol = number(*e, "equiv_tol");
        if (const Entry* e = r.find("sample_count")) {
          const double v = number(*e, "sample_count");
          if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
            fail(e->line, "sample_count must be a positive integer");
          t.sample_count = static_cast<std::size_t>(v);
        }
        if (const Entry* e = r.find("seed")) {
          std::uint64_t seed = 0;
          auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), seed);
          if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size())
            fail(e->line, "seed must be a non-negative integer");
          t.seed = seed;
          pf.has_seed = true;
        }
        r.finish();
        try {
          t.validate();
        } catch (const PreconditionError& err) {
          fail(s.line, err.what());
        }
      } else if (s.kind == "box") {
        const double lo = number(r.need("lo"), "lo");
        const double hi = number(r.need("hi"), "hi");
        r.finish();
        if (!(lo <= 0.0 && 0.0 <= hi && lo < hi)) fail(s.line, "box must satisfy lo <= 0 <= hi, lo < hi");
        pf.box = Interval{lo, hi};
      }
    } catch (const PreconditionError& err) {
      fail(s.line, err.what());
    }
  }

  for (const Section* s : integrals) {
    const Entry& sys_ref = s->entries.at("system");
    auto it = pf.systems.find(sys_ref.value);
    if (it == pf.systems.end()) fail(sys_ref.line, "unknown system '" + sys_ref.value + "'");
    const Entry& F = s->entries.at("F");
    auto th = s->entries.find("theta");
    QuadratureIntegral q{it->second, expression(F, "F"),
                         th == s->entries.end() ? var("w") : expression(th->second, "theta")};
    try {
      q.validate();
    } catch (const PreconditionError& err) {
      fail(s->line, err.what());
    }
    pf.integrals.emplace(s->name, std::move(q));
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemError("cannot open problem file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace quadratura
