#include "quadratura/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "quadratura/errors.hpp"

namespace quadratura {

namespace {

nlohmann::ordered_json tol_object(const ToleranceConfig& tol) {
  nlohmann::ordered_json j;
  j["ode_tol"] = tol.ode_tol;
  j["diff_step_scale"] = tol.diff_step_scale;
  j["constancy_tol"] = tol.constancy_tol;
  j["rank_threshold"] = tol.rank_threshold;
  j["equiv_tol"] = tol.equiv_tol;
  j["sample_count"] = tol.sample_count;
  j["seed"] = tol.seed;
  return j;
}

}  // namespace

std::string tolerances_json(const ToleranceConfig& tol) { return tol_object(tol).dump(); }

std::string trace_text(const ReductionTrace& trace) {
  std::ostringstream os;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    os << "step " << i + 1 << ": " << s.rule << "\n";
    os << "  quadratures: " << s.count_before << " -> " << s.count_after << "\n";
    for (const auto& [label, text] : s.objects) os << "  " << label << " = " << text << "\n";
    for (const auto& [label, value] : s.residuals)
      os << "  residual " << label << " = " << format_number(value) << "\n";
    for (const auto& note : s.notes) os << "  note: " << note << "\n";
    os << "\n";
  }
  return os.str();
}

std::string trace_jsonl(const ReductionTrace& trace, const ToleranceConfig& tol) {
  std::ostringstream os;
  nlohmann::ordered_json header;
  header["kind"] = "header";
  header["seed"] = tol.seed;
  header["tolerances"] = tol_object(tol);
  os << header.dump() << "\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    nlohmann::ordered_json j;
    j["kind"] = "step";
    j["index"] = i + 1;
    j["rule"] = s.rule;
    j["count_before"] = s.count_before;
    j["count_after"] = s.count_after;
    nlohmann::ordered_json objects = nlohmann::ordered_json::object();
    for (const auto& [label, text] : s.objects) objects[label] = text;
    j["objects"] = objects;
    nlohmann::ordered_json residuals = nlohmann::ordered_json::object();
    for (const auto& [label, value] : s.residuals) residuals[label] = value;
    j["residuals"] = residuals;
    j["notes"] = s.notes;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string normal_form_text(const NormalForm& nf) {
  std::ostringstream os;
  os << "x0 = " << format_number(nf.x0) << "\n";
  os << "interval = " << format_number(nf.interval.lo) << ", " << format_number(nf.interval.hi) << "\n";
  os << "p = " << nf.p.str() << "\n";
  os << "q = " << nf.q.str() << "\n";
  os << "theta_hat = " << nf.theta_hat.str() << "\n";
  return os.str();
}

std::string equivalence_text(const EquivalenceReport& report, const ToleranceConfig& tol) {
  std::ostringstream os;
  os << "equivalent = " << (report.equivalent ? "yes" : "no") << "\n";
  os << "max_gap = " << format_number(report.max_gap) << "\n";
  os << "gap_forward = " << format_number(report.gap_forward) << "\n";
  os << "gap_backward = " << format_number(report.gap_backward) << "\n";
  os << "equiv_tol = " << format_number(tol.equiv_tol) << "\n";
  os << "seed = " << tol.seed << "\n";
  if (!report.diagnostic.empty()) os << "diagnostic = " << report.diagnostic << "\n";
  for (const auto& p : report.pairs) {
    os << (p.forward ? "forward" : "backward") << " [";
    for (std::size_t i = 0; i < p.source.size(); ++i) os << (i ? ", " : "") << format_number(p.source[i]);
    os << "] -> [";
    for (std::size_t i = 0; i < p.matched.size(); ++i) os << (i ? ", " : "") << format_number(p.matched[i]);
    os << "] gap " << format_number(p.gap) << (p.attained ? "" : " (not attained)") << "\n";
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }
}

}  // namespace quadratura
