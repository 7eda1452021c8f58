#pragma once

#include <string>

#include "quadratura/family.hpp"
#include "quadratura/reduction.hpp"
#include "quadratura/tolerance.hpp"

namespace quadratura {

/// One block per step: rule, quadrature counts, extracted objects in DSL
/// text, residuals, notes.
std::string trace_text(const ReductionTrace& trace);
/// One JSON object per line: a header with the seed and tolerances, then
/// one line per step.
std::string trace_jsonl(const ReductionTrace& trace, const ToleranceConfig& tol);

std::string normal_form_text(const NormalForm& nf);
std::string equivalence_text(const EquivalenceReport& report, const ToleranceConfig& tol);

/// Tolerances as a JSON object string (stable key order).
std::string tolerances_json(const ToleranceConfig& tol);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace quadratura
