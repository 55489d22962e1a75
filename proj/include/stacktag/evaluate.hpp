#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stacktag/corpus.hpp"

namespace stacktag {

struct Scores {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  // Percentages, 0 when the denominator is 0.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  Scores micro;
  std::map<std::string, Scores> per_label;
};

enum class MatchMode { Strict, Overlap };

// Strict mode counts a prediction as correct only on exact
// (doc_id, start, end, label) equality. Overlap mode is a diagnostic that
// accepts any same-label, same-document overlap, matching greedily.
EvalReport evaluate(const std::vector<EntityMention>& gold,
                    const std::vector<EntityMention>& pred,
                    MatchMode mode = MatchMode::Strict);

// Text-bound "T" lines of a brat .ann as mentions of `doc_id`; other line
// types are skipped. Discontinuous spans keep their outer bounds.
std::vector<EntityMention> read_ann_mentions(std::string_view content, const std::string& doc_id);

Scores score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Half-up rounding to two decimals, e.g. 66.666 -> "66.67".
std::string format_percent(double value);

// "F1 / P / R", e.g. "90.52 / 90.79 / 90.30".
std::string score_triple(const Scores& s);

std::string report_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports);

// key=value lines: tp, fp, fn, precision, recall, f1, then label.<L>.<key>.
std::string report_summary(const EvalReport& report);

}  // namespace stacktag
