#include "stacktag/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace stacktag {

namespace {

void check_unique(const std::vector<EntityMention>& mentions, const char* which) {
  std::set<EntityMention> seen;
  for (const auto& m : mentions) {
    if (!seen.insert(m).second) {
      throw Error(ErrorKind::DuplicateMention,
                  std::string(which) + " contains duplicate mention " + m.doc_id +
                      " [" + std::to_string(m.start) + "," + std::to_string(m.end) +
                      ") " + m.label);
    }
  }
}

}  // namespace

Scores score_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Scores s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = tp + fp == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

EvalReport evaluate(const std::vector<EntityMention>& gold,
                    const std::vector<EntityMention>& pred, MatchMode mode) {
  check_unique(gold, "gold");
  check_unique(pred, "pred");

  std::map<std::string, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const auto& m : gold) counts[m.label];
  for (const auto& m : pred) counts[m.label];

  if (mode == MatchMode::Strict) {
    const std::set<EntityMention> gold_set(gold.begin(), gold.end());
    const std::set<EntityMention> pred_set(pred.begin(), pred.end());
    for (const auto& m : pred_set) ++counts[m.label][gold_set.count(m) ? 0 : 1];
    for (const auto& m : gold_set) {
      if (!pred_set.count(m)) ++counts[m.label][2];
    }
  } else {
    std::vector<EntityMention> g(gold), p(pred);
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    std::vector<bool> used(g.size(), false);
    for (const auto& m : p) {
      bool hit = false;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (used[k] || g[k].doc_id != m.doc_id || g[k].label != m.label) continue;
        if (g[k].start < m.end && m.start < g[k].end) {
          used[k] = hit = true;
          break;
        }
      }
      ++counts[m.label][hit ? 0 : 1];
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!used[k]) ++counts[g[k].label][2];
    }
  }

  EvalReport report;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [label, c] : counts) {
    report.per_label[label] = score_from_counts(c[0], c[1], c[2]);
    tp += c[0];
    fp += c[1];
    fn += c[2];
  }
  report.micro = score_from_counts(tp, fp, fn);
  return report;
}

std::string format_percent(double value) {
  if (!std::isfinite(value)) value = 0.0;
  // Nudge by a relative epsilon so binary representations such as
  // 90.525 -> 90.52499999 still round half-up.
  const double scaled = value * 100.0;
  const double rounded =
      std::floor(scaled + 0.5 + 1e-9 * std::max(1.0, std::fabs(scaled)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rounded / 100.0);
  return buf;
}

std::string score_triple(const Scores& s) {
  return format_percent(s.f1) + " / " + format_percent(s.precision) + " / " +
         format_percent(s.recall);
}

std::string report_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
  std::size_t width = 5;
  for (const auto& [name, _] : reports) width = std::max(width, name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto lpad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::string out = pad("Model", width) + "  " + lpad("F1-Score", 8) + "  " +
                    lpad("Precision", 9) + "  " + lpad("Recall", 6) + "\n";
  for (const auto& [name, r] : reports) {
    out += pad(name, width) + "  " + lpad(format_percent(r.micro.f1), 8) + "  " +
           lpad(format_percent(r.micro.precision), 9) + "  " +
           lpad(format_percent(r.micro.recall), 6) + "\n";
  }
  return out;
}

std::string report_summary(const EvalReport& report) {
  std::string out;
  auto emit = [&out](const std::string& prefix, const Scores& s) {
    out += prefix + "tp=" + std::to_string(s.tp) + "\n";
    out += prefix + "fp=" + std::to_string(s.fp) + "\n";
    out += prefix + "fn=" + std::to_string(s.fn) + "\n";
    out += prefix + "precision=" + format_percent(s.precision) + "\n";
    out += prefix + "recall=" + format_percent(s.recall) + "\n";
    out += prefix + "f1=" + format_percent(s.f1) + "\n";
  };
  emit("", report.micro);
  for (const auto& [label, s] : report.per_label) emit("label." + label + ".", s);
  return out;
}

}  // namespace stacktag

namespace stacktag {

std::vector<EntityMention> read_ann_mentions(std::string_view content, const std::string& doc_id) {
  std::vector<EntityMention> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string line(content.substr(pos, eol - pos));
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != 'T') continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos) throw Error(ErrorKind::MalformedAnnotation, "bad ann line: " + line);
    const auto tab2 = line.find('\t', tab1 + 1);
    std::string spec = line.substr(tab1 + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab1 - 1);
    std::replace(spec.begin(), spec.end(), ';', ' ');
    std::istringstream in(spec);
    EntityMention m;
    m.doc_id = doc_id;
    std::vector<std::size_t> offs;
    std::size_t v = 0;
    in >> m.label;
    while (in >> v) offs.push_back(v);
    if (m.label.empty() || offs.size() < 2 || !in.eof()) {
      throw Error(ErrorKind::MalformedAnnotation, "bad ann line: " + line);
    }
    m.start = *std::min_element(offs.begin(), offs.end());
    m.end = *std::max_element(offs.begin(), offs.end());
    out.push_back(m);
  }
  return out;
}

}  // namespace stacktag
