#include "pdtkit/select.hpp"

#include <algorithm>
#include <cmath>

#include "pdtkit/errors.hpp"

namespace pdtkit {

PdtTable PdtTable::from_entries(const Matrix& m) {
  PdtTable t;
  t.k = m.rows();
  t.entries = m;
  t.status.assign(t.k * t.k, PdtStatus::Certified);
  t.validate();
  return t;
}

void PdtTable::validate() const {
  if (k < 1) throw ShapeError("pdt table must hold at least one model");
  if (entries.rows() != k || entries.cols() != k)
    throw ShapeError("pdt table matrix must be k x k");
  if (status.size() != k * k) throw ShapeError("pdt table status must be k x k");
  for (std::size_t i = 0; i < k; ++i) {
    if (entries(i, i) != 0.0) throw ShapeError("pdt table diagonal must be zero");
    for (std::size_t j = 0; j < k; ++j) {
      if (entries(i, j) < 0.0 || !std::isfinite(entries(i, j)))
        throw ShapeError("pdt table entries must be finite and non-negative");
      if (entries(i, j) != entries(j, i)) throw ShapeError("pdt table must be symmetric");
    }
  }
}

void SelectionConfig::validate() const {
  if (!(p > 0.0 && p < 100.0)) throw ConfigError("percentile must lie in (0, 100)");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (similarity_delta < 0.0) throw ConfigError("similarity delta must be non-negative");
  if (min_survivors < 2) throw ConfigError("min survivors must be at least 2");
}

double disagreement_score(const PdtTable& table, const std::vector<std::size_t>& subset,
                          std::size_t i) {
  if (subset.size() < 2) throw ShapeError("disagreement score needs at least two models");
  bool member = false;
  double sum = 0.0;
  for (std::size_t j : subset) {
    if (j >= table.k) throw ShapeError("subset index out of table range");
    if (j == i) {
      member = true;
      continue;
    }
    sum += table.at(i, j);
  }
  if (!member) throw ShapeError("scored model must belong to the subset");
  return sum / static_cast<double>(subset.size() - 1);
}

namespace {

// Positions sorted by score descending, equal scores by index descending,
// so "highest first" removal eats the higher index on ties.
std::vector<std::size_t> order_desc(const Vec& ds) {
  std::vector<std::size_t> ord(ds.size());
  for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
    if (ds[a] != ds[b]) return ds[a] > ds[b];
    return a > b;
  });
  return ord;
}

std::vector<std::size_t> percentile_set(const Vec& ds, double p) {
  std::size_t count = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(ds.size())));
  if (count < 1) count = 1;
  if (count > ds.size()) count = ds.size();
  std::vector<std::size_t> ord = order_desc(ds);
  ord.resize(count);
  return ord;
}

std::vector<std::size_t> max_gap_set(const Vec& ds, double* threshold_out) {
  std::vector<std::size_t> ord = order_desc(ds);
  double best_gap = 0.0;
  std::size_t best_pos = ord.size();
  for (std::size_t i = 0; i + 1 < ord.size(); ++i) {
    double gap = ds[ord[i]] - ds[ord[i + 1]];
    if (gap > best_gap) {
      best_gap = gap;
      best_pos = i;
    }
  }
  if (best_pos == ord.size()) {
    // All scores equal: degenerate table, drop the single highest index.
    if (threshold_out) *threshold_out = ds[ord[0]];
    return {ord[0]};
  }
  double threshold = ds[ord[best_pos]];  // upper score of the widest gap
  if (threshold_out) *threshold_out = threshold;
  std::vector<std::size_t> out;
  for (std::size_t i : ord)
    if (ds[i] >= threshold) out.push_back(i);
  return out;
}

}  // namespace

std::vector<std::size_t> filter_step(const Vec& ds, const SelectionConfig& cfg) {
  cfg.validate();
  if (ds.size() < 2) throw ShapeError("filtering needs at least two models");
  switch (cfg.criterion) {
    case Criterion::Percentile:
      return percentile_set(ds, cfg.p);
    case Criterion::Max:
      return max_gap_set(ds, nullptr);
    case Criterion::Combined: {
      std::vector<std::size_t> a = percentile_set(ds, cfg.p);
      std::vector<std::size_t> b = max_gap_set(ds, nullptr);
      return b.size() > a.size() ? b : a;
    }
  }
  throw ConfigError("unknown criterion");
}

SelectionReport run_selection(const PdtTable& table, const SelectionConfig& cfg) {
  table.validate();
  cfg.validate();
  if (table.k < 2) throw ShapeError("selection needs at least two models");

  SelectionReport report;
  std::vector<std::size_t> survivors(table.k);
  for (std::size_t i = 0; i < table.k; ++i) survivors[i] = i;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;
    rec.survivors = survivors;
    rec.ds.resize(survivors.size());
    for (std::size_t s = 0; s < survivors.size(); ++s)
      rec.ds[s] = disagreement_score(table, survivors, survivors[s]);

    double lo = *std::min_element(rec.ds.begin(), rec.ds.end());
    double hi = *std::max_element(rec.ds.begin(), rec.ds.end());
    if (hi - lo <= cfg.similarity_delta) {
      report.iterations.push_back(std::move(rec));
      report.final_survivors = survivors;
      report.cause = TerminationCause::ConvergedSimilar;
      return report;
    }

    std::vector<std::size_t> picks = filter_step(rec.ds, cfg);
    // Clamp: never shrink past min_survivors. Picks arrive ranked worst
    // first, so truncation keeps the most disagreeing ones.
    std::size_t removable =
        survivors.size() > cfg.min_survivors ? survivors.size() - cfg.min_survivors : 0;
    if (picks.size() > removable) picks.resize(removable);
    if (picks.empty()) {
      report.iterations.push_back(std::move(rec));
      report.final_survivors = survivors;
      report.cause = TerminationCause::MinSurvivors;
      return report;
    }

    double threshold = rec.ds[picks.back()];
    for (std::size_t pos : picks) {
      rec.removed.push_back(survivors[pos]);
      threshold = std::min(threshold, rec.ds[pos]);
    }
    rec.threshold = threshold;
    std::sort(rec.removed.begin(), rec.removed.end());

    std::vector<std::size_t> next;
    next.reserve(survivors.size() - picks.size());
    std::vector<char> drop(survivors.size(), 0);
    for (std::size_t pos : picks) drop[pos] = 1;
    for (std::size_t s = 0; s < survivors.size(); ++s)
      if (!drop[s]) next.push_back(survivors[s]);
    survivors = std::move(next);
    report.iterations.push_back(std::move(rec));
  }

  report.final_survivors = survivors;
  report.cause = TerminationCause::IterationsExhausted;
  return report;
}

ClusterAnalysis cluster_pdt_analysis(const PdtTable& table, const std::vector<int>& labels) {
  table.validate();
  if (labels.size() != table.k) throw ShapeError("one label per model required");

  double good_sum = 0.0, bad_sum = 0.0;
  std::size_t good_n = 0, bad_n = 0;
  for (std::size_t i = 0; i < table.k; ++i)
    for (std::size_t j = i + 1; j < table.k; ++j) {
      if (labels[i] && labels[j]) {
        good_sum += table.at(i, j);
        ++good_n;
      } else if (!labels[i] && !labels[j]) {
        bad_sum += table.at(i, j);
        ++bad_n;
      }
    }

  ClusterAnalysis out;
  if (good_n) out.good_avg = good_sum / static_cast<double>(good_n);
  if (bad_n) out.bad_avg = bad_sum / static_cast<double>(bad_n);
  if (out.good_avg && out.bad_avg && *out.bad_avg > 0.0)
    out.ratio_percent = 100.0 * *out.good_avg / *out.bad_avg;
  return out;
}

}  // namespace pdtkit
