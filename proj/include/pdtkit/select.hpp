#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pdtkit/distance.hpp"
#include "pdtkit/matrix.hpp"

namespace pdtkit {

// Symmetric table of pairwise disagreement scalars (PDT upper bounds),
// zero diagonal, one status flag per entry.
struct PdtTable {
  std::size_t k = 0;
  Matrix entries;                  // k x k
  std::vector<PdtStatus> status;   // k*k, row-major

  static PdtTable from_entries(const Matrix& m);
  double at(std::size_t i, std::size_t j) const { return entries(i, j); }
  void validate() const;
};

enum class Criterion { Percentile, Max, Combined };

struct SelectionConfig {
  Criterion criterion = Criterion::Percentile;
  double p = 25.0;                  // percentile criterion: share removed
  std::size_t iterations = 100;     // max loop count
  double similarity_delta = 0.0;    // DS spread at or under this converges
  std::size_t min_survivors = 2;

  void validate() const;
};

enum class TerminationCause { ConvergedSimilar, IterationsExhausted, MinSurvivors };

struct IterationRecord {
  std::vector<std::size_t> survivors;  // entering this iteration
  Vec ds;                              // aligned with survivors
  std::vector<std::size_t> removed;
  double threshold = 0.0;  // DS cutoff applied (0 when nothing removed)
};

struct SelectionReport {
  std::vector<IterationRecord> iterations;
  std::vector<std::size_t> final_survivors;
  TerminationCause cause = TerminationCause::ConvergedSimilar;
};

// Mean PDT of model i against the other members of `subset`.
double disagreement_score(const PdtTable& table, const std::vector<std::size_t>& subset,
                          std::size_t i);

// Which positions of `ds` to drop this round. Percentile removes the
// ceil(p% * n) highest scores (at least one); Max sorts descending, finds
// the largest adjacent gap and removes everything at or above the gap's
// upper score; Combined plays both and keeps the larger removal set.
// Ties on equal scores resolve toward the higher index.
std::vector<std::size_t> filter_step(const Vec& ds, const SelectionConfig& cfg);

// Iterative filtering: score survivors, stop when scores agree within
// similarity_delta, otherwise remove filter_step's picks, never dropping
// below min_survivors, for at most cfg.iterations rounds.
SelectionReport run_selection(const PdtTable& table, const SelectionConfig& cfg);

struct ClusterAnalysis {
  std::optional<double> good_avg;
  std::optional<double> bad_avg;
  std::optional<double> ratio_percent;  // 100 * good_avg / bad_avg
};

// Average PDT inside the good-labeled cluster vs inside the bad-labeled
// one. labels[i] nonzero marks model i good. Sides without a complete
// pair stay unset.
ClusterAnalysis cluster_pdt_analysis(const PdtTable& table, const std::vector<int>& labels);

}  // namespace pdtkit
