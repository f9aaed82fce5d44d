#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdtkit::cli {

// Exit codes shared by every command: 0 success, 2 bad configuration or
// input, 3 finished but with uncertified entries, 4 I/O failure. Option
// structs carry raw strings; each command parses, validates and maps
// failures onto that contract. Missing input files are configuration
// errors (2); code 4 is reserved for files that fail mid-read or
// mid-write.

struct VerifyOpts {
  std::string net_path;
  std::string domain_path;
  std::vector<std::string> constraints;  // "c0,c1,...>=rhs" over the outputs
  std::size_t max_nodes = 10'000'000;
  double max_seconds = 0.0;  // <= 0: unlimited
  bool no_relax = false;
  double witness_tol = 1e-6;
  std::string out_path;
};

struct PdtOpts {
  std::string net1_path;
  std::string net2_path;
  std::string domain_path;
  std::string distance = "l1";  // l1 | cdist
  double M = 100.0;
  double eps = 1.0;
  std::size_t max_nodes = 10'000'000;
  double max_seconds = 0.0;
  bool no_relax = false;
  std::string out_path;
};

struct SelectOpts {
  std::string table_path;  // JSON artifact or plain CSV matrix
  std::string criterion = "percentile";  // percentile | max | combined
  double p = 25.0;
  std::size_t iterations = 100;
  double similarity_delta = 0.0;
  std::size_t min_survivors = 2;
  std::string out_dir;
};

struct AttackOpts {
  std::string net1_path;
  std::string net2_path;
  std::string domain_path;
  std::string distance = "l1";
  std::string method = "auto";  // auto | fgsm | pgd | constrained
  std::size_t T = 100;
  std::size_t T_x = 20;
  std::size_t T_lambda = 20;
  double eps_x = 0.0;
  double eps_lambda = 0.0;
  bool no_sign = false;
  std::size_t restarts = 0;
  std::uint64_t seed = 0;
  std::string out_path;
};

struct SampleOpts {
  std::string net1_path;
  std::string net2_path;
  std::string domain_path;
  std::string distance = "l1";
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
};

struct TrainArithOpts {
  std::string seeds = "0";  // "0-9", "1,3,5" or a single number
  std::size_t n = 10000;
  std::size_t d = 10;
  double lo = -10.0;
  double hi = 10.0;
  std::uint64_t data_seed = 0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::string hidden = "10,10,10";
  std::size_t eval_samples = 10000;
  std::uint64_t eval_seed = 1234;
  double ood_lo = -100.0;
  double ood_hi = 100.0;
  std::string out_dir;
};

struct EnsembleOpts {
  std::vector<std::string> net_paths;
  double lo = -100.0;
  double hi = 100.0;
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  std::string out_path;
};

struct PipelineOpts {
  std::vector<std::string> net_paths;
  std::string domain_path;
  std::string distance = "l1";
  double M = 100.0;
  double eps = 1.0;
  std::size_t max_nodes = 10'000'000;
  double max_seconds = 0.0;
  bool no_relax = false;
  std::string criterion = "percentile";
  double p = 25.0;
  std::size_t iterations = 100;
  double similarity_delta = 0.0;
  std::size_t min_survivors = 2;
  std::size_t jobs = 0;  // 0: PDTKIT_JOBS env var, else 1
  std::string out_dir;
};

struct CompareOpts {
  PipelineOpts pipeline;
  std::size_t n_samples = 10000;
  std::size_t restarts = 4;
  std::uint64_t seed = 0;
};

struct ReportOpts {
  std::string table_path;
  std::string selection_path;  // optional
  std::string labels_path;     // optional
  std::string out_dir;
};

struct OracleOpts {
  std::string net1_path;
  std::string net2_path;
  std::string domain_path;
  std::string distance = "l1";
  double grid_resolution = 0.0;  // > 0: also run the grid search (dim <= 3)
  std::string out_path;
};

int cmd_verify(const VerifyOpts& opts);
int cmd_pdt(const PdtOpts& opts);
int cmd_select(const SelectOpts& opts);
int cmd_attack(const AttackOpts& opts);
int cmd_sample(const SampleOpts& opts);
int cmd_train_arith(const TrainArithOpts& opts);
int cmd_ensemble(const EnsembleOpts& opts);
int cmd_pipeline(const PipelineOpts& opts);
int cmd_compare_backends(const CompareOpts& opts);
int cmd_report(const ReportOpts& opts);
int cmd_oracle(const OracleOpts& opts);

// Full argument parsing and dispatch; what main() calls and what CLI
// tests drive.
int run_cli(int argc, const char* const* argv);

}  // namespace pdtkit::cli
