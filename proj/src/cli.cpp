#include "pdtkit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdtkit/arith.hpp"
#include "pdtkit/attack.hpp"
#include "pdtkit/distance.hpp"
#include "pdtkit/errors.hpp"
#include "pdtkit/json_io.hpp"
#include "pdtkit/net.hpp"
#include "pdtkit/oracle.hpp"
#include "pdtkit/select.hpp"
#include "pdtkit/verify.hpp"
#include "pdtkit/version.hpp"

namespace pdtkit::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Exit-code mapping for everything a command can throw. Budget/solver
// shortfalls are "finished but uncertified" (3); every other library
// error is a configuration or input problem (2); I/O failures are 4.
template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is required");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

Network load_net_checked(const std::string& path) {
  require_file(path, "model file");
  return load_ffnt_file(path);
}

InputDomain load_domain_checked(const std::string& path) {
  require_file(path, "domain file");
  return load_domain(path);
}

DistanceSpec parse_distance(const std::string& name) {
  if (name == "l1") return DistanceSpec::l1();
  if (name == "cdist" || name == "c-distance") return DistanceSpec::cdist();
  throw ConfigError("unknown distance '" + name + "' (expected l1 or cdist)");
}

Criterion parse_criterion(const std::string& name) {
  if (name == "percentile") return Criterion::Percentile;
  if (name == "max") return Criterion::Max;
  if (name == "combined") return Criterion::Combined;
  throw ConfigError("unknown criterion '" + name + "' (expected percentile, max or combined)");
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Sat: return "sat";
    case Verdict::Unsat: return "unsat";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

OutputConstraint parse_constraint(const std::string& text) {
  const auto pos = text.find(">=");
  if (pos == std::string::npos)
    throw ConfigError("constraint '" + text + "' must look like 'c0,c1,...>=rhs'");
  OutputConstraint row;
  std::stringstream lhs(text.substr(0, pos));
  std::string tok;
  try {
    while (std::getline(lhs, tok, ',')) row.coeffs.push_back(std::stod(tok));
    row.rhs = std::stod(text.substr(pos + 2));
  } catch (const std::exception&) {
    throw ConfigError("constraint '" + text + "' has a malformed number");
  }
  if (row.coeffs.empty()) throw ConfigError("constraint '" + text + "' has no coefficients");
  return row;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  try {
    while (std::getline(ss, tok, ',')) out.push_back(std::stoul(tok));
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": malformed list '" + text + "'");
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

// "0-9" (inclusive range), "1,3,5", or a single number.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  try {
    const auto dash = text.find('-');
    if (dash != std::string::npos) {
      const std::uint64_t a = std::stoull(text.substr(0, dash));
      const std::uint64_t b = std::stoull(text.substr(dash + 1));
      if (b < a) throw ConfigError("seed range '" + text + "' is descending");
      std::vector<std::uint64_t> out;
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
      return out;
    }
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("malformed seed list '" + text + "'");
  }
}

DecideOptions decide_options(std::size_t max_nodes, double max_seconds, bool no_relax,
                             double witness_tol = 1e-6) {
  DecideOptions opts;
  opts.budget.max_nodes = max_nodes;
  if (max_seconds > 0) opts.budget.max_seconds = max_seconds;
  opts.use_linear_relax = !no_relax;
  opts.witness_tol = witness_tol;
  return opts;
}

std::size_t resolve_jobs(std::size_t jobs) {
  if (jobs > 0) return jobs;
  if (const char* env = std::getenv("PDTKIT_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// Index-sharded worker pool. Work items write only to their own slot, so
// results are identical for every pool size; the first exception wins.
template <typename F>
void parallel_for(std::size_t count, std::size_t jobs, F&& fn) {
  jobs = std::min(std::max<std::size_t>(jobs, 1), count == 0 ? 1 : count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mtx;
  std::exception_ptr err;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mtx);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<std::string> model_names(const std::vector<std::string>& paths) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::string s = fs::path(paths[i]).stem().string();
    if (std::find(names.begin(), names.end(), s) != names.end())
      s += "#" + std::to_string(i);
    names.push_back(std::move(s));
  }
  return names;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void save_json_text(const json& j, const std::string& path) {
  write_text(path, j.dump(2) + "\n");
}

json probe_json(const std::vector<std::pair<double, Verdict>>& probes) {
  json arr = json::array();
  for (const auto& [alpha, verdict] : probes)
    arr.push_back(json::array({alpha, verdict_name(verdict)}));
  return arr;
}

json pdt_result_json(const PdtResult& res) {
  json branches = json::array();
  for (const PdtSearch& b : res.branches) {
    json bj{{"lower", b.lower},
            {"upper", b.upper},
            {"status", pdt_status_name(b.status)},
            {"rounds", b.rounds},
            {"queries", b.queries},
            {"nodes", b.nodes},
            {"probes", probe_json(b.probe_trace)}};
    if (b.variant) bj["variant"] = *b.variant == SignVariant::C ? "c" : "cprime";
    if (!b.witness.empty()) bj["witness"] = b.witness;
    branches.push_back(std::move(bj));
  }
  json j{{"lower", res.lower},
         {"upper", res.upper},
         {"scalar", res.scalar()},
         {"status", pdt_status_name(res.status)},
         {"rounds", res.rounds},
         {"queries", res.queries},
         {"nodes", res.nodes},
         {"branches", std::move(branches)}};
  if (!res.witness.empty()) j["witness"] = res.witness;
  return j;
}

double median_of(Vec v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string selection_csv(const SelectionReport& report) {
  std::string csv = "iteration,survivors,min_ds,median_ds,max_ds,removed,threshold\n";
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const IterationRecord& rec = report.iterations[i];
    const double mn = rec.ds.empty() ? 0.0 : *std::min_element(rec.ds.begin(), rec.ds.end());
    const double mx = rec.ds.empty() ? 0.0 : *std::max_element(rec.ds.begin(), rec.ds.end());
    csv += std::to_string(i + 1) + "," + std::to_string(rec.survivors.size()) + "," +
           fmt(mn) + "," + fmt(median_of(rec.ds)) + "," + fmt(mx) + "," +
           std::to_string(rec.removed.size()) + "," + fmt(rec.threshold) + "\n";
  }
  return csv;
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  return pairs;
}

struct TableRun {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<PdtResult> results;  // aligned with pairs
  PdtTable table;                  // entries are the certified upper bounds
  Matrix lowers;
  bool any_unknown = false;
};

TableRun run_pdt_table(const std::vector<Network>& nets, const InputDomain& domain,
                       const DistanceSpec& spec, double M, double eps,
                       const DecideOptions& dopts, std::size_t jobs) {
  TableRun run;
  const std::size_t k = nets.size();
  run.pairs = all_pairs(k);
  run.results.resize(run.pairs.size());
  parallel_for(run.pairs.size(), jobs, [&](std::size_t idx) {
    const auto [i, j] = run.pairs[idx];
    run.results[idx] = pdt(nets[i], nets[j], domain, spec, M, eps, dopts);
  });
  run.table.k = k;
  run.table.entries = Matrix(k, k);
  run.table.status.assign(k * k, PdtStatus::Certified);
  run.lowers = Matrix(k, k);
  for (std::size_t idx = 0; idx < run.pairs.size(); ++idx) {
    const auto [i, j] = run.pairs[idx];
    const PdtResult& res = run.results[idx];
    run.table.entries(i, j) = run.table.entries(j, i) = res.scalar();
    run.lowers(i, j) = run.lowers(j, i) = res.lower;
    run.table.status[i * k + j] = run.table.status[j * k + i] = res.status;
    if (res.status == PdtStatus::UnknownBudget) run.any_unknown = true;
  }
  run.table.validate();
  return run;
}

std::uint64_t pair_seed(std::uint64_t base, std::size_t idx) {
  return base + 1000003ull * (idx + 1);
}

struct PairEstimate {
  double estimate = 0.0;
  bool failed = false;  // constrained attack: some regime had no feasible iterate
  Vec x;
  json detail;
};

AttackResult best_over_boxes_pgd(const Network& n1, const Network& n2,
                                 const InputDomain& domain, const AttackConfig& cfg) {
  AttackResult best;
  bool have = false;
  for (const Box& box : domain.boxes) {
    AttackResult r = pgd(n1, n2, box, cfg, Direction::Maximize);
    if (!have || r.objective > best.objective) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

// One constrained run per sign regime and box; a regime's estimate is its
// best feasible objective anywhere in the domain, 0 when the regime was
// never reached. The pair estimate is the smaller regime value.
PairEstimate constrained_pair_estimate(const Network& n1, const Network& n2,
                                       const InputDomain& domain, const AttackConfig& cfg) {
  PairEstimate out;
  double values[2] = {0.0, 0.0};
  bool feasible[2] = {false, false};
  Vec best_x[2];
  json variants = json::array();
  const SignVariant order[2] = {SignVariant::C, SignVariant::CPrime};
  for (int vi = 0; vi < 2; ++vi) {
    const auto rows = DistanceSpec::sign_rows(order[vi]);
    double worst_violation = 0.0;
    bool have_violation = false;
    for (const Box& box : domain.boxes) {
      const AttackResult r = constrained_pgd(n1, n2, box, rows, cfg);
      if (r.feasible) {
        if (!feasible[vi] || r.objective > values[vi]) {
          values[vi] = r.objective;
          best_x[vi] = r.x;
        }
        feasible[vi] = true;
      } else if (!have_violation || r.constraint_violation < worst_violation) {
        worst_violation = r.constraint_violation;
        have_violation = true;
      }
    }
    json vj{{"variant", vi == 0 ? "c" : "cprime"},
            {"feasible", feasible[vi]},
            {"estimate", feasible[vi] ? values[vi] : 0.0}};
    if (!feasible[vi]) vj["min_violation"] = worst_violation;
    if (feasible[vi]) vj["x"] = best_x[vi];
    variants.push_back(std::move(vj));
  }
  const int pick = values[0] <= values[1] ? 0 : 1;
  out.estimate = values[pick];
  out.x = best_x[pick];
  out.failed = !feasible[0] || !feasible[1];
  out.detail = json{{"variants", std::move(variants)}};
  return out;
}

PairEstimate attack_pair_estimate(const Network& n1, const Network& n2,
                                  const InputDomain& domain, const DistanceSpec& spec,
                                  const AttackConfig& cfg) {
  if (spec.kind == DistanceKind::CDistance)
    return constrained_pair_estimate(n1, n2, domain, cfg);
  PairEstimate out;
  AttackResult r = best_over_boxes_pgd(n1, n2, domain, cfg);
  out.estimate = r.objective;
  out.x = std::move(r.x);
  out.detail = json::object();
  return out;
}

PdtTable table_from_estimates(std::size_t k,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                              const Vec& estimates) {
  Matrix m(k, k);
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto [i, j] = pairs[idx];
    m(i, j) = m(j, i) = estimates[idx];
  }
  return PdtTable::from_entries(m);
}

std::string classify_estimate(const PdtResult& verified, double estimate, bool failed,
                              double eps) {
  if (failed) return "FAILED";
  if (verified.status == PdtStatus::UnknownBudget) return "UNCERTIFIED";
  return estimate >= verified.upper - eps ? "ALIGNED" : "UNTIGHTENED";
}

struct LoadedPool {
  std::vector<Network> nets;
  std::vector<std::string> names;
  InputDomain domain;
  DistanceSpec spec;
  SelectionConfig sel;
};

// Everything the pipeline needs, validated before any output is written.
LoadedPool load_pipeline_inputs(const PipelineOpts& o) {
  if (o.net_paths.size() < 2) throw ConfigError("pipeline needs at least two models");
  if (o.out_dir.empty()) throw ConfigError("pipeline needs --out-dir");
  LoadedPool pool;
  for (const auto& p : o.net_paths) pool.nets.push_back(load_net_checked(p));
  pool.names = model_names(o.net_paths);
  pool.domain = load_domain_checked(o.domain_path);
  pool.spec = parse_distance(o.distance);
  for (std::size_t i = 0; i < pool.nets.size(); ++i) {
    if (pool.nets[i].input_dim != pool.domain.dim())
      throw ConfigError("model " + pool.names[i] + " input dim does not match the domain");
    if (pool.nets[i].output_dim() != 1)
      throw ConfigError("model " + pool.names[i] + " must have scalar output");
  }
  if (!(o.eps > 0) || !(o.M > o.eps))
    throw ConfigError("need M > eps > 0");
  pool.sel.criterion = parse_criterion(o.criterion);
  pool.sel.p = o.p;
  pool.sel.iterations = o.iterations;
  pool.sel.similarity_delta = o.similarity_delta;
  pool.sel.min_survivors = o.min_survivors;
  pool.sel.validate();
  return pool;
}

json pipeline_config_echo(const PipelineOpts& o) {
  return json{{"models", o.net_paths}, {"domain", o.domain_path},
              {"distance", o.distance}, {"M", o.M},
              {"eps", o.eps},           {"max_nodes", o.max_nodes},
              {"max_seconds", o.max_seconds}, {"use_linear_relax", !o.no_relax},
              {"criterion", o.criterion}, {"p", o.p},
              {"iterations", o.iterations}, {"similarity_delta", o.similarity_delta},
              {"min_survivors", o.min_survivors}};
}

json names_of(const std::vector<std::size_t>& ids, const std::vector<std::string>& names) {
  json arr = json::array();
  for (std::size_t id : ids) arr.push_back(names[id]);
  return arr;
}

}  // namespace

int cmd_verify(const VerifyOpts& opts) {
  return guarded([&] {
    const Network net = load_net_checked(opts.net_path);
    const InputDomain domain = load_domain_checked(opts.domain_path);
    if (net.input_dim != domain.dim())
      throw ConfigError("network input dim does not match the domain");
    if (opts.constraints.empty()) throw ConfigError("at least one --constraint is required");
    std::vector<OutputConstraint> rows;
    for (const auto& c : opts.constraints) {
      OutputConstraint row = parse_constraint(c);
      if (row.coeffs.size() != net.output_dim())
        throw ConfigError("constraint '" + c + "' arity does not match the network output");
      rows.push_back(std::move(row));
    }
    const DecideOptions dopts =
        decide_options(opts.max_nodes, opts.max_seconds, opts.no_relax, opts.witness_tol);

    Verdict verdict = Verdict::Unsat;
    Vec witness;
    std::size_t sat_box = 0, nodes = 0, lp_calls = 0;
    std::string reason;
    for (std::size_t b = 0; b < domain.boxes.size(); ++b) {
      const VerifyResult r = decide({net, domain.boxes[b], rows}, dopts);
      nodes += r.nodes;
      lp_calls += r.lp_calls;
      if (r.verdict == Verdict::Sat) {
        verdict = Verdict::Sat;
        witness = r.witness;
        sat_box = b;
        break;
      }
      if (r.verdict == Verdict::Unknown) {
        verdict = Verdict::Unknown;
        reason = r.reason;
      }
    }

    json j{{"schema", "pdtkit/verify/1"},
           {"tool_version", kToolVersion},
           {"config",
            json{{"net", opts.net_path},
                 {"domain", opts.domain_path},
                 {"constraints", opts.constraints},
                 {"max_nodes", opts.max_nodes},
                 {"max_seconds", opts.max_seconds},
                 {"use_linear_relax", !opts.no_relax},
                 {"witness_tol", opts.witness_tol}}},
           {"verdict", verdict_name(verdict)},
           {"nodes", nodes},
           {"lp_calls", lp_calls}};
    if (verdict == Verdict::Sat) {
      j["witness"] = witness;
      j["box_index"] = sat_box;
    }
    if (verdict == Verdict::Unknown) j["reason"] = reason;
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return verdict == Verdict::Unknown ? 3 : 0;
  });
}

int cmd_pdt(const PdtOpts& opts) {
  return guarded([&] {
    const Network n1 = load_net_checked(opts.net1_path);
    const Network n2 = load_net_checked(opts.net2_path);
    const InputDomain domain = load_domain_checked(opts.domain_path);
    const DistanceSpec spec = parse_distance(opts.distance);
    const DecideOptions dopts = decide_options(opts.max_nodes, opts.max_seconds, opts.no_relax);
    const PdtResult res = pdt(n1, n2, domain, spec, opts.M, opts.eps, dopts);

    json j = pdt_result_json(res);
    j["schema"] = "pdtkit/pdt/1";
    j["tool_version"] = kToolVersion;
    j["config"] = json{{"net1", opts.net1_path},     {"net2", opts.net2_path},
                       {"domain", opts.domain_path}, {"distance", opts.distance},
                       {"M", opts.M},                {"eps", opts.eps},
                       {"max_nodes", opts.max_nodes}, {"max_seconds", opts.max_seconds},
                       {"use_linear_relax", !opts.no_relax}};
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return res.status == PdtStatus::UnknownBudget ? 3 : 0;
  });
}

int cmd_select(const SelectOpts& opts) {
  return guarded([&] {
    require_file(opts.table_path, "table file");
    const PdtTableDoc doc = load_pdt_table(opts.table_path);
    SelectionConfig cfg;
    cfg.criterion = parse_criterion(opts.criterion);
    cfg.p = opts.p;
    cfg.iterations = opts.iterations;
    cfg.similarity_delta = opts.similarity_delta;
    cfg.min_survivors = opts.min_survivors;
    cfg.validate();
    const SelectionReport report = run_selection(doc.table, cfg);

    const json config_echo{{"table", opts.table_path},
                           {"criterion", opts.criterion},
                           {"p", opts.p},
                           {"iterations", opts.iterations},
                           {"similarity_delta", opts.similarity_delta},
                           {"min_survivors", opts.min_survivors}};
    if (!opts.out_dir.empty()) {
      ensure_dir(opts.out_dir);
      SelectionDoc sdoc{report, doc.model_names, kToolVersion, config_echo.dump()};
      save_selection(sdoc, (fs::path(opts.out_dir) / "selection.json").string());
      write_text((fs::path(opts.out_dir) / "selection.csv").string(), selection_csv(report));
    }
    json j{{"schema", "pdtkit/selection-summary/1"},
           {"tool_version", kToolVersion},
           {"config", config_echo},
           {"cause", termination_cause_name(report.cause)},
           {"iterations", report.iterations.size()},
           {"final_survivors", report.final_survivors},
           {"final_survivor_names", names_of(report.final_survivors, doc.model_names)}};
    print_json(j);
    return 0;
  });
}

int cmd_attack(const AttackOpts& opts) {
  return guarded([&] {
    const Network n1 = load_net_checked(opts.net1_path);
    const Network n2 = load_net_checked(opts.net2_path);
    const InputDomain domain = load_domain_checked(opts.domain_path);
    const DistanceSpec spec = parse_distance(opts.distance);
    std::string method = opts.method;
    if (method == "auto")
      method = spec.kind == DistanceKind::CDistance ? "constrained" : "pgd";
    if (spec.kind == DistanceKind::CDistance && method != "constrained")
      throw ConfigError("the c-distance estimate needs --method constrained");

    AttackConfig cfg;
    cfg.T = opts.T;
    cfg.T_x = opts.T_x;
    cfg.T_lambda = opts.T_lambda;
    cfg.eps_x = opts.eps_x;
    cfg.eps_lambda = opts.eps_lambda;
    cfg.use_sign = !opts.no_sign;
    cfg.restarts = opts.restarts;
    cfg.seed = opts.seed;

    json j{{"schema", "pdtkit/attack/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"net1", opts.net1_path}, {"net2", opts.net2_path},
                           {"domain", opts.domain_path}, {"distance", opts.distance},
                           {"method", method}, {"T", opts.T},
                           {"T_x", opts.T_x}, {"T_lambda", opts.T_lambda},
                           {"eps_x", opts.eps_x}, {"eps_lambda", opts.eps_lambda},
                           {"use_sign", !opts.no_sign}, {"restarts", opts.restarts},
                           {"seed", opts.seed}}},
           {"method", method}};

    if (method == "constrained") {
      const PairEstimate est = spec.kind == DistanceKind::CDistance
                                   ? constrained_pair_estimate(n1, n2, domain, cfg)
                                   : PairEstimate{};
      if (spec.kind == DistanceKind::CDistance) {
        j["estimate"] = est.estimate;
        j["feasible"] = !est.failed;
        if (!est.x.empty()) j["x"] = est.x;
        j.update(est.detail);
      } else {
        // Constrained method without sign regimes reduces to an
        // unconstrained search.
        AttackResult best;
        bool have = false;
        for (const Box& box : domain.boxes) {
          AttackResult r = constrained_pgd(n1, n2, box, {}, cfg);
          if (!have || r.objective > best.objective) {
            best = std::move(r);
            have = true;
          }
        }
        j["estimate"] = best.objective;
        j["feasible"] = best.feasible;
        j["x"] = best.x;
      }
    } else if (method == "fgsm") {
      AttackResult best;
      bool have = false;
      for (const Box& box : domain.boxes) {
        AttackResult r = fgsm(n1, n2, box, cfg);
        if (!have || r.objective > best.objective) {
          best = std::move(r);
          have = true;
        }
      }
      j["estimate"] = best.objective;
      j["feasible"] = true;
      j["x"] = best.x;
    } else if (method == "pgd") {
      AttackResult best = best_over_boxes_pgd(n1, n2, domain, cfg);
      j["estimate"] = best.objective;
      j["feasible"] = true;
      j["x"] = best.x;
      j["trace"] = best.trace;
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return 0;
  });
}

int cmd_sample(const SampleOpts& opts) {
  return guarded([&] {
    const Network n1 = load_net_checked(opts.net1_path);
    const Network n2 = load_net_checked(opts.net2_path);
    const InputDomain domain = load_domain_checked(opts.domain_path);
    const DistanceSpec spec = parse_distance(opts.distance);
    const SampleResult res = sample_pdt(n1, n2, domain, spec, opts.n_samples, opts.seed);
    json j{{"schema", "pdtkit/sample/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"net1", opts.net1_path}, {"net2", opts.net2_path},
                           {"domain", opts.domain_path}, {"distance", opts.distance},
                           {"samples", opts.n_samples}, {"seed", opts.seed}}},
           {"estimate", res.estimate},
           {"all_infeasible", res.all_infeasible}};
    if (!res.best_x.empty()) j["best_x"] = res.best_x;
    if (spec.kind == DistanceKind::CDistance) {
      j["feasible_c"] = res.feasible_c;
      j["feasible_cprime"] = res.feasible_cprime;
      j["max_c"] = res.max_c;
      j["max_cprime"] = res.max_cprime;
    }
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return 0;
  });
}

int cmd_train_arith(const TrainArithOpts& opts) {
  return guarded([&] {
    const std::vector<std::uint64_t> seeds = parse_seeds(opts.seeds);
    const std::vector<std::size_t> hidden = parse_size_list(opts.hidden, "hidden widths");
    const Dataset data = gen_dataset(opts.n, opts.d, opts.lo, opts.hi, opts.data_seed);
    if (!opts.out_dir.empty()) ensure_dir(opts.out_dir);

    std::string csv =
        "seed,final_loss,in_max_abs_error,in_mean_abs_error,ood_max_abs_error,ood_mean_abs_error\n";
    json models = json::array();
    for (const std::uint64_t seed : seeds) {
      TrainConfig cfg;
      cfg.hidden = hidden;
      cfg.epochs = opts.epochs;
      cfg.batch_size = opts.batch_size;
      cfg.learning_rate = opts.learning_rate;
      cfg.seed = seed;
      const TrainOutput out = train(cfg, data);
      const ErrorStats in_stats =
          evaluate_errors(out.net, opts.lo, opts.hi, opts.eval_samples, opts.eval_seed, "in-dist");
      const ErrorStats ood_stats = evaluate_errors(out.net, opts.ood_lo, opts.ood_hi,
                                                   opts.eval_samples, opts.eval_seed + 1, "ood");
      const double final_loss = out.epoch_loss.empty()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : out.epoch_loss.back();
      if (!opts.out_dir.empty()) {
        const std::string path =
            (fs::path(opts.out_dir) / ("model_seed" + std::to_string(seed) + ".ffnt")).string();
        save_ffnt_file(out.net, path);
      }
      csv += std::to_string(seed) + "," + fmt(final_loss) + "," + fmt(in_stats.max_abs_error) +
             "," + fmt(in_stats.mean_abs_error) + "," + fmt(ood_stats.max_abs_error) + "," +
             fmt(ood_stats.mean_abs_error) + "\n";
      models.push_back(json{{"seed", seed},
                            {"epoch_loss", out.epoch_loss},
                            {"in_dist", json{{"max_abs_error", in_stats.max_abs_error},
                                             {"mean_abs_error", in_stats.mean_abs_error}}},
                            {"ood", json{{"max_abs_error", ood_stats.max_abs_error},
                                         {"mean_abs_error", ood_stats.mean_abs_error}}}});
    }
    if (!opts.out_dir.empty())
      write_text((fs::path(opts.out_dir) / "stats.csv").string(), csv);

    json j{{"schema", "pdtkit/train-arith/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"seeds", opts.seeds}, {"n", opts.n},
                           {"d", opts.d}, {"lo", opts.lo},
                           {"hi", opts.hi}, {"data_seed", opts.data_seed},
                           {"epochs", opts.epochs}, {"batch_size", opts.batch_size},
                           {"learning_rate", opts.learning_rate}, {"hidden", opts.hidden},
                           {"eval_samples", opts.eval_samples}, {"eval_seed", opts.eval_seed},
                           {"ood_lo", opts.ood_lo}, {"ood_hi", opts.ood_hi}}},
           {"models", std::move(models)}};
    print_json(j);
    return 0;
  });
}

int cmd_ensemble(const EnsembleOpts& opts) {
  return guarded([&] {
    if (opts.net_paths.empty()) throw ConfigError("ensemble needs at least one --net");
    std::vector<Network> nets;
    for (const auto& p : opts.net_paths) nets.push_back(load_net_checked(p));
    const std::vector<std::string> names = model_names(opts.net_paths);
    const std::size_t d = nets[0].input_dim;
    for (const Network& n : nets) {
      if (n.input_dim != d) throw ConfigError("ensemble members disagree on input dim");
      if (n.output_dim() != 1) throw ConfigError("ensemble members must have scalar output");
    }

    json members = json::array();
    double worst_member_max = 0.0;
    for (std::size_t i = 0; i < nets.size(); ++i) {
      const ErrorStats st =
          evaluate_errors(nets[i], opts.lo, opts.hi, opts.n_samples, opts.seed, "member");
      worst_member_max = std::max(worst_member_max, st.max_abs_error);
      members.push_back(json{{"name", names[i]},
                             {"max_abs_error", st.max_abs_error},
                             {"mean_abs_error", st.mean_abs_error}});
    }
    const ErrorStats ens = evaluate_errors_fn(
        [&](const Vec& x) { return ensemble_predict(nets, x)[0]; }, d, opts.lo, opts.hi,
        opts.n_samples, opts.seed, "ensemble");

    json j{{"schema", "pdtkit/ensemble/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"models", opts.net_paths}, {"lo", opts.lo},
                           {"hi", opts.hi}, {"samples", opts.n_samples},
                           {"seed", opts.seed}}},
           {"members", std::move(members)},
           {"ensemble", json{{"max_abs_error", ens.max_abs_error},
                             {"mean_abs_error", ens.mean_abs_error}}},
           {"worst_member_max_abs_error", worst_member_max},
           {"bound_holds", ens.max_abs_error <= worst_member_max + 1e-9}};
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return 0;
  });
}

int cmd_pipeline(const PipelineOpts& opts) {
  return guarded([&] {
    const LoadedPool pool = load_pipeline_inputs(opts);
    const DecideOptions dopts = decide_options(opts.max_nodes, opts.max_seconds, opts.no_relax);
    const std::size_t jobs = resolve_jobs(opts.jobs);
    const TableRun run =
        run_pdt_table(pool.nets, pool.domain, pool.spec, opts.M, opts.eps, dopts, jobs);
    const SelectionReport report = run_selection(run.table, pool.sel);

    const json config_echo = pipeline_config_echo(opts);
    ensure_dir(opts.out_dir);
    const fs::path dir(opts.out_dir);
    PdtTableDoc tdoc{pool.names, run.table, run.lowers, kToolVersion, config_echo.dump()};
    save_pdt_table(tdoc, (dir / "pdt_table.json").string());
    SelectionDoc sdoc{report, pool.names, kToolVersion, config_echo.dump()};
    save_selection(sdoc, (dir / "selection.json").string());
    write_text((dir / "selection.csv").string(), selection_csv(report));

    json uncertified = json::array();
    for (std::size_t idx = 0; idx < run.pairs.size(); ++idx)
      if (run.results[idx].status == PdtStatus::UnknownBudget)
        uncertified.push_back(json::array({run.pairs[idx].first, run.pairs[idx].second}));
    json j{{"schema", "pdtkit/pipeline-summary/1"},
           {"tool_version", kToolVersion},
           {"config", config_echo},
           {"models", pool.names},
           {"pairs", run.pairs.size()},
           {"uncertified_pairs", uncertified},
           {"cause", termination_cause_name(report.cause)},
           {"final_survivors", report.final_survivors},
           {"final_survivor_names", names_of(report.final_survivors, pool.names)}};
    save_json_text(j, (dir / "summary.json").string());
    print_json(j);
    return run.any_unknown ? 3 : 0;
  });
}

int cmd_compare_backends(const CompareOpts& opts) {
  return guarded([&] {
    const PipelineOpts& po = opts.pipeline;
    const LoadedPool pool = load_pipeline_inputs(po);
    const DecideOptions dopts = decide_options(po.max_nodes, po.max_seconds, po.no_relax);
    const std::size_t jobs = resolve_jobs(po.jobs);
    const TableRun verified =
        run_pdt_table(pool.nets, pool.domain, pool.spec, po.M, po.eps, dopts, jobs);

    const std::size_t k = pool.nets.size();
    const auto& pairs = verified.pairs;
    Vec attack_est(pairs.size(), 0.0), sample_est(pairs.size(), 0.0);
    std::vector<char> attack_failed(pairs.size(), 0), sample_failed(pairs.size(), 0);
    parallel_for(pairs.size(), jobs, [&](std::size_t idx) {
      const auto [i, j] = pairs[idx];
      AttackConfig cfg;
      cfg.restarts = opts.restarts;
      cfg.seed = pair_seed(opts.seed, idx);
      const PairEstimate est =
          attack_pair_estimate(pool.nets[i], pool.nets[j], pool.domain, pool.spec, cfg);
      attack_est[idx] = est.estimate;
      attack_failed[idx] = est.failed ? 1 : 0;
      const SampleResult sr = sample_pdt(pool.nets[i], pool.nets[j], pool.domain, pool.spec,
                                         opts.n_samples, pair_seed(opts.seed ^ 0x5eedull, idx));
      sample_est[idx] = sr.estimate;
      sample_failed[idx] = sr.all_infeasible ? 1 : 0;
    });

    const PdtTable attack_table = table_from_estimates(k, pairs, attack_est);
    const PdtTable sample_table = table_from_estimates(k, pairs, sample_est);
    const SelectionReport verified_sel = run_selection(verified.table, pool.sel);
    const SelectionReport attack_sel = run_selection(attack_table, pool.sel);
    const SelectionReport sample_sel = run_selection(sample_table, pool.sel);
    const bool attack_match = attack_sel.final_survivors == verified_sel.final_survivors;
    const bool sample_match = sample_sel.final_survivors == verified_sel.final_survivors;

    const json config_echo =
        json{{"pipeline", pipeline_config_echo(po)},
             {"samples", opts.n_samples},
             {"restarts", opts.restarts},
             {"seed", opts.seed}};
    ensure_dir(po.out_dir);
    const fs::path dir(po.out_dir);
    save_pdt_table({pool.names, verified.table, verified.lowers, kToolVersion, config_echo.dump()},
                   (dir / "pdt_table.json").string());
    save_pdt_table({pool.names, attack_table, attack_table.entries, kToolVersion,
                    config_echo.dump()},
                   (dir / "attack_table.json").string());
    save_pdt_table({pool.names, sample_table, sample_table.entries, kToolVersion,
                    config_echo.dump()},
                   (dir / "sample_table.json").string());

    std::string csv =
        "i,j,model_i,model_j,verified_lower,verified_upper,verified_status,"
        "attack_estimate,attack_class,sample_estimate,sample_class\n";
    json rows = json::array();
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
      const auto [i, j] = pairs[idx];
      const PdtResult& v = verified.results[idx];
      const std::string ac = classify_estimate(v, attack_est[idx], attack_failed[idx], po.eps);
      const std::string sc = classify_estimate(v, sample_est[idx], sample_failed[idx], po.eps);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + pool.names[i] + "," +
             pool.names[j] + "," + fmt(v.lower) + "," + fmt(v.upper) + "," +
             pdt_status_name(v.status) + "," + fmt(attack_est[idx]) + "," + ac + "," +
             fmt(sample_est[idx]) + "," + sc + "\n";
      rows.push_back(json{{"i", i},
                          {"j", j},
                          {"verified_lower", v.lower},
                          {"verified_upper", v.upper},
                          {"verified_status", pdt_status_name(v.status)},
                          {"attack_estimate", attack_est[idx]},
                          {"attack_class", ac},
                          {"sample_estimate", sample_est[idx]},
                          {"sample_class", sc}});
    }
    write_text((dir / "compare.csv").string(), csv);

    json j{{"schema", "pdtkit/compare/1"},
           {"tool_version", kToolVersion},
           {"config", config_echo},
           {"models", pool.names},
           {"pairs", std::move(rows)},
           {"verified_survivors", verified_sel.final_survivors},
           {"attack_survivors", attack_sel.final_survivors},
           {"sample_survivors", sample_sel.final_survivors},
           {"attack_selection_matches", attack_match},
           {"sample_selection_matches", sample_match}};
    save_json_text(j, (dir / "compare.json").string());
    print_json(j);
    return verified.any_unknown ? 3 : 0;
  });
}

int cmd_report(const ReportOpts& opts) {
  return guarded([&] {
    require_file(opts.table_path, "table file");
    const PdtTableDoc doc = load_pdt_table(opts.table_path);
    const std::size_t k = doc.table.k;

    json pairs = json::array();
    double max_upper = 0.0, sum_upper = 0.0;
    std::size_t npairs = 0;
    std::map<std::string, std::size_t> status_counts;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        const double up = doc.table.at(i, j);
        max_upper = std::max(max_upper, up);
        sum_upper += up;
        ++npairs;
        ++status_counts[pdt_status_name(doc.table.status[i * k + j])];
        pairs.push_back(json{{"i", i},
                             {"j", j},
                             {"model_i", doc.model_names[i]},
                             {"model_j", doc.model_names[j]},
                             {"lower", doc.lowers(i, j)},
                             {"upper", up},
                             {"status", pdt_status_name(doc.table.status[i * k + j])}});
      }
    json j{{"schema", "pdtkit/report/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"table", opts.table_path},
                           {"selection", opts.selection_path},
                           {"labels", opts.labels_path}}},
           {"table", json{{"models", doc.model_names},
                          {"pairs", std::move(pairs)},
                          {"status_counts", status_counts},
                          {"max_upper", max_upper},
                          {"mean_upper", npairs ? sum_upper / double(npairs) : 0.0}}}};

    std::string iter_csv;
    if (!opts.selection_path.empty()) {
      require_file(opts.selection_path, "selection file");
      const SelectionDoc sdoc = load_selection(opts.selection_path);
      json iters = json::array();
      for (std::size_t i = 0; i < sdoc.report.iterations.size(); ++i) {
        const IterationRecord& rec = sdoc.report.iterations[i];
        const double mn =
            rec.ds.empty() ? 0.0 : *std::min_element(rec.ds.begin(), rec.ds.end());
        const double mx =
            rec.ds.empty() ? 0.0 : *std::max_element(rec.ds.begin(), rec.ds.end());
        iters.push_back(json{{"iteration", i + 1},
                             {"survivors", rec.survivors.size()},
                             {"min_ds", mn},
                             {"median_ds", median_of(rec.ds)},
                             {"max_ds", mx},
                             {"removed", rec.removed.size()},
                             {"threshold", rec.threshold}});
      }
      j["selection"] = json{{"cause", termination_cause_name(sdoc.report.cause)},
                            {"final_survivors", sdoc.report.final_survivors},
                            {"iterations", std::move(iters)}};
      iter_csv = selection_csv(sdoc.report);
    }

    std::string cluster_csv;
    if (!opts.labels_path.empty()) {
      require_file(opts.labels_path, "labels file");
      const std::vector<int> labels = load_labels(opts.labels_path, 0);
      if (!labels.empty()) {
        if (labels.size() != k)
          throw ParseError(0, "labels file must list one flag per model");
        const ClusterAnalysis ca = cluster_pdt_analysis(doc.table, labels);
        json cj = json::object();
        if (ca.good_avg) cj["good_avg"] = *ca.good_avg;
        if (ca.bad_avg) cj["bad_avg"] = *ca.bad_avg;
        if (ca.ratio_percent) {
          cj["ratio_percent"] = *ca.ratio_percent;
          cj["ratio_str"] = fmt1(*ca.ratio_percent);
        }
        j["cluster"] = cj;
        if (ca.good_avg && ca.bad_avg && ca.ratio_percent) {
          cluster_csv = "good_avg,bad_avg,ratio_percent\n" + fmt(*ca.good_avg) + "," +
                        fmt(*ca.bad_avg) + "," + fmt1(*ca.ratio_percent) + "\n";
        }
      }
    }

    if (!opts.out_dir.empty()) {
      ensure_dir(opts.out_dir);
      const fs::path dir(opts.out_dir);
      save_json_text(j, (dir / "report.json").string());
      if (!iter_csv.empty()) write_text((dir / "report_iterations.csv").string(), iter_csv);
      if (!cluster_csv.empty()) write_text((dir / "report_cluster.csv").string(), cluster_csv);
    }
    print_json(j);
    return 0;
  });
}

int cmd_oracle(const OracleOpts& opts) {
  return guarded([&] {
    const Network n1 = load_net_checked(opts.net1_path);
    const Network n2 = load_net_checked(opts.net2_path);
    const InputDomain domain = load_domain_checked(opts.domain_path);
    const DistanceSpec spec = parse_distance(opts.distance);
    const OracleResult res = exact_max_distance(n1, n2, domain, spec);
    json j{{"schema", "pdtkit/oracle/1"},
           {"tool_version", kToolVersion},
           {"config", json{{"net1", opts.net1_path}, {"net2", opts.net2_path},
                           {"domain", opts.domain_path}, {"distance", opts.distance},
                           {"grid_resolution", opts.grid_resolution}}},
           {"value", res.value},
           {"argmax", res.argmax},
           {"patterns", res.patterns}};
    if (res.max_c) j["max_c"] = *res.max_c;
    if (res.max_cprime) j["max_cprime"] = *res.max_cprime;
    if (spec.kind == DistanceKind::CDistance) {
      j["c_feasible"] = res.c_feasible;
      j["cprime_feasible"] = res.cprime_feasible;
    }
    if (opts.grid_resolution > 0) {
      json grid = json::array();
      for (const Box& box : domain.boxes)
        grid.push_back(grid_max_distance(n1, n2, box, spec, opts.grid_resolution));
      j["grid_per_box"] = std::move(grid);
    }
    print_json(j);
    if (!opts.out_path.empty()) save_json_text(j, opts.out_path);
    return 0;
  });
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"agreement scoring and filtering for ReLU networks over box domains"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  int rc = 0;

  VerifyOpts vo;
  auto* verify_cmd = app.add_subcommand("verify", "decide an output-condition query over a domain");
  verify_cmd->add_option("--net", vo.net_path, "model file (.ffnt)")->required();
  verify_cmd->add_option("--domain", vo.domain_path, "domain JSON")->required();
  verify_cmd->add_option("--constraint", vo.constraints,
                         "output condition 'c0,c1,...>=rhs' (repeatable)");
  verify_cmd->add_option("--max-nodes", vo.max_nodes, "node budget");
  verify_cmd->add_option("--max-seconds", vo.max_seconds, "time budget, <=0 unlimited");
  verify_cmd->add_flag("--no-relax", vo.no_relax, "disable the linear relaxation");
  verify_cmd->add_option("--witness-tol", vo.witness_tol, "witness acceptance tolerance");
  verify_cmd->add_option("--out", vo.out_path, "write the result JSON here too");
  verify_cmd->callback([&] { rc = cmd_verify(vo); });

  PdtOpts po;
  auto* pdt_cmd = app.add_subcommand("pdt", "certify the pairwise disagreement threshold");
  pdt_cmd->add_option("--net1", po.net1_path, "first model")->required();
  pdt_cmd->add_option("--net2", po.net2_path, "second model")->required();
  pdt_cmd->add_option("--domain", po.domain_path, "domain JSON")->required();
  pdt_cmd->add_option("--distance", po.distance, "l1 or cdist");
  pdt_cmd->add_option("--M", po.M, "search cap");
  pdt_cmd->add_option("--eps", po.eps, "certified interval width");
  pdt_cmd->add_option("--max-nodes", po.max_nodes, "node budget per query");
  pdt_cmd->add_option("--max-seconds", po.max_seconds, "time budget per query");
  pdt_cmd->add_flag("--no-relax", po.no_relax, "disable the linear relaxation");
  pdt_cmd->add_option("--out", po.out_path, "write the result JSON here too");
  pdt_cmd->callback([&] { rc = cmd_pdt(po); });

  SelectOpts so;
  auto* select_cmd = app.add_subcommand("select", "iteratively filter a pool by disagreement");
  select_cmd->add_option("--table", so.table_path, "PDT table (JSON artifact or CSV matrix)")
      ->required();
  select_cmd->add_option("--criterion", so.criterion, "percentile, max or combined");
  select_cmd->add_option("--p", so.p, "percent removed per round (percentile)");
  select_cmd->add_option("--iterations", so.iterations, "iteration cap");
  select_cmd->add_option("--similarity-delta", so.similarity_delta,
                         "score spread that counts as converged");
  select_cmd->add_option("--min-survivors", so.min_survivors, "never filter below this");
  select_cmd->add_option("--out-dir", so.out_dir, "artifact directory");
  select_cmd->callback([&] { rc = cmd_select(so); });

  AttackOpts ao;
  auto* attack_cmd = app.add_subcommand("attack", "gradient lower-bound estimate of the PDT");
  attack_cmd->add_option("--net1", ao.net1_path, "first model")->required();
  attack_cmd->add_option("--net2", ao.net2_path, "second model")->required();
  attack_cmd->add_option("--domain", ao.domain_path, "domain JSON")->required();
  attack_cmd->add_option("--distance", ao.distance, "l1 or cdist");
  attack_cmd->add_option("--method", ao.method, "auto, fgsm, pgd or constrained");
  attack_cmd->add_option("--T", ao.T, "outer iterations");
  attack_cmd->add_option("--T-x", ao.T_x, "input steps per outer iteration");
  attack_cmd->add_option("--T-lambda", ao.T_lambda, "multiplier steps per outer iteration");
  attack_cmd->add_option("--eps-x", ao.eps_x, "input step size, <=0 auto");
  attack_cmd->add_option("--eps-lambda", ao.eps_lambda, "multiplier step size, <=0 auto");
  attack_cmd->add_flag("--no-sign", ao.no_sign, "raw gradient steps instead of sign steps");
  attack_cmd->add_option("--restarts", ao.restarts, "extra random starts");
  attack_cmd->add_option("--seed", ao.seed, "random seed");
  attack_cmd->add_option("--out", ao.out_path, "write the result JSON here too");
  attack_cmd->callback([&] { rc = cmd_attack(ao); });

  SampleOpts mo;
  auto* sample_cmd = app.add_subcommand("sample", "sampling lower-bound estimate of the PDT");
  sample_cmd->add_option("--net1", mo.net1_path, "first model")->required();
  sample_cmd->add_option("--net2", mo.net2_path, "second model")->required();
  sample_cmd->add_option("--domain", mo.domain_path, "domain JSON")->required();
  sample_cmd->add_option("--distance", mo.distance, "l1 or cdist");
  sample_cmd->add_option("--samples", mo.n_samples, "number of samples");
  sample_cmd->add_option("--seed", mo.seed, "random seed");
  sample_cmd->add_option("--out", mo.out_path, "write the result JSON here too");
  sample_cmd->callback([&] { rc = cmd_sample(mo); });

  TrainArithOpts to;
  auto* train_cmd = app.add_subcommand("train-arith", "train sum-task regressors");
  train_cmd->add_option("--seeds", to.seeds, "training seeds: '0-9', '1,3,5' or one number");
  train_cmd->add_option("--n", to.n, "training set size");
  train_cmd->add_option("--d", to.d, "input dimension");
  train_cmd->add_option("--lo", to.lo, "training range lower end");
  train_cmd->add_option("--hi", to.hi, "training range upper end");
  train_cmd->add_option("--data-seed", to.data_seed, "dataset seed");
  train_cmd->add_option("--epochs", to.epochs, "training epochs");
  train_cmd->add_option("--batch", to.batch_size, "batch size");
  train_cmd->add_option("--lr", to.learning_rate, "learning rate");
  train_cmd->add_option("--hidden", to.hidden, "hidden widths, e.g. 8,8");
  train_cmd->add_option("--eval-samples", to.eval_samples, "evaluation sample count");
  train_cmd->add_option("--eval-seed", to.eval_seed, "evaluation seed");
  train_cmd->add_option("--ood-lo", to.ood_lo, "out-of-range evaluation lower end");
  train_cmd->add_option("--ood-hi", to.ood_hi, "out-of-range evaluation upper end");
  train_cmd->add_option("--out-dir", to.out_dir, "where models and stats.csv go");
  train_cmd->callback([&] { rc = cmd_train_arith(to); });

  EnsembleOpts eo;
  auto* ens_cmd = app.add_subcommand("ensemble", "averaging-ensemble error statistics");
  ens_cmd->add_option("--net", eo.net_paths, "member model (repeatable)")->required();
  ens_cmd->add_option("--lo", eo.lo, "evaluation range lower end");
  ens_cmd->add_option("--hi", eo.hi, "evaluation range upper end");
  ens_cmd->add_option("--samples", eo.n_samples, "shared sample count");
  ens_cmd->add_option("--seed", eo.seed, "sampling seed");
  ens_cmd->add_option("--out", eo.out_path, "write the result JSON here too");
  ens_cmd->callback([&] { rc = cmd_ensemble(eo); });

  PipelineOpts plo;
  auto* pipe_cmd = app.add_subcommand("pipeline", "full table + selection run");
  pipe_cmd->add_option("--net", plo.net_paths, "model file (repeat for the pool)")->required();
  pipe_cmd->add_option("--domain", plo.domain_path, "domain JSON")->required();
  pipe_cmd->add_option("--distance", plo.distance, "l1 or cdist");
  pipe_cmd->add_option("--M", plo.M, "search cap");
  pipe_cmd->add_option("--eps", plo.eps, "certified interval width");
  pipe_cmd->add_option("--max-nodes", plo.max_nodes, "node budget per query");
  pipe_cmd->add_option("--max-seconds", plo.max_seconds, "time budget per query");
  pipe_cmd->add_flag("--no-relax", plo.no_relax, "disable the linear relaxation");
  pipe_cmd->add_option("--criterion", plo.criterion, "percentile, max or combined");
  pipe_cmd->add_option("--p", plo.p, "percent removed per round (percentile)");
  pipe_cmd->add_option("--iterations", plo.iterations, "selection iteration cap");
  pipe_cmd->add_option("--similarity-delta", plo.similarity_delta,
                       "score spread that counts as converged");
  pipe_cmd->add_option("--min-survivors", plo.min_survivors, "never filter below this");
  pipe_cmd->add_option("--jobs", plo.jobs, "worker threads (0: PDTKIT_JOBS env, else 1)");
  pipe_cmd->add_option("--out-dir", plo.out_dir, "artifact directory")->required();
  pipe_cmd->callback([&] { rc = cmd_pipeline(plo); });

  CompareOpts co;
  auto* cmp_cmd = app.add_subcommand("compare-backends",
                                     "verified vs attack vs sampled tables and selections");
  cmp_cmd->add_option("--net", co.pipeline.net_paths, "model file (repeat for the pool)")
      ->required();
  cmp_cmd->add_option("--domain", co.pipeline.domain_path, "domain JSON")->required();
  cmp_cmd->add_option("--distance", co.pipeline.distance, "l1 or cdist");
  cmp_cmd->add_option("--M", co.pipeline.M, "search cap");
  cmp_cmd->add_option("--eps", co.pipeline.eps, "certified interval width");
  cmp_cmd->add_option("--max-nodes", co.pipeline.max_nodes, "node budget per query");
  cmp_cmd->add_option("--max-seconds", co.pipeline.max_seconds, "time budget per query");
  cmp_cmd->add_flag("--no-relax", co.pipeline.no_relax, "disable the linear relaxation");
  cmp_cmd->add_option("--criterion", co.pipeline.criterion, "percentile, max or combined");
  cmp_cmd->add_option("--p", co.pipeline.p, "percent removed per round (percentile)");
  cmp_cmd->add_option("--iterations", co.pipeline.iterations, "selection iteration cap");
  cmp_cmd->add_option("--similarity-delta", co.pipeline.similarity_delta,
                      "score spread that counts as converged");
  cmp_cmd->add_option("--min-survivors", co.pipeline.min_survivors, "never filter below this");
  cmp_cmd->add_option("--jobs", co.pipeline.jobs, "worker threads (0: PDTKIT_JOBS env, else 1)");
  cmp_cmd->add_option("--out-dir", co.pipeline.out_dir, "artifact directory")->required();
  cmp_cmd->add_option("--samples", co.n_samples, "samples per pair for the sampling backend");
  cmp_cmd->add_option("--restarts", co.restarts, "attack restarts per pair");
  cmp_cmd->add_option("--seed", co.seed, "base seed for attack/sampling backends");
  cmp_cmd->callback([&] { rc = cmd_compare_backends(co); });

  ReportOpts ro;
  auto* rep_cmd = app.add_subcommand("report", "aggregate artifacts into summaries");
  rep_cmd->add_option("--table", ro.table_path, "PDT table artifact")->required();
  rep_cmd->add_option("--selection", ro.selection_path, "selection artifact (optional)");
  rep_cmd->add_option("--labels", ro.labels_path, "good/bad labels JSON (optional)");
  rep_cmd->add_option("--out-dir", ro.out_dir, "artifact directory");
  rep_cmd->callback([&] { rc = cmd_report(ro); });

  OracleOpts oo;
  auto* orc_cmd = app.add_subcommand("oracle", "exhaustive ground-truth distance (test helper)");
  orc_cmd->group("");  // hidden
  orc_cmd->add_option("--net1", oo.net1_path, "first model")->required();
  orc_cmd->add_option("--net2", oo.net2_path, "second model")->required();
  orc_cmd->add_option("--domain", oo.domain_path, "domain JSON")->required();
  orc_cmd->add_option("--distance", oo.distance, "l1 or cdist");
  orc_cmd->add_option("--grid-resolution", oo.grid_resolution,
                      "also run the dense grid at this spacing (dim <= 3)");
  orc_cmd->add_option("--out", oo.out_path, "write the result JSON here too");
  orc_cmd->callback([&] { rc = cmd_oracle(oo); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return rc;
}

}  // namespace pdtkit::cli
