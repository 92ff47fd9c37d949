// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "conicnmf/report_io.hpp"

namespace conicnmf {

// What a campaign factorizes. Random instances follow the experiment
// protocol of drawing a fresh matrix per initialization.
struct InstanceSpec {
  enum class Kind { Builtin, File, Random };
  Kind kind = Kind::Builtin;
  std::string name = "hex_a2";  // builtin name or file path
  int F = 10, N = 10, K = 5;    // generator shape (Random only)

  NonnegMatrix materialize(std::uint64_t run_seed) const {
    switch (kind) {
      case Kind::Builtin:
        return builtin_matrix(name);
      case Kind::File:
        return load_matrix(name);
      case Kind::Random:
        return gen_random_product(F, N, K, Rng::split(run_seed, 0x52414e44));
    }
    throw lookup_error("bad instance kind");
  }

  std::string label() const {
    if (kind == Kind::Random)
      return "random_" + std::to_string(F) + "x" + std::to_string(N) + "_r" +
             std::to_string(K);
    return std::filesystem::path(name).stem().string();
  }
};

struct Campaign {
  InstanceSpec instance;
  int K = 0;  // 0 = use the instance's known nonnegative rank
  std::vector<Formulation> tags = {Formulation::SocOver};
  int n_inits = 20;  // the reference protocol uses 100; 20 is desk scale
  DriverConfig driver;
  std::uint64_t master_seed = 1;
  std::string out_dir;  // empty = no files
  int jobs = 0;         // 0 = CONIC_NMF_JOBS env or hardware concurrency
  bool write_traces = true;
};

struct CampaignRow {
  Formulation tag = Formulation::SocOver;
  int n_inits = 0;
  int successes = 0;
  int aborted = 0;
  std::vector<double> final_errors;        // by run index
  std::vector<int> iterations;             // by run index
  std::vector<std::uint64_t> run_seeds;    // by run index
  std::optional<double> median_iters_to_success;
  bool all_rate_checks_ok = true;
  double max_descent_violation = 0.0;
  bool all_iterates_feasible = true;
  double wall_time_s = 0.0;
};

struct CampaignSummary {
  std::string instance;
  int K = 0;
  std::vector<CampaignRow> rows;  // one per formulation tag
  double wall_time_s = 0.0;
};

inline int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CONIC_NMF_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Timing fields are deliberately absent: identical campaign specs must
// produce byte-identical summaries.
inline nlohmann::json campaign_summary_json(const CampaignSummary& s) {
  nlohmann::json j;
  j["instance"] = s.instance;
  j["K"] = s.K;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : s.rows) {
    nlohmann::json r;
    r["formulation"] = to_string(row.tag);
    r["n_inits"] = row.n_inits;
    r["successes"] = row.successes;
    r["aborted"] = row.aborted;
    r["final_errors"] = row.final_errors;
    r["iterations"] = row.iterations;
    r["run_seeds"] = row.run_seeds;
    if (row.median_iters_to_success)
      r["median_iters_to_success"] = *row.median_iters_to_success;
    else
      r["median_iters_to_success"] = nullptr;
    r["all_rate_checks_ok"] = row.all_rate_checks_ok;
    r["max_descent_violation"] = row.max_descent_violation;
    r["all_iterates_feasible"] = row.all_iterates_feasible;
    j["rows"].push_back(std::move(r));
  }
  return j;
}

// Runs n_inits independent seeded runs per formulation. Deterministic for
// a fixed campaign spec: per-run seeds come from a splittable fan-out of
// the master seed, results are keyed by run index, and summaries contain
// no timing-dependent fields.
inline CampaignSummary run_campaign(const Campaign& campaign) {
  const auto t_start = std::chrono::steady_clock::now();
  CampaignSummary summary;
  summary.instance = campaign.instance.label();

  struct Task {
    int tag_idx;
    int run_idx;
  };
  std::vector<Task> tasks;
  for (int ti = 0; ti < static_cast<int>(campaign.tags.size()); ++ti)
    for (int ri = 0; ri < campaign.n_inits; ++ri)
      tasks.push_back({ti, ri});

  std::vector<std::vector<RunReport>> results(campaign.tags.size());
  for (auto& r : results) r.resize(campaign.n_inits);

  const int jobs =
      std::max(1, std::min<int>(resolve_jobs(campaign.jobs),
                                static_cast<int>(tasks.size())));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const auto [ti, ri] = tasks[idx];
      const std::uint64_t run_seed = Rng::split(
          campaign.master_seed, static_cast<std::uint64_t>(ti) * 1000003 + ri);
      DriverConfig cfg = campaign.driver;
      cfg.seed = run_seed;
      NonnegMatrix V = campaign.instance.materialize(run_seed);
      const int K = campaign.K > 0
                        ? campaign.K
                        : V.known_nonneg_rank().value_or(
                              std::min<int>(V.rows(), V.cols()));
      try {
        results[ti][ri] = run(V, K, campaign.tags[ti], cfg);
      } catch (const std::exception& e) {
        RunReport rep;
        rep.instance = V.name();
        rep.seed = run_seed;
        rep.tag = campaign.tags[ti];
        rep.aborted = true;
        rep.abort_reason = e.what();
        rep.rate_check_ok = true;  // nothing ran, nothing to violate
        results[ti][ri] = std::move(rep);
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  summary.K = campaign.K;
  for (int ti = 0; ti < static_cast<int>(campaign.tags.size()); ++ti) {
    CampaignRow row;
    row.tag = campaign.tags[ti];
    row.n_inits = campaign.n_inits;
    std::vector<int> success_iters;
    for (int ri = 0; ri < campaign.n_inits; ++ri) {
      const auto& rep = results[ti][ri];
      row.final_errors.push_back(rep.final_error);
      row.iterations.push_back(rep.iterations);
      row.run_seeds.push_back(rep.seed);
      if (rep.success) {
        ++row.successes;
        success_iters.push_back(rep.iterations);
      }
      if (rep.aborted) ++row.aborted;
      if (!rep.rate_check_ok) row.all_rate_checks_ok = false;
      row.max_descent_violation =
          std::max(row.max_descent_violation, rep.descent_violation);
      if (!rep.iterates_feasible) row.all_iterates_feasible = false;
      row.wall_time_s += rep.wall_time_s;
      if (summary.K == 0) summary.K = rep.K;
    }
    if (!success_iters.empty()) {
      std::sort(success_iters.begin(), success_iters.end());
      row.median_iters_to_success =
          success_iters[success_iters.size() / 2];
    }
    summary.rows.push_back(std::move(row));
  }
  summary.wall_time_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();

  // All file writes happen here, after the pool joined, on one thread.
  if (!campaign.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(campaign.out_dir);
    if (campaign.write_traces)
      for (int ti = 0; ti < static_cast<int>(campaign.tags.size()); ++ti)
        for (int ri = 0; ri < campaign.n_inits; ++ri) {
          const auto stem = campaign.out_dir + "/run_" +
                            to_string(campaign.tags[ti]) + "_" +
                            std::to_string(ri);
          save_trace_csv(results[ti][ri], stem + "_trace.csv");
          save_report(results[ti][ri], stem + "_report.json");
        }
    std::ofstream out(campaign.out_dir + "/summary.json");
    out << campaign_summary_json(summary).dump(2) << "\n";
  }
  return summary;
}

// One console row in the style of the success-count tables.
inline std::string campaign_table_row(const CampaignSummary& s) {
  std::string line = s.instance + " (K=" + std::to_string(s.K) + ")";
  for (const auto& row : s.rows)
    line += "  " + to_string(row.tag) + ": " + std::to_string(row.successes) +
            "/" + std::to_string(row.n_inits);
  return line;
}

}  // namespace conicnmf
