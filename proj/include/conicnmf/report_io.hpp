// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "conicnmf/fw.hpp"

namespace conicnmf {

inline nlohmann::json report_to_json(const RunReport& r,
                                     bool include_timings = true) {
  nlohmann::json j;
  j["instance"] = r.instance;
  j["F"] = r.F;
  j["N"] = r.N;
  j["K"] = r.K;
  j["formulation"] = to_string(r.tag);
  j["step_rule"] = to_string(r.step_rule);
  j["seed"] = r.seed;
  j["maxiter"] = r.maxiter;
  j["scale"] = r.scale;
  j["iterations"] = r.iterations;
  j["phi0"] = r.phi0;
  j["phi_lower_bound"] = r.phi_lb;
  j["final_error"] = r.final_error;
  j["success"] = r.success;
  j["refined"] = r.refined;
  if (r.refined) j["error_before_refine"] = r.error_before_refine;
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_reason"] = r.abort_reason;
  j["rate_check_ok"] = r.rate_check_ok;
  j["descent_violation"] = r.descent_violation;
  j["iterates_feasible"] = r.iterates_feasible;
  j["spi_events"] = nlohmann::json::array();
  for (const auto& ev : r.spi_events)
    j["spi_events"].push_back({{"iteration", ev.iteration},
                               {"zeroed_U", ev.zeroed_U},
                               {"zeroed_T", ev.zeroed_T},
                               {"rolled_back", ev.rolled_back},
                               {"rank_collapse", ev.rank_collapse},
                               {"error_before", ev.error_before}});
  if (include_timings) j["wall_time_s"] = r.wall_time_s;
  return j;
}

inline void save_report(const RunReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out << report_to_json(r).dump(2) << "\n";
}

// Trace columns consumed by the gap/error plots.
inline void save_trace_csv(const RunReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out << "iter,phi,gap,min_gap,rel_err,spi_event\n";
  char buf[160];
  for (size_t j = 0; j < r.phi_trace.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d\n", j + 1,
                  r.phi_trace[j], r.gap_trace[j], r.min_gap_trace[j],
                  r.rel_err_trace[j], static_cast<int>(r.spi_flag[j]));
    out << buf;
  }
}

inline void save_factor_csv(const Eigen::MatrixXd& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out << M.rows() << "," << M.cols() << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", M(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace conicnmf
