#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kahlerlab/functionals.hpp"
#include "kahlerlab/geometry.hpp"
#include "kahlerlab/report.hpp"

namespace kahlerlab {

// q = (1 + eps) / (1 + eps/2)
[[nodiscard]] double q_from_epsilon(double epsilon0);

struct SweepConfig {
  // [model]
  int dim = 2;
  int resolution = 6;
  double side_length = 1.0;
  FamilyKind family = FamilyKind::kProductCollapse;
  int fiber_dims = 1;
  std::vector<double> t_values = {1.0, 0.3, 0.1, 0.03};  // explicit grid, else the range below
  double t_min = 0.03;
  double t_max = 1.0;
  int t_steps = 4;

  // [spectral]
  int num_eigs = 0;  // 0: full spectrum on the dense path, 200 otherwise
  double eig_tol = 1e-9;
  int max_dense = 4096;

  // [bounds]
  double q = 4.0 / 3.0;
  double p = 0.0;  // entropy exponent; 0 means n + 1
  double beta = 0.5;
  double epsilon = 0.0;  // Green moment exponent; 0 means 2(q-1)/(2-q)
  double class_cap = 4.0;
  double headroom = 10.0;
  double heat_t_min = 0.02;
  double heat_t_max = 1.0;
  int heat_t_steps = 12;
  int growth_max_index = 100;

  // [probes]
  int probes = 6;
  int centers = 10;
  int radii_steps = 24;
  int battery_size = 200;
  int moser_instances = 4;
  int local_functions = 4;
  std::uint64_t seed = 20240601;

  // [run]
  std::vector<std::string> checks;  // empty: all applicable; {"none"}: no checks
  int threads = 0;                  // 0: hardware concurrency
  std::string output = "kahlerlab_out";

  [[nodiscard]] std::vector<double> family_grid() const;
  [[nodiscard]] double entropy_exponent() const { return p > 0.0 ? p : dim + 1.0; }
  [[nodiscard]] double green_epsilon() const {
    return epsilon > 0.0 ? epsilon : 2.0 * (q - 1.0) / (2.0 - q);
  }
  [[nodiscard]] bool enabled(const std::string& check) const;

  // Throws a config error naming the offending field.
  void validate() const;

  // Sets one "section.key" entry from text.
  void set(const std::string& key, const std::string& value);

  // Canonical "section.key = value" listing used for hashing and provenance.
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] std::string hash() const;
};

[[nodiscard]] SweepConfig load_config(const std::filesystem::path& path);
[[nodiscard]] SweepConfig parse_config(std::istream& in);

// Every check the sweep can run, with its judging rule.
[[nodiscard]] const std::vector<std::pair<std::string, CheckKind>>& check_catalog();
[[nodiscard]] double check_limit(const std::string& check);

struct MemberResult {
  double t = 0.0;
  bool ok = false;
  std::string error;
  AdmissibilityRecord admissibility;
  std::vector<BoundReport> reports;
};

struct Verdict {
  std::string check;
  CheckKind kind = CheckKind::kUpper;
  bool uniform = false;
  double max = 0.0;
  double median = 0.0;
  double min = 0.0;
};

struct SweepReport {
  SweepConfig config;
  std::vector<MemberResult> members;
  std::vector<Verdict> verdicts;

  [[nodiscard]] bool all_passed() const;
};

struct UniformityInput {
  CheckKind kind;
  double limit;
  double headroom;
};

// max <= headroom * median with all values finite (upper), all > 0 (floor)
// or all <= limit (limit).
[[nodiscard]] Verdict judge(const std::string& check, const std::vector<double>& fitted,
                            const UniformityInput& rule);

[[nodiscard]] MemberResult evaluate_member(const SweepConfig& config, double t);
[[nodiscard]] SweepReport run_sweep(const SweepConfig& config);

void write_reports_csv(const SweepReport& report, std::ostream& out);
void write_admissibility_csv(const SweepReport& report, std::ostream& out);
void write_summary_json(const SweepReport& report, std::ostream& out);
void emit_reports(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace kahlerlab
