// Acceptance gate: one PASS/FAIL line per criterion, pinned tolerances.
//
// usage: acceptance <kahlerlab-cli> <scratch-dir>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

#include "kahlerlab/davies.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/functionals.hpp"
#include "kahlerlab/harness.hpp"
#include "kahlerlab/moser.hpp"
#include "kahlerlab/spectral.hpp"

using namespace kltest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const Verdict* find_verdict(const SweepReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.check == name) return &v;
  return nullptr;
}

// [1]
Outcome davies_constants() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = davies_integrals(0.5);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(d.a_beta - 2.455) <= 0.01 && std::abs(d.b_beta - 2.008) <= 0.01 &&
                  std::abs(d.c_beta - 0.192) <= 0.005 && secs < 1.0;
  return {ok, fmt("A=%.10f B=%.10f C=%.10f (tol 0.01/0.01/0.005) in %.3fs (< 1s)", d.a_beta, d.b_beta,
                  d.c_beta, secs)};
}

// [2]
Outcome schedule_identities() {
  double worst_unit = 0.0, worst_b = 0.0;
  for (auto [t, beta] : {std::pair{1.0, 0.5}, std::pair{3.0, 0.25}, std::pair{10.0, 0.75}}) {
    worst_unit = std::max(worst_unit, std::abs(schedule_unit_integral(t, beta).value - 1.0));
    const double tb = t * davies_integrals(beta).b_beta;
    worst_b = std::max(worst_b, std::abs(schedule_b_integral(t, beta).value - tb) / tb);
  }
  return {worst_unit <= 1e-10 && worst_b <= 1e-6,
          fmt("max |int r'/r^2 - 1| = %.2e (tol 1e-10), max rel |int (r-2)^2/(r-1) - T B| = %.2e (tol 1e-6)",
              worst_unit, worst_b)};
}

// [3]
Outcome flat_spectrum() {
  EigenOptions it;
  it.force_iterative = true;
  const auto s128 = eigendecompose(flat_operator(1, 128), 13, 1e-10, it);
  const auto s64 = eigendecompose(flat_operator(1, 64), 13, 1e-10, it);
  const double exact[] = {1, 1, 1, 1, 2, 2, 2, 2, 4, 4};
  double worst = 0.0;
  for (int k = 0; k < 10; ++k)
    worst = std::max(worst, std::abs(s128.eigenvalues(k + 1) / (kPi * kPi * exact[k]) - 1.0));
  const double e64 = std::abs(s64.eigenvalues(1) - kPi * kPi);
  const double e128 = std::abs(s128.eigenvalues(1) - kPi * kPi);
  const double ratio = e64 / e128;
  return {worst <= 5e-3 && ratio >= 3.5 && ratio <= 4.5,
          fmt("max rel error of first 10 nonzero at 128^2 = %.3e (tol 5e-3), error ratio 64/128 = %.4f (in [3.5, 4.5])",
              worst, ratio)};
}

// [4]
Outcome heat_oracle() {
  const auto op = flat_operator(1, 32);
  const auto s = eigendecompose(op, static_cast<int>(op.size()), 1e-11);
  const Eigen::MatrixXd& phi = s.eigenfunctions;
  auto spectral = [&](double t) {
    const Eigen::VectorXd e = (-t * s.eigenvalues.array()).exp();
    return Eigen::MatrixXd(phi * e.asDiagonal() * phi.transpose());
  };
  double oracle = 0.0;
  for (double t : {0.05, 0.2, 1.0}) {
    const Eigen::MatrixXd a = spectral(t);
    const Eigen::MatrixXd b = expm_heat(op, t);
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    oracle = std::max(oracle, (a - b).cwiseAbs().maxCoeff() / scale);
  }
  const Eigen::MatrixXd h1 = spectral(0.1), h2 = spectral(0.2), h3 = spectral(0.3);
  const Eigen::MatrixXd semi = h1 * s.mass.asDiagonal() * h2;
  const double semigroup = (semi - h3).cwiseAbs().maxCoeff() / std::max(1.0, h3.cwiseAbs().maxCoeff());
  double complete = 0.0;
  for (double t : {0.01, 0.1, 1.0}) complete = std::max(complete, ((spectral(t) * s.mass).array() - 1.0).abs().maxCoeff());
  return {oracle <= 1e-8 && semigroup <= 1e-10 && complete <= 1e-10,
          fmt("32^2: spectral vs expm %.2e (tol 1e-8), semigroup %.2e (tol 1e-10), stochastic completeness %.2e (tol 1e-10)",
              oracle, semigroup, complete)};
}

// [5] useful2 rows from the product sweep are folded in by the caller.
Outcome green_exactness(const SweepReport& product_sweep) {
  double eq = 0.0, mean = 0.0, agree = 0.0, useful2 = 0.0;
  std::size_t members = 0;
  for (double t : {1.0, 0.3, 0.1, 0.03}) {
    const auto m = build_family_member({t, FamilyKind::kPotentialPinch}, unit_torus(1, 32), 1);
    const auto op = assemble_laplacian(m);
    const auto spec = eigendecompose(op, static_cast<int>(op.size()), 1e-11);
    const GreenSolver solver(op);
    ++members;
    for (NodeId x : spread_nodes(op.domain, 6, 99)) {
      const auto g = solver.solve(x);
      const auto r = green_equation_residual(op, g);
      eq = std::max(eq, r.equation);
      mean = std::max(mean, r.mean);
      agree = std::max(agree, (g.values - green_function_spectral(spec, x).values).cwiseAbs().maxCoeff());
      useful2 = std::max(useful2, green_integral_moments(op, g, 1.0, 0.5, g.lower_constant()).normalized_2);
    }
  }
  for (const auto& mem : product_sweep.members) {
    ++members;
    for (const auto& r : mem.reports)
      if (r.check == "green_useful2") useful2 = std::max(useful2, r.fitted_constant);
    if (!mem.ok) useful2 = std::numeric_limits<double>::infinity();
  }
  return {eq <= 1e-9 && mean <= 1e-9 && agree <= 1e-8 && useful2 <= 1.0 + 1e-6,
          fmt("residual %.2e, mean %.2e (tol 1e-9), spectral vs direct %.2e (tol 1e-8), max beta V^-beta moment_2 = %.6f over %zu members (tol 1 + 1e-6)",
              eq, mean, agree, useful2, members)};
}

// [6]
Outcome green_representation() {
  FieldGen gen(2024);
  double worst = 0.0;
  for (double t : {1.0, 0.1}) {
    const auto op = assemble_laplacian(build_family_member({t, FamilyKind::kPotentialPinch}, unit_torus(1, 32), 1));
    const GreenSolver solver(op);
    std::vector<GreenFunction> greens;
    for (NodeId x : spread_nodes(op.domain, 8, 5)) greens.push_back(solver.solve(x));
    for (int k = 0; k < 10; ++k) {
      const ScalarField u = k % 2 ? gen.noise(op.size()) : gen.smooth(op.domain, 4, 6);
      worst = std::max(worst, green_representation_residual(op, greens, u));
    }
  }
  return {worst <= 1e-9, fmt("20 seeded u on 32^2, max residual %.2e (tol 1e-9)", worst)};
}

SweepReport product_sweep() {
  SweepConfig c;
  c.dim = 2;
  c.resolution = 8;
  c.family = FamilyKind::kProductCollapse;
  c.t_values = {1.0, 0.3, 0.1, 0.03};
  c.q = 4.0 / 3.0;
  c.battery_size = 200;
  c.centers = 10;
  c.heat_t_min = 0.02;
  c.heat_t_max = 1.0;
  c.growth_max_index = 100;
  c.checks = {"sobolev", "heat_trace", "eigen_growth", "noncollapsing", "green_useful2"};
  return run_sweep(c);
}

std::string verdict_text(const Verdict* v) {
  if (!v) return "missing";
  return fmt("%s max=%.4g median=%.4g min=%.4g", v->uniform ? "uniform" : "NOT uniform", v->max, v->median, v->min);
}

bool members_ok(const SweepReport& r) {
  return std::all_of(r.members.begin(), r.members.end(), [](const auto& m) { return m.ok; });
}

// [7]
Outcome sobolev_uniformity(const SweepReport& r, double secs) {
  const Verdict* v = find_verdict(r, "sobolev");
  // scale invariance of the battery constant under omega -> 2 omega
  const auto d = unit_torus(2, 8);
  const auto ref = build_flat_torus(d, true);
  const auto m = build_family_member({0.1, FamilyKind::kProductCollapse}, d, 1);
  const auto battery = sobolev_battery(d, 200, SweepConfig{}.seed + 2);
  const double i = intersection_number(m, ref);
  const auto a = assemble_laplacian(m);
  const auto b = assemble_laplacian(scale_metric(m, 2.0));
  const double ca = sobolev_battery_check(a, battery, SobolevForm::kStandard, 4.0 / 3.0, i, a.volume).fitted_constant;
  const double cb = sobolev_battery_check(b, battery, SobolevForm::kStandard, 4.0 / 3.0, 2.0 * i, b.volume).fitted_constant;
  const double inv = std::abs(ca - cb) / ca;
  return {members_ok(r) && v && v->uniform && inv <= 1e-10 && secs <= 600.0,
          fmt("T^4 product t in {1,0.3,0.1,0.03}, 200 functions: %s (headroom 10); scale invariance %.2e (tol 1e-10); sweep %.1fs (<= 600s)",
              verdict_text(v).c_str(), inv, secs)};
}

// [8]
Outcome heat_trace_growth(const SweepReport& r) {
  const Verdict* h = find_verdict(r, "heat_trace");
  const Verdict* g = find_verdict(r, "eigen_growth");
  return {members_ok(r) && h && g && h->uniform && g->uniform,
          fmt("heat trace %s; eigen growth floor over k <= 100: %.6g (%s)", verdict_text(h).c_str(),
              g ? g->min : 0.0, g && g->uniform ? "> 0" : "NOT > 0")};
}

// [9]
Outcome noncollapsing(const SweepReport& r) {
  const Verdict* v = find_verdict(r, "noncollapsing");
  return {members_ok(r) && v && v->uniform,
          fmt("10 centers, volume ratio <= 1/2: family floor kappa = %.6g (%s)", v ? v->min : 0.0,
              v && v->uniform ? "> 0" : "NOT > 0")};
}

// [10]
Outcome moser_endpoint() {
  const double q = 4.0 / 3.0;
  std::vector<double> fitted;
  double oracle = 0.0;
  int instances = 0;
  std::uint64_t seed = 500;
  for (double t : {1.0, 0.3, 0.1, 0.03}) {
    const auto op = assemble_laplacian(build_family_member({t, FamilyKind::kPotentialPinch}, unit_torus(1, 32), 1));
    const auto centers = spread_nodes(op.domain, 5, seed);
    std::vector<NodeId> src(centers.begin(), centers.begin() + 1);
    const double diam = geodesic_diameter(op, src);
    for (int j = 0; j < 5; ++j) {
      const double big = diam * (0.25 + 0.04 * j);
      const auto inst = generate_subharmonic_instance(op, centers[static_cast<std::size_t>(j)], 0.5 * big, big, q, ++seed, true);
      oracle = std::max(oracle, inst.oracle_deviation);
      (void)verify_subsolution(op, inst.problem);
      fitted.push_back(moser_sup_bound_check(inst.problem, op, op.volume, q).fitted_constant);
      ++instances;
    }
  }
  const auto v = judge("moser", fitted, {CheckKind::kUpper, 0.0, 10.0});

  // a corrupted instance must be rejected at the corrupted node
  const auto op = flat_operator(1, 32);
  auto inst = generate_subharmonic_instance(op, 0, 0.3, 0.6, q, 77, false);
  const NodeId bad = op.domain.shift(op.domain.shift(0, 0, 2), 1, 1);
  inst.problem.u(static_cast<Eigen::Index>(bad)) += 1.0;
  bool rejected = false;
  try {
    (void)moser_sup_bound_check(inst.problem, op, op.volume, q);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::kPrecondition &&
               std::string(e.what()).find("node " + std::to_string(bad) + " ") != std::string::npos;
  }
  return {v.uniform && oracle <= 1e-8 && rejected,
          fmt("%d instances on 32^2, dense oracle deviation %.2e (tol 1e-8), fitted C max=%.4g median=%.4g (headroom 10: %s), corrupted node %zu %s",
              instances, oracle, v.max, v.median, v.uniform ? "ok" : "FAIL", bad,
              rejected ? "rejected with location" : "NOT rejected")};
}

// [11]
Outcome determinism(const std::string& cli, const std::filesystem::path& scratch) {
  std::filesystem::remove_all(scratch);
  std::filesystem::create_directories(scratch);
  auto run = [&](const std::string& out) {
    const std::string cmd = cli + " sweep --dim 1 --grid 14 --family potential_pinch --t-min 0.05 --t-max 1 --t-steps 3 --seed 31 --threads 3 --out " +
                            (scratch / out).string() + " > " + (scratch / (out + ".log")).string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const int a = run("first");
  const int b = run("second");
  bool same = true;
  for (const char* f : {"reports.csv", "admissibility.csv", "summary.json"})
    same = same && slurp(scratch / "first" / f) == slurp(scratch / "second" / f) &&
           !slurp(scratch / "first" / f).empty();
  const bool ran = (a == 0 || a == 1) && (b == 0 || b == 1);
  return {ran && same, fmt("two CLI sweeps (exit %d, %d): reports.csv, admissibility.csv, summary.json %s", a, b,
                           same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <kahlerlab-cli> <scratch-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::filesystem::path scratch = argv[2];

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s %-22s %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, "davies_constants", davies_constants);
  report(2, "schedule_identities", schedule_identities);
  report(3, "flat_spectrum", flat_spectrum);
  report(4, "heat_oracle", heat_oracle);

  const auto t0 = std::chrono::steady_clock::now();
  SweepReport sweep;
  std::string sweep_error;
  try {
    sweep = product_sweep();
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  const double sweep_secs = seconds_since(t0);
  for (const auto& m : sweep.members)
    if (!m.ok) std::printf("  product member t=%g failed: %s\n", m.t, m.error.c_str());
  auto with_sweep = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!sweep_error.empty()) return {false, "sweep failed: " + sweep_error};
      return fn();
    };
  };

  report(5, "green_exactness", with_sweep([&] { return green_exactness(sweep); }));
  report(6, "green_representation", green_representation);
  report(7, "sobolev_uniformity", with_sweep([&] { return sobolev_uniformity(sweep, sweep_secs); }));
  report(8, "heat_trace_growth", with_sweep([&] { return heat_trace_growth(sweep); }));
  report(9, "noncollapsing", with_sweep([&] { return noncollapsing(sweep); }));
  report(10, "moser_endpoint", moser_endpoint);
  report(11, "determinism", [&] { return determinism(cli, scratch); });

  std::printf("acceptance: %d/11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
