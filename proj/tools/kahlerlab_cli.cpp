// kahlerlab command line. Links only the C interface.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kahlerlab/kahlerlab.h"

namespace {

struct Shared {
  int grid = 0;
  int dim = 0;
  std::string family;
  double t_min = 0.0;
  double t_max = 0.0;
  int t_steps = 0;
  int num_eigs = -1;
  double q = 0.0;
  double beta = 0.0;
  long long seed = -1;
  std::string out;
  std::string config;
  std::string checks;
  int threads = -1;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--grid", s.grid, "nodes per real axis");
  app->add_option("--dim", s.dim, "complex dimension");
  app->add_option("--family", s.family, "product_collapse | potential_pinch | scaling | flat");
  app->add_option("--t-min", s.t_min, "smallest family parameter");
  app->add_option("--t-max", s.t_max, "largest family parameter");
  app->add_option("--t-steps", s.t_steps, "number of family members");
  app->add_option("--num-eigs", s.num_eigs, "eigenpairs to compute (0: all)");
  app->add_option("--q", s.q, "Sobolev exponent q > 1");
  app->add_option("--beta", s.beta, "Davies exponent in (0, 1)");
  app->add_option("--seed", s.seed, "random seed");
  app->add_option("--out", s.out, "output file or directory");
}

int report_error(kl_status st) {
  std::fprintf(stderr, "kahlerlab: %s: %s\n", kl_status_name(st), kl_last_error());
  return 2;
}

#define KL_TRY(expr)                       \
  do {                                     \
    const kl_status st_ = (expr);          \
    if (st_ != KL_OK) return report_error(st_); \
  } while (0)

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Handle {
 public:
  ~Handle() {
    kl_spectrum_free(spectrum);
    kl_operator_free(op);
    kl_metric_free(metric);
  }
  kl_metric* metric = nullptr;
  kl_operator* op = nullptr;
  kl_spectrum* spectrum = nullptr;
};

// Single member used by spectrum and heat.
int build_member(const Shared& s, double t, bool with_spectrum, Handle& h) {
  const int dim = s.dim > 0 ? s.dim : 1;
  const int grid = s.grid > 0 ? s.grid : 32;
  const std::string family = s.family.empty() ? "flat" : s.family;
  KL_TRY(kl_metric_create(dim, grid, family.c_str(), t, 1, &h.metric));
  KL_TRY(kl_operator_create(h.metric, &h.op));
  if (with_spectrum) {
    const unsigned long long seed = s.seed >= 0 ? static_cast<unsigned long long>(s.seed) : 0x5eedULL;
    KL_TRY(kl_spectrum_compute(h.op, s.num_eigs > 0 ? s.num_eigs : 0, 1e-10, 0, seed, &h.spectrum));
  }
  return 0;
}

std::FILE* open_out(const std::string& path) {
  if (path.empty() || path == "-") return stdout;
  return std::fopen(path.c_str(), "w");
}

int cmd_spectrum(const Shared& s, double t) {
  Handle h;
  if (int rc = build_member(s, t, true, h)) return rc;
  if (!s.out.empty() && s.out != "-") {
    KL_TRY(kl_spectrum_write_csv(h.spectrum, s.out.c_str()));
    return 0;
  }
  int count = 0;
  KL_TRY(kl_spectrum_count(h.spectrum, &count));
  std::vector<double> ev(static_cast<size_t>(count));
  KL_TRY(kl_spectrum_eigenvalues(h.spectrum, ev.data(), ev.size()));
  std::printf("k,lambda\n");
  for (int k = 0; k < count; ++k) std::printf("%d,%s\n", k, num(ev[static_cast<size_t>(k)]).c_str());
  return 0;
}

int cmd_heat(const Shared& s, double t, long long x, long long y) {
  Handle h;
  if (int rc = build_member(s, t, true, h)) return rc;
  const double a = s.t_min > 0.0 ? s.t_min : 0.02;
  const double b = s.t_max > 0.0 ? s.t_max : 1.0;
  const int steps = s.t_steps > 0 ? s.t_steps : 12;
  std::FILE* f = open_out(s.out);
  if (!f) {
    std::fprintf(stderr, "kahlerlab: io: cannot write %s\n", s.out.c_str());
    return 2;
  }
  std::fprintf(f, "t,H,tail_bound\n");
  int rc = 0;
  for (int j = 0; j < steps; ++j) {
    const double tt = steps == 1 ? b : a * std::pow(b / a, static_cast<double>(j) / (steps - 1));
    double value = 0.0, tail = 0.0;
    const kl_status st = kl_heat_kernel(h.spectrum, static_cast<size_t>(x), static_cast<size_t>(y),
                                        tt, &value, &tail);
    if (st != KL_OK) {
      rc = report_error(st);
      break;
    }
    std::fprintf(f, "%s,%s,%s\n", num(tt).c_str(), num(value).c_str(), num(tail).c_str());
  }
  if (f != stdout) std::fclose(f);
  return rc;
}

int cmd_davies(const Shared& s) {
  const double beta = s.beta > 0.0 ? s.beta : 0.5;
  double abc[3], err[3];
  KL_TRY(kl_davies(beta, 1e-10, abc, err));
  std::printf("beta,A,B,C,error_A,error_B,error_C\n%s,%s,%s,%s,%s,%s,%s\n", num(beta).c_str(),
              num(abc[0]).c_str(), num(abc[1]).c_str(), num(abc[2]).c_str(), num(err[0]).c_str(),
              num(err[1]).c_str(), num(err[2]).c_str());
  return 0;
}

// Builds a sweep configuration from --config plus the shared overrides.
int make_config(const Shared& s, const std::string& checks, kl_config** out) {
  if (!s.config.empty()) {
    KL_TRY(kl_config_load(s.config.c_str(), out));
  } else {
    KL_TRY(kl_config_create(out));
  }
  kl_config* c = *out;
  auto set = [&](const char* key, const std::string& v) { return kl_config_set(c, key, v.c_str()); };
  if (s.grid > 0) KL_TRY(set("model.resolution", std::to_string(s.grid)));
  if (s.dim > 0) KL_TRY(set("model.dim", std::to_string(s.dim)));
  if (!s.family.empty()) KL_TRY(set("model.family", s.family));
  if (s.t_min > 0.0) KL_TRY(set("model.t_min", num(s.t_min)));
  if (s.t_max > 0.0) KL_TRY(set("model.t_max", num(s.t_max)));
  if (s.t_steps > 0) KL_TRY(set("model.t_steps", std::to_string(s.t_steps)));
  if (s.num_eigs >= 0) KL_TRY(set("spectral.num_eigs", std::to_string(s.num_eigs)));
  if (s.q > 0.0) KL_TRY(set("bounds.q", num(s.q)));
  if (s.beta > 0.0) KL_TRY(set("bounds.beta", num(s.beta)));
  if (s.seed >= 0) KL_TRY(set("probes.seed", std::to_string(s.seed)));
  if (!s.out.empty()) KL_TRY(set("run.output", s.out));
  if (s.threads >= 0) KL_TRY(set("run.threads", std::to_string(s.threads)));
  const std::string& list = s.checks.empty() ? checks : s.checks;
  if (!list.empty()) KL_TRY(set("run.checks", list));
  KL_TRY(kl_config_validate(c));
  return 0;
}

int cmd_sweep(const Shared& s, const std::string& checks) {
  kl_config* cfg = nullptr;
  if (int rc = make_config(s, checks, &cfg)) {
    kl_config_free(cfg);
    return rc;
  }
  kl_report* rep = nullptr;
  const kl_status st = kl_sweep_run(cfg, &rep);
  kl_config_free(cfg);
  if (st != KL_OK) return report_error(st);

  const std::string dir = s.out.empty() ? "kahlerlab_out" : s.out;
  int rc = 0;
  if (const kl_status w = kl_report_write(rep, dir.c_str()); w != KL_OK) rc = report_error(w);

  size_t members = 0, verdicts = 0;
  kl_report_member_count(rep, &members);
  kl_report_verdict_count(rep, &verdicts);
  for (size_t i = 0; i < members; ++i) {
    double t = 0.0;
    int ok = 0;
    const char* err = nullptr;
    kl_report_member(rep, i, &t, &ok, &err);
    if (!ok) std::fprintf(stderr, "member t=%s failed: %s\n", num(t).c_str(), err ? err : "");
  }
  std::printf("%-22s %-8s %-24s %-24s %s\n", "check", "uniform", "max", "median", "min");
  for (size_t i = 0; i < verdicts; ++i) {
    const char* name = nullptr;
    int uniform = 0;
    double mx = 0, md = 0, mn = 0;
    kl_report_verdict(rep, i, &name, &uniform, &mx, &md, &mn);
    std::printf("%-22s %-8s %-24s %-24s %s\n", name, uniform ? "yes" : "no", num(mx).c_str(),
                num(md).c_str(), num(mn).c_str());
  }
  int passed = 0;
  kl_report_all_passed(rep, &passed);
  kl_report_free(rep);
  std::printf("reports written to %s\n", dir.c_str());
  if (rc) return rc;
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kahlerlab: uniform analytic bounds on discretized Kahler metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kl_version()));

  Shared s;
  double t = 1.0;
  long long x = 0, y = 0;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of one family member");
  auto* heat = app.add_subcommand("heat", "heat kernel H(x, y, t) on a log-spaced time grid");
  auto* green = app.add_subcommand("green", "Green function checks over a family sweep");
  auto* sobolev = app.add_subcommand("sobolev", "Sobolev checks over a family sweep");
  auto* davies = app.add_subcommand("davies", "Davies constants A, B, C for --beta");
  auto* moser = app.add_subcommand("moser", "mean value and local inequality checks");
  auto* sweep = app.add_subcommand("sweep", "every enabled check over a family sweep");
  for (auto* sub : {spectrum, heat, green, sobolev, davies, moser, sweep}) add_shared(sub, s);
  for (auto* sub : {spectrum, heat}) sub->add_option("--t", t, "family parameter in (0, 1]");
  heat->add_option("--x", x, "first node");
  heat->add_option("--y", y, "second node");
  for (auto* sub : {green, sobolev, moser, sweep}) {
    sub->add_option("--config", s.config, "INI configuration file");
    sub->add_option("--threads", s.threads, "worker threads (0: hardware)");
  }
  sweep->add_option("--checks", s.checks, "comma separated check names");

  CLI11_PARSE(app, argc, argv);

  if (x < 0 || y < 0) {
    std::fprintf(stderr, "kahlerlab: invalid_argument: node ids must be >= 0\n");
    return 2;
  }
  if (*spectrum) return cmd_spectrum(s, t);
  if (*heat) return cmd_heat(s, t, x, y);
  if (*davies) return cmd_davies(s);
  if (*green) return cmd_sweep(s, "green_useful1,green_useful2,green_lower,green_pointwise");
  if (*sobolev) return cmd_sweep(s, "sobolev,sobolev_moser,improved_sobolev");
  if (*moser)
    return cmd_sweep(s, "moser,local_sobolev,local_poincare,local_sobolev0,local_poincare0");
  return cmd_sweep(s, "");
}
