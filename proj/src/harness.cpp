#include "kahlerlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "kahlerlab/csv.hpp"
#include "kahlerlab/davies.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/moser.hpp"
#include "kahlerlab/operator.hpp"
#include "kahlerlab/spectral.hpp"
#include "kahlerlab/version.hpp"

namespace kahlerlab {

double q_from_epsilon(double epsilon0) {
  require(std::isfinite(epsilon0) && epsilon0 > 0.0, ErrorCode::kInvalidArgument,
          "epsilon0 must be positive");
  return (1.0 + epsilon0) / (1.0 + 0.5 * epsilon0);
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  in >> v;
  if (in.fail() || !(in >> std::ws).eof())
    fail(ErrorCode::kConfig, "config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

// Accepts plain decimals and simple fractions such as 4/3.
double parse_real(const std::string& key, const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_number<double>(key, text);
  const double a = parse_number<double>(key, text.substr(0, slash));
  const double b = parse_number<double>(key, text.substr(slash + 1));
  if (b == 0.0) fail(ErrorCode::kConfig, "config key '" + key + "': division by zero");
  return a / b;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<double> SweepConfig::family_grid() const {
  if (!t_values.empty()) return t_values;
  if (t_steps == 1) return {t_max};
  std::vector<double> out;
  const double ratio = std::log(t_min / t_max);
  for (int i = 0; i < t_steps; ++i)
    out.push_back(t_max * std::exp(ratio * i / (t_steps - 1)));
  return out;
}

bool SweepConfig::enabled(const std::string& check) const {
  if (check == "improved_sobolev" && dim < 2) return false;
  if (checks.empty()) return true;
  if (checks.size() == 1 && checks[0] == "none") return false;
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

void SweepConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, "invalid config: " + what); };
  if (dim < 1 || dim > 3) bad("model.dim must lie in [1, 3]");
  if (resolution < 4) bad("model.resolution must be >= 4");
  if (!(side_length > 0.0)) bad("model.side_length must be positive");
  if (family == FamilyKind::kProductCollapse && (fiber_dims < 1 || fiber_dims >= dim))
    bad("model.fiber_dims must lie in [1, dim - 1] for the product family");
  if (t_values.empty()) {
    if (t_steps < 1) bad("model.t_steps must be >= 1");
    if (!(t_min > 0.0 && t_min <= t_max)) bad("model.t_min must lie in (0, t_max]");
  }
  for (double t : family_grid())
    if (!(t > 0.0 && t <= 1.0)) bad("family parameters must lie in (0, 1], got " + format_number(t));
  if (num_eigs < 0) bad("spectral.num_eigs must be >= 0");
  if (!(eig_tol > 0.0)) bad("spectral.eig_tol must be positive");
  if (!(q > 1.0)) bad("bounds.q must exceed 1");
  if (!(q < 2.0)) bad("bounds.q must be below 2");
  if (!(entropy_exponent() > dim)) bad("bounds.p must exceed the complex dimension");
  if (!(beta > 0.0 && beta < 1.0)) bad("bounds.beta must lie in (0, 1)");
  if (!(green_epsilon() > 0.0)) bad("bounds.epsilon must be positive");
  if (!(headroom >= 1.0)) bad("bounds.headroom must be >= 1");
  if (!(heat_t_min > 0.0 && heat_t_min <= heat_t_max) || heat_t_steps < 1)
    bad("heat time grid must be positive and nonempty");
  if (probes < 2 || centers < 1 || radii_steps < 1 || battery_size < 1)
    bad("probe counts must be positive (probes >= 2)");
  if (moser_instances < 0 || local_functions < 0) bad("instance counts must be >= 0");
  if (threads < 0) bad("run.threads must be >= 0");
  const auto& cat = check_catalog();
  for (const auto& c : checks) {
    if (c == "none" && checks.size() == 1) continue;
    if (std::none_of(cat.begin(), cat.end(), [&](const auto& e) { return e.first == c; }))
      bad("unknown check '" + c + "'");
  }
}

void SweepConfig::set(const std::string& key, const std::string& v) {
  if (key == "model.dim") dim = parse_number<int>(key, v);
  else if (key == "model.resolution") resolution = parse_number<int>(key, v);
  else if (key == "model.side_length") side_length = parse_real(key, v);
  else if (key == "model.family") {
    try {
      family = parse_family_kind(v);
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, e.what());
    }
  }
  else if (key == "model.fiber_dims") fiber_dims = parse_number<int>(key, v);
  else if (key == "model.t_values") {
    t_values.clear();
    for (const auto& s : split_list(v)) t_values.push_back(parse_real(key, s));
  }
  else if (key == "model.t_min") {
    t_min = parse_real(key, v);
    t_values.clear();
  }
  else if (key == "model.t_max") {
    t_max = parse_real(key, v);
    t_values.clear();
  }
  else if (key == "model.t_steps") {
    t_steps = parse_number<int>(key, v);
    t_values.clear();
  }
  else if (key == "spectral.num_eigs") num_eigs = parse_number<int>(key, v);
  else if (key == "spectral.eig_tol") eig_tol = parse_real(key, v);
  else if (key == "spectral.max_dense") max_dense = parse_number<int>(key, v);
  else if (key == "bounds.q") q = parse_real(key, v);
  else if (key == "bounds.p") p = parse_real(key, v);
  else if (key == "bounds.beta") beta = parse_real(key, v);
  else if (key == "bounds.epsilon") epsilon = parse_real(key, v);
  else if (key == "bounds.class_cap") class_cap = parse_real(key, v);
  else if (key == "bounds.headroom") headroom = parse_real(key, v);
  else if (key == "bounds.heat_t_min") heat_t_min = parse_real(key, v);
  else if (key == "bounds.heat_t_max") heat_t_max = parse_real(key, v);
  else if (key == "bounds.heat_t_steps") heat_t_steps = parse_number<int>(key, v);
  else if (key == "bounds.growth_max_index") growth_max_index = parse_number<int>(key, v);
  else if (key == "probes.probes") probes = parse_number<int>(key, v);
  else if (key == "probes.centers") centers = parse_number<int>(key, v);
  else if (key == "probes.radii_steps") radii_steps = parse_number<int>(key, v);
  else if (key == "probes.battery_size") battery_size = parse_number<int>(key, v);
  else if (key == "probes.moser_instances") moser_instances = parse_number<int>(key, v);
  else if (key == "probes.local_functions") local_functions = parse_number<int>(key, v);
  else if (key == "probes.seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "run.checks") checks = split_list(v);
  else if (key == "run.threads") threads = parse_number<int>(key, v);
  else if (key == "run.output") output = v;
  else fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

std::string SweepConfig::canonical() const {
  std::ostringstream o;
  o << "[model]\n"
    << "dim = " << dim << '\n'
    << "resolution = " << resolution << '\n'
    << "side_length = " << format_number(side_length) << '\n'
    << "family = " << family_kind_name(family) << '\n'
    << "fiber_dims = " << fiber_dims << '\n'
    << "t_values = " << join_numbers(family_grid()) << '\n'
    << "\n[spectral]\n"
    << "num_eigs = " << num_eigs << '\n'
    << "eig_tol = " << format_number(eig_tol) << '\n'
    << "max_dense = " << max_dense << '\n'
    << "\n[bounds]\n"
    << "q = " << format_number(q) << '\n'
    << "p = " << format_number(entropy_exponent()) << '\n'
    << "beta = " << format_number(beta) << '\n'
    << "epsilon = " << format_number(green_epsilon()) << '\n'
    << "class_cap = " << format_number(class_cap) << '\n'
    << "headroom = " << format_number(headroom) << '\n'
    << "heat_t_min = " << format_number(heat_t_min) << '\n'
    << "heat_t_max = " << format_number(heat_t_max) << '\n'
    << "heat_t_steps = " << heat_t_steps << '\n'
    << "growth_max_index = " << growth_max_index << '\n'
    << "\n[probes]\n"
    << "probes = " << probes << '\n'
    << "centers = " << centers << '\n'
    << "radii_steps = " << radii_steps << '\n'
    << "battery_size = " << battery_size << '\n'
    << "moser_instances = " << moser_instances << '\n'
    << "local_functions = " << local_functions << '\n'
    << "seed = " << seed << '\n';
  o << "\n[run]\n"
    << "checks = ";
  for (std::size_t i = 0; i < checks.size(); ++i) o << (i ? "," : "") << checks[i];
  o << '\n';
  return o.str();
}

std::string SweepConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed config: ") + e.what());
  }
  SweepConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) fail(ErrorCode::kConfig, "config key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read config file " + path.string());
  return parse_config(in);
}

const std::vector<std::pair<std::string, CheckKind>>& check_catalog() {
  static const std::vector<std::pair<std::string, CheckKind>> cat = {
      {"sobolev", CheckKind::kUpper},
      {"sobolev_moser", CheckKind::kUpper},
      {"improved_sobolev", CheckKind::kUpper},
      {"heat_trace", CheckKind::kUpper},
      {"heat_time_derivative", CheckKind::kLimit},
      {"gaussian_offdiag", CheckKind::kUpper},
      {"eigen_growth", CheckKind::kFloor},
      {"eigenfunction_sup", CheckKind::kUpper},
      {"poincare_gap", CheckKind::kFloor},
      {"green_useful1", CheckKind::kUpper},
      {"green_useful2", CheckKind::kLimit},
      {"green_lower", CheckKind::kUpper},
      {"green_pointwise", CheckKind::kUpper},
      {"noncollapsing", CheckKind::kFloor},
      {"moser", CheckKind::kUpper},
      {"local_sobolev", CheckKind::kUpper},
      {"local_poincare", CheckKind::kUpper},
      {"local_sobolev0", CheckKind::kUpper},
      {"local_poincare0", CheckKind::kUpper},
  };
  return cat;
}

double check_limit(const std::string& check) {
  if (check == "heat_time_derivative") return 1.0;
  if (check == "green_useful2") return 1.0 + 1e-6;
  return std::numeric_limits<double>::infinity();
}

namespace {

CheckKind kind_of(const std::string& check) {
  for (const auto& [name, kind] : check_catalog())
    if (name == check) return kind;
  fail(ErrorCode::kInvalidArgument, "unknown check '" + check + "'");
}

BoundReport tagged(BoundReport r, const std::string& name) {
  r.check = name;
  r.kind = kind_of(name);
  r.limit = check_limit(name);
  return r;
}

// Keeps the report with the more extreme fitted constant for its kind.
void absorb(BoundReport& acc, const BoundReport& r, bool first) {
  const bool better = acc.kind == CheckKind::kFloor ? r.fitted_constant < acc.fitted_constant
                                                    : r.fitted_constant > acc.fitted_constant;
  const std::size_t samples = acc.samples + r.samples;
  if (first || better || std::isnan(r.fitted_constant)) {
    const auto kind = acc.kind;
    const auto limit = acc.limit;
    const auto name = acc.check;
    acc = r;
    acc.kind = kind;
    acc.limit = limit;
    acc.check = name;
  }
  acc.samples = first ? r.samples : samples;
}

}  // namespace

MemberResult evaluate_member(const SweepConfig& cfg, double t) {
  MemberResult res;
  res.t = t;
  try {
    const GridDomain domain = GridDomain::uniform(
        cfg.dim, cfg.resolution,
        std::vector<double>(static_cast<std::size_t>(2 * cfg.dim), cfg.side_length));
    const MetricField reference = build_flat_torus(domain, true);
    const MetricField omega = build_family_member({t, cfg.family}, domain, cfg.fiber_dims);
    const SparseOperator op = assemble_laplacian(omega);
    const auto n = static_cast<int>(op.size());

    EigenOptions eo;
    eo.max_dense = cfg.max_dense;
    eo.seed = cfg.seed;
    int k = cfg.num_eigs;
    if (k == 0) k = n <= cfg.max_dense ? n : std::min(200, n / 2);
    const SpectralData spec = eigendecompose(op, std::min(k, n), cfg.eig_tol, eo);

    const double v = op.volume;
    const double i_omega = intersection_number(omega, reference);
    const double q = cfg.q;
    res.admissibility = admissibility_record(omega, reference, cfg.entropy_exponent(),
                                             cfg.class_cap, spec.eigenvalues(1));

    const auto probes = spread_nodes(domain, cfg.probes, cfg.seed);
    const auto centers = spread_nodes(domain, cfg.centers, cfg.seed + 1);
    std::vector<std::vector<double>> probe_dist;
    for (NodeId x : probes) probe_dist.push_back(geodesic_distances(op, x));

    std::vector<double> heat_grid;
    for (int j = 0; j < cfg.heat_t_steps; ++j) {
      heat_grid.push_back(cfg.heat_t_steps == 1
                              ? cfg.heat_t_max
                              : cfg.heat_t_min * std::pow(cfg.heat_t_max / cfg.heat_t_min,
                                                          static_cast<double>(j) /
                                                              (cfg.heat_t_steps - 1)));
    }

    auto add = [&](const std::string& name, const BoundReport& r) {
      if (cfg.enabled(name)) res.reports.push_back(tagged(r, name));
    };

    if (cfg.enabled("sobolev") || cfg.enabled("sobolev_moser") || cfg.enabled("improved_sobolev")) {
      const auto battery = sobolev_battery(domain, cfg.battery_size, cfg.seed + 2);
      if (cfg.enabled("sobolev"))
        add("sobolev", sobolev_battery_check(op, battery, SobolevForm::kStandard, q, i_omega, v));
      if (cfg.enabled("sobolev_moser"))
        add("sobolev_moser", sobolev_battery_check(op, battery, SobolevForm::kMoser, q, i_omega, v));
      if (cfg.enabled("improved_sobolev"))
        add("improved_sobolev",
            sobolev_battery_check(op, battery, SobolevForm::kImproved, q, i_omega, v, 1.0));
    }

    if (cfg.enabled("heat_trace"))
      add("heat_trace", heat_trace_bound_check(spec, heat_grid, i_omega, v, q, probes));

    if (cfg.enabled("heat_time_derivative")) {
      BoundReport r;
      r.fitted_constant = 0.0;
      for (double tt : heat_grid) {
        for (NodeId x : probes) {
          const HeatDerivativeEval h = heat_time_derivative_eval(spec, x, tt);
          const double lhs = h.l2_squared;
          const double rhs = h.reduced_diagonal / (tt * tt);
          ++r.samples;
          if (rhs > 0.0 && lhs / rhs > r.fitted_constant) {
            r.fitted_constant = lhs / rhs;
            r.lhs = lhs;
            r.rhs = rhs;
          }
        }
      }
      add("heat_time_derivative", r);
    }

    if (cfg.enabled("gaussian_offdiag")) {
      const DaviesConstants dc = davies_integrals(cfg.beta);
      std::vector<ProbePair> pairs;
      for (std::size_t a = 0; a < probes.size(); ++a)
        for (std::size_t b = a + 1; b < probes.size(); ++b)
          pairs.push_back({probes[a], probes[b], probe_dist[a][probes[b]]});
      add("gaussian_offdiag",
          gaussian_offdiag_check(spec, q, i_omega, v, dc.b_beta, pairs, heat_grid));
    }

    if (cfg.enabled("eigen_growth"))
      add("eigen_growth", eigenvalue_growth_check(spec, i_omega, q, cfg.growth_max_index));
    if (cfg.enabled("eigenfunction_sup"))
      add("eigenfunction_sup", eigenfunction_sup_check(spec, i_omega, v, q));
    if (cfg.enabled("poincare_gap")) {
      BoundReport r;
      r.lhs = spec.eigenvalues(1);
      r.rhs = 1.0 / i_omega;
      r.fitted_constant = poincare_gap(spec, i_omega);
      r.samples = 1;
      add("poincare_gap", r);
    }

    const bool green = cfg.enabled("green_useful1") || cfg.enabled("green_useful2") ||
                       cfg.enabled("green_lower") || cfg.enabled("green_pointwise");
    if (green) {
      const GreenSolver solver(op);
      std::vector<GreenFunction> greens;
      double c0 = 0.0;
      for (NodeId x : probes) {
        greens.push_back(solver.solve(x));
        c0 = std::max(c0, greens.back().lower_constant());
      }
      BoundReport u1, u2, lower;
      for (std::size_t j = 0; j < greens.size(); ++j) {
        const GreenMoments m = green_integral_moments(op, greens[j], cfg.green_epsilon(), cfg.beta, c0);
        BoundReport a;
        a.lhs = m.moment_1;
        a.rhs = std::pow(v, -cfg.green_epsilon());
        a.fitted_constant = m.normalized_1;
        a.samples = 1;
        BoundReport b;
        b.lhs = m.moment_2;
        b.rhs = std::pow(v, cfg.beta) / cfg.beta;
        b.fitted_constant = m.normalized_2;
        b.samples = 1;
        BoundReport c;
        c.lhs = -m.min_value;
        c.rhs = 1.0 / v;
        c.fitted_constant = greens[j].lower_constant();
        c.samples = 1;
        u1.kind = kind_of("green_useful1");
        u2.kind = kind_of("green_useful2");
        lower.kind = kind_of("green_lower");
        absorb(u1, a, j == 0);
        absorb(u2, b, j == 0);
        absorb(lower, c, j == 0);
      }
      add("green_useful1", u1);
      add("green_useful2", u2);
      add("green_lower", lower);
      if (cfg.enabled("green_pointwise"))
        add("green_pointwise", green_pointwise_bound_check(op, greens, probe_dist, q, v));
    }

    const bool need_diam = cfg.enabled("noncollapsing") || cfg.enabled("moser") ||
                           cfg.enabled("local_sobolev") || cfg.enabled("local_poincare") ||
                           cfg.enabled("local_sobolev0") || cfg.enabled("local_poincare0");
    if (need_diam) {
      std::vector<std::vector<double>> center_dist;
      double diam = 0.0;
      for (NodeId c : centers) {
        center_dist.push_back(geodesic_distances(op, c));
        diam = std::max(diam, *std::max_element(center_dist.back().begin(), center_dist.back().end()));
      }

      if (cfg.enabled("noncollapsing")) {
        std::vector<double> radii;
        for (int j = 1; j <= cfg.radii_steps; ++j) radii.push_back(diam * j / cfg.radii_steps);
        std::vector<BallGeometry> balls;
        for (std::size_t j = 0; j < centers.size(); ++j) {
          BallGeometry g;
          g.center = centers[j];
          g.radii = radii;
          g.distances = center_dist[j];
          for (double r : radii) {
            double vol = 0.0;
            for (std::size_t x = 0; x < g.distances.size(); ++x)
              if (g.distances[x] <= r) vol += op.mass(static_cast<Eigen::Index>(x));
            g.ball_volumes.push_back(vol);
          }
          balls.push_back(std::move(g));
        }
        add("noncollapsing", noncollapsing_check(balls, q, v));
      }

      if (cfg.enabled("moser")) {
        BoundReport acc;
        acc.kind = CheckKind::kUpper;
        for (int j = 0; j < cfg.moser_instances; ++j) {
          const NodeId c = centers[static_cast<std::size_t>(j) % centers.size()];
          const double big = diam * (0.25 + 0.05 * (j % 3));
          const MoserInstance inst = generate_subharmonic_instance(
              op, c, 0.5 * big, big, q, cfg.seed + 100 + static_cast<std::uint64_t>(j), false);
          absorb(acc, moser_sup_bound_check(inst.problem, op, v, q), j == 0);
        }
        add("moser", acc);
      }

      const bool local = cfg.enabled("local_sobolev") || cfg.enabled("local_poincare") ||
                         cfg.enabled("local_sobolev0") || cfg.enabled("local_poincare0");
      if (local && cfg.local_functions > 0) {
        const auto battery = sobolev_battery(domain, cfg.local_functions, cfg.seed + 3);
        BoundReport s, p, s0, p0;
        s.kind = p.kind = s0.kind = p0.kind = CheckKind::kUpper;
        for (int j = 0; j < cfg.local_functions; ++j) {
          const auto& d = center_dist[static_cast<std::size_t>(j) % center_dist.size()];
          const double r_in = diam * (0.2 + 0.05 * (j % 3));
          const double r_out = 1.6 * r_in;
          LocalDomain ld;
          ld.omega.resize(op.size());
          ld.omega_prime.resize(op.size());
          for (std::size_t x = 0; x < op.size(); ++x) {
            ld.omega[x] = d[x] <= r_in;
            ld.omega_prime[x] = d[x] < r_out;
          }
          ld.eta = radial_cutoff(d, r_in, r_out);
          const auto& u = battery[static_cast<std::size_t>(j)];
          const auto ri = local_inequality_check(op, ld, u, LocalMode::kInterior, q);
          const ScalarField u0 = radial_cutoff(d, 0.0, r_in).cwiseProduct(u.array().abs().matrix() +
                                                                          ScalarField::Ones(u.size()));
          const auto rz = local_inequality_check(op, ld, u0, LocalMode::kZeroBoundary, q);
          absorb(s, ri[0], j == 0);
          absorb(p, ri[1], j == 0);
          absorb(s0, rz[0], j == 0);
          absorb(p0, rz[1], j == 0);
        }
        add("local_sobolev", s);
        add("local_poincare", p);
        add("local_sobolev0", s0);
        add("local_poincare0", p0);
      }
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
    res.reports.clear();
  }
  return res;
}

Verdict judge(const std::string& check, const std::vector<double>& fitted,
              const UniformityInput& rule) {
  Verdict v;
  v.check = check;
  v.kind = rule.kind;
  if (fitted.empty()) {
    v.uniform = false;
    return v;
  }
  v.max = *std::max_element(fitted.begin(), fitted.end());
  v.min = *std::min_element(fitted.begin(), fitted.end());
  v.median = median_of(fitted);
  const bool finite = std::all_of(fitted.begin(), fitted.end(), [](double x) { return std::isfinite(x); });
  switch (rule.kind) {
    case CheckKind::kUpper: v.uniform = finite && v.min >= 0.0 && v.max <= rule.headroom * v.median; break;
    case CheckKind::kFloor: v.uniform = finite && v.min > 0.0; break;
    case CheckKind::kLimit: v.uniform = finite && v.max <= rule.limit; break;
  }
  return v;
}

SweepReport run_sweep(const SweepConfig& config) {
  config.validate();
  SweepReport rep;
  rep.config = config;
  const auto grid = config.family_grid();
  rep.members.resize(grid.size());

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(grid.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++)
      rep.members[i] = evaluate_member(config, grid[i]);
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < threads; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (const auto& [name, kind] : check_catalog()) {
    if (!config.enabled(name)) continue;
    std::vector<double> fitted;
    bool missing = false;
    for (const auto& m : rep.members) {
      const auto it = std::find_if(m.reports.begin(), m.reports.end(),
                                   [&](const BoundReport& r) { return r.check == name; });
      if (it == m.reports.end()) {
        missing = true;
        continue;
      }
      fitted.push_back(it->fitted_constant);
    }
    Verdict v = judge(name, fitted, {kind, check_limit(name), config.headroom});
    if (missing) v.uniform = false;
    rep.verdicts.push_back(v);
  }
  return rep;
}

bool SweepReport::all_passed() const {
  return std::all_of(members.begin(), members.end(), [](const auto& m) { return m.ok; }) &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.uniform; });
}

void write_reports_csv(const SweepReport& report, std::ostream& out) {
  out << "family_param,check,lhs,rhs,fitted_C,margin,samples\n";
  for (const auto& m : report.members) {
    if (!m.ok) {
      for (const auto& [name, kind] : check_catalog()) {
        if (!report.config.enabled(name)) continue;
        out << format_number(m.t) << ',' << name << ",nan,nan,nan,nan,0\n";
      }
      continue;
    }
    for (const auto& r : m.reports) {
      out << format_number(m.t) << ',' << r.check << ',' << format_number(r.lhs) << ','
          << format_number(r.rhs) << ',' << format_number(r.fitted_constant) << ','
          << format_number(r.margin()) << ',' << r.samples << '\n';
    }
  }
}

void write_admissibility_csv(const SweepReport& report, std::ostream& out) {
  out << "family_param,V,I,entropy_p,gamma_min,lambda1_I\n";
  for (const auto& m : report.members) {
    const auto& a = m.admissibility;
    if (!m.ok) {
      out << format_number(m.t) << ",nan,nan,nan,nan,nan\n";
      continue;
    }
    out << format_number(m.t) << ',' << format_number(a.volume) << ','
        << format_number(a.intersection) << ',' << format_number(a.entropy) << ','
        << format_number(a.gamma_min) << ',' << format_number(a.lambda1_i) << '\n';
  }
}

void write_summary_json(const SweepReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["tool"] = "kahlerlab";
  j["version"] = kVersion;
  j["config_hash"] = report.config.hash();
  j["family"] = family_kind_name(report.config.family);
  j["dim"] = report.config.dim;
  j["resolution"] = report.config.resolution;
  j["q"] = format_number(report.config.q);
  j["headroom"] = format_number(report.config.headroom);
  nlohmann::ordered_json members = nlohmann::ordered_json::array();
  for (const auto& m : report.members) {
    nlohmann::ordered_json e;
    e["t"] = format_number(m.t);
    e["ok"] = m.ok;
    if (!m.ok) e["error"] = m.error;
    members.push_back(e);
  }
  j["members"] = members;
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::object();
  for (const auto& v : report.verdicts) {
    nlohmann::ordered_json e;
    e["rule"] = v.kind == CheckKind::kUpper ? "max <= headroom * median"
                : v.kind == CheckKind::kFloor ? "min > 0"
                                              : "max <= limit";
    e["uniform"] = v.uniform;
    e["max"] = format_number(v.max);
    e["median"] = format_number(v.median);
    e["min"] = format_number(v.min);
    verdicts[v.check] = e;
  }
  j["verdicts"] = verdicts;
  j["all_passed"] = report.all_passed();
  out << j.dump(2) << '\n';
}

void emit_reports(const SweepReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) fail(ErrorCode::kIo, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("reports.csv");
    write_reports_csv(report, f);
  }
  {
    auto f = open("admissibility.csv");
    write_admissibility_csv(report, f);
  }
  {
    auto f = open("summary.json");
    write_summary_json(report, f);
  }
  {
    auto f = open("config.ini");
    f << report.config.canonical();
  }
}

}  // namespace kahlerlab
