#include "kahlerlab/kahlerlab.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "kahlerlab/davies.hpp"
#include "kahlerlab/error.hpp"
#include "kahlerlab/harness.hpp"
#include "kahlerlab/spectral.hpp"
#include "kahlerlab/version.hpp"

struct kl_metric {
  kahlerlab::MetricField field;
  kahlerlab::MetricField reference;
};

struct kl_operator {
  kahlerlab::SparseOperator op;
};

struct kl_spectrum {
  kahlerlab::SpectralData data;
};

struct kl_config {
  kahlerlab::SweepConfig config;
};

struct kl_report {
  kahlerlab::SweepReport report;
};

namespace {

thread_local std::string last_error;

kl_status record(kl_status status, const char* what) {
  last_error = what;
  return status;
}

template <class F>
kl_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return KL_OK;
  } catch (const kahlerlab::Error& e) {
    return record(static_cast<kl_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(KL_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(KL_INTERNAL, e.what());
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr)
    kahlerlab::fail(kahlerlab::ErrorCode::kInvalidArgument, std::string(name) + " is null");
}

kl_status copy_string(const std::string& s, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buffer == nullptr || capacity == 0) return KL_OK;
  const size_t n = std::min(capacity - 1, s.size());
  std::memcpy(buffer, s.data(), n);
  buffer[n] = '\0';
  return KL_OK;
}

void check_node(size_t node, size_t count) {
  if (node >= count)
    kahlerlab::fail(kahlerlab::ErrorCode::kInvalidArgument,
                    "node " + std::to_string(node) + " out of range (" + std::to_string(count) +
                        " nodes)");
}

}  // namespace

extern "C" {

const char* kl_version(void) { return kahlerlab::kVersion; }

const char* kl_last_error(void) { return last_error.c_str(); }

const char* kl_status_name(kl_status status) {
  switch (status) {
    case KL_OK: return "ok";
    case KL_INVALID_ARGUMENT: return "invalid_argument";
    case KL_INVALID_DOMAIN: return "invalid_domain";
    case KL_NOT_KAHLER: return "not_kahler";
    case KL_SINGULAR: return "singular";
    case KL_SOLVER: return "solver";
    case KL_TRUNCATION: return "truncation";
    case KL_QUADRATURE_BUDGET: return "quadrature_budget";
    case KL_PRECONDITION: return "precondition";
    case KL_IO: return "io";
    case KL_CONFIG: return "config";
    case KL_INTERNAL: return "internal";
  }
  return "unknown";
}

kl_status kl_q_from_epsilon(double epsilon0, double* q) {
  return guarded([&] {
    need(q, "q");
    *q = kahlerlab::q_from_epsilon(epsilon0);
  });
}

kl_status kl_r_schedule(double t, double horizon, double beta, double* r) {
  return guarded([&] {
    need(r, "r");
    *r = kahlerlab::r_schedule(t, horizon, beta);
  });
}

kl_status kl_davies(double beta, double tol, double abc[3], double errors[3]) {
  return guarded([&] {
    need(abc, "abc");
    const auto d = kahlerlab::davies_integrals(beta, tol > 0.0 ? tol : 1e-10);
    abc[0] = d.a_beta;
    abc[1] = d.b_beta;
    abc[2] = d.c_beta;
    if (errors) {
      errors[0] = d.error_a;
      errors[1] = d.error_b;
      errors[2] = d.error_c;
    }
  });
}

kl_status kl_schedule_integrals(double horizon, double beta, double values[3]) {
  return guarded([&] {
    need(values, "values");
    values[0] = kahlerlab::schedule_unit_integral(horizon, beta).value;
    values[1] = kahlerlab::schedule_b_integral(horizon, beta).value;
    values[2] = kahlerlab::schedule_c_integral(horizon, beta).value;
  });
}

kl_status kl_metric_create(int dim, int resolution, const char* family, double t, int fiber_dims,
                           kl_metric** out) {
  return guarded([&] {
    need(out, "out");
    need(family, "family");
    *out = nullptr;
    auto domain = kahlerlab::GridDomain::unit(dim, resolution);
    auto m = std::make_unique<kl_metric>();
    m->reference = kahlerlab::build_flat_torus(domain, true);
    if (std::strcmp(family, "flat") == 0) {
      m->field = m->reference;
    } else {
      const kahlerlab::FamilyParameter p{t, kahlerlab::parse_family_kind(family)};
      m->field = kahlerlab::build_family_member(p, domain, fiber_dims);
    }
    *out = m.release();
  });
}

void kl_metric_free(kl_metric* metric) { delete metric; }

kl_status kl_metric_node_count(const kl_metric* metric, size_t* count) {
  return guarded([&] {
    need(metric, "metric");
    need(count, "count");
    *count = metric->field.node_count();
  });
}

kl_status kl_metric_info(const kl_metric* metric, double* volume, double* intersection,
                         double* gamma_min) {
  return guarded([&] {
    need(metric, "metric");
    if (volume) *volume = metric->field.volume;
    if (intersection) *intersection = kahlerlab::intersection_number(metric->field, metric->reference);
    if (gamma_min) *gamma_min = metric->field.gamma_floor.minCoeff();
  });
}

kl_status kl_metric_write_csv(const kl_metric* metric, const char* path) {
  return guarded([&] {
    need(metric, "metric");
    need(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) kahlerlab::fail(kahlerlab::ErrorCode::kIo, std::string("cannot write ") + path);
    kahlerlab::write_metric_csv(metric->field, f);
  });
}

kl_status kl_operator_create(const kl_metric* metric, kl_operator** out) {
  return guarded([&] {
    need(metric, "metric");
    need(out, "out");
    *out = nullptr;
    auto o = std::make_unique<kl_operator>();
    o->op = kahlerlab::assemble_laplacian(metric->field);
    *out = o.release();
  });
}

void kl_operator_free(kl_operator* op) { delete op; }

kl_status kl_operator_size(const kl_operator* op, size_t* size) {
  return guarded([&] {
    need(op, "op");
    need(size, "size");
    *size = op->op.size();
  });
}

kl_status kl_green_function(const kl_operator* op, size_t source, double* values) {
  return guarded([&] {
    need(op, "op");
    need(values, "values");
    check_node(source, op->op.size());
    const auto g = kahlerlab::green_function_eval(op->op, source);
    std::copy(g.values.data(), g.values.data() + g.values.size(), values);
  });
}

kl_status kl_green_residual(const kl_operator* op, size_t source, double* equation, double* mean) {
  return guarded([&] {
    need(op, "op");
    check_node(source, op->op.size());
    const auto g = kahlerlab::green_function_eval(op->op, source);
    const auto r = kahlerlab::green_equation_residual(op->op, g);
    if (equation) *equation = r.equation;
    if (mean) *mean = r.mean;
  });
}

kl_status kl_spectrum_compute(const kl_operator* op, int k, double tol, int force_iterative,
                              uint64_t seed, kl_spectrum** out) {
  return guarded([&] {
    need(op, "op");
    need(out, "out");
    *out = nullptr;
    kahlerlab::EigenOptions opts;
    opts.force_iterative = force_iterative != 0;
    opts.seed = seed;
    const int n = static_cast<int>(op->op.size());
    auto s = std::make_unique<kl_spectrum>();
    s->data = kahlerlab::eigendecompose(op->op, k > 0 ? k : n, tol > 0.0 ? tol : 1e-9, opts);
    *out = s.release();
  });
}

void kl_spectrum_free(kl_spectrum* spectrum) { delete spectrum; }

kl_status kl_spectrum_count(const kl_spectrum* spectrum, int* count) {
  return guarded([&] {
    need(spectrum, "spectrum");
    need(count, "count");
    *count = spectrum->data.count();
  });
}

kl_status kl_spectrum_eigenvalues(const kl_spectrum* spectrum, double* out, size_t capacity) {
  return guarded([&] {
    need(spectrum, "spectrum");
    need(out, "out");
    const auto n = std::min(capacity, static_cast<size_t>(spectrum->data.count()));
    std::copy(spectrum->data.eigenvalues.data(), spectrum->data.eigenvalues.data() + n, out);
  });
}

kl_status kl_spectrum_write_csv(const kl_spectrum* spectrum, const char* path) {
  return guarded([&] {
    need(spectrum, "spectrum");
    need(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) kahlerlab::fail(kahlerlab::ErrorCode::kIo, std::string("cannot write ") + path);
    kahlerlab::write_spectrum_csv(spectrum->data, f);
  });
}

kl_status kl_heat_kernel(const kl_spectrum* spectrum, size_t x, size_t y, double t, double* value,
                         double* tail_bound) {
  return guarded([&] {
    need(spectrum, "spectrum");
    need(value, "value");
    check_node(x, spectrum->data.node_count());
    check_node(y, spectrum->data.node_count());
    const auto h = kahlerlab::heat_kernel_eval(spectrum->data, x, y, t);
    *value = h.value;
    if (tail_bound) *tail_bound = h.tail_bound;
  });
}

kl_status kl_heat_min_time(const kl_spectrum* spectrum, size_t x, size_t y, double* t_min) {
  return guarded([&] {
    need(spectrum, "spectrum");
    need(t_min, "t_min");
    check_node(x, spectrum->data.node_count());
    check_node(y, spectrum->data.node_count());
    *t_min = kahlerlab::minimum_valid_time(spectrum->data, x, y);
  });
}

kl_status kl_config_create(kl_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new kl_config();
  });
}

kl_status kl_config_load(const char* path, kl_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<kl_config>();
    c->config = kahlerlab::load_config(path);
    *out = c.release();
  });
}

void kl_config_free(kl_config* config) { delete config; }

kl_status kl_config_set(kl_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->config.set(key, value);
  });
}

kl_status kl_config_validate(const kl_config* config) {
  return guarded([&] {
    need(config, "config");
    config->config.validate();
  });
}

kl_status kl_config_hash(const kl_config* config, char* buffer, size_t capacity, size_t* needed) {
  std::string s;
  const kl_status st = guarded([&] {
    need(config, "config");
    s = config->config.hash();
  });
  return st == KL_OK ? copy_string(s, buffer, capacity, needed) : st;
}

kl_status kl_config_canonical(const kl_config* config, char* buffer, size_t capacity,
                              size_t* needed) {
  std::string s;
  const kl_status st = guarded([&] {
    need(config, "config");
    s = config->config.canonical();
  });
  return st == KL_OK ? copy_string(s, buffer, capacity, needed) : st;
}

kl_status kl_sweep_run(const kl_config* config, kl_report** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    auto r = std::make_unique<kl_report>();
    r->report = kahlerlab::run_sweep(config->config);
    *out = r.release();
  });
}

void kl_report_free(kl_report* report) { delete report; }

kl_status kl_report_write(const kl_report* report, const char* directory) {
  return guarded([&] {
    need(report, "report");
    need(directory, "directory");
    kahlerlab::emit_reports(report->report, directory);
  });
}

kl_status kl_report_all_passed(const kl_report* report, int* passed) {
  return guarded([&] {
    need(report, "report");
    need(passed, "passed");
    *passed = report->report.all_passed() ? 1 : 0;
  });
}

kl_status kl_report_member_count(const kl_report* report, size_t* count) {
  return guarded([&] {
    need(report, "report");
    need(count, "count");
    *count = report->report.members.size();
  });
}

kl_status kl_report_member(const kl_report* report, size_t index, double* t, int* ok,
                           const char** error) {
  return guarded([&] {
    need(report, "report");
    check_node(index, report->report.members.size());
    const auto& m = report->report.members[index];
    if (t) *t = m.t;
    if (ok) *ok = m.ok ? 1 : 0;
    if (error) *error = m.ok ? nullptr : m.error.c_str();
  });
}

kl_status kl_report_verdict_count(const kl_report* report, size_t* count) {
  return guarded([&] {
    need(report, "report");
    need(count, "count");
    *count = report->report.verdicts.size();
  });
}

kl_status kl_report_verdict(const kl_report* report, size_t index, const char** check,
                            int* uniform, double* max, double* median, double* min) {
  return guarded([&] {
    need(report, "report");
    check_node(index, report->report.verdicts.size());
    const auto& v = report->report.verdicts[index];
    if (check) *check = v.check.c_str();
    if (uniform) *uniform = v.uniform ? 1 : 0;
    if (max) *max = v.max;
    if (median) *median = v.median;
    if (min) *min = v.min;
  });
}

}  // extern "C"
