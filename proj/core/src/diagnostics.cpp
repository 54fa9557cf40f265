#include "slipflow/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "slipflow/errors.hpp"
#include "slipflow/operators.hpp"
#include "slipflow/reduce.hpp"

namespace slipflow {
namespace {

/// Trapezoid-weighted sum over wall + interior faces of f(a, q) * w.
template <class F>
double face_sum(const GridSpec& g, F&& f) {
  CompensatedSum s;
  for (int a = 0; a < 3; ++a) {
    for_each_index(g, face_box(g, a, true), [&](int i, int j, int k, std::size_t q) {
      const int n = a == 0 ? i : (a == 1 ? j : k);
      s.add(face_weight(g, a, n) * f(a, q));
    });
  }
  return s.value() * g.cell_volume();
}

double cell_sum(const GridSpec& g, const double* v) {
  CompensatedSum s;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) s.add(v[q]);
  });
  return s.value();
}

/// u-dot at the first sample: u_t from the RHS, m_t = rho_f u_t + u rho_f,t.
VectorField udot_from_rhs(const FlowState& state, const VectorField& u, const RhsEval& rhs,
                          double floor, std::int64_t& masked) {
  const GridSpec& g = state.grid();
  VectorField out = convective_acceleration(u);
  ScalarField drho = rhs.drho;
  fill_scalar_ghosts(drho);
  const double* rho = state.rho.data();
  for (int a = 0; a < 3; ++a) {
    const std::ptrdiff_t s = g.stride(a);
    const double* ua = u.data(a);
    const double* dm = rhs.dmom.data(a);
    double* o = out.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double rf = face_density(rho, s, q);
        if (rf < floor) {
          o[q] = 0.0;
          ++masked;
        } else {
          o[q] += (dm[q] - ua[q] * face_density(drho.data(), s, q)) / rf;
        }
      }
    });
  }
  fill_vector_ghosts(out);
  return out;
}

double sqrt_rho_weighted_l2(const ScalarField& rho, const VectorField& v) {
  const GridSpec& g = rho.grid();
  const double* r = rho.data();
  const double s = face_sum(g, [&](int a, std::size_t q) {
    const double x = v.data(a)[q];
    return face_density(r, g.stride(a), q) * x * x;
  });
  return std::sqrt(std::max(s, 0.0));
}

void csv_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

double lp_norm(const ScalarField& f, double p) {
  const GridSpec& g = f.grid();
  if (std::isinf(p) && p > 0) {
    double m = 0.0;
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) m = std::max(m, std::abs(f[q]));
    });
    return m;
  }
  if (p != 1.0 && p != 2.0 && p != 3.0 && p != 4.0 && p != 6.0) {
    throw DomainError("lp_norm: unsupported exponent " + std::to_string(p));
  }
  CompensatedSum s;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      const double a = std::abs(f[q]);
      double v = a;
      if (p == 2.0) v = a * a;
      else if (p == 3.0) v = a * a * a;
      else if (p == 4.0) v = (a * a) * (a * a);
      else if (p == 6.0) v = (a * a * a) * (a * a * a);
      s.add(v);
    }
  });
  return std::pow(s.value() * g.cell_volume(), 1.0 / p);
}

double velocity_gradient_l2(const VectorField& u) {
  if (!u.ghosts_filled()) throw ContractViolation("velocity_gradient_l2: ghosts not filled");
  const GridSpec& g = u.grid();
  const auto s = g.strides();
  CompensatedSum acc;
  // Diagonal entries d_a u_a at cells.
  for (int a = 0; a < 3; ++a) {
    const double* ua = u.data(a);
    const double ih = 1.0 / g.spacing[a];
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double d = (ua[q + s[a]] - ua[q]) * ih;
        acc.add(d * d);
      }
    });
  }
  // Off-diagonal entries d_b u_a on edges of the third axis.
  for (int a = 0; a < 3; ++a) {
    const double* ua = u.data(a);
    for (int b = 0; b < 3; ++b) {
      if (b == a) continue;
      const int c = 3 - a - b;
      const double ih = 1.0 / g.spacing[b];
      for_each_index(g, edge_box(g, c), [&](int i, int j, int k, std::size_t q) {
        const double d = (ua[q] - ua[q - s[b]]) * ih;
        acc.add(edge_weight(g, c, i, j, k) * d * d);
      });
    }
  }
  return std::sqrt(acc.value() * g.cell_volume());
}

void validate(const LyapunovWeights& w) {
  const double v[5] = {w.D1, w.D2, w.D3, w.D4, w.D5};
  const char* keys[5] = {"lyapunov.D1", "lyapunov.D2", "lyapunov.D3", "lyapunov.D4",
                         "lyapunov.D5"};
  for (int i = 0; i < 5; ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw ConfigError(keys[i], "must be positive");
  }
}

namespace {

constexpr std::pair<unsigned, const char*> kFlagNames[] = {
    {kFlagUdotFromRhs, "udot_from_rhs"},
    {kFlagUdotMasked, "udot_masked"},
    {kFlagStokesUnconverged, "stokes_unconverged"},
    {kFlagRhoHatExceeded, "rho_hat_exceeded"},
    {kFlagPartial, "partial"},
};

}  // namespace

std::string flags_to_string(unsigned flags) {
  std::string s;
  for (const auto& [bit, name] : kFlagNames) {
    if (flags & bit) {
      if (!s.empty()) s += '|';
      s += name;
    }
  }
  return s.empty() ? "none" : s;
}

unsigned flags_from_string(const std::string& text) {
  if (text == "none") return kFlagNone;
  unsigned flags = kFlagNone;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('|', start), text.size());
    const std::string token = text.substr(start, end - start);
    bool found = false;
    for (const auto& [bit, name] : kFlagNames) {
      if (token == name) {
        flags |= bit;
        found = true;
      }
    }
    if (!found) throw DomainError("unknown record flag '" + token + "'");
    start = end + 1;
  }
  return flags;
}

namespace {

struct Column {
  const char* name;
  double (*get)(const DiagnosticsRecord&);
  void (*set)(DiagnosticsRecord&, double);
};

#define SLIPFLOW_COL(field)                                                        \
  Column {                                                                         \
    #field, [](const DiagnosticsRecord& r) { return static_cast<double>(r.field); }, \
        [](DiagnosticsRecord& r, double v) { r.field = static_cast<decltype(r.field)>(v); } \
  }

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      SLIPFLOW_COL(t),
      SLIPFLOW_COL(step),
      SLIPFLOW_COL(rho_l2),
      SLIPFLOW_COL(rho_linf),
      SLIPFLOW_COL(sqrt_rho_u_l2),
      SLIPFLOW_COL(grad_u_l2),
      SLIPFLOW_COL(div_u_l2),
      SLIPFLOW_COL(curl_u_l2),
      SLIPFLOW_COL(sqrt_rho_udot_l2),
      SLIPFLOW_COL(G_integral),
      SLIPFLOW_COL(energy),
      SLIPFLOW_COL(F_l2sq),
      SLIPFLOW_COL(F_linf),
      SLIPFLOW_COL(rho_min),
      SLIPFLOW_COL(rho_max),
      SLIPFLOW_COL(M1),
      SLIPFLOW_COL(M2),
      SLIPFLOW_COL(M3),
      SLIPFLOW_COL(bogovskii_pairing),
      SLIPFLOW_COL(momentum_residual),
      SLIPFLOW_COL(energy_balance_residual),
      SLIPFLOW_COL(rho_mean),
      SLIPFLOW_COL(dissipation_rate),
      SLIPFLOW_COL(dissipation_integral),
      SLIPFLOW_COL(F_integral),
      SLIPFLOW_COL(div_u_linf),
      SLIPFLOW_COL(div_u_linf_integral),
      SLIPFLOW_COL(grad_rho_l4),
      SLIPFLOW_COL(grad_udot_l2),
      SLIPFLOW_COL(pressure_residual),
      SLIPFLOW_COL(m3_boundary_term),
      SLIPFLOW_COL(viscous_energy),
      SLIPFLOW_COL(pressure_work),
      SLIPFLOW_COL(udot_masked_faces),
      SLIPFLOW_COL(stokes_iterations),
  };
  return cols;
}

#undef SLIPFLOW_COL

}  // namespace

std::vector<std::string> csv_columns() {
  std::vector<std::string> out;
  for (const auto& c : columns()) out.emplace_back(c.name);
  out.emplace_back("flags");
  return out;
}

const std::string& csv_header() {
  static const std::string header = [] {
    std::string h;
    for (const auto& c : csv_columns()) {
      if (!h.empty()) h += ',';
      h += c;
    }
    return h;
  }();
  return header;
}

std::string csv_row(const DiagnosticsRecord& r) {
  std::string out;
  out.reserve(640);
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out += ',';
    const std::string_view name = cols[i].name;
    if (name == "step" || name == "udot_masked_faces" || name == "stokes_iterations") {
      out += std::to_string(static_cast<std::int64_t>(cols[i].get(r)));
    } else {
      csv_number(out, cols[i].get(r));
    }
  }
  out += ',';
  out += flags_to_string(r.flags);
  return out;
}

double record_value(const DiagnosticsRecord& r, const std::string& column) {
  for (const auto& c : columns()) {
    if (column == c.name) return c.get(r);
  }
  throw DomainError("unknown diagnostics column '" + column + "'");
}

DiagnosticsRecord parse_csv_row(const std::string& line) {
  DiagnosticsRecord r;
  const auto& cols = columns();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= cols.size(); ++i) {
    const std::size_t comma = line.find(',', start);
    const bool last = i == cols.size();
    if (last != (comma == std::string::npos)) {
      throw DomainError("diagnostics row has " + std::string(last ? "too many" : "too few") +
                        " fields");
    }
    std::string field = line.substr(start, last ? std::string::npos : comma - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (last) {
      r.flags = flags_from_string(field);
      break;
    }
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      throw DomainError(std::string("bad value '") + field + "' in column " + cols[i].name);
    }
    cols[i].set(r, v);
    start = comma + 1;
  }
  return r;
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DomainError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw DomainError(path.string() + " does not have the diagnostics header");
  std::vector<DiagnosticsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_csv_row(line));
  }
  return out;
}

Sampler::Sampler(const GridSpec& grid, const SamplerConfig& cfg)
    : cfg_(cfg), stokes_(grid, [&] {
        StokesOptions o;
        o.tol = cfg.stokes_tol;
        return o;
      }()) {
  validate(cfg.eos);
  validate(cfg.weights);
}

void Sampler::set_previous(double energy, double dissipation_integral) {
  prev_ = std::make_pair(energy, dissipation_integral);
}

DiagnosticsRecord Sampler::sample(const FlowState& state, const FlowState* prev, double dt,
                                  const RhsEval& rhs, const RunningIntegrals& integrals) {
  const GridSpec& g = state.grid();
  const EosParams& eos = cfg_.eos;
  const double vol = g.cell_volume();
  const double floor = cfg_.vacuum_floor;
  DiagnosticsRecord r;
  r.t = state.t;
  r.step = state.step;

  const VectorField u = reconstruct_velocity(state, floor);
  const ScalarField div = divergence(u);
  const EdgeField w = curl(u);

  // Density.
  {
    CompensatedSum d2, gsum, rs;
    double dmax = 0.0, rmin = INFINITY, rmax = -INFINITY;
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double rho = state.rho[q];
        const double d = rho - cfg_.rho_mean0;
        d2.add(d * d);
        dmax = std::max(dmax, std::abs(d));
        rmin = std::min(rmin, rho);
        rmax = std::max(rmax, rho);
        gsum.add(relative_entropy_G(rho, eos));
        rs.add(rho);
      }
    });
    r.rho_l2 = std::sqrt(d2.value() * vol);
    r.rho_linf = dmax;
    r.rho_min = rmin;
    r.rho_max = rmax;
    r.G_integral = gsum.value() * vol;
    r.rho_mean = rs.value() / static_cast<double>(g.interior_cells());
  }
  if (r.rho_max > cfg_.rho_hat) r.flags |= kFlagRhoHatExceeded;

  // Velocity norms; m . u = rho_f |u|^2 including the vacuum guard.
  {
    const double ke2 = face_sum(g, [&](int a, std::size_t q) {
      return state.mom.data(a)[q] * u.data(a)[q];
    });
    r.sqrt_rho_u_l2 = std::sqrt(std::max(ke2, 0.0));
  }
  r.grad_u_l2 = velocity_gradient_l2(u);
  r.div_u_l2 = lp_norm(div, 2.0);
  r.div_u_linf = lp_norm(div, INFINITY);
  r.curl_u_l2 = std::sqrt(std::max(inner(w, w), 0.0));
  r.energy = 0.5 * r.sqrt_rho_u_l2 * r.sqrt_rho_u_l2 + r.G_integral;
  r.dissipation_rate = rhs.dissipation;
  r.dissipation_integral = integrals.dissipation;
  r.div_u_linf_integral = integrals.div_linf;

  // Material acceleration.
  VectorField udot(g);
  if (prev != nullptr && dt > 0.0) {
    MaterialAcceleration ma = material_acceleration(*prev, state, dt, floor);
    udot = std::move(ma.udot);
    r.udot_masked_faces = static_cast<std::int64_t>(ma.masked_faces);
  } else {
    std::int64_t masked = 0;
    udot = udot_from_rhs(state, u, rhs, floor, masked);
    r.udot_masked_faces = masked;
    r.flags |= kFlagUdotFromRhs;
  }
  if (r.udot_masked_faces > 0) r.flags |= kFlagUdotMasked;
  r.sqrt_rho_udot_l2 = sqrt_rho_weighted_l2(state.rho, udot);
  r.grad_udot_l2 = velocity_gradient_l2(udot);

  // Effective viscous flux and the pressure work term.
  const ScalarField P = eos_pressure(state.rho, eos);
  const double p_mean = interior_mean(P);
  double pdiv_integral = 0.0;
  {
    CompensatedSum f1, f2, pd;
    double fmax = 0.0;
    const double nu = eos.nu_long();
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        const double F = nu * div[q] - (P[q] - p_mean);
        f1.add(F);
        f2.add(F * F);
        fmax = std::max(fmax, std::abs(F));
        pd.add((P[q] - p_mean) * div[q]);
      }
    });
    r.F_integral = f1.value() * vol;
    r.F_l2sq = f2.value() * vol;
    r.F_linf = fmax;
    pdiv_integral = pd.value() * vol;
  }

  // Bogovskii cross term.
  try {
    const Pairing pr = bogovskii_pairing(state, stokes_);
    r.bogovskii_pairing = pr.value;
    r.stokes_iterations = pr.stats.iterations;
    if (!pr.stats.converged) r.flags |= kFlagStokesUnconverged;
  } catch (const Error&) {
    r.flags |= kFlagPartial | kFlagStokesUnconverged;
    r.bogovskii_pairing = std::numeric_limits<double>::quiet_NaN();
  }

  r.viscous_energy = 0.5 * (eos.nu_long() * r.div_u_l2 * r.div_u_l2 +
                            eos.mu * r.curl_u_l2 * r.curl_u_l2);
  r.pressure_work = pdiv_integral;
  r.m3_boundary_term = 0.0;
  const std::array<double, 3> m = lyapunov_functionals(r, cfg_.weights);
  r.M1 = m[0];
  r.M2 = m[1];
  r.M3 = m[2];

  r.momentum_residual = momentum_residual(state, udot, eos, floor);
  if (prev != nullptr && dt > 0.0) {
    r.pressure_residual = pressure_evolution_residual(*prev, state, dt, eos, floor);
  }
  r.grad_rho_l4 = grad_rho_l4(state.rho);

  if (prev_) {
    const double dI = r.dissipation_integral - prev_->second;
    const double dE = r.energy - prev_->first;
    r.energy_balance_residual = dI > 0.0 ? (dE + dI) / dI : 0.0;
  }
  prev_ = std::make_pair(r.energy, r.dissipation_integral);
  return r;
}

DiagnosticsRecord sample(const FlowState& state, const FlowState* prev, double dt,
                         const EosParams& eos, const LyapunovWeights& weights,
                         double vacuum_floor) {
  FlowState s = with_ghosts(state);
  SamplerConfig cfg;
  cfg.eos = eos;
  cfg.weights = weights;
  cfg.vacuum_floor = vacuum_floor;
  cfg.rho_mean0 = interior_mean(s.rho);
  Sampler sampler(s.grid(), cfg);
  const RhsEval rhs = compute_rhs(s, eos, vacuum_floor);
  if (prev != nullptr) {
    const FlowState p = with_ghosts(*prev);
    return sampler.sample(s, &p, dt, rhs, RunningIntegrals{});
  }
  return sampler.sample(s, nullptr, dt, rhs, RunningIntegrals{});
}

double pressure_evolution_residual(const FlowState& prev, const FlowState& curr, double dt,
                                   const EosParams& eos, double vacuum_floor) {
  if (!(dt > 0.0)) throw DomainError("pressure_evolution_residual: dt must be positive");
  const GridSpec& g = curr.grid();
  const auto s = g.strides();
  const ScalarField P0 = eos_pressure(prev.rho, eos);
  const ScalarField P1 = eos_pressure(curr.rho, eos);
  const double pb0 = interior_mean(P0), pb1 = interior_mean(P1);
  const VectorField u = reconstruct_velocity(curr, vacuum_floor);
  const ScalarField div = divergence(u);
  std::vector<double> pdiv(g.padded_size(), 0.0);
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) pdiv[q] = P1[q] * div[q];
  });
  const double mean_pdiv = cell_sum(g, pdiv.data()) / static_cast<double>(g.interior_cells());
  CompensatedSum res, n1, n2, n3, n4;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      const double pt = ((P1[q] - pb1) - (P0[q] - pb0)) / dt;
      double adv = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double* ua = u.data(a);
        const double ih = 1.0 / g.spacing[a];
        const double lo_face = ua[q] * (P1[q] - P1[q - s[a]]) * ih;
        const double hi_face = ua[q + s[a]] * (P1[q + s[a]] - P1[q]) * ih;
        adv += 0.5 * (lo_face + hi_face);
      }
      const double comp = eos.gamma * pdiv[q];
      const double src = (eos.gamma - 1.0) * mean_pdiv;
      const double r = pt + adv + comp - src;
      res.add(r * r);
      n1.add(pt * pt);
      n2.add(adv * adv);
      n3.add(comp * comp);
      n4.add(src * src);
    }
  });
  const double denom = std::sqrt(n1.value()) + std::sqrt(n2.value()) + std::sqrt(n3.value()) +
                       std::sqrt(n4.value());
  if (!(denom > 0.0)) return 0.0;
  return std::sqrt(res.value()) / denom;
}

double grad_rho_l4(const ScalarField& rho) {
  if (!rho.ghosts_filled()) throw ContractViolation("grad_rho_l4: ghosts not filled");
  const GridSpec& g = rho.grid();
  const auto s = g.strides();
  CompensatedSum acc;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      double m2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double ih = 0.5 / g.spacing[a];
        const double d = (rho[q + s[a]] - rho[q - s[a]]) * ih;
        m2 += d * d;
      }
      acc.add(m2 * m2);
    }
  });
  return std::pow(acc.value() * g.cell_volume(), 0.25);
}

std::pair<double, double> default_fit_window(const std::vector<double>& t) {
  if (t.empty()) return {0.0, 0.0};
  const double a = t.front(), b = t.back();
  return {a + 0.4 * (b - a), b};
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t0,
                   double t1, double r2_threshold) {
  if (t.size() != y.size()) throw DomainError("fit_decay: t and y differ in length");
  DecayFit fit;
  fit.t0 = t0;
  fit.t1 = t1;
  double ymax = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t0 && t[i] <= t1 && std::isfinite(y[i])) ymax = std::max(ymax, y[i]);
  }
  if (!(ymax > 0.0)) throw DomainError("fit_decay: series is zero on the window");
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * ymax;
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= t0 && t[i] <= t1)) continue;
    if (!(y[i] > floor) || !std::isfinite(y[i])) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(t[i]);
    ls.push_back(std::log(y[i]));
  }
  fit.samples = xs.size();
  if (fit.samples < 10) {
    throw DomainError("fit_decay: " + std::to_string(fit.samples) +
                      " usable samples in window, need at least 10");
  }
  const double n = static_cast<double>(fit.samples);
  double mx = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    ml += ls[i];
  }
  mx /= n;
  ml /= n;
  double sxx = 0.0, sxl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dl = ls[i] - ml;
    sxx += dx * dx;
    sxl += dx * dl;
    sll += dl * dl;
  }
  if (!(sxx > 0.0)) throw DomainError("fit_decay: window contains a single time");
  const double slope = sxl / sxx;
  fit.eta = -slope;
  fit.C = std::exp(ml - slope * mx);
  // A series constant to rounding has no defined R^2.
  if (sll <= 1e-24 * std::max(1.0, ml * ml) * n) {
    fit.constant = true;
    fit.eta = 0.0;
    fit.C = std::exp(ml);
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    fit.accepted = false;
    return fit;
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ls[i] - (ml + slope * (xs[i] - mx));
    ss_res += e * e;
  }
  fit.r2 = 1.0 - ss_res / sll;
  fit.accepted = fit.r2 >= r2_threshold;
  return fit;
}

DensityBounds track_density_bounds(const std::vector<DiagnosticsRecord>& records,
                                   double rho_min0) {
  DensityBounds b;
  if (records.empty()) return b;
  b.inf_min = INFINITY;
  b.sup_max = -INFINITY;
  b.max_of_min = -INFINITY;
  for (const auto& r : records) {
    b.inf_min = std::min(b.inf_min, r.rho_min);
    b.sup_max = std::max(b.sup_max, r.rho_max);
    b.max_of_min = std::max(b.max_of_min, r.rho_min);
    const double bound = rho_min0 * std::exp(-r.div_u_linf_integral);
    if (bound > 0.0) b.lower_bound_ratio = std::min(b.lower_bound_ratio, r.rho_min / bound);
  }
  b.final_div_linf_integral = records.back().div_u_linf_integral;
  return b;
}

std::array<double, 3> lyapunov_functionals(const DiagnosticsRecord& r, const LyapunovWeights& w) {
  const double rho2 = r.rho_l2 * r.rho_l2;
  const double m1 = w.D1 * r.energy - r.bogovskii_pairing;
  const double m2 = w.D3 * m1 + r.viscous_energy - r.pressure_work + w.D2 * rho2;
  const double m3 = w.D5 * m2 + r.sqrt_rho_udot_l2 * r.sqrt_rho_udot_l2 + r.m3_boundary_term + w.D4 * rho2;
  return {m1, m2, m3};
}

LyapunovReport lyapunov_monotonicity(const std::vector<DiagnosticsRecord>& records,
                                     const LyapunovWeights& weights, double mu) {
  LyapunovReport rep;
  rep.m1.name = "M1";
  rep.m2.name = "M2";
  rep.m3.name = "M3";
  std::vector<std::array<double, 3>> M;
  M.reserve(records.size());
  for (const auto& r : records) M.push_back(lyapunov_functionals(r, weights));
  auto run = [&](FunctionalCheck& fc, int which, auto dissipation, double D) {
    const auto value = [&](std::size_t k) { return M[k][which]; };
    const std::size_t n = records.size();
    std::int64_t last_nonpositive = -1;
    bool any_perturbed = false;
    bool definite = true;
    for (std::size_t k = 0; k < n; ++k) {
      const double m = value(k);
      const bool perturbed = records[k].energy > 0.0;
      any_perturbed |= perturbed;
      if (!(m > 0.0)) {
        last_nonpositive = static_cast<std::int64_t>(k);
        if (perturbed) definite = false;
      }
    }
    fc.positive_from =
        last_nonpositive + 1 < static_cast<std::int64_t>(n) ? last_nonpositive + 1 : -1;
    fc.positive_definite = any_perturbed && definite;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const auto& a = records[k];
      const auto& b = records[k + 1];
      const double dt = b.t - a.t;
      if (!(dt > 0.0)) continue;
      ++fc.intervals;
      const double ma = value(k), mb = value(k + 1);
      if (mb < ma) ++fc.decreasing;
      const double lhs = (mb - ma) / dt + 0.5 * (ma + mb) / D +
                         0.5 * (dissipation(a) + dissipation(b)) / D;
      // Relative slack for rounding in the difference quotient.
      const double slack = 1e-12 * (std::abs(ma) + std::abs(mb)) / dt;
      if (lhs <= slack) ++fc.holds;
    }
    fc.fraction = fc.intervals > 0 ? static_cast<double>(fc.holds) / fc.intervals : 1.0;
  };
  run(rep.m1, 0,
      [](const DiagnosticsRecord& r) {
        return r.div_u_l2 * r.div_u_l2 + r.curl_u_l2 * r.curl_u_l2;
      },
      weights.D1);
  run(rep.m2, 1,
      [](const DiagnosticsRecord& r) { return r.sqrt_rho_udot_l2 * r.sqrt_rho_udot_l2; },
      weights.D3);
  run(rep.m3, 2,
      [mu](const DiagnosticsRecord& r) { return mu * r.grad_udot_l2 * r.grad_udot_l2; },
      weights.D5);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const double base = r.rho_l2 * r.rho_l2 + r.sqrt_rho_u_l2 * r.sqrt_rho_u_l2;
    if (base > 0.0) {
      lo = std::min(lo, M[k][0] / base);
      hi = std::max(hi, M[k][0] / base);
    }
  }
  rep.m1_lower = std::isfinite(lo) ? lo : 0.0;
  rep.m1_upper = hi;
  return rep;
}

std::optional<double> probe_ratio(ProbeKind kind, const VectorField& f) {
  const double gradn = velocity_gradient_l2(f);
  if (kind == ProbeKind::poincare) {
    const double fn = std::sqrt(std::max(inner(f, f), 0.0));
    if (!(gradn > 0.0)) return std::nullopt;
    return fn / gradn;
  }
  const double dn = lp_norm(divergence(f), 2.0);
  const EdgeField w = curl(f);
  const double cn = std::sqrt(std::max(inner(w, w), 0.0));
  if (!(dn + cn > 0.0)) return std::nullopt;
  return gradn / (dn + cn);
}

ProbeReport inequality_probe(ProbeKind kind, int trials, const GridSpec& grid,
                             std::uint64_t seed) {
  if (trials < 10) throw DomainError("inequality_probe: trials must be >= 10");
  ProbeReport rep;
  rep.kind = kind;
  rep.cells = grid.cells[0];
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mode(0, 3);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  constexpr int kTerms = 6;
  const double pi = std::numbers::pi;
  for (int trial = 0; trial < trials; ++trial) {
    // Draw the coefficients before evaluating so every resolution sees the
    // same continuous field for a given seed.
    struct Term {
      int comp;
      std::array<int, 3> k;
      double c;
    };
    std::vector<Term> terms;
    for (int a = 0; a < 3; ++a) {
      for (int t = 0; t < kTerms; ++t) {
        Term term{a, {mode(rng), mode(rng), mode(rng)}, coef(rng)};
        if (term.k[a] == 0) term.k[a] = 1;
        terms.push_back(term);
      }
    }
    VectorField f(grid);
    for (int a = 0; a < 3; ++a) {
      double* fa = f.data(a);
      for_each_index(grid, face_box(grid, a, true), [&](int i, int j, int k, std::size_t q) {
        const std::array<int, 3> idx{i, j, k};
        std::array<double, 3> x{};
        for (int d = 0; d < 3; ++d) {
          x[d] = (d == a ? grid.node(d, idx[d]) : grid.center(d, idx[d])) / grid.extent[d];
        }
        double v = 0.0;
        for (const auto& term : terms) {
          if (term.comp != a) continue;
          double prod = term.c;
          for (int d = 0; d < 3; ++d) {
            const double arg = term.k[d] * pi * x[d];
            prod *= d == a ? std::sin(arg) : std::cos(arg);
          }
          v += prod;
        }
        fa[q] = v;
      });
    }
    fill_vector_ghosts(f);
    const auto ratio = probe_ratio(kind, f);
    if (!ratio) {
      ++rep.skipped;
      continue;
    }
    rep.ratios.push_back(*ratio);
    rep.max_ratio = std::max(rep.max_ratio, *ratio);
  }
  return rep;
}

}  // namespace slipflow
