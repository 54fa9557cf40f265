#include "slipflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "slipflow/errors.hpp"
#include "slipflow/reduce.hpp"
#include "stencil.hpp"

namespace slipflow {
namespace {

std::string with_time(const std::string& what, double t) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (t = " << t << ")";
  return os.str();
}

/// Zeroes tiny negative densities and rejects larger ones.
void clip_density(ScalarField& rho, std::int64_t step) {
  const GridSpec& g = rho.grid();
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      const double r = rho[q];
      if (r < 0.0) {
        if (r <= -kPositivityTolerance) {
          std::ostringstream os;
          os.precision(17);
          os << "negative density " << r << " at step " << step;
          throw PositivityError(os.str(), step);
        }
        rho[q] = 0.0;
      } else if (!std::isfinite(r)) {
        throw NumericalBlowup("non-finite density at step " + std::to_string(step), step);
      }
    }
  });
}

void fill_or_blowup(FlowState& s, std::int64_t step) {
  try {
    fill_ghosts(s);
  } catch (const NumericalBlowup& e) {
    throw NumericalBlowup(std::string(e.what()) + " at step " + std::to_string(step), step);
  }
}

double detail_cfl(const FlowState& state, const VectorField& u, const EosParams& eos,
                  const StepControl& ctl, double vacuum_floor) {
  const GridSpec& g = state.grid();
  const double h = g.min_spacing();
  const auto s = g.strides();
  const double* rho = state.rho.data();
  const double* ux = u.data(0);
  const double* uy = u.data(1);
  const double* uz = u.data(2);
  // c^2 = a gamma rho^(gamma - 1); the square is taken after the max.
  const double agam = eos.a * eos.gamma, gm1 = eos.gamma - 1.0;
  const bool linear = gm1 == 1.0;
  double max_speed = 0.0;
  double rho_face_min = INFINITY;
  bool negative = false;
  for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      const double r = rho[q];
      negative |= r < 0.0;
      const double mx = std::max(std::abs(ux[q]), std::abs(ux[q + s[0]]));
      const double my = std::max(std::abs(uy[q]), std::abs(uy[q + s[1]]));
      const double mz = std::max(std::abs(uz[q]), std::abs(uz[q + s[2]]));
      const double c2 = linear ? agam * r : (r > 0.0 ? agam * std::pow(r, gm1) : 0.0);
      max_speed = std::max(max_speed, std::sqrt(mx * mx + my * my + mz * mz) + std::sqrt(c2));
    }
  });
  if (negative) throw DomainError("cfl_dt: negative density");
  for (int a = 0; a < 3; ++a) {
    for_each_row(g, face_box(g, a, true), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q)
        rho_face_min = std::min(rho_face_min, face_density(rho, s[a], q));
    });
  }
  const double dt_adv = max_speed > 0.0 ? ctl.cfl_advective * h / max_speed : INFINITY;
  const double dt_visc =
      ctl.cfl_viscous * h * h * std::max(rho_face_min, vacuum_floor) / eos.nu_long();
  const double dt = std::min(dt_adv, dt_visc);
  if (dt < ctl.dt_min) {
    std::ostringstream os;
    os.precision(6);
    os << "stable time step " << dt << " is below dt_min " << ctl.dt_min
       << "; use a coarser grid or a larger vacuum floor (an implicit viscous update is not "
          "available)";
    throw StiffnessError(os.str());
  }
  return std::min(dt, ctl.dt_max);
}

}  // namespace

void validate(const StepControl& ctl) {
  if (!(ctl.cfl_advective > 0.0 && ctl.cfl_advective <= 1.0))
    throw ConfigError("numerics.cfl_advective", "must lie in (0, 1]");
  if (!(ctl.cfl_viscous > 0.0 && ctl.cfl_viscous <= 0.5))
    throw ConfigError("numerics.cfl_viscous", "must lie in (0, 0.5]");
  if (!(ctl.dt_min > 0.0)) throw ConfigError("numerics.dt_min", "must be positive");
  if (!(ctl.dt_max >= ctl.dt_min)) throw ConfigError("numerics.dt_max", "must be >= dt_min");
  if (!(ctl.t_end >= 0.0) || !std::isfinite(ctl.t_end))
    throw ConfigError("numerics.t_end", "must be finite and >= 0");
  if (ctl.max_steps < 0) throw ConfigError("numerics.max_steps", "must be >= 0");
}

Solver::Solver(const GridSpec& grid, const EosParams& eos, double vacuum_floor)
    : grid_(grid),
      eos_(eos),
      floor_(vacuum_floor),
      u_(grid),
      flux_(grid),
      div_(grid),
      p_(grid),
      omega_(grid) {
  rhs_.drho = ScalarField(grid);
  rhs_.dmom = VectorField(grid);
  s1_.rho = ScalarField(grid);
  s1_.mom = VectorField(grid);
  s2_ = s1_;
  if (!(vacuum_floor > 0.0)) throw ConfigError("numerics.vacuum_floor", "must be positive");
}

const RhsEval& Solver::evaluate(const FlowState& state) { return assemble(state, true); }

const RhsEval& Solver::assemble(const FlowState& state, bool with_rates) {
  if (!(state.grid() == grid_)) throw ContractViolation("Solver::evaluate: grid mismatch");
  if (!state.rho.ghosts_filled() || !state.mom.ghosts_filled())
    throw ContractViolation("compute_rhs: ghosts not filled");
  const GridSpec& g = grid_;
  const auto s = g.strides();
  const double* rho = state.rho.data();

  reconstruct_velocity_into(state, floor_, u_);
  detail::divergence_kernel(g, u_.data(0), u_.data(1), u_.data(2), div_.data());
  fill_scalar_ghosts(div_);
  detail::curl_kernel(g, u_, omega_);
  detail::muscl_flux_kernel(g, rho, u_, flux_);

  // Pressure on interior cells and ghosts (reflection of the density).
  {
    double* p = p_.data();
    const std::size_t n = g.padded_size();
    const double a = eos_.a, gam = eos_.gamma;
    const bool square = gam == 2.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double r = rho[q];
      p[q] = square ? a * r * r : (r > 0.0 ? a * std::pow(r, gam) : 0.0);
    }
  }

  // Continuity.
  detail::divergence_kernel(g, flux_.data(0), flux_.data(1), flux_.data(2), rhs_.drho.data());
  {
    double* d = rhs_.drho.data();
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) d[q] = -d[q];
    });
  }

  // Momentum on interior faces; wall-normal entries stay exactly 0.
  const double nu = eos_.nu_long(), mu = eos_.mu;
  const double* dv = div_.data();
  const double* p = p_.data();
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const std::ptrdiff_t sa = s[a], sb = s[b], sc = s[c];
    const double ia = 1.0 / g.spacing[a], ib = 1.0 / g.spacing[b], ic = 1.0 / g.spacing[c];
    const double* ua = u_.data(a);
    const double* ga = flux_.data(a);
    const double* gb = flux_.data(b);
    const double* gc = flux_.data(c);
    const double* wb = omega_.data(b);
    const double* wc = omega_.data(c);
    double* out = rhs_.dmom.data(a);
    // Zero the wall planes once; interior faces are overwritten below.
    IndexBox walls = face_box(g, a, true);
    for (int side = 0; side < 2; ++side) {
      IndexBox plane = walls;
      plane.lo[a] = side == 0 ? 0 : g.cells[a];
      plane.hi[a] = plane.lo[a] + 1;
      for_each_row(g, plane, [&](std::size_t lo, std::size_t hi) {
        std::fill(out + lo, out + hi, 0.0);
      });
    }
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        // Cell-centred flux of a-momentum along a, at the cells above and below.
        const double fc_hi = 0.25 * (ga[q] + ga[q + sa]) * (ua[q] + ua[q + sa]);
        const double fc_lo = 0.25 * (ga[q - sa] + ga[q]) * (ua[q - sa] + ua[q]);
        // Edge fluxes of a-momentum along b and c.
        const double fb_hi = 0.25 * (gb[q + sb - sa] + gb[q + sb]) * (ua[q] + ua[q + sb]);
        const double fb_lo = 0.25 * (gb[q - sa] + gb[q]) * (ua[q - sb] + ua[q]);
        const double fcc_hi = 0.25 * (gc[q + sc - sa] + gc[q + sc]) * (ua[q] + ua[q + sc]);
        const double fcc_lo = 0.25 * (gc[q - sa] + gc[q]) * (ua[q - sc] + ua[q]);
        const double conv =
            (fc_hi - fc_lo) * ia + (fb_hi - fb_lo) * ib + (fcc_hi - fcc_lo) * ic;
        const double gradp = (p[q] - p[q - sa]) * ia;
        const double graddiv = (dv[q] - dv[q - sa]) * ia;
        const double curlcurl = (wc[q + sb] - wc[q]) * ib - (wb[q + sc] - wb[q]) * ic;
        out[q] = -conv - gradp + nu * graddiv - mu * curlcurl;
      }
    });
  }

  // Dissipation rate and max |div u| of the input state.
  if (with_rates) {
    CompensatedSum d2;
    double dmax = 0.0;
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) {
        d2.add(dv[q] * dv[q]);
        dmax = std::max(dmax, std::abs(dv[q]));
      }
    });
    const double w2 = inner(omega_, omega_);
    rhs_.dissipation = nu * d2.value() * g.cell_volume() + mu * w2;
    rhs_.div_linf = dmax;
  }
  rhs_.drho.set_ghosts_filled(false);
  rhs_.dmom.set_ghosts_filled(false);
  return rhs_;
}

double Solver::stable_dt(const FlowState& state, const StepControl& ctl) const {
  return detail_cfl(state, u_, eos_, ctl, floor_);
}

void Solver::stage_update(const FlowState& base, const FlowState& stage, double w,
                          const RhsEval& rhs, double dt, FlowState& out) const {
  // out = base + w ((stage - base) + dt L(stage)); written as an increment on
  // the base state so that rounding does not bias the total mass.
  const GridSpec& g = grid_;
  {
    const double* r0 = base.rho.data();
    const double* r1 = stage.rho.data();
    const double* d = rhs.drho.data();
    double* o = out.rho.data();
    for_each_row(g, cell_box(g), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) o[q] = r0[q] + w * ((r1[q] - r0[q]) + dt * d[q]);
    });
  }
  for (int a = 0; a < 3; ++a) {
    const double* m0 = base.mom.data(a);
    const double* m1 = stage.mom.data(a);
    const double* d = rhs.dmom.data(a);
    double* o = out.mom.data(a);
    for_each_row(g, face_box(g, a, false), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t q = lo; q < hi; ++q) o[q] = m0[q] + w * ((m1[q] - m0[q]) + dt * d[q]);
    });
  }
}

FlowState Solver::advance(const FlowState& state, double dt, const RhsEval& first_stage) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step: dt must be positive");
  const std::int64_t next = state.step + 1;

  // Stage 1: u1 = u + dt L(u).
  stage_update(state, state, 1.0, first_stage, dt, s1_);
  clip_density(s1_.rho, next);
  fill_or_blowup(s1_, next);

  // Stage 2: u2 = 3/4 u + 1/4 (u1 + dt L(u1)).
  assemble(s1_, false);
  stage_update(state, s1_, 0.25, rhs_, dt, s2_);
  clip_density(s2_.rho, next);
  fill_or_blowup(s2_, next);

  // Stage 3: u3 = 1/3 u + 2/3 (u2 + dt L(u2)).
  assemble(s2_, false);
  FlowState out;
  out.rho = ScalarField(grid_);
  out.mom = VectorField(grid_);
  stage_update(state, s2_, 2.0 / 3.0, rhs_, dt, out);
  clip_density(out.rho, next);
  fill_or_blowup(out, next);
  out.t = state.t + dt;
  out.step = next;
  return out;
}

RhsEval compute_rhs(const FlowState& state, const EosParams& eos, double vacuum_floor) {
  Solver solver(state.grid(), eos, vacuum_floor);
  return solver.evaluate(state);
}

double cfl_dt(const FlowState& state, const EosParams& eos, const StepControl& ctl,
              double vacuum_floor) {
  const VectorField u = reconstruct_velocity(state, vacuum_floor);
  return detail_cfl(state, u, eos, ctl, vacuum_floor);
}

FlowState step_ssprk3(const FlowState& state, const EosParams& eos, double dt,
                      double vacuum_floor) {
  Solver solver(state.grid(), eos, vacuum_floor);
  const RhsEval& first = solver.evaluate(state);
  const RhsEval copy = first;
  return solver.advance(state, dt, copy);
}

IntegrateResult integrate(FlowState state, Solver& solver, const IntegrateOptions& opts) {
  const StepControl& ctl = opts.control;
  validate(ctl);
  if (opts.sample_every < 1) throw ConfigError("output.sample_every", "must be >= 1");
  if (!state.rho.ghosts_filled() || !state.mom.ghosts_filled()) fill_ghosts(state);

  IntegrateResult res;
  RunningIntegrals acc = opts.initial_integrals;
  FlowState prev;
  bool have_prev = false;
  double dt_prev = 0.0;
  double d_prev = 0.0, div_prev = 0.0;
  RhsEval first;

  try {
    for (;;) {
      first = solver.evaluate(state);
      if (have_prev) {
        acc.dissipation += 0.5 * (d_prev + first.dissipation) * dt_prev;
        acc.div_linf += 0.5 * (div_prev + first.div_linf) * dt_prev;
      }
      // Tolerance on t_end keeps the last step from being a roundoff sliver.
      const double remaining = ctl.t_end - state.t;
      const bool done = remaining <= 1e-12 * std::max(1.0, ctl.t_end) ||
                        state.step >= ctl.max_steps;
      const bool due = have_prev ? (state.step % opts.sample_every == 0 || done)
                                 : opts.sample_initial;
      if (due && opts.on_sample) {
        SampleContext ctx{state, have_prev ? &prev : nullptr, dt_prev, first, acc};
        opts.on_sample(ctx);
      }
      // Checkpoints follow the sample of the same step, so a resumed run starts
      // with the integrals and the sampler bookkeeping already up to date.
      if (have_prev && opts.checkpoint_every > 0 && state.step % opts.checkpoint_every == 0 &&
          opts.on_checkpoint) {
        opts.on_checkpoint(state, acc);
      }
      if (done) break;

      // The sample callback does not touch the solver, so the velocity cached
      // by evaluate() above still belongs to `state`.
      double dt = solver.stable_dt(state, ctl);
      if (dt > remaining) dt = remaining;
      FlowState next = solver.advance(state, dt, first);
      d_prev = first.dissipation;
      div_prev = first.div_linf;
      dt_prev = dt;
      prev = std::move(state);
      state = std::move(next);
      have_prev = true;
      ++res.steps_taken;
    }
  } catch (const PositivityError& e) {
    throw PositivityError(with_time(e.what(), state.t), e.step());
  } catch (const NumericalBlowup& e) {
    throw NumericalBlowup(with_time(e.what(), state.t), e.step());
  } catch (const StiffnessError& e) {
    throw StiffnessError(with_time(e.what(), state.t));
  }
  res.final_state = std::move(state);
  res.integrals = acc;
  return res;
}

}  // namespace slipflow
