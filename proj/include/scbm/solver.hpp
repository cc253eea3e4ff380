/*
 * Copyright 2026 The scbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SCBM_SOLVER_HPP
#define SCBM_SOLVER_HPP

// Minimum-energy bandwidth manager over Q+2 free rates.
//
// The problem is posed in x = log R, where energy, migration time and downtime
// are sums of exponentials of affine functions of x (jointly convex). Iterates
// are projected primal-dual updates with clipped adaptive gains. By default the
// update direction is a semismooth Newton step on the KKT conditions, scaled so
// that each clipped gain acts as a step fraction gain/a_max in [0.1, 1];
// Preconditioning::none applies the gains to the raw Lagrangian gradient.

#include <scbm/error.hpp>
#include <scbm/model.hpp>
#include <scbm/power.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scbm {

struct FeasibilityReport
{
	bool feasible = false;
	double migration_time_lhs = 0; // must be <= 1
	double downtime_lhs = 0;       // must be <= 1
	double speedup_lhs = 0;        // must be <= 1

	std::string describe() const
	{
		std::ostringstream os;
		os << "migration-time margin " << migration_time_lhs << ", downtime margin " << downtime_lhs
		   << ", speed-up margin " << speedup_lhs << " (each must be <= 1)";
		return os.str();
	}
};

// Evaluates the three conditions with every rate at R_hat.
inline FeasibilityReport check_feasibility(const MigrationSpec& spec)
{
	spec.validate();
	FeasibilityReport f;
	const double rh = spec.r_hat_mbps;
	const double m0 = spec.m0_mb;
	if (spec.dirty_rate.is_constant())
	{
		const double w = spec.dirty_rate.samples().front();
		const double ratio = w / rh;
		const int imax = spec.i_max;
		const double series = (ratio == 1) ? (imax + 2) / rh : (1 - std::pow(ratio, imax + 2)) / (rh - w);
		f.migration_time_lhs = (m0 / spec.delta_mt_s) * series;
		f.downtime_lhs = (m0 / spec.delta_dt_s) * (1 / rh) * std::pow(ratio, imax + 1);
		f.speedup_lhs = spec.beta * ratio;
	}
	else
	{
		const auto sched = uniform_schedule(spec, rh);
		f.migration_time_lhs = memory_migration_time(spec, sched) / spec.delta_mt_s;
		f.downtime_lhs = downtime(spec, sched) / spec.delta_dt_s;
		f.speedup_lhs = spec.beta * spec.w_max() / rh;
	}
	f.feasible = f.migration_time_lhs <= 1 && f.downtime_lhs <= 1 && f.speedup_lhs <= 1;
	return f;
}

// Smallest round count whose all-R_hat downtime meets the deadline.
inline int optimized_imax(const MigrationSpec& spec)
{
	const double w = spec.w_max();
	const double rh = spec.r_hat_mbps;
	detail::require(w < rh, "optimized_imax: requires dirty rate below R_hat");
	const double x = spec.m0_mb / (spec.delta_dt_s * rh);
	if (x <= 1)
	{
		return 0;
	}
	const double v = std::log(x) / std::log(rh / w) - 1;
	const double c = std::ceil(v - 1e-12 * std::max(1.0, std::abs(v)));
	return std::max(0, static_cast<int>(c));
}

struct RoundCountChoice
{
	MigrationSpec spec;
	int i_tilde = 0;     // value of the closed-form rule
	bool adjusted = false; // rounded up to a multiple of Q (or Q reset to 1 for i_max = 0)
};

// Applies the closed-form round count, rounded up so that Q divides it.
inline RoundCountChoice with_optimized_imax(MigrationSpec spec, int q)
{
	detail::require(q >= 1, "Q must be at least 1");
	RoundCountChoice c;
	c.i_tilde = optimized_imax(spec);
	int i = c.i_tilde;
	if (i == 0)
	{
		c.adjusted = q != 1;
		q = 1;
	}
	else if (i % q != 0 || i < q)
	{
		i = ((i + q - 1) / q) * q;
		c.adjusted = true;
	}
	spec.i_max = i;
	spec.q = q;
	c.spec = spec;
	return c;
}

// ---------------------------------------------------------------------------
// Log-domain problem

// sum_t exp(log_coef_t + expo_t . x)
struct ExpSum
{
	std::vector<double> log_coef;
	std::vector<Eigen::VectorXd> expo;

	void add(double lc, Eigen::VectorXd e)
	{
		if (std::isfinite(lc))
		{
			log_coef.push_back(lc);
			expo.push_back(std::move(e));
		}
	}

	double value(const Eigen::VectorXd& x) const
	{
		double v = 0;
		for (std::size_t t = 0; t < expo.size(); ++t)
		{
			v += std::exp(log_coef[t] + expo[t].dot(x));
		}
		return v;
	}

	Eigen::VectorXd gradient(const Eigen::VectorXd& x) const
	{
		Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
		for (std::size_t t = 0; t < expo.size(); ++t)
		{
			g += std::exp(log_coef[t] + expo[t].dot(x)) * expo[t];
		}
		return g;
	}

	Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const
	{
		Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
		for (std::size_t t = 0; t < expo.size(); ++t)
		{
			h += std::exp(log_coef[t] + expo[t].dot(x)) * expo[t] * expo[t].transpose();
		}
		return h;
	}
};

class LogProblem
{
public:
	LogProblem(const MigrationSpec& spec, const BalancedPowerModel& power) : spec_(spec), power_(power)
	{
		spec_.validate();
		power_.validate();
		const auto n = static_cast<Eigen::Index>(spec_.free_rate_count());
		const double log_m0 = std::log(spec_.m0_mb);
		const double log_k0 = std::log(power_.k0);
		Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
		for (int i = 0; i <= spec_.i_max + 1; ++i)
		{
			const auto k = static_cast<Eigen::Index>(free_index(spec_, i));
			t[k] -= 1; // T_i = M0 Gamma_i / (R_0 ... R_i)
			const double lc = log_m0 + spec_.log_gamma(i);
			t_mt_.add(lc, t);
			Eigen::VectorXd te = t;
			te[k] += power_.alpha; // K0 R_i^alpha T_i
			e_dyn_.add(log_k0 + lc, te);
			if (i == spec_.i_max + 1)
			{
				t_dt_.add(lc, t);
			}
		}
		for (int r : spec_.beta_rounds())
		{
			beta_index_.push_back(static_cast<Eigen::Index>(free_index(spec_, r)));
		}
		beta_w_ = spec_.beta * spec_.w_max();
		e_setup_ = power_.p_setup_total_w * spec_.delta_mt_s;
	}

	const MigrationSpec& spec() const { return spec_; }
	const BalancedPowerModel& power() const { return power_; }
	Eigen::Index dim() const { return static_cast<Eigen::Index>(spec_.free_rate_count()); }
	Eigen::Index multiplier_count() const { return 2 + static_cast<Eigen::Index>(beta_index_.size()); }
	const std::vector<Eigen::Index>& beta_index() const { return beta_index_; }
	double log_r_hat() const { return std::log(spec_.r_hat_mbps); }
	double e_setup() const { return e_setup_; }

	const ExpSum& migration_time_terms() const { return t_mt_; }
	const ExpSum& downtime_terms() const { return t_dt_; }
	const ExpSum& dynamic_energy_terms() const { return e_dyn_; }

	double energy(const Eigen::VectorXd& x) const { return e_setup_ + e_dyn_.value(x); }
	double migration_time(const Eigen::VectorXd& x) const { return t_mt_.value(x); }
	double downtime(const Eigen::VectorXd& x) const { return t_dt_.value(x); }

	// phi1, phi2, then one speed-up residual per constrained rate.
	Eigen::VectorXd constraints(const Eigen::VectorXd& x) const
	{
		Eigen::VectorXd c(multiplier_count());
		c[0] = t_mt_.value(x) / spec_.delta_mt_s - 1;
		c[1] = t_dt_.value(x) / spec_.delta_dt_s - 1;
		for (std::size_t k = 0; k < beta_index_.size(); ++k)
		{
			c[2 + static_cast<Eigen::Index>(k)] = beta_w_ * std::exp(-x[beta_index_[k]]) - 1;
		}
		return c;
	}

	Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& x) const
	{
		Eigen::MatrixXd j = Eigen::MatrixXd::Zero(multiplier_count(), dim());
		j.row(0) = t_mt_.gradient(x).transpose() / spec_.delta_mt_s;
		j.row(1) = t_dt_.gradient(x).transpose() / spec_.delta_dt_s;
		for (std::size_t k = 0; k < beta_index_.size(); ++k)
		{
			const auto i = beta_index_[k];
			j(2 + static_cast<Eigen::Index>(k), i) = -beta_w_ * std::exp(-x[i]);
		}
		return j;
	}

	double lagrangian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const
	{
		return energy(x) + lambda.dot(constraints(x));
	}

	Eigen::VectorXd lagrangian_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const
	{
		return e_dyn_.gradient(x) + constraint_jacobian(x).transpose() * lambda;
	}

	Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const
	{
		Eigen::MatrixXd h = e_dyn_.hessian(x);
		h += (lambda[0] / spec_.delta_mt_s) * t_mt_.hessian(x);
		h += (lambda[1] / spec_.delta_dt_s) * t_dt_.hessian(x);
		for (std::size_t k = 0; k < beta_index_.size(); ++k)
		{
			const auto i = beta_index_[k];
			h(i, i) += lambda[2 + static_cast<Eigen::Index>(k)] * beta_w_ * std::exp(-x[i]);
		}
		return h;
	}

	// Energy-scaled natural residual of the KKT system.
	double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const
	{
		const double s = 1 + std::abs(energy(x));
		const Eigen::VectorXd g = lagrangian_gradient(x, lambda);
		const Eigen::VectorXd c = constraints(x);
		const double u = log_r_hat();
		double r = 0;
		for (Eigen::Index i = 0; i < x.size(); ++i)
		{
			r = std::max(r, std::abs(x[i] - std::min(u, x[i] - g[i] / s)));
		}
		for (Eigen::Index k = 0; k < c.size(); ++k)
		{
			r = std::max(r, std::abs(lambda[k] / s - std::max(0.0, lambda[k] / s + c[k])));
		}
		return r;
	}

private:
	MigrationSpec spec_;
	BalancedPowerModel power_;
	ExpSum t_mt_;
	ExpSum t_dt_;
	ExpSum e_dyn_;
	std::vector<Eigen::Index> beta_index_;
	double beta_w_ = 0;
	double e_setup_ = 0;
};

// ---------------------------------------------------------------------------
// Iteration state

enum class Preconditioning
{
	newton,
	none
};

struct SolverOptions
{
	double a_max = 1e-2;
	int max_iters = 200;
	double convergence_tol = 1e-6;
	bool record_trajectory = true;
	Preconditioning preconditioning = Preconditioning::newton;
	double max_log_step = 2.0;             // trust cap on a Newton step in log-rate units
	std::optional<Eigen::VectorXd> initial_log_rates;

	void validate() const
	{
		detail::require(a_max > 0, "solver options: a_max must be positive");
		detail::require(max_iters >= 1, "solver options: max_iters must be at least 1");
		detail::require(convergence_tol > 0, "solver options: convergence_tol must be positive");
	}
};

struct Gains
{
	Eigen::VectorXd omega; // primal, one per free rate
	Eigen::VectorXd xi;    // deadline multipliers
	Eigen::VectorXd psi;   // speed-up multipliers
};

struct SolverState
{
	Eigen::VectorXd r_log;
	Eigen::VectorXd lambda; // [lambda1, lambda2, speed-up multipliers...]
	Gains gains;
	int n = 0;
	long scalar_updates = 0;    // running count of variable and gain updates
	int last_step_updates = 0;  // updates performed by the latest iteration
	std::vector<double> energy_trace;
};

struct LagrangianGradient
{
	Eigen::VectorXd r_log;
	Eigen::VectorXd lambda;
};

inline SolverState initial_state(const LogProblem& p, const SolverOptions& opts)
{
	SolverState s;
	const auto n = p.dim();
	if (opts.initial_log_rates)
	{
		detail::require(opts.initial_log_rates->size() == n, "solver options: initial_log_rates has the wrong length");
		s.r_log = *opts.initial_log_rates;
	}
	else
	{
		const auto& spec = p.spec();
		const double w = spec.w_max();
		const double start = w > 0 ? w : std::min(spec.r_hat_mbps, spec.m0_mb / spec.delta_mt_s);
		s.r_log = Eigen::VectorXd::Constant(n, std::log(start));
	}
	s.r_log = s.r_log.cwiseMin(p.log_r_hat());
	s.lambda = Eigen::VectorXd::Zero(p.multiplier_count());
	return s;
}

struct LogObjective
{
	double e_tot = 0;
	double t_mt = 0;
	double t_dt = 0;
};

inline LogObjective objective_log(const MigrationSpec& spec, const BalancedPowerModel& power,
                                  const Eigen::VectorXd& r_log)
{
	const LogProblem p(spec, power);
	detail::require(r_log.size() == p.dim(), "objective_log: wrong log-rate count");
	return {p.energy(r_log), p.migration_time(r_log), p.downtime(r_log)};
}

inline double lagrangian(const MigrationSpec& spec, const BalancedPowerModel& power, const SolverState& state)
{
	const LogProblem p(spec, power);
	return p.lagrangian(state.r_log, state.lambda);
}

inline LagrangianGradient gradients(const LogProblem& p, const SolverState& state)
{
	return {p.lagrangian_gradient(state.r_log, state.lambda), p.constraints(state.r_log)};
}

inline LagrangianGradient gradients(const MigrationSpec& spec, const BalancedPowerModel& power,
                                    const SolverState& state)
{
	return gradients(LogProblem(spec, power), state);
}

inline double clipped_gain(double v, double a_max)
{
	return std::max(a_max / 10, std::min(a_max, 0.5 * v * v));
}

inline Gains adaptive_gains(const SolverState& state, const SolverOptions& opts)
{
	Gains g;
	const auto n = state.r_log.size();
	const auto m = state.lambda.size();
	if (state.n == 0)
	{
		g.omega = Eigen::VectorXd::Constant(n, opts.a_max);
		g.xi = Eigen::VectorXd::Constant(2, opts.a_max);
		g.psi = Eigen::VectorXd::Constant(m - 2, opts.a_max);
		return g;
	}
	g.omega = state.r_log.unaryExpr([&](double v) { return clipped_gain(v, opts.a_max); });
	g.xi = state.lambda.head(2).unaryExpr([&](double v) { return clipped_gain(v, opts.a_max); });
	g.psi = state.lambda.tail(m - 2).unaryExpr([&](double v) { return clipped_gain(v, opts.a_max); });
	return g;
}

// Descent on the log-rates, ascent on the multipliers, then projection.
inline SolverState primal_dual_step(const SolverState& state, const LagrangianGradient& dir, double log_r_hat)
{
	SolverState next = state;
	const auto n = state.r_log.size();
	const auto m = state.lambda.size();
	for (Eigen::Index i = 0; i < n; ++i)
	{
		next.r_log[i] = std::min(state.r_log[i] - state.gains.omega[i] * dir.r_log[i], log_r_hat);
	}
	for (Eigen::Index k = 0; k < m; ++k)
	{
		const double gain = k < 2 ? state.gains.xi[k] : state.gains.psi[k - 2];
		next.lambda[k] = std::max(state.lambda[k] + gain * dir.lambda[k], 0.0);
	}
	const auto gain_count = state.gains.omega.size() + state.gains.xi.size() + state.gains.psi.size();
	next.last_step_updates = static_cast<int>(n + m + gain_count);
	next.scalar_updates += next.last_step_updates;
	next.n = state.n + 1;
	return next;
}


namespace detail {

// Fischer-Burmeister residual of the KKT system in scaled units, with its Jacobian.
// Unknowns are (x, lambda); the x rows pair u - x with -grad_x L / s, the lambda rows pair lambda / s with -c.
struct FbSystem
{
	Eigen::VectorXd phi;
	Eigen::MatrixXd jac;
};

// Penalized Fischer-Burmeister function; the product term keeps a large multiplier on a slack
// constraint visible to the merit.
constexpr double fb_weight = 0.5;

inline double fb(double a, double b)
{
	return fb_weight * (a + b - std::hypot(a, b)) + (1 - fb_weight) * std::max(a, 0.0) * std::max(b, 0.0);
}

inline FbSystem fb_system(const LogProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lam, double s,
                          bool with_jacobian)
{
	const auto n = p.dim();
	const auto m = p.multiplier_count();
	const double u = p.log_r_hat();
	const Eigen::VectorXd g = p.lagrangian_gradient(x, lam);
	const Eigen::VectorXd c = p.constraints(x);
	FbSystem f;
	f.phi.resize(n + m);
	for (Eigen::Index i = 0; i < n; ++i)
	{
		f.phi[i] = fb(u - x[i], -g[i] / s);
	}
	for (Eigen::Index k = 0; k < m; ++k)
	{
		f.phi[n + k] = fb(lam[k] / s, -c[k]);
	}
	if (!with_jacobian)
	{
		return f;
	}
	const Eigen::MatrixXd h = p.lagrangian_hessian(x, lam);
	const Eigen::MatrixXd jc = p.constraint_jacobian(x);
	// Partial derivatives of fb at (a, b); the kink at the origin takes the element along (1, 1).
	const auto partials = [](double a, double b) {
		const double r = std::hypot(a, b);
		const double w = fb_weight;
		const double pa = r == 0 ? 1 - std::numbers::sqrt2 / 2 : 1 - a / r;
		const double pb = r == 0 ? 1 - std::numbers::sqrt2 / 2 : 1 - b / r;
		const bool both = a > 0 && b > 0;
		return std::pair{w * pa + (1 - w) * (both ? b : 0.0), w * pb + (1 - w) * (both ? a : 0.0)};
	};
	f.jac = Eigen::MatrixXd::Zero(n + m, n + m);
	for (Eigen::Index i = 0; i < n; ++i)
	{
		const auto [da, db] = partials(u - x[i], -g[i] / s);
		f.jac.block(i, 0, 1, n) = -db * h.row(i) / s;
		f.jac(i, i) -= da;
		f.jac.block(i, n, 1, m) = -db * jc.col(i).transpose() / s;
	}
	for (Eigen::Index k = 0; k < m; ++k)
	{
		const auto [da, db] = partials(lam[k] / s, -c[k]);
		f.jac.block(n + k, 0, 1, n) = -db * jc.row(k);
		f.jac(n + k, n + k) += da / s;
	}
	return f;
}

} // namespace detail

// Preconditioned direction: a semismooth Newton step on the Fischer-Burmeister form of the KKT
// system, globalized by an Armijo search on the squared residual, with the residual gradient as
// fallback. The preconditioner absorbs the per-coordinate gains, so the projected update lands on
// the searched point whatever the gains are.
inline LagrangianGradient newton_direction(const LogProblem& p, const SolverState& state, const SolverOptions& opts)
{
	const Eigen::VectorXd& x = state.r_log;
	const Eigen::VectorXd& lam = state.lambda;
	const auto n = p.dim();
	const auto m = p.multiplier_count();
	const double u = p.log_r_hat();
	const double s = 1 + std::abs(p.energy(x));

	Eigen::VectorXd gain = Eigen::VectorXd::Constant(n + m, opts.a_max);
	if (state.gains.omega.size() == n)
	{
		gain << state.gains.omega, state.gains.xi, state.gains.psi;
	}

	const auto f0 = detail::fb_system(p, x, lam, s, true);
	const double merit0 = 0.5 * f0.phi.squaredNorm();
	const Eigen::VectorXd grad = f0.jac.transpose() * f0.phi;

	const auto reach = [&](const Eigen::VectorXd& d, double t) {
		Eigen::VectorXd z(n + m);
		for (Eigen::Index i = 0; i < n; ++i)
		{
			z[i] = std::min(x[i] + t * d[i], u);
		}
		for (Eigen::Index k = 0; k < m; ++k)
		{
			z[n + k] = std::max(lam[k] + t * d[n + k], 0.0);
		}
		return z;
	};
	const auto search = [&](const Eigen::VectorXd& d, int max_halvings) -> std::optional<double> {
		Eigen::VectorXd z0(n + m);
		z0 << x, lam;
		double t = 1;
		for (int h = 0; h <= max_halvings; ++h, t *= 0.5)
		{
			const Eigen::VectorXd z = reach(d, t);
			const double slope = grad.dot(z - z0);
			if (slope >= 0)
			{
				continue;
			}
			const auto f = detail::fb_system(p, z.head(n), z.tail(m), s, false);
			const double merit = 0.5 * f.phi.squaredNorm();
			if (std::isfinite(merit) && merit <= merit0 + 1e-4 * slope)
			{
				return t;
			}
		}
		return std::nullopt;
	};
	// Separate trust caps: log-rate units for the rates, units of s + lambda_k for the multipliers.
	const auto cap = [&](Eigen::VectorXd d) {
		const double step = d.head(n).cwiseAbs().maxCoeff();
		if (step > opts.max_log_step)
		{
			d.head(n) *= opts.max_log_step / step;
		}
		double dual = 0;
		for (Eigen::Index k = 0; k < m; ++k)
		{
			dual = std::max(dual, std::abs(d[n + k]) / (s + lam[k]));
		}
		if (dual > opts.max_log_step)
		{
			d.tail(m) *= opts.max_log_step / dual;
		}
		return d;
	};
	const auto as_direction = [&](const Eigen::VectorXd& d, double t) -> LagrangianGradient {
		const Eigen::VectorXd scaled = t * d.cwiseQuotient(gain);
		return {-scaled.head(n), scaled.tail(m)};
	};

	if (merit0 == 0)
	{
		return as_direction(Eigen::VectorXd::Zero(n + m), 0);
	}
	// Components sitting on a bound that the step would push outward are frozen and the step is
	// re-solved over the rest, so the projection does not bend it.
	const auto at_bound = [&](Eigen::Index j, double dj) {
		return j < n ? (x[j] >= u && dj > 0) : (lam[j - n] <= 0 && dj < 0);
	};
	const auto solve_free = [&](double mu, bool freeze) {
		std::vector<bool> frozen(static_cast<std::size_t>(n + m), false);
		Eigen::VectorXd d = Eigen::VectorXd::Zero(n + m);
		for (Eigen::Index pass = 0; pass <= (freeze ? n + m : 0); ++pass)
		{
			std::vector<Eigen::Index> free;
			for (Eigen::Index j = 0; j < n + m; ++j)
			{
				if (!frozen[static_cast<std::size_t>(j)])
				{
					free.push_back(j);
				}
			}
			const Eigen::MatrixXd jf = f0.jac(Eigen::all, free);
			Eigen::VectorXd df;
			if (mu == 0)
			{
				df = jf.completeOrthogonalDecomposition().solve(-f0.phi);
			}
			else
			{
				const auto k = static_cast<Eigen::Index>(free.size());
				df = (jf.transpose() * jf + mu * Eigen::MatrixXd::Identity(k, k)).ldlt().solve(-jf.transpose() * f0.phi);
			}
			d.setZero();
			d(free) = df;
			bool changed = false;
			for (Eigen::Index j : free)
			{
				if (at_bound(j, d[j]))
				{
					frozen[static_cast<std::size_t>(j)] = true;
					changed = true;
				}
			}
			if (!changed)
			{
				break;
			}
		}
		return d;
	};

	const bool on_bound = (x.array() >= u).any() || (lam.array() <= 0).any();

	// Pure Newton first, then Levenberg-Marquardt steps with growing damping; the damped steps
	// stay bounded along the flat directions where the Jacobian is nearly singular.
	const double scale =
	    std::max(f0.jac.colwise().squaredNorm().maxCoeff(), std::numeric_limits<double>::min());
	for (int attempt = 0; attempt <= 14; ++attempt)
	{
		const double mu = attempt == 0 ? 0.0 : scale * std::pow(10.0, attempt - 12);
		for (const bool freeze : {false, true})
		{
			if (freeze && !on_bound)
			{
				continue;
			}
			Eigen::VectorXd d = solve_free(mu, freeze);
			if (!d.allFinite())
			{
				continue;
			}
			d = cap(d);
			if (const auto t = search(d, 5))
			{
				return as_direction(d, *t);
			}
		}
	}
	Eigen::VectorXd d = cap(-grad);
	if (const auto t = search(d, 60))
	{
		return as_direction(d, *t);
	}
	return as_direction(Eigen::VectorXd::Zero(n + m), 0);
}

struct SolveResult
{
	RateSchedule schedule;
	EnergyReport report;
	bool converged = false;
	int iterations = 0;
	std::vector<double> trajectory;
	SolverState final_state;
	double kkt_residual = 0;
	int scalar_updates_per_iteration = 0;
};

namespace detail {

inline RateSchedule schedule_from_log(const MigrationSpec& spec, const Eigen::VectorXd& x)
{
	std::vector<double> r(static_cast<std::size_t>(x.size()));
	for (Eigen::Index i = 0; i < x.size(); ++i)
	{
		r[static_cast<std::size_t>(i)] = std::exp(x[i]);
	}
	return expand_schedule(spec, r);
}

// Tracks convergence and the best iterate seen.
class ConvergenceMonitor
{
public:
	explicit ConvergenceMonitor(double tol) : tol_(tol) {}

	bool update(double e_prev, double e, double kkt, double max_violation)
	{
		const double rel = std::abs(e - e_prev) / std::max(std::abs(e), std::numeric_limits<double>::min());
		stable_ = rel < tol_ ? stable_ + 1 : 0;
		return stable_ >= 3 && kkt < tol_ && max_violation <= tol_;
	}

	void reset() { stable_ = 0; }

private:
	double tol_;
	int stable_ = 0;
};

inline double max_violation(const Eigen::VectorXd& c, const Eigen::VectorXd& x, double u)
{
	double v = c.maxCoeff();
	v = std::max(v, std::exp(x.maxCoeff() - u) - 1);
	return v;
}

// Smallest move along the line toward all rates at R_hat that clears every
// constraint. Durations fall and speed-up margins grow along it, so bisection applies.
inline Eigen::VectorXd restore_feasibility(const LogProblem& p, const Eigen::VectorXd& x)
{
	const double u = p.log_r_hat();
	auto ok = [&](double t) {
		const Eigen::VectorXd y = x + t * (Eigen::VectorXd::Constant(x.size(), u) - x);
		return p.constraints(y).maxCoeff() <= 0;
	};
	if (ok(0))
	{
		return x;
	}
	double lo = 0;
	double hi = 1;
	if (!ok(hi))
	{
		return x;
	}
	for (int it = 0; it < 64 && hi - lo > 1e-16; ++it)
	{
		const double mid = 0.5 * (lo + hi);
		(ok(mid) ? hi : lo) = mid;
	}
	return x + hi * (Eigen::VectorXd::Constant(x.size(), u) - x);
}

} // namespace detail

inline SolverState iterate_once(const LogProblem& p, const SolverState& state, const SolverOptions& opts)
{
	SolverState s = state;
	s.gains = adaptive_gains(s, opts);
	const LagrangianGradient dir =
	    opts.preconditioning == Preconditioning::newton ? newton_direction(p, s, opts) : gradients(p, s);
	return primal_dual_step(s, dir, p.log_r_hat());
}

inline SolveResult solve(const MigrationSpec& spec, const BalancedPowerModel& power, const SolverOptions& opts = {})
{
	opts.validate();
	const auto feas = check_feasibility(spec);
	if (!feas.feasible)
	{
		throw InfeasibleError("infeasible instance: " + feas.describe());
	}
	const LogProblem p(spec, power);
	const double u = p.log_r_hat();
	SolverState state = initial_state(p, opts);

	detail::ConvergenceMonitor monitor(opts.convergence_tol);
	double e_prev = p.energy(state.r_log);
	bool converged = false;

	SolverState best = state;
	double best_score = std::numeric_limits<double>::infinity();
	bool best_feasible = false;

	while (state.n < opts.max_iters)
	{
		state = iterate_once(p, state, opts);
		const double e = p.energy(state.r_log);
		if (opts.record_trajectory)
		{
			state.energy_trace.push_back(e);
		}
		const double viol = detail::max_violation(p.constraints(state.r_log), state.r_log, u);
		const bool feas_now = viol <= opts.convergence_tol;
		if ((feas_now && (!best_feasible || e < best_score)) || (!best_feasible && !feas_now && viol < best_score))
		{
			best = state;
			best_score = feas_now ? e : viol;
			best_feasible = feas_now;
		}
		const double kkt = p.kkt_residual(state.r_log, state.lambda);
		if (monitor.update(e_prev, e, kkt, viol))
		{
			converged = true;
			break;
		}
		e_prev = e;
	}

	SolveResult r;
	r.converged = converged;
	const SolverState& final_state = converged ? state : best;
	r.final_state = final_state;
	r.final_state.energy_trace = state.energy_trace;
	r.final_state.n = state.n;
	r.iterations = state.n;
	r.trajectory = state.energy_trace;
	// Tolerance-level constraint slack is removed so the reported schedule is feasible.
	r.schedule = detail::schedule_from_log(spec, detail::restore_feasibility(p, final_state.r_log));
	r.report = migration_energy(spec, r.schedule, power);
	r.kkt_residual = p.kkt_residual(final_state.r_log, final_state.lambda);
	r.scalar_updates_per_iteration = state.last_step_updates;
	return r;
}

// ---------------------------------------------------------------------------
// Runs with parameter jumps

struct DynamicEvent
{
	enum class Target
	{
		dirty_rate,
		k0
	};

	int at_iter = 1;
	Target target = Target::dirty_rate;
	double multiplier = 1;
};

struct DynamicPoint
{
	int n = 0;
	double e_tot = 0;
	double dirty_rate = 0; // w_max of the active instance
	double k0 = 0;
};

struct DynamicResult
{
	std::vector<DynamicPoint> trajectory;
	SolverState final_state;
};

// Iterates for opts.max_iters steps; an event at n changes the instance used by iteration n.
inline DynamicResult solve_dynamic(const MigrationSpec& spec, const BalancedPowerModel& power,
                                   const SolverOptions& opts, const std::vector<DynamicEvent>& events)
{
	opts.validate();
	for (const auto& ev : events)
	{
		detail::require(ev.at_iter >= 1, "dynamic event: at_iter must be at least 1");
		detail::require(ev.at_iter <= opts.max_iters, "dynamic event: at_iter beyond max_iters");
		detail::require(ev.multiplier > 0, "dynamic event: multiplier must be positive");
	}
	MigrationSpec cur_spec = spec;
	BalancedPowerModel cur_power = power;
	const auto feas = check_feasibility(cur_spec);
	if (!feas.feasible)
	{
		throw InfeasibleError("infeasible instance: " + feas.describe());
	}
	LogProblem p(cur_spec, cur_power);
	SolverState state = initial_state(p, opts);
	DynamicResult out;
	for (int n = 1; n <= opts.max_iters; ++n)
	{
		bool changed = false;
		for (const auto& ev : events)
		{
			if (ev.at_iter != n)
			{
				continue;
			}
			if (ev.target == DynamicEvent::Target::dirty_rate)
			{
				cur_spec.dirty_rate = cur_spec.dirty_rate.scaled(ev.multiplier);
			}
			else
			{
				cur_power.k0 *= ev.multiplier;
			}
			changed = true;
		}
		if (changed)
		{
			p = LogProblem(cur_spec, cur_power);
		}
		state = iterate_once(p, state, opts);
		const double e = p.energy(state.r_log);
		state.energy_trace.push_back(e);
		out.trajectory.push_back({n, e, cur_spec.w_max(), cur_power.k0});
	}
	out.final_state = state;
	return out;
}

} // namespace scbm

#endif // SCBM_SOLVER_HPP
