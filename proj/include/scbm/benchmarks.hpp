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

#ifndef SCBM_BENCHMARKS_HPP
#define SCBM_BENCHMARKS_HPP

// Comparison managers: the hypervisor linear ramp and a single-rate optimizer.

#include <scbm/error.hpp>
#include <scbm/model.hpp>
#include <scbm/solver.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace scbm {

// Spec with one free rate per round (S = 1), as the ramp sets every round.
inline MigrationSpec per_round_spec(MigrationSpec spec, int i_max)
{
	spec.i_max = i_max;
	spec.q = i_max == 0 ? 1 : i_max;
	return spec;
}

// Linear ramp from w (round 0) to R_hat (stop-and-copy round).
inline RateSchedule xen_schedule(const MigrationSpec& spec)
{
	spec.validate();
	const double w = spec.w_max();
	const double rh = spec.r_hat_mbps;
	detail::require(w > 0, "xen_schedule: the ramp starts at the dirty rate, which must be positive");
	detail::require(rh > w, "xen_schedule: requires R_hat above the dirty rate");
	const double step = (rh - w) / (spec.i_max + 1);
	RateSchedule s;
	s.expanded.resize(spec.round_count());
	for (int i = 0; i <= spec.i_max + 1; ++i)
	{
		s.expanded[static_cast<std::size_t>(i)] = w + i * step;
	}
	s.expanded.back() = rh;
	s.free_rates = s.expanded;
	return s;
}

enum class XenDeadlines
{
	both,
	downtime_only
};

struct XenSearch
{
	int first = 0;
	int last = 29;
	XenDeadlines deadlines = XenDeadlines::both;
};

struct XenResult
{
	int i_max = 0;
	RateSchedule schedule;
	EnergyReport report;
};

inline XenResult xen_at(const MigrationSpec& spec, const BalancedPowerModel& power, int i_max)
{
	const auto s = per_round_spec(spec, i_max);
	XenResult r;
	r.i_max = i_max;
	r.schedule = xen_schedule(s);
	r.report = migration_energy(s, r.schedule, power);
	return r;
}

inline XenResult xen_optimize_imax(const MigrationSpec& spec, const BalancedPowerModel& power,
                                   const XenSearch& range = {})
{
	detail::require(range.first >= 0 && range.last >= range.first, "xen search: invalid round-count range");
	std::optional<XenResult> best;
	for (int i = range.first; i <= range.last; ++i)
	{
		auto r = xen_at(spec, power, i);
		const bool ok = r.report.phi_dt <= default_tolerance
		                && (range.deadlines == XenDeadlines::downtime_only || r.report.phi_mt <= default_tolerance);
		if (ok && (!best || r.report.e_tot < best->report.e_tot))
		{
			best = std::move(r);
		}
	}
	if (!best)
	{
		throw InfeasibleError("xen: no round count in [" + std::to_string(range.first) + ", "
		                      + std::to_string(range.last) + "] meets the deadlines");
	}
	return *best;
}

struct LivMigOptions
{
	std::optional<int> i_max; // defaults to the closed-form round count
	double tol = 1e-12;       // relative bracket width in log-rate
};

namespace detail {

// Smallest rate in [lo, hi] with f(rate) <= 0, f non-increasing; hi must satisfy it.
template <typename F>
double smallest_satisfying(F f, double lo, double hi)
{
	if (f(lo) <= 0)
	{
		return lo;
	}
	double a = std::log(lo);
	double b = std::log(hi);
	for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it)
	{
		const double mid = 0.5 * (a + b);
		if (f(std::exp(mid)) <= 0)
		{
			b = mid;
		}
		else
		{
			a = mid;
		}
	}
	return std::exp(b);
}

} // namespace detail

// One common rate for every round, chosen by golden-section search on log R.
inline SolveResult livmig_solve(const MigrationSpec& spec, const BalancedPowerModel& power,
                                const LivMigOptions& opts = {})
{
	power.validate();
	MigrationSpec s = spec;
	s.i_max = opts.i_max ? *opts.i_max : optimized_imax(spec);
	if (s.i_max == 0 || s.i_max % s.q != 0 || s.q > s.i_max)
	{
		s.q = 1;
	}
	s.validate();
	const double rh = s.r_hat_mbps;
	const auto feas = check_feasibility(s);
	if (!feas.feasible)
	{
		throw InfeasibleError("LIV_MIG: infeasible instance: " + feas.describe());
	}

	auto t_mt = [&](double r) { return memory_migration_time(s, uniform_schedule(s, r)); };
	auto t_dt = [&](double r) { return downtime(s, uniform_schedule(s, r)); };
	const double floor_rate = rh * 1e-9;
	const double r_beta = s.beta * s.w_max();
	const double r_mt = detail::smallest_satisfying([&](double r) { return t_mt(r) - s.delta_mt_s; }, floor_rate, rh);
	const double r_dt = detail::smallest_satisfying([&](double r) { return t_dt(r) - s.delta_dt_s; }, floor_rate, rh);
	const double lo = std::min(rh, std::max({r_beta, r_mt, r_dt, floor_rate}));

	auto energy = [&](double y) { return migration_energy(s, uniform_schedule(s, std::exp(y)), power).e_tot; };
	const double phi = (std::sqrt(5.0) - 1) / 2;
	double a = std::log(lo);
	double b = std::log(rh);
	double c = b - phi * (b - a);
	double d = a + phi * (b - a);
	double fc = energy(c);
	double fd = energy(d);
	int it = 0;
	while (b - a > opts.tol * std::max(1.0, std::abs(b)) && it < 500)
	{
		if (fc <= fd)
		{
			b = d;
			d = c;
			fd = fc;
			c = b - phi * (b - a);
			fc = energy(c);
		}
		else
		{
			a = c;
			c = d;
			fc = fd;
			d = a + phi * (b - a);
			fd = energy(d);
		}
		++it;
	}
	// The optimum often sits on an end of the feasible interval.
	double y = 0.5 * (a + b);
	double best = energy(y);
	for (double cand : {std::log(lo), std::log(rh)})
	{
		const double e = energy(cand);
		if (e < best)
		{
			best = e;
			y = cand;
		}
	}

	SolveResult r;
	r.schedule = uniform_schedule(s, std::exp(y));
	r.report = migration_energy(s, r.schedule, power);
	r.converged = true;
	r.iterations = it;
	return r;
}

} // namespace scbm

#endif // SCBM_BENCHMARKS_HPP
