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

#ifndef SCBM_HARNESS_ORACLE_HPP
#define SCBM_HARNESS_ORACLE_HPP

// Brute-force reference minimizer over a log-spaced rate grid.

#include <scbm/error.hpp>
#include <scbm/model.hpp>
#include <scbm/power.hpp>
#include <scbm/solver.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace scbm::harness {

struct OracleOptions
{
	int grid_points = 500;       // per axis
	double floor_fraction = 1e-3; // lowest grid rate on unconstrained axes, as a fraction of R_hat
	int refinement_passes = 40;   // coordinate sweeps when the full grid is too large
};

struct OracleResult
{
	RateSchedule schedule;
	EnergyReport report;
	bool exhaustive = false; // full grid rather than coordinate refinement
	long evaluations = 0;
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int n)
{
	std::vector<double> g(static_cast<std::size_t>(n));
	if (n == 1 || lo >= hi)
	{
		std::fill(g.begin(), g.end(), hi);
		return g;
	}
	const double a = std::log(lo);
	const double b = std::log(hi);
	for (int k = 0; k < n; ++k)
	{
		g[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (n - 1));
	}
	g.front() = lo;
	g.back() = hi;
	return g;
}

// Rounds 0..I under fixed pre-copy rates; the stop-and-copy round is added per candidate.
class GridEvaluator
{
public:
	GridEvaluator(const MigrationSpec& spec, const BalancedPowerModel& power) : s_(spec), p_(power)
	{
		w_.resize(static_cast<std::size_t>(s_.i_max) + 2);
		for (int i = 1; i <= s_.i_max + 1; ++i)
		{
			w_[static_cast<std::size_t>(i)] = s_.dirty_rate.at(i);
		}
	}

	struct Prefix
	{
		double volume = 0; // data left for the stop-and-copy round
		double t_mt = 0;
		double e_dyn = 0;
	};

	Prefix prefix(const std::vector<double>& free) const
	{
		Prefix pr;
		double v = s_.m0_mb;
		for (int i = 0; i <= s_.i_max; ++i)
		{
			const double r = free[free_index(s_, i)];
			const double t = v / r;
			pr.t_mt += t;
			pr.e_dyn += p_.k0 * v * std::pow(r, p_.alpha - 1);
			v = w_[static_cast<std::size_t>(i) + 1] * t;
		}
		pr.volume = v;
		return pr;
	}

	// Smallest grid index of the final rate meeting both deadlines, or -1.
	long first_feasible(const Prefix& pr, const std::vector<double>& grid) const
	{
		auto ok = [&](double r) {
			const double t = pr.volume / r;
			return pr.t_mt + t <= s_.delta_mt_s * (1 + default_tolerance) && t <= s_.delta_dt_s * (1 + default_tolerance);
		};
		if (!ok(grid.back()))
		{
			return -1;
		}
		long lo = -1;
		auto hi = static_cast<long>(grid.size()) - 1;
		while (hi - lo > 1)
		{
			const long mid = (lo + hi) / 2;
			(ok(grid[static_cast<std::size_t>(mid)]) ? hi : lo) = mid;
		}
		return hi;
	}

	double energy(const Prefix& pr, double r_last) const
	{
		return p_.p_setup_total_w * s_.delta_mt_s + pr.e_dyn + p_.k0 * pr.volume * std::pow(r_last, p_.alpha - 1);
	}

private:
	const MigrationSpec& s_;
	const BalancedPowerModel& p_;
	std::vector<double> w_;
};

} // namespace detail

// Grid minimum of the energy over feasible schedules. Full grid when there are
// at most three free rates (Q + 2 <= 3), cyclic coordinate refinement otherwise.
// The stop-and-copy axis is searched by bisection: energy rises and both
// durations fall with that rate, so its best grid point is the first feasible one.
inline OracleResult brute_force_oracle(const MigrationSpec& spec, const BalancedPowerModel& power,
                                       const OracleOptions& opts = {})
{
	spec.validate();
	power.validate();
	scbm::detail::require(opts.grid_points >= 2, "oracle: grid_points must be at least 2");
	scbm::detail::require(opts.floor_fraction > 0 && opts.floor_fraction < 1, "oracle: floor_fraction must be in (0, 1)");

	const double rh = spec.r_hat_mbps;
	const double bw = spec.beta * spec.w_max();
	const std::size_t nfree = spec.free_rate_count();
	const std::size_t last = nfree - 1;
	if (bw > rh)
	{
		throw InfeasibleError("oracle: empty feasible grid (beta * w exceeds R_hat)");
	}
	const double lo_beta = bw > 0 ? bw : rh * opts.floor_fraction;
	const auto pre_grid = detail::log_grid(lo_beta, rh, opts.grid_points);
	const auto last_grid = detail::log_grid(rh * opts.floor_fraction, rh, opts.grid_points);
	const detail::GridEvaluator ev(spec, power);

	OracleResult res;
	std::vector<double> cur(nfree, rh);
	std::vector<double> best_x;
	double best = std::numeric_limits<double>::infinity();

	auto try_point = [&](std::vector<double>& x) {
		const auto pr = ev.prefix(x);
		++res.evaluations;
		const long k = ev.first_feasible(pr, last_grid);
		if (k < 0)
		{
			return false;
		}
		const double r = last_grid[static_cast<std::size_t>(k)];
		const double e = ev.energy(pr, r);
		if (e < best)
		{
			best = e;
			x[last] = r;
			best_x = x;
		}
		return true;
	};

	if (nfree <= 3)
	{
		res.exhaustive = true;
		const std::size_t n_pre = nfree - 1; // 1 or 2 axes before the stop-and-copy one
		const std::size_t outer = n_pre == 2 ? pre_grid.size() : 1;
		for (std::size_t a = 0; a < outer; ++a)
		{
			for (std::size_t b = 0; b < pre_grid.size(); ++b)
			{
				if (n_pre == 2)
				{
					cur[0] = pre_grid[a];
					cur[1] = pre_grid[b];
				}
				else
				{
					cur[0] = pre_grid[b];
				}
				try_point(cur);
			}
		}
	}
	else
	{
		// Start from the all-R_hat schedule, the most feasible point.
		std::vector<double> x(nfree, rh);
		try_point(x);
		if (!best_x.empty())
		{
			x = best_x;
		}
		for (int pass = 0; pass < opts.refinement_passes && !best_x.empty(); ++pass)
		{
			const double before = best;
			for (std::size_t j = 0; j < last; ++j)
			{
				std::vector<double> y = best_x;
				for (double g : pre_grid)
				{
					y[j] = g;
					try_point(y);
				}
			}
			if (!(best < before))
			{
				break;
			}
		}
	}

	if (best_x.empty())
	{
		throw InfeasibleError("oracle: empty feasible grid");
	}
	res.schedule = expand_schedule(spec, best_x);
	res.report = migration_energy(spec, res.schedule, power);
	return res;
}

} // namespace scbm::harness

#endif // SCBM_HARNESS_ORACLE_HPP
