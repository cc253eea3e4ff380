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

#ifndef SCBM_HARNESS_EXPERIMENT_HPP
#define SCBM_HARNESS_EXPERIMENT_HPP

// Runs scenarios: one row per sweep point and manager, or an energy trace for
// event-driven runs.

#include <scbm/benchmarks.hpp>
#include <scbm/harness/csv.hpp>
#include <scbm/harness/scenario.hpp>
#include <scbm/solver.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace scbm::harness {

struct ExperimentRow
{
	std::string scenario;
	std::string point;
	Manager manager = Manager::scbm;
	bool ok = false; // an energy was produced
	bool converged = false;
	int iterations = 0;
	int i_max = 0;
	int q = 1;
	int i_tilde = 0;
	bool i_adjusted = false;
	MigrationSpec spec;
	BalancedPowerModel power;
	EnergyReport report;
	std::vector<double> rates; // per round
	std::optional<double> saving_vs_xen_pct;
	std::optional<double> saving_vs_livmig_pct;
	std::string assumptions;
	std::string error;

	bool feasible() const { return ok && report.feasible; }
	bool deadlines_met() const
	{
		return ok && report.phi_mt <= default_tolerance && report.phi_dt <= default_tolerance;
	}
};

inline double saving_pct(double e, double e_ref) { return (1 - e / e_ref) * 100; }

namespace detail {

inline void fill(ExperimentRow& row, const MigrationSpec& spec, const RateSchedule& sched, const EnergyReport& rep)
{
	row.ok = true;
	row.i_max = spec.i_max;
	row.q = spec.q;
	row.report = rep;
	row.rates = sched.expanded;
}

inline ExperimentRow run_manager(const std::string& scenario, const ScenarioPoint& pt, Manager m)
{
	ExperimentRow row;
	row.scenario = scenario;
	row.point = pt.label;
	row.manager = m;
	row.spec = pt.spec;
	row.power = pt.power;
	row.i_max = pt.spec.i_max;
	row.q = pt.spec.q;
	row.i_tilde = pt.i_tilde;
	row.i_adjusted = pt.i_adjusted;
	row.assumptions = pt.assumptions;
	try
	{
		switch (m)
		{
			case Manager::scbm:
			{
				const auto r = solve(pt.spec, pt.power, pt.solver);
				fill(row, pt.spec, r.schedule, r.report);
				row.converged = r.converged;
				row.iterations = r.iterations;
				break;
			}
			case Manager::xen:
			{
				const auto r = pt.xen.i_max ? xen_at(pt.spec, pt.power, *pt.xen.i_max)
				                            : xen_optimize_imax(pt.spec, pt.power, pt.xen.search);
				fill(row, per_round_spec(pt.spec, r.i_max), r.schedule, r.report);
				row.converged = true;
				break;
			}
			case Manager::livmig:
			{
				LivMigOptions o;
				if (pt.livmig.rounds == LivMigPolicy::Rounds::scbm)
				{
					o.i_max = pt.spec.i_max;
				}
				else if (pt.livmig.rounds == LivMigPolicy::Rounds::fixed)
				{
					o.i_max = pt.livmig.i_max;
				}
				const auto r = livmig_solve(pt.spec, pt.power, o);
				MigrationSpec s = pt.spec;
				s.i_max = static_cast<int>(r.schedule.expanded.size()) - 2;
				s.q = s.i_max == 0 || s.i_max % pt.spec.q != 0 || pt.spec.q > s.i_max ? 1 : pt.spec.q;
				fill(row, s, r.schedule, r.report);
				row.converged = r.converged;
				row.iterations = r.iterations;
				break;
			}
		}
	}
	catch (const std::exception& e)
	{
		row.ok = false;
		row.error = e.what();
	}
	return row;
}

} // namespace detail

// Every manager on every sweep point, in declaration order.
inline std::vector<ExperimentRow> run_experiment(const Scenario& sc)
{
	std::vector<ExperimentRow> rows;
	for (const auto& pt : sc.points)
	{
		const std::size_t first = rows.size();
		for (Manager m : pt.managers)
		{
			rows.push_back(detail::run_manager(sc.name, pt, m));
		}
		auto find = [&](Manager m) -> const ExperimentRow* {
			for (std::size_t i = first; i < rows.size(); ++i)
			{
				if (rows[i].manager == m && rows[i].ok)
				{
					return &rows[i];
				}
			}
			return nullptr;
		};
		const auto* xen = find(Manager::xen);
		const auto* liv = find(Manager::livmig);
		for (std::size_t i = first; i < rows.size(); ++i)
		{
			auto& r = rows[i];
			if (!r.ok)
			{
				continue;
			}
			if (xen && r.manager != Manager::xen)
			{
				r.saving_vs_xen_pct = saving_pct(r.report.e_tot, xen->report.e_tot);
			}
			if (liv && r.manager == Manager::scbm)
			{
				r.saving_vs_livmig_pct = saving_pct(r.report.e_tot, liv->report.e_tot);
			}
		}
	}
	return rows;
}

inline const std::vector<std::string>& experiment_columns()
{
	static const std::vector<std::string> cols{
	    "scenario",      "point",         "manager",     "ok",          "feasible",     "deadlines_met",
	    "converged",     "iterations",    "i_max",       "q",           "i_tilde",      "i_adjusted",
	    "m0_mb",         "w_max_mbps",    "w_over_r_hat", "beta",       "delta_mt_s",   "delta_dt_s",
	    "r_hat_mbps",    "k0",            "alpha",       "p_setup_w",   "e_setup_j",    "e_dyn_j",
	    "e_tot_j",       "t_mt_s",        "t_dt_s",      "t_tot_s",     "phi_mt",       "phi_dt",
	    "phi_beta_max",  "phi_bandwidth", "saving_vs_xen_pct", "saving_vs_livmig_pct", "rates_mbps",
	    "assumptions",   "error"};
	return cols;
}

inline Table experiment_table(const std::vector<ExperimentRow>& rows)
{
	Table t;
	t.header = experiment_columns();
	auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
	for (const auto& r : rows)
	{
		std::string rates;
		for (std::size_t i = 0; i < r.rates.size(); ++i)
		{
			rates += (i ? ";" : "") + format_number(r.rates[i]);
		}
		const double w = r.spec.w_max();
		auto num = [&](double v) { return r.ok ? format_number(v) : std::string(); };
		t.rows.push_back({r.scenario,
		                  r.point,
		                  std::string(to_string(r.manager)),
		                  format_bool(r.ok),
		                  format_bool(r.feasible()),
		                  format_bool(r.deadlines_met()),
		                  format_bool(r.converged),
		                  std::to_string(r.iterations),
		                  std::to_string(r.i_max),
		                  std::to_string(r.q),
		                  std::to_string(r.i_tilde),
		                  format_bool(r.i_adjusted),
		                  format_number(r.spec.m0_mb),
		                  format_number(w),
		                  format_number(w / r.spec.r_hat_mbps),
		                  format_number(r.spec.beta),
		                  format_number(r.spec.delta_mt_s),
		                  format_number(r.spec.delta_dt_s),
		                  format_number(r.spec.r_hat_mbps),
		                  format_number(r.power.k0),
		                  format_number(r.power.alpha),
		                  format_number(r.power.p_setup_total_w),
		                  num(r.report.e_setup),
		                  num(r.report.e_dyn),
		                  num(r.report.e_tot),
		                  num(r.report.t_mt),
		                  num(r.report.t_dt),
		                  num(r.report.t_tot),
		                  num(r.report.phi_mt),
		                  num(r.report.phi_dt),
		                  r.ok && !r.report.phi_beta.empty() ? format_number(r.report.max_phi_beta()) : std::string(),
		                  num(r.report.phi_bandwidth),
		                  opt(r.saving_vs_xen_pct),
		                  opt(r.saving_vs_livmig_pct),
		                  rates,
		                  r.assumptions,
		                  r.error});
	}
	return t;
}

// 0 when something feasible was produced, 2 when every row is infeasible or failed.
inline int experiment_exit_code(const std::vector<ExperimentRow>& rows)
{
	return std::any_of(rows.begin(), rows.end(), [](const ExperimentRow& r) { return r.feasible(); }) ? 0 : 2;
}

// ---------------------------------------------------------------------------
// Event-driven runs

struct SettleInfo
{
	int at_iter = 0;
	int until_iter = 0;   // last iteration before the next event (or the end)
	double steady = 0;    // energy at until_iter
	std::optional<int> settle_iters; // iterations from the event until the trace stays within the band
};

struct DynamicRow
{
	std::string point;
	int n = 0;
	double e_tot = 0;
	double dirty_rate = 0;
	double k0 = 0;
	std::string event;
	std::optional<int> settle_iters;
};

struct DynamicRun
{
	std::vector<DynamicRow> rows;
	std::vector<SettleInfo> settles; // one per distinct event iteration, all points
};

// Counts iterations under the new instance (the event iteration is 1) until every
// later value up to until_iter stays within rel_band of the value at until_iter.
inline std::vector<SettleInfo> settle_times(const std::vector<DynamicPoint>& traj, const std::vector<DynamicEvent>& events,
                                            double rel_band = 0.01)
{
	std::vector<int> at;
	for (const auto& e : events)
	{
		at.push_back(e.at_iter);
	}
	std::sort(at.begin(), at.end());
	at.erase(std::unique(at.begin(), at.end()), at.end());
	std::vector<SettleInfo> out;
	const int n_end = traj.empty() ? 0 : traj.back().n;
	for (std::size_t k = 0; k < at.size(); ++k)
	{
		SettleInfo s;
		s.at_iter = at[k];
		s.until_iter = k + 1 < at.size() ? at[k + 1] - 1 : n_end;
		if (s.until_iter < s.at_iter)
		{
			out.push_back(s);
			continue;
		}
		s.steady = traj[static_cast<std::size_t>(s.until_iter - 1)].e_tot;
		int first_in = s.until_iter;
		for (int n = s.until_iter; n >= s.at_iter; --n)
		{
			const double e = traj[static_cast<std::size_t>(n - 1)].e_tot;
			if (std::abs(e - s.steady) > rel_band * std::abs(s.steady))
			{
				break;
			}
			first_in = n;
		}
		s.settle_iters = first_in - s.at_iter + 1;
		out.push_back(s);
	}
	return out;
}

inline std::string describe_event(const DynamicEvent& e)
{
	return (e.target == DynamicEvent::Target::dirty_rate ? std::string("dirty_rate*") : std::string("k0*"))
	       + format_number(e.multiplier);
}

inline DynamicRun run_dynamic(const Scenario& sc)
{
	DynamicRun run;
	for (const auto& pt : sc.points)
	{
		scbm::detail::require(!pt.events.empty(), "dynamic run: point '" + pt.label + "' defines no events");
		const auto res = solve_dynamic(pt.spec, pt.power, pt.solver, pt.events);
		const auto settles = settle_times(res.trajectory, pt.events);
		for (const auto& p : res.trajectory)
		{
			DynamicRow row;
			row.point = pt.label;
			row.n = p.n;
			row.e_tot = p.e_tot;
			row.dirty_rate = p.dirty_rate;
			row.k0 = p.k0;
			for (const auto& e : pt.events)
			{
				if (e.at_iter == p.n)
				{
					row.event += (row.event.empty() ? "" : ";") + describe_event(e);
				}
			}
			for (const auto& s : settles)
			{
				if (s.at_iter == p.n)
				{
					row.settle_iters = s.settle_iters;
				}
			}
			run.rows.push_back(row);
		}
		run.settles.insert(run.settles.end(), settles.begin(), settles.end());
	}
	return run;
}

inline Table dynamic_table(const DynamicRun& run)
{
	Table t;
	t.header = {"point", "n", "e_tot_j", "dirty_rate_mbps", "k0", "event", "settle_iters"};
	for (const auto& r : run.rows)
	{
		t.rows.push_back({r.point, std::to_string(r.n), format_number(r.e_tot), format_number(r.dirty_rate),
		                  format_number(r.k0), r.event, r.settle_iters ? std::to_string(*r.settle_iters) : ""});
	}
	return t;
}

} // namespace scbm::harness

#endif // SCBM_HARNESS_EXPERIMENT_HPP
