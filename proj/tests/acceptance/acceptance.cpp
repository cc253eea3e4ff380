// Copyright 2026 The scbm Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exits non-zero when any criterion fails.

#include <scbm/harness/experiment.hpp>
#include <scbm/harness/oracle.hpp>
#include <scbm/harness/scenario.hpp>
#include <scbm/scbm.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace scbm;
using namespace scbm::harness;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string fmt(const char* f, double v)
{
	char buf[64];
	std::snprintf(buf, sizeof buf, f, v);
	return buf;
}

struct Verdict
{
	bool pass = false;
	std::string detail;
};

const PresetLibrary& library()
{
	static const PresetLibrary lib = PresetLibrary::from_file(std::string(SCBM_DATA_DIR) + "/presets.json");
	return lib;
}

SubflowProfile subflow(const std::string& name)
{
	const auto& j = library().get("subflows", name, "subflows");
	return {j.at("rtt_s").get<double>(), j.at("omega").get<double>(), j.at("mss_mb").get<double>(),
	        j.at("r_max_mbps").get<double>(), j.at("p_setup_w").get<double>()};
}

MigrationSpec spec_of(double m0, double w, int imax, int q, double beta, double dmt, double ddt, double rh)
{
	MigrationSpec s;
	s.m0_mb = m0;
	s.dirty_rate = DirtyRate::constant(w);
	s.i_max = imax;
	s.q = q;
	s.beta = beta;
	s.delta_mt_s = dmt;
	s.delta_dt_s = ddt;
	s.r_hat_mbps = rh;
	return s;
}

// Migration and downtime with every rate at R_hat.
std::pair<double, double> times_at_cap(const MigrationSpec& s)
{
	const auto sched = uniform_schedule(s, s.r_hat_mbps);
	return {memory_migration_time(s, sched), downtime(s, sched)};
}

// A feasible instance: deadlines are the all-R_hat times stretched by random slack.
MigrationSpec random_feasible(std::mt19937& rng, int imax, int q)
{
	std::uniform_real_distribution<double> u(0, 1);
	const double rh = 5 + 45 * u(rng);
	const double beta = 1 + u(rng);
	const double w = rh * (0.05 + 0.85 * u(rng)) / beta;
	auto s = spec_of(16 + 240 * u(rng), w, imax, q, beta, 1, 1, rh);
	const auto [tmt, tdt] = times_at_cap(s);
	s.delta_mt_s = tmt * (1.2 + 3 * u(rng));
	s.delta_dt_s = tdt * (1.2 + 3 * u(rng));
	return s;
}

BalancedPowerModel random_power(std::mt19937& rng)
{
	std::uniform_real_distribution<double> u(0, 1);
	return {0.01 + 0.09 * u(rng), 1.5 + 1.5 * u(rng), 0.3 * u(rng)};
}

// ---------------------------------------------------------------------------
// 1. Gradients against central differences of the Lagrangian

long double lagrangian_ld(const MigrationSpec& s, const BalancedPowerModel& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& lam, Eigen::Index shift_index, long double shift)
{
	const auto rate = [&](int round) {
		const auto j = static_cast<Eigen::Index>(free_index(s, round));
		return std::exp(static_cast<long double>(x[j]) + (j == shift_index ? shift : 0.0L));
	};
	const long double w = s.dirty_rate.at(0);
	long double v = s.m0_mb;
	long double e = p.p_setup_total_w * s.delta_mt_s;
	long double tmt = 0;
	long double tdt = 0;
	for (int i = 0; i <= s.i_max + 1; ++i)
	{
		const long double r = rate(i);
		const long double t = v / r;
		e += p.k0 * v * std::pow(r, static_cast<long double>(p.alpha) - 1);
		tmt += t;
		tdt = t;
		v = w * t;
	}
	long double l = e + lam[0] * (tmt / s.delta_mt_s - 1) + lam[1] * (tdt / s.delta_dt_s - 1);
	const auto rounds = s.beta_rounds();
	for (std::size_t k = 0; k < rounds.size(); ++k)
	{
		l += lam[2 + static_cast<Eigen::Index>(k)] * (s.beta * s.w_max() / rate(rounds[k]) - 1);
	}
	return l;
}

// Central difference with one Richardson extrapolation step.
template <class F>
long double richardson(F f, long double h)
{
	const auto d = [&](long double s) { return (f(s) - f(-s)) / (2 * s); };
	return (4 * d(h / 2) - d(h)) / 3;
}

Verdict gradient_correctness()
{
	const auto t0 = Clock::now();
	std::mt19937 rng(101);
	std::uniform_real_distribution<double> u(0, 1);
	const std::pair<int, int> shapes[] = {{0, 1}, {2, 1}, {2, 2}, {4, 1}, {4, 2}, {6, 1}, {6, 2}, {6, 3}};
	int points = 0;
	double worst = 0;
	for (const auto& [imax, q] : shapes)
	{
		for (int t = 0; t < 15; ++t)
		{
			const auto s = random_feasible(rng, imax, q);
			const auto p = random_power(rng);
			const LogProblem prob(s, p);
			SolverState st;
			st.r_log.resize(prob.dim());
			const double lo = std::log(s.beta * s.w_max());
			const double hi = std::log(s.r_hat_mbps);
			for (Eigen::Index i = 0; i < prob.dim(); ++i)
			{
				st.r_log[i] = lo + (hi - lo) * u(rng);
			}
			st.lambda.resize(prob.multiplier_count());
			for (Eigen::Index k = 0; k < st.lambda.size(); ++k)
			{
				st.lambda[k] = 100 * u(rng);
			}
			const auto g = gradients(prob, st);
			const double lval = std::abs(prob.lagrangian(st.r_log, st.lambda));
			for (Eigen::Index i = 0; i < prob.dim(); ++i)
			{
				const auto fd = static_cast<double>(
				    richardson([&](long double d) { return lagrangian_ld(s, p, st.r_log, st.lambda, i, d); }, 1e-3L));
				const double scale = std::max({std::abs(fd), std::abs(g.r_log[i]), 1e-12 * (1 + lval)});
				worst = std::max(worst, std::abs(g.r_log[i] - fd) / scale);
			}
			for (Eigen::Index k = 0; k < st.lambda.size(); ++k)
			{
				const auto fd = static_cast<double>(richardson(
				    [&](long double d) {
					    auto l = st.lambda;
					    l[k] += static_cast<double>(d);
					    return static_cast<long double>(prob.lagrangian(st.r_log, l));
				    },
				    1e-2L));
				const double scale = std::max({std::abs(fd), std::abs(g.lambda[k]), 1e-12});
				worst = std::max(worst, std::abs(g.lambda[k] - fd) / scale);
			}
			++points;
		}
	}
	const double secs = seconds_since(t0);
	return {points >= 100 && worst < 1e-5 && secs < 10,
	        std::to_string(points) + " points, worst relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs)
	            + " s"};
}

// ---------------------------------------------------------------------------
// 2. Solver against the brute-force grid

Verdict oracle_equivalence()
{
	const auto t0 = Clock::now();
	std::mt19937 rng(202);
	int n = 0;
	int within = 0;
	double worst = 0;
	for (int t = 0; t < 24; ++t)
	{
		const int imax = t % 5; // Q = 1 keeps Q + 2 <= 3
		const auto s = random_feasible(rng, imax, 1);
		const auto p = random_power(rng);
		const auto o = brute_force_oracle(s, p);
		const auto r = solve(s, p);
		const double d = rel(r.report.e_tot, o.report.e_tot);
		worst = std::max(worst, d);
		within += d <= 0.01 && r.report.feasible && o.exhaustive;
		++n;
	}
	const double secs = seconds_since(t0);
	return {n >= 20 && within == n && secs < 60,
	        std::to_string(within) + "/" + std::to_string(n) + " instances within 1%, worst gap " + fmt("%.3f", worst * 100)
	            + "%, " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Unified power formula against the CWND balance

Verdict unified_power_balance()
{
	std::mt19937 rng(303);
	std::uniform_real_distribution<double> u(0.1, 1.0);
	const CongestionControl all[] = {CongestionControl::ewtcp, CongestionControl::semicoupled,
	                                 CongestionControl::max_mptcp, CongestionControl::balia, CongestionControl::newreno};
	std::map<std::string, double> worst;
	int profiles = 0;
	for (int t = 0; t < 60; ++t)
	{
		for (auto cc : all)
		{
			const std::size_t n = cc == CongestionControl::newreno ? 1 : 2 + static_cast<std::size_t>(t % 3);
			std::vector<SubflowProfile> subs;
			std::vector<double> rates;
			for (std::size_t j = 0; j < n; ++j)
			{
				subs.push_back({0.01 + 0.2 * u(rng), 1e-3 * u(rng), 8e-3, 50, 0.1});
				rates.push_back(40 * u(rng));
			}
			const auto c = make_connection(subs, cc, 1.5 + u(rng));
			double m = 0;
			for (const auto& term : steady_state_residual(c, rates, subflow_powers(c, rates)))
			{
				m = std::max(m, term.relative());
			}
			auto& w = worst[std::string(to_string(cc))];
			w = std::max(w, m);
		}
		++profiles;
	}
	bool pass = true;
	std::string d = std::to_string(profiles) + " profiles per algorithm; worst residual:";
	for (const auto& [cc, v] : worst)
	{
		pass = pass && v < 1e-8;
		d += " " + cc + " " + fmt("%.2e", v);
	}
	return {pass, d};
}

// ---------------------------------------------------------------------------
// 4. Balanced K0 for EWTCP over WiFi and 4G

Verdict balanced_k0_check()
{
	const auto m = balanced_k0(make_connection({subflow("wifi"), subflow("4g")}, CongestionControl::ewtcp, 2));
	const double d = rel(m.k0, 2.5e-2);
	return {d <= 0.03, "K0 = " + fmt("%.5g", m.k0) + ", " + fmt("%.2f", d * 100) + "% from 2.5e-2"};
}

// ---------------------------------------------------------------------------
// 5. Multipath gain

Verdict multipath_gain()
{
	double worst = 0;
	for (const char* name : {"3g", "4g", "wifi"})
	{
		const auto sub = subflow(name);
		for (double alpha : {1.5, 2.0, 2.5, 3.0})
		{
			for (auto cc : {CongestionControl::ewtcp, CongestionControl::semicoupled, CongestionControl::max_mptcp,
			                CongestionControl::balia})
			{
				const double k1 = balanced_k0(make_connection({sub}, cc, alpha)).k0;
				for (std::size_t n = 2; n <= 4; ++n)
				{
					const double kn = balanced_k0(make_connection(std::vector<SubflowProfile>(n, sub), cc, alpha)).k0;
					worst = std::max(worst, rel(kn * std::pow(static_cast<double>(n), alpha - 1), k1));
				}
			}
		}
	}
	return {worst <= 1e-12, "max relative spread of K0(N) N^(alpha-1) over N = 1..4: " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 6. Table reproduction

struct TableRun
{
	std::vector<std::string> points;
	std::map<std::string, std::map<Manager, double>> energy;
	std::map<std::string, double> saving_vs_xen;
	std::string assumptions;
};

TableRun run_table(const std::string& preset)
{
	TableRun t;
	for (const auto& r : run_experiment(preset_scenario(library(), preset)))
	{
		if (!r.ok)
		{
			throw std::runtime_error(preset + " " + r.point + ": " + r.error);
		}
		if (t.energy.find(r.point) == t.energy.end())
		{
			t.points.push_back(r.point);
		}
		t.energy[r.point][r.manager] = r.report.e_tot;
		if (r.manager == Manager::scbm && r.saving_vs_xen_pct)
		{
			t.saving_vs_xen[r.point] = *r.saving_vs_xen_pct;
		}
		t.assumptions = r.assumptions;
	}
	return t;
}

Verdict table_reproduction()
{
	std::ostringstream d;
	bool pass = true;

	const auto t42 = run_table("table-4.2");
	const double want42[] = {27.3, 36.1, 44.4};
	bool ok42 = true;
	d << "preset table-4.2 [" << t42.assumptions << "]:";
	for (std::size_t i = 0; i < t42.points.size(); ++i)
	{
		const double got = t42.saving_vs_xen.at(t42.points[i]);
		ok42 = ok42 && std::abs(got - want42[i]) <= 5;
		d << " " << fmt("%.2f", got) << " vs " << want42[i] << " (" << fmt("%+.2f", got - want42[i]) << ")";
	}
	d << (ok42 ? " within 5 points" : " outside 5 points");
	pass = pass && ok42;

	const auto tg = run_table("table-G");
	const double wantg[] = {60.50, 69.21, 70.84};
	bool okg = true;
	d << "; preset table-G [" << tg.assumptions << "]:";
	for (std::size_t i = 0; i < tg.points.size(); ++i)
	{
		const double got = tg.saving_vs_xen.at(tg.points[i]);
		okg = okg && std::abs(got - wantg[i]) <= 5;
		d << " " << fmt("%.2f", got) << " vs " << wantg[i] << " (" << fmt("%+.2f", got - wantg[i]) << ")";
	}
	if (okg)
	{
		d << " within 5 points";
	}
	else
	{
		// Qualitative ordering and monotone growth in w/R_hat.
		int strict = 0;
		bool order = true;
		bool growth = true;
		for (std::size_t i = 0; i < tg.points.size(); ++i)
		{
			const auto& e = tg.energy.at(tg.points[i]);
			strict += e.at(Manager::scbm) < e.at(Manager::livmig);
			order = order && e.at(Manager::scbm) < e.at(Manager::livmig) && e.at(Manager::livmig) < e.at(Manager::xen);
			if (i > 0)
			{
				const auto& prev = tg.energy.at(tg.points[i - 1]);
				for (Manager m : {Manager::scbm, Manager::xen, Manager::livmig})
				{
					growth = growth && e.at(m) > prev.at(m);
				}
			}
		}
		d << " outside 5 points; fallback: E_SCBM < E_LIVMIG < E_XEN on " << (order ? "all" : "not all")
		  << " workloads (SCBM below LIV_MIG on " << strict << "/3, SCBM - LIV_MIG relative:";
		for (const auto& pt : tg.points)
		{
			const auto& e = tg.energy.at(pt);
			d << " " << fmt("%.1e", e.at(Manager::scbm) / e.at(Manager::livmig) - 1);
		}
		d << "), energies " << (growth ? "grow" : "do not all grow") << " with w/R_hat";
		okg = order && growth;
	}
	pass = pass && okg;
	return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// 7. Dynamic responsiveness

std::vector<int> settles(const std::string& preset, double a_max)
{
	std::vector<int> v;
	const auto run = run_dynamic(preset_scenario(library(), preset, {{"solver.a_max", a_max}}));
	for (const auto& s : run.settles)
	{
		v.push_back(s.settle_iters ? *s.settle_iters : 1000);
	}
	return v;
}

Verdict dynamic_responsiveness()
{
	std::ostringstream d;
	bool pass = true;
	for (const char* preset : {"fig9", "fig10"})
	{
		const auto base = settles(preset, 1e-2);
		int worst = 0;
		for (int s : base)
		{
			worst = std::max(worst, s);
		}
		int spread = 0;
		std::vector<int> lo = base;
		std::vector<int> hi = base;
		for (double a : {3e-3, 5e-3, 1e-2, 2e-2, 3e-2})
		{
			const auto v = settles(preset, a);
			for (std::size_t k = 0; k < v.size(); ++k)
			{
				lo[k] = std::min(lo[k], v[k]);
				hi[k] = std::max(hi[k], v[k]);
				worst = std::max(worst, v[k]);
			}
		}
		for (std::size_t k = 0; k < lo.size(); ++k)
		{
			spread = std::max(spread, hi[k] - lo[k]);
		}
		pass = pass && worst <= 10 && spread <= 2;
		d << preset << ": settle";
		for (int s : base)
		{
			d << " " << s;
		}
		d << " iterations, worst " << worst << " over a_max in [3e-3, 3e-2], spread " << spread << "; ";
	}
	auto s = d.str();
	s.resize(s.size() - 2);
	return {pass, s};
}

// ---------------------------------------------------------------------------
// 8. Complexity scaling

Verdict complexity_scaling()
{
	const BalancedPowerModel p{2.5e-2, 2, 0};
	std::ostringstream d;
	bool counts = true;
	d << "updates per iteration:";
	std::vector<double> lq;
	std::vector<double> lt;
	for (int q : {1, 2, 3, 6})
	{
		const auto s = spec_of(128, 3, 6, q, 2, 60, 0.05, 18);
		const auto r = solve(s, p);
		counts = counts && r.scalar_updates_per_iteration == 2 * (q + 5);
		d << " Q=" << q << ": " << r.scalar_updates_per_iteration << " (target " << 2 * (q + 5) << ")";

		// Median of repeated timed batches.
		std::vector<double> batch;
		for (int rep = 0; rep < 9; ++rep)
		{
			const auto t0 = Clock::now();
			for (int k = 0; k < 20; ++k)
			{
				(void)solve(s, p);
			}
			batch.push_back(seconds_since(t0) / 20);
		}
		std::nth_element(batch.begin(), batch.begin() + 4, batch.end());
		lq.push_back(std::log(q));
		lt.push_back(std::log(batch[4]));
	}
	const double mq = std::accumulate(lq.begin(), lq.end(), 0.0) / lq.size();
	const double mt = std::accumulate(lt.begin(), lt.end(), 0.0) / lt.size();
	double sxy = 0;
	double sxx = 0;
	for (std::size_t i = 0; i < lq.size(); ++i)
	{
		sxy += (lq[i] - mq) * (lt[i] - mt);
		sxx += (lq[i] - mq) * (lq[i] - mq);
	}
	const double slope = sxy / sxx;
	const bool linear = slope <= 1.2;
	d << "; count rule " << (counts ? "met" : "not met") << "; wall-time exponent " << fmt("%.2f", slope)
	  << (linear ? " (<= 1.2)" : " (> 1.2)");
	return {counts && linear, d.str()};
}

// ---------------------------------------------------------------------------
// 9. Closed-form round count

Verdict optimized_round_count()
{
	std::mt19937 rng(909);
	std::uniform_real_distribution<double> u(0, 1);
	const BalancedPowerModel p{2.5e-2, 2, 0};
	int n = 0;
	int ok_dt = 0;
	int ok_e = 0;
	double lowest_dt = 1;
	double worst_e = 0;
	while (n < 60)
	{
		const double rh = 5 + 45 * u(rng);
		const double beta = 1 + u(rng);
		const double w = rh * (0.05 + 0.9 * u(rng)) / beta;
		auto s = spec_of(32 + 224 * u(rng), w, 0, 1, beta, 1, 0.01 + 0.5 * u(rng), rh);
		s.i_max = optimized_imax(s);
		if (s.i_max > 40)
		{
			continue;
		}
		// Migration deadline loose enough for one extra round.
		auto wide = s;
		wide.i_max = s.i_max + 1;
		s.delta_mt_s = times_at_cap(wide).first * (1.5 + 2 * u(rng));
		if (!check_feasibility(s).feasible)
		{
			continue;
		}
		const auto r = solve(s, p);
		const double frac = r.report.t_dt / s.delta_dt_s;
		lowest_dt = std::min(lowest_dt, frac);
		ok_dt += frac > 0.3 && frac <= 1 + default_tolerance;
		bool e_ok = true;
		for (int di : {-1, 1})
		{
			auto t = s;
			t.i_max += di;
			if (t.i_max < 0 || !check_feasibility(t).feasible)
			{
				continue;
			}
			const auto rt = solve(t, p);
			const double excess = r.report.e_tot / rt.report.e_tot - 1;
			worst_e = std::max(worst_e, excess);
			e_ok = e_ok && excess <= 1e-6;
		}
		ok_e += e_ok;
		++n;
	}
	return {ok_dt == n && ok_e == n,
	        std::to_string(n) + " instances; T_DT in (0.3, 1] x deadline on " + std::to_string(ok_dt) + " (lowest "
	            + fmt("%.3f", lowest_dt) + "), energy <= neighbours on " + std::to_string(ok_e) + " (worst excess "
	            + fmt("%.2e", worst_e) + ")"};
}

// ---------------------------------------------------------------------------
// 10. Feasibility verdict against the oracle

Verdict feasibility_soundness()
{
	std::mt19937 rng(1010);
	std::uniform_real_distribution<double> u(0, 1);
	const BalancedPowerModel p{2.5e-2, 2, 0.1};
	int n = 0;
	int agree = 0;
	int feasible = 0;
	while (n < 240)
	{
		const int imax = static_cast<int>(u(rng) * 7);
		std::vector<int> divisors;
		for (int q = 1; q <= std::max(1, imax); ++q)
		{
			if (imax == 0 ? q == 1 : imax % q == 0)
			{
				divisors.push_back(q);
			}
		}
		const int q = divisors[static_cast<std::size_t>(u(rng) * divisors.size())];
		const double rh = 5 + 45 * u(rng);
		const double beta = 1 + u(rng);
		const double w = rh * (0.2 + 1.0 * u(rng)) / beta; // speed-up bound broken in about a sixth of cases
		if (w >= rh)
		{
			continue;
		}
		auto s = spec_of(16 + 240 * u(rng), w, imax, q, beta, 1, 1, rh);
		const auto [tmt, tdt] = times_at_cap(s);
		s.delta_mt_s = tmt * (0.6 + 0.8 * u(rng));
		s.delta_dt_s = tdt * (0.6 + 0.8 * u(rng));
		const bool verdict = check_feasibility(s).feasible;
		bool found = true;
		try
		{
			(void)brute_force_oracle(s, p, {40, 1e-3, 2});
		}
		catch (const InfeasibleError&)
		{
			found = false;
		}
		agree += verdict == found;
		feasible += verdict;
		++n;
	}
	return {agree == n, std::to_string(agree) + "/" + std::to_string(n) + " verdicts match the oracle ("
	                        + std::to_string(feasible) + " feasible)"};
}

} // namespace

int main()
{
	struct Criterion
	{
		const char* name;
		Verdict (*run)();
	};
	const Criterion criteria[] = {
	    {"gradient correctness", gradient_correctness},
	    {"oracle equivalence", oracle_equivalence},
	    {"unified power formula", unified_power_balance},
	    {"balanced K0 cross-check", balanced_k0_check},
	    {"multipath gain", multipath_gain},
	    {"table reproduction", table_reproduction},
	    {"dynamic responsiveness", dynamic_responsiveness},
	    {"complexity scaling", complexity_scaling},
	    {"optimized round count", optimized_round_count},
	    {"feasibility soundness", feasibility_soundness},
	};
	int failed = 0;
	int k = 0;
	for (const auto& c : criteria)
	{
		++k;
		Verdict v;
		try
		{
			v = c.run();
		}
		catch (const std::exception& e)
		{
			v = {false, std::string("error: ") + e.what()};
		}
		failed += !v.pass;
		std::printf("AC%d %s: %s (%s)\n", k, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str());
		std::fflush(stdout);
	}
	std::printf("%d/%d criteria pass\n", k - failed, k);
	return failed == 0 ? 0 : 1;
}
