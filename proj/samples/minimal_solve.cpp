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

// Solves one migration instance and compares it with the two benchmark managers.

#include <scbm/scbm.hpp>

#include <cstdio>

int main()
{
	using namespace scbm;

	MigrationSpec spec;
	spec.m0_mb = 128;                              // VM memory
	spec.dirty_rate = DirtyRate::constant(3.267); // Mb/s
	spec.beta = 2;
	spec.delta_mt_s = 46.9;
	spec.delta_dt_s = 0.103;
	spec.r_hat_mbps = 9.9;

	const auto rounds = with_optimized_imax(spec, 2);
	spec = rounds.spec;
	const auto f = check_feasibility(spec);
	std::printf("I_max = %d (closed form %d), Q = %d, feasible: %s\n", spec.i_max, rounds.i_tilde, spec.q,
	            f.feasible ? "yes" : "no");
	if (!f.feasible)
	{
		std::printf("%s\n", f.describe().c_str());
		return 2;
	}

	const BalancedPowerModel power{2.5e-2, 2, 0.29729}; // EWTCP over WiFi + 4G
	const auto r = solve(spec, power);
	std::printf("SCBM: %.4f J in %d iterations (converged: %s)\n", r.report.e_tot, r.iterations,
	            r.converged ? "yes" : "no");
	for (std::size_t i = 0; i < r.schedule.expanded.size(); ++i)
	{
		std::printf("  R_%zu = %.4f Mb/s\n", i, r.schedule.expanded[i]);
	}
	std::printf("  T_MT = %.3f s of %.3f, T_DT = %.4f s of %.4f\n", r.report.t_mt, spec.delta_mt_s, r.report.t_dt,
	            spec.delta_dt_s);

	const auto liv = livmig_solve(spec, power);
	std::printf("LIV_MIG: %.4f J at a common rate of %.4f Mb/s\n", liv.report.e_tot, liv.schedule.expanded.front());
	const auto xen = xen_optimize_imax(spec, power, {0, 29, XenDeadlines::downtime_only});
	std::printf("XEN: %.4f J with %d pre-copy rounds\n", xen.report.e_tot, xen.i_max);
	return 0;
}
