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

// Command-line front end: check, solve, compare, dynamic, sweep and oracle.
// Results go to stdout (or --out) as CSV. Exit codes: 0 success, 2 when every
// result is infeasible, 1 on errors.

#include <scbm/harness/csv.hpp>
#include <scbm/harness/experiment.hpp>
#include <scbm/harness/oracle.hpp>
#include <scbm/harness/scenario.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace scbm;
using namespace scbm::harness;

namespace {

struct Inputs
{
	std::string preset;
	std::string scenario_file;
	std::string presets_file = SCBM_DEFAULT_PRESETS;
	std::vector<std::string> sets;
	std::vector<std::string> grids;
	std::string out;

	std::optional<double> m0;
	std::optional<double> dirty_rate;
	std::optional<double> w_over_r_hat;
	std::optional<std::string> workload;
	std::optional<std::string> i_max;
	std::optional<int> q;
	std::optional<double> beta;
	std::optional<double> delta_mt;
	std::optional<double> delta_dt;
	std::optional<std::string> r_hat;
	std::optional<std::string> power_preset;
	std::optional<std::string> connection;
	std::optional<double> k0;
	std::optional<double> alpha;
	std::optional<double> p_setup;
	bool include_setup = false;
	bool exclude_setup = false;
	std::optional<double> a_max;
	std::optional<int> max_iters;
	std::optional<double> tol;
	std::optional<int> xen_i_max;
};

void add_input_options(CLI::App* cmd, Inputs& in)
{
	auto* src = cmd->add_option("-p,--preset", in.preset, "scenario preset name from the preset library");
	cmd->add_option("-s,--scenario", in.scenario_file, "scenario file (JSON)")->check(CLI::ExistingFile)->excludes(src);
	cmd->add_option("--presets", in.presets_file, "preset library file")->check(CLI::ExistingFile);
	cmd->add_option("--set", in.sets, "override a field: path.to.field=value (JSON value or bare text)");
	cmd->add_option("--grid", in.grids, "add a sweep axis: path.to.field=[v1,v2,...]");
	cmd->add_option("-o,--out", in.out, "write CSV here instead of stdout");

	const std::string g = "Instance";
	cmd->add_option("--m0", in.m0, "VM memory in Mb (vm.m0_mb)")->group(g);
	cmd->add_option("--dirty-rate", in.dirty_rate, "dirty rate in Mb/s (vm.dirty_rate_mbps)")->group(g);
	cmd->add_option("--w-over-r-hat", in.w_over_r_hat, "dirty rate as a fraction of R_hat (vm.w_over_r_hat)")->group(g);
	cmd->add_option("--workload", in.workload, "workload preset (vm.workload)")->group(g);
	cmd->add_option("--i-max", in.i_max, "pre-copy rounds, or auto (migration.i_max)")->group(g);
	cmd->add_option("-q,--q", in.q, "updated pre-copy rates (migration.q)")->group(g);
	cmd->add_option("--beta", in.beta, "speed-up factor (migration.beta)")->group(g);
	cmd->add_option("--delta-mt", in.delta_mt, "migration-time deadline in s (migration.delta_mt_s)")->group(g);
	cmd->add_option("--delta-dt", in.delta_dt, "downtime deadline in s (migration.delta_dt_s)")->group(g);
	cmd->add_option("--r-hat", in.r_hat, "bandwidth cap in Mb/s, or r_max (migration.r_hat_mbps)")->group(g);

	const std::string p = "Power";
	cmd->add_option("--power-preset", in.power_preset, "power preset (power.preset)")->group(p);
	cmd->add_option("--connection", in.connection, "connection preset (power.connection)")->group(p);
	cmd->add_option("--k0", in.k0, "dynamic power coefficient (power.k0)")->group(p);
	cmd->add_option("--alpha", in.alpha, "dynamic power exponent (power.alpha)")->group(p);
	cmd->add_option("--p-setup", in.p_setup, "total setup power in W (power.p_setup_w)")->group(p);
	auto* inc = cmd->add_flag("--include-setup", in.include_setup, "count setup energy")->group(p);
	cmd->add_flag("--exclude-setup", in.exclude_setup, "leave setup energy out")->group(p)->excludes(inc);

	const std::string s = "Solver";
	cmd->add_option("--a-max", in.a_max, "gain clip (solver.a_max)")->group(s);
	cmd->add_option("--max-iters", in.max_iters, "iteration limit (solver.max_iters)")->group(s);
	cmd->add_option("--tol", in.tol, "convergence tolerance (solver.convergence_tol)")->group(s);
	cmd->add_option("--xen-i-max", in.xen_i_max, "fixed XEN round count (xen.i_max)")->group(s);
}

// Named flags first, then --set in the order given.
std::vector<std::pair<std::string, json>> overrides_of(const Inputs& in)
{
	std::vector<std::pair<std::string, json>> ov;
	auto num = [&](const char* path, const auto& v) {
		if (v)
		{
			ov.emplace_back(path, *v);
		}
	};
	auto text = [&](const char* path, const std::optional<std::string>& v) {
		if (v)
		{
			ov.push_back(parse_override(std::string(path) + "=" + *v));
		}
	};
	auto dirty = [&](const char* path, const std::optional<double>& v) {
		if (v)
		{
			for (const char* other : {"vm.dirty_rate_mbps", "vm.w_over_r_hat", "vm.dirty_trace"})
			{
				ov.emplace_back(other, nullptr);
			}
			ov.emplace_back(path, *v);
		}
	};
	auto power = [&](const char* path, const char* other, const std::optional<std::string>& v) {
		if (v)
		{
			ov.emplace_back(other, nullptr);
			ov.emplace_back(path, *v);
		}
	};
	num("vm.m0_mb", in.m0);
	dirty("vm.dirty_rate_mbps", in.dirty_rate);
	dirty("vm.w_over_r_hat", in.w_over_r_hat);
	if (in.workload)
	{
		ov.emplace_back("vm.workload", *in.workload);
	}
	text("migration.i_max", in.i_max);
	num("migration.q", in.q);
	num("migration.beta", in.beta);
	num("migration.delta_mt_s", in.delta_mt);
	num("migration.delta_dt_s", in.delta_dt);
	text("migration.r_hat_mbps", in.r_hat);
	power("power.preset", "power.connection", in.power_preset);
	power("power.connection", "power.preset", in.connection);
	num("power.k0", in.k0);
	num("power.alpha", in.alpha);
	num("power.p_setup_w", in.p_setup);
	if (in.include_setup || in.exclude_setup)
	{
		ov.emplace_back("include_setup", in.include_setup);
	}
	num("solver.a_max", in.a_max);
	num("solver.max_iters", in.max_iters);
	num("solver.convergence_tol", in.tol);
	num("xen.i_max", in.xen_i_max);
	for (const auto& kv : in.sets)
	{
		ov.push_back(parse_override(kv));
	}
	return ov;
}

Scenario load(const Inputs& in, const std::vector<std::pair<std::string, json>>& extra = {})
{
	if (in.preset.empty() == in.scenario_file.empty())
	{
		throw ScenarioError("give exactly one of --preset or --scenario");
	}
	const auto lib = PresetLibrary::from_file(in.presets_file);
	const std::string source = in.scenario_file.empty() ? "preset '" + in.preset + "'" : in.scenario_file;
	json doc = in.scenario_file.empty() ? json{{"extends", in.preset}}
	                                    : harness::detail::parse_json(harness::detail::read_text(in.scenario_file), in.scenario_file);
	try
	{
		doc = merge_extends(lib, doc);
		auto ov = overrides_of(in);
		ov.insert(ov.end(), extra.begin(), extra.end());
		for (const auto& [path, value] : ov)
		{
			apply_override(doc, path, value);
		}
		// Grid axes are keyed by full field paths, so they bypass the dotted setter.
		for (const auto& g : in.grids)
		{
			const auto [path, values] = parse_override(g);
			if (!values.is_array())
			{
				throw ScenarioError("--grid " + g + ": expected a JSON list of values");
			}
			if (!doc.contains("sweep") || !doc["sweep"].is_object())
			{
				doc["sweep"] = json::object();
			}
			doc["sweep"]["grid"][path] = values;
		}
		return resolve_scenario(lib, doc);
	}
	catch (const ScenarioError& e)
	{
		throw ScenarioError(source + ": " + e.what());
	}
}

void emit(const Table& t, const Inputs& in)
{
	if (in.out.empty())
	{
		write_csv(t, std::cout);
		std::cout.flush();
	}
	else
	{
		emit_csv(t, in.out);
	}
}

int run_check(const Inputs& in)
{
	const auto sc = load(in);
	Table t;
	t.header = {"point", "i_max", "q", "i_tilde", "i_adjusted", "feasible", "migration_time_lhs", "downtime_lhs",
	            "speedup_lhs", "assumptions"};
	bool any = false;
	for (const auto& pt : sc.points)
	{
		const auto f = check_feasibility(pt.spec);
		any = any || f.feasible;
		t.rows.push_back({pt.label, std::to_string(pt.spec.i_max), std::to_string(pt.spec.q), std::to_string(pt.i_tilde),
		                  format_bool(pt.i_adjusted), format_bool(f.feasible), format_number(f.migration_time_lhs),
		                  format_number(f.downtime_lhs), format_number(f.speedup_lhs), pt.assumptions});
	}
	emit(t, in);
	return any ? 0 : 2;
}

int run_rows(const Inputs& in, const std::vector<std::pair<std::string, json>>& extra, bool single)
{
	const auto sc = load(in, extra);
	if (single && sc.points.size() != 1)
	{
		throw ScenarioError("solve takes one instance but the scenario has " + std::to_string(sc.points.size())
		                    + " sweep points; use sweep or compare");
	}
	const auto rows = run_experiment(sc);
	emit(experiment_table(rows), in);
	for (const auto& r : rows)
	{
		if (!r.error.empty())
		{
			std::cerr << "scbm: " << r.point << (r.point.empty() ? "" : " ") << to_string(r.manager) << ": " << r.error
			          << "\n";
		}
	}
	return experiment_exit_code(rows);
}

int run_dynamic_cmd(const Inputs& in)
{
	const auto run = run_dynamic(load(in));
	emit(dynamic_table(run), in);
	for (const auto& s : run.settles)
	{
		std::cerr << "event at n=" << s.at_iter << ": ";
		if (s.settle_iters)
		{
			std::cerr << "settled in " << *s.settle_iters << " iterations\n";
		}
		else
		{
			std::cerr << "no iterations before the next event\n";
		}
	}
	return 0;
}

int run_oracle(const Inputs& in, const OracleOptions& opts)
{
	const auto sc = load(in);
	Table t;
	t.header = {"point",        "feasible",    "exhaustive", "evaluations",      "e_oracle_j", "e_solver_j",
	            "solver_gap_pct", "i_max",      "q",          "oracle_rates_mbps", "error"};
	bool any = false;
	for (const auto& pt : sc.points)
	{
		std::vector<std::string> row{pt.label};
		try
		{
			const auto o = brute_force_oracle(pt.spec, pt.power, opts);
			const auto s = solve(pt.spec, pt.power, pt.solver);
			std::string rates;
			for (std::size_t i = 0; i < o.schedule.expanded.size(); ++i)
			{
				rates += (i ? ";" : "") + format_number(o.schedule.expanded[i]);
			}
			any = true;
			row.insert(row.end(), {"true", format_bool(o.exhaustive), std::to_string(o.evaluations),
			                       format_number(o.report.e_tot), format_number(s.report.e_tot),
			                       format_number((s.report.e_tot / o.report.e_tot - 1) * 100),
			                       std::to_string(pt.spec.i_max), std::to_string(pt.spec.q), rates, ""});
		}
		catch (const InfeasibleError& e)
		{
			row.insert(row.end(), {"false", "", "", "", "", "", std::to_string(pt.spec.i_max), std::to_string(pt.spec.q),
			                       "", e.what()});
		}
		t.rows.push_back(row);
	}
	emit(t, in);
	return any ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Minimum-energy bandwidth schedules for pre-copy VM migration"};
	app.require_subcommand(0, 1);
	std::string presets_for_list = SCBM_DEFAULT_PRESETS;
	bool list = false;
	app.add_flag("--list-presets", list, "list scenario presets and exit");
	app.add_option("--library", presets_for_list, "preset library used by --list-presets")->check(CLI::ExistingFile);

	Inputs in;
	auto* check = app.add_subcommand("check", "feasibility verdict and margins at all-R_hat rates");
	add_input_options(check, in);

	auto* solve_cmd = app.add_subcommand("solve", "one instance, one manager");
	add_input_options(solve_cmd, in);
	std::string manager = "SCBM";
	solve_cmd->add_option("-m,--manager", manager, "SCBM, XEN or LIV_MIG");

	auto* compare = app.add_subcommand("compare", "SCBM, XEN and LIV_MIG side by side");
	add_input_options(compare, in);

	auto* dynamic = app.add_subcommand("dynamic", "per-iteration energy trace under parameter events");
	add_input_options(dynamic, in);

	auto* sweep = app.add_subcommand("sweep", "every sweep point with the scenario's managers");
	add_input_options(sweep, in);

	auto* oracle = app.add_subcommand("oracle", "brute-force grid minimum next to the solver result");
	add_input_options(oracle, in);
	OracleOptions oopts;
	oracle->add_option("--grid-points", oopts.grid_points, "grid points per rate axis");
	oracle->add_option("--floor-fraction", oopts.floor_fraction, "lowest stop-and-copy grid rate over R_hat");
	oracle->add_option("--passes", oopts.refinement_passes, "coordinate refinement passes");

	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::CallForHelp& e)
	{
		return app.exit(e);
	}
	catch (const CLI::CallForAllHelp& e)
	{
		return app.exit(e);
	}
	catch (const CLI::ParseError& e)
	{
		app.exit(e);
		return 1;
	}

	try
	{
		if (list)
		{
			const auto lib = PresetLibrary::from_file(presets_for_list);
			for (const auto& name : lib.names("scenarios"))
			{
				std::cout << name << "\n";
			}
			return 0;
		}
		if (*check)
		{
			return run_check(in);
		}
		if (*solve_cmd)
		{
			parse_manager(manager);
			return run_rows(in, {{"managers", json::array({manager})}}, true);
		}
		if (*compare)
		{
			return run_rows(in, {{"managers", json::array({"SCBM", "XEN", "LIV_MIG"})}}, false);
		}
		if (*dynamic)
		{
			return run_dynamic_cmd(in);
		}
		if (*sweep)
		{
			return run_rows(in, {}, false);
		}
		if (*oracle)
		{
			return run_oracle(in, oopts);
		}
		std::cerr << app.help();
		return 1;
	}
	catch (const std::exception& e)
	{
		std::cerr << "scbm: error: " << e.what() << "\n";
		return 1;
	}
}
