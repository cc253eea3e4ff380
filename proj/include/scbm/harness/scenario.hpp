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

#ifndef SCBM_HARNESS_SCENARIO_HPP
#define SCBM_HARNESS_SCENARIO_HPP

// Scenario files: JSON documents resolved against a preset library into
// fully validated instances, one per sweep point.

#include <scbm/benchmarks.hpp>
#include <scbm/error.hpp>
#include <scbm/model.hpp>
#include <scbm/power.hpp>
#include <scbm/solver.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace scbm::harness {

using json = nlohmann::ordered_json; // keeps declaration order for sweep axes

class ScenarioError : public InvalidArgument
{
public:
	using InvalidArgument::InvalidArgument;
};

enum class Manager
{
	scbm,
	xen,
	livmig
};

inline constexpr std::array<std::string_view, 3> manager_ids{"SCBM", "XEN", "LIV_MIG"};

inline std::string_view to_string(Manager m) { return manager_ids[static_cast<std::size_t>(m)]; }

inline Manager parse_manager(std::string_view id)
{
	for (std::size_t i = 0; i < manager_ids.size(); ++i)
	{
		if (manager_ids[i] == id)
		{
			return static_cast<Manager>(i);
		}
	}
	throw InvalidArgument("unknown manager '" + std::string(id) + "'; valid ids are: SCBM XEN LIV_MIG");
}

struct XenPolicy
{
	std::optional<int> i_max; // pinned round count; otherwise searched
	XenSearch search;
};

struct LivMigPolicy
{
	enum class Rounds
	{
		closed_form, // the closed-form round count of the instance
		scbm,        // the round count SCBM runs at (after Q rounding)
		fixed
	};
	Rounds rounds = Rounds::closed_form;
	int i_max = 0;
};

// One fully resolved instance.
struct ScenarioPoint
{
	std::string label;
	MigrationSpec spec;
	bool i_max_auto = false;
	int i_tilde = 0;       // closed-form value before Q rounding
	bool i_adjusted = false;
	BalancedPowerModel power;
	bool include_setup = true;
	std::vector<Manager> managers;
	SolverOptions solver;
	XenPolicy xen;
	LivMigPolicy livmig;
	std::vector<DynamicEvent> events;
	std::string assumptions;
};

struct Scenario
{
	std::string name;
	json document; // merged, before sweep expansion
	std::vector<ScenarioPoint> points;
};

// Named data: subflow profiles, connections, power models, workloads, scenarios.
struct PresetLibrary
{
	json data = json::object();

	static PresetLibrary from_file(const std::string& path);
	static PresetLibrary from_string(const std::string& text, const std::string& source = "<presets>");

	const json& section(const std::string& name) const
	{
		static const json empty = json::object();
		auto it = data.find(name);
		return it == data.end() ? empty : *it;
	}

	std::vector<std::string> names(const std::string& sec) const
	{
		std::vector<std::string> out;
		for (auto it = section(sec).begin(); it != section(sec).end(); ++it)
		{
			out.push_back(it.key());
		}
		return out;
	}

	const json& get(const std::string& sec, const std::string& name, const std::string& field_path) const
	{
		const auto& s = section(sec);
		auto it = s.find(name);
		if (it == s.end())
		{
			std::string msg = field_path + ": unknown " + sec + " preset '" + name + "'; known:";
			for (const auto& n : names(sec))
			{
				msg += " " + n;
			}
			throw ScenarioError(msg);
		}
		return *it;
	}
};

namespace detail {

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte)
{
	int line = 1;
	int col = 1;
	for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i)
	{
		if (text[i] == '\n')
		{
			++line;
			col = 1;
		}
		else
		{
			++col;
		}
	}
	return {line, col};
}

inline json parse_json(const std::string& text, const std::string& source)
{
	try
	{
		return json::parse(text, nullptr, true, true);
	}
	catch (const json::parse_error& e)
	{
		const auto [line, col] = line_col(text, e.byte);
		std::string what = e.what();
		const auto pos = what.find("parse error");
		throw ScenarioError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": "
		                    + (pos == std::string::npos ? what : what.substr(pos)));
	}
}

inline std::string read_text(const std::string& path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f)
	{
		throw ScenarioError("cannot open '" + path + "'");
	}
	std::ostringstream ss;
	ss << f.rdbuf();
	return ss.str();
}

inline std::string join(const std::string& path, const std::string& key)
{
	return path.empty() ? key : path + "." + key;
}

// Typed access to one JSON object, reporting errors by dotted field path.
class Fields
{
public:
	Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
	{
		if (!obj_.is_object())
		{
			throw ScenarioError(path_ + ": expected an object");
		}
	}

	bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

	std::string at(const std::string& key) const { return join(path_, key); }

	const json& raw(const std::string& key) const { return obj_.at(key); }

	double number(const std::string& key) const
	{
		need(key);
		const auto& v = obj_.at(key);
		if (!v.is_number())
		{
			throw ScenarioError(at(key) + ": expected a number");
		}
		return v.get<double>();
	}

	double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

	int integer(const std::string& key) const
	{
		need(key);
		const auto& v = obj_.at(key);
		if (!v.is_number_integer())
		{
			throw ScenarioError(at(key) + ": expected an integer");
		}
		return v.get<int>();
	}

	int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

	std::string text(const std::string& key) const
	{
		need(key);
		const auto& v = obj_.at(key);
		if (!v.is_string())
		{
			throw ScenarioError(at(key) + ": expected a string");
		}
		return v.get<std::string>();
	}

	std::string text(const std::string& key, const std::string& fallback) const
	{
		return has(key) ? text(key) : fallback;
	}

	bool boolean(const std::string& key, bool fallback) const
	{
		if (!has(key))
		{
			return fallback;
		}
		const auto& v = obj_.at(key);
		if (!v.is_boolean())
		{
			throw ScenarioError(at(key) + ": expected true or false");
		}
		return v.get<bool>();
	}

	Fields object(const std::string& key) const
	{
		static const json empty = json::object();
		return has(key) ? Fields(obj_.at(key), at(key)) : Fields(empty, at(key));
	}

	void only(std::initializer_list<std::string_view> allowed) const
	{
		for (auto it = obj_.begin(); it != obj_.end(); ++it)
		{
			if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
			{
				std::string msg = at(it.key()) + ": unknown field; expected one of:";
				for (auto a : allowed)
				{
					msg += " ";
					msg += a;
				}
				throw ScenarioError(msg);
			}
		}
	}

private:
	void need(const std::string& key) const
	{
		if (!has(key))
		{
			throw ScenarioError(at(key) + ": required field missing");
		}
	}

	const json& obj_;
	std::string path_;
};

// Re-raises a library validation error under a scenario field path.
template <typename F>
auto with_path(const std::string& path, F&& f) -> decltype(f())
{
	try
	{
		return f();
	}
	catch (const ScenarioError&)
	{
		throw;
	}
	catch (const InvalidArgument& e)
	{
		throw ScenarioError(path + ": " + e.what());
	}
}

inline SubflowProfile subflow_from(const Fields& f)
{
	f.only({"rtt_s", "omega", "mss_mb", "r_max_mbps", "p_setup_w"});
	SubflowProfile s;
	s.rtt_s = f.number("rtt_s");
	s.omega = f.number("omega");
	s.mss_mb = f.number("mss_mb", default_mss_mb);
	s.r_max_mbps = f.number("r_max_mbps");
	s.p_setup_w = f.number("p_setup_w");
	return s;
}

struct ResolvedPower
{
	BalancedPowerModel model;
	std::optional<double> r_max_mbps;
};

inline ResolvedPower connection_power(const PresetLibrary& lib, const Fields& f)
{
	f.only({"subflows", "cc", "alpha"});
	if (!f.has("subflows") || !f.raw("subflows").is_array() || f.raw("subflows").empty())
	{
		throw ScenarioError(f.at("subflows") + ": expected a non-empty list of subflow names or objects");
	}
	std::vector<SubflowProfile> subs;
	const auto& list = f.raw("subflows");
	for (std::size_t i = 0; i < list.size(); ++i)
	{
		const std::string p = f.at("subflows") + "[" + std::to_string(i) + "]";
		if (list[i].is_string())
		{
			const auto name = list[i].get<std::string>();
			subs.push_back(subflow_from(Fields(lib.get("subflows", name, p), "subflows." + name)));
		}
		else
		{
			subs.push_back(subflow_from(Fields(list[i], p)));
		}
	}
	const auto cc = with_path(f.at("cc"), [&] { return parse_congestion_control(f.text("cc")); });
	const double alpha = f.number("alpha", 2);
	auto conn = with_path(f.at("subflows"), [&] { return make_connection(subs, cc, alpha); });
	ResolvedPower r;
	r.model = balanced_k0(conn);
	double cap = 0;
	for (const auto& s : subs)
	{
		cap += s.r_max_mbps;
	}
	r.r_max_mbps = cap;
	return r;
}

inline ResolvedPower resolve_power(const PresetLibrary& lib, const Fields& f)
{
	f.only({"preset", "connection", "k0", "alpha", "p_setup_w", "r_max_mbps"});
	ResolvedPower r;
	if (f.has("preset"))
	{
		const auto name = f.text("preset");
		const Fields p(lib.get("power", name, f.at("preset")), "power." + name);
		p.only({"k0", "alpha", "p_setup_w", "r_max_mbps", "description"});
		r.model = {p.number("k0"), p.number("alpha", 2), p.number("p_setup_w", 0)};
		if (p.has("r_max_mbps"))
		{
			r.r_max_mbps = p.number("r_max_mbps");
		}
	}
	else if (f.has("connection"))
	{
		const auto& c = f.raw("connection");
		if (c.is_string())
		{
			const auto name = c.get<std::string>();
			r = connection_power(lib, Fields(lib.get("connections", name, f.at("connection")), "connections." + name));
		}
		else
		{
			r = connection_power(lib, f.object("connection"));
		}
	}
	else if (!f.has("k0"))
	{
		throw ScenarioError(f.at("k0") + ": power needs one of preset, connection or k0");
	}
	// Explicit fields override whatever the preset supplied.
	if (f.has("k0"))
	{
		r.model.k0 = f.number("k0");
	}
	if (f.has("alpha"))
	{
		r.model.alpha = f.number("alpha");
	}
	if (f.has("p_setup_w"))
	{
		r.model.p_setup_total_w = f.number("p_setup_w");
	}
	if (f.has("r_max_mbps"))
	{
		r.r_max_mbps = f.number("r_max_mbps");
	}
	with_path(f.at("k0"), [&] { r.model.validate(); });
	return r;
}

inline std::string spec_field_path(const std::string& msg)
{
	static const std::vector<std::pair<std::string, std::string>> map{
	    {"spec.m0_mb", "vm.m0_mb"},           {"spec.dirty_rate", "vm.dirty_rate_mbps"},
	    {"spec.i_max", "migration.i_max"},    {"spec.q", "migration.q"},
	    {"spec.beta", "migration.beta"},      {"spec.delta_mt_s", "migration.delta_mt_s"},
	    {"spec.delta_dt_s", "migration.delta_dt_s"}, {"spec.r_hat_mbps", "migration.r_hat_mbps"}};
	for (const auto& [from, to] : map)
	{
		if (msg.rfind(from, 0) == 0)
		{
			return to + msg.substr(from.size());
		}
	}
	return "migration: " + msg;
}

inline DynamicEvent event_from(const Fields& f)
{
	f.only({"at_iter", "target", "multiplier"});
	DynamicEvent ev;
	ev.at_iter = f.integer("at_iter");
	const auto t = f.text("target");
	if (t == "dirty_rate")
	{
		ev.target = DynamicEvent::Target::dirty_rate;
	}
	else if (t == "k0")
	{
		ev.target = DynamicEvent::Target::k0;
	}
	else
	{
		throw ScenarioError(f.at("target") + ": expected dirty_rate or k0");
	}
	ev.multiplier = f.number("multiplier");
	if (ev.at_iter < 1)
	{
		throw ScenarioError(f.at("at_iter") + ": must be at least 1");
	}
	if (!(ev.multiplier > 0))
	{
		throw ScenarioError(f.at("multiplier") + ": must be positive");
	}
	return ev;
}

// Splits "a.b.c" and writes value there, creating objects along the way.
inline void set_path(json& doc, const std::string& path, const json& value)
{
	if (path.empty())
	{
		throw ScenarioError("override: empty field path");
	}
	json* cur = &doc;
	std::size_t start = 0;
	while (true)
	{
		const auto dot = path.find('.', start);
		const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
		if (key.empty())
		{
			throw ScenarioError("override '" + path + "': empty path component");
		}
		if (!cur->is_object())
		{
			*cur = json::object();
		}
		if (dot == std::string::npos)
		{
			// null removes the field, as in a JSON merge patch.
			if (value.is_null())
			{
				cur->erase(key);
			}
			else
			{
				(*cur)[key] = value;
			}
			return;
		}
		cur = &(*cur)[key];
		start = dot + 1;
	}
}

} // namespace detail

inline PresetLibrary PresetLibrary::from_string(const std::string& text, const std::string& source)
{
	PresetLibrary lib;
	lib.data = detail::parse_json(text, source);
	if (!lib.data.is_object())
	{
		throw ScenarioError(source + ": expected a JSON object at the top level");
	}
	return lib;
}

inline PresetLibrary PresetLibrary::from_file(const std::string& path)
{
	return from_string(detail::read_text(path), path);
}

// "key=value" with value read as JSON when it parses, else as a string.
inline std::pair<std::string, json> parse_override(const std::string& kv)
{
	const auto eq = kv.find('=');
	if (eq == std::string::npos || eq == 0)
	{
		throw ScenarioError("override '" + kv + "': expected field.path=value");
	}
	const auto key = kv.substr(0, eq);
	const auto val = kv.substr(eq + 1);
	json v = json::parse(val, nullptr, false);
	if (v.is_discarded())
	{
		v = val;
	}
	return {key, v};
}

inline void apply_override(json& doc, const std::string& path, const json& value)
{
	detail::set_path(doc, path, value);
}

// Follows "extends" chains through the preset library and merges documents.
inline json merge_extends(const PresetLibrary& lib, json doc, int depth = 0)
{
	if (!doc.is_object())
	{
		throw ScenarioError("scenario: expected a JSON object");
	}
	if (!doc.contains("extends"))
	{
		return doc;
	}
	if (depth > 16)
	{
		throw ScenarioError("extends: preset chain too deep (cycle?)");
	}
	if (!doc["extends"].is_string())
	{
		throw ScenarioError("extends: expected a scenario preset name");
	}
	const auto base_name = doc["extends"].get<std::string>();
	json base = merge_extends(lib, lib.get("scenarios", base_name, "extends"), depth + 1);
	doc.erase("extends");
	const bool named = doc.contains("name");
	base.merge_patch(doc);
	// The most derived preset names the run unless the document names itself.
	if (!named)
	{
		base["name"] = base_name;
	}
	return base;
}

// Resolves one sweep-free document into a validated point.
inline ScenarioPoint resolve_point(const PresetLibrary& lib, const json& doc, const std::string& label)
{
	using detail::Fields;
	const Fields top(doc, "");
	top.only({"name", "description", "assumptions", "vm", "migration", "power", "include_setup", "managers", "xen",
	          "livmig", "solver", "events", "sweep"});
	ScenarioPoint pt;
	pt.label = label;
	pt.assumptions = top.text("assumptions", "");

	// Power first: R_hat may refer to the connection's capacity.
	const auto power = detail::resolve_power(lib, top.object("power"));
	pt.power = power.model;
	pt.include_setup = top.boolean("include_setup", true);
	if (!pt.include_setup)
	{
		pt.power.p_setup_total_w = 0;
	}

	const auto mig = top.object("migration");
	mig.only({"i_max", "q", "beta", "delta_mt_s", "delta_dt_s", "r_hat_mbps"});
	MigrationSpec& s = pt.spec;
	if (mig.has("r_hat_mbps") && mig.raw("r_hat_mbps").is_string())
	{
		if (mig.text("r_hat_mbps") != "r_max")
		{
			throw ScenarioError(mig.at("r_hat_mbps") + ": expected a number or \"r_max\"");
		}
		if (!power.r_max_mbps)
		{
			throw ScenarioError(mig.at("r_hat_mbps") + ": \"r_max\" needs a power model with r_max_mbps");
		}
		s.r_hat_mbps = *power.r_max_mbps;
	}
	else
	{
		s.r_hat_mbps = mig.number("r_hat_mbps");
	}
	s.q = mig.integer("q", 1);
	s.beta = mig.number("beta", 1);
	s.delta_mt_s = mig.number("delta_mt_s");
	s.delta_dt_s = mig.number("delta_dt_s");

	const auto vm = top.object("vm");
	vm.only({"workload", "m0_mb", "dirty_rate_mbps", "w_over_r_hat", "dirty_trace"});
	std::optional<double> m0;
	std::optional<double> w;
	if (vm.has("workload"))
	{
		const auto name = vm.text("workload");
		const Fields wl(lib.get("workloads", name, vm.at("workload")), "workloads." + name);
		wl.only({"m0_mb", "dirty_rate_mbps", "description"});
		if (wl.has("m0_mb"))
		{
			m0 = wl.number("m0_mb");
		}
		if (wl.has("dirty_rate_mbps"))
		{
			w = wl.number("dirty_rate_mbps");
		}
	}
	if (vm.has("m0_mb"))
	{
		m0 = vm.number("m0_mb");
	}
	const int given = static_cast<int>(vm.has("dirty_rate_mbps")) + static_cast<int>(vm.has("w_over_r_hat"))
	                  + static_cast<int>(vm.has("dirty_trace"));
	if (given > 1)
	{
		throw ScenarioError(vm.at("dirty_rate_mbps") + ": give only one of dirty_rate_mbps, w_over_r_hat, dirty_trace");
	}
	if (vm.has("dirty_rate_mbps"))
	{
		w = vm.number("dirty_rate_mbps");
	}
	if (vm.has("w_over_r_hat"))
	{
		w = vm.number("w_over_r_hat") * s.r_hat_mbps;
	}
	if (!m0)
	{
		throw ScenarioError(vm.at("m0_mb") + ": required field missing (set it or name a workload)");
	}
	s.m0_mb = *m0;
	if (vm.has("dirty_trace"))
	{
		const auto& tr = vm.raw("dirty_trace");
		if (!tr.is_array() || tr.empty())
		{
			throw ScenarioError(vm.at("dirty_trace") + ": expected a non-empty list of rates");
		}
		std::vector<double> v;
		for (const auto& x : tr)
		{
			if (!x.is_number())
			{
				throw ScenarioError(vm.at("dirty_trace") + ": expected numbers");
			}
			v.push_back(x.get<double>());
		}
		s.dirty_rate = DirtyRate::trace(v);
	}
	else if (w)
	{
		s.dirty_rate = DirtyRate::constant(*w);
	}
	else
	{
		throw ScenarioError(vm.at("dirty_rate_mbps")
		                    + ": required field missing (set dirty_rate_mbps or w_over_r_hat, or name a workload)");
	}

	if (!mig.has("i_max") || (mig.raw("i_max").is_string() && mig.text("i_max") == "auto"))
	{
		pt.i_max_auto = true;
		const auto choice = detail::with_path(mig.at("i_max"), [&] { return with_optimized_imax(s, s.q); });
		s = choice.spec;
		pt.i_tilde = choice.i_tilde;
		pt.i_adjusted = choice.adjusted;
	}
	else
	{
		if (mig.raw("i_max").is_string())
		{
			throw ScenarioError(mig.at("i_max") + ": expected an integer or \"auto\"");
		}
		s.i_max = mig.integer("i_max");
		pt.i_tilde = s.i_max;
	}
	try
	{
		s.validate();
	}
	catch (const InvalidArgument& e)
	{
		throw ScenarioError(detail::spec_field_path(e.what()));
	}

	if (top.has("managers"))
	{
		const auto& m = top.raw("managers");
		if (!m.is_array() || m.empty())
		{
			throw ScenarioError(top.at("managers") + ": expected a non-empty list");
		}
		for (const auto& x : m)
		{
			if (!x.is_string())
			{
				throw ScenarioError(top.at("managers") + ": expected manager names");
			}
			pt.managers.push_back(detail::with_path(top.at("managers"), [&] { return parse_manager(x.get<std::string>()); }));
		}
	}
	else
	{
		pt.managers = {Manager::scbm};
	}

	const auto xen = top.object("xen");
	xen.only({"i_max", "first", "last", "deadlines"});
	if (xen.has("i_max"))
	{
		pt.xen.i_max = xen.integer("i_max");
		if (*pt.xen.i_max < 0)
		{
			throw ScenarioError(xen.at("i_max") + ": must be non-negative");
		}
	}
	pt.xen.search.first = xen.integer("first", 0);
	pt.xen.search.last = xen.integer("last", 29);
	if (pt.xen.search.first < 0 || pt.xen.search.last < pt.xen.search.first)
	{
		throw ScenarioError(xen.at("last") + ": need 0 <= first <= last");
	}
	const auto mode = xen.text("deadlines", "both");
	if (mode == "both")
	{
		pt.xen.search.deadlines = XenDeadlines::both;
	}
	else if (mode == "downtime")
	{
		pt.xen.search.deadlines = XenDeadlines::downtime_only;
	}
	else
	{
		throw ScenarioError(xen.at("deadlines") + ": expected both or downtime");
	}

	const auto liv = top.object("livmig");
	liv.only({"i_max"});
	if (liv.has("i_max"))
	{
		const auto& v = liv.raw("i_max");
		if (v.is_string() && v.get<std::string>() == "auto")
		{
			pt.livmig.rounds = LivMigPolicy::Rounds::closed_form;
		}
		else if (v.is_string() && v.get<std::string>() == "scbm")
		{
			pt.livmig.rounds = LivMigPolicy::Rounds::scbm;
		}
		else if (v.is_number_integer() && v.get<int>() >= 0)
		{
			pt.livmig.rounds = LivMigPolicy::Rounds::fixed;
			pt.livmig.i_max = v.get<int>();
		}
		else
		{
			throw ScenarioError(liv.at("i_max") + ": expected \"auto\", \"scbm\" or a non-negative integer");
		}
	}

	const auto so = top.object("solver");
	so.only({"a_max", "max_iters", "convergence_tol", "preconditioning", "max_log_step"});
	pt.solver.a_max = so.number("a_max", pt.solver.a_max);
	pt.solver.max_iters = so.integer("max_iters", pt.solver.max_iters);
	pt.solver.convergence_tol = so.number("convergence_tol", pt.solver.convergence_tol);
	pt.solver.max_log_step = so.number("max_log_step", pt.solver.max_log_step);
	pt.solver.record_trajectory = true;
	const auto pre = so.text("preconditioning", "newton");
	if (pre == "newton")
	{
		pt.solver.preconditioning = Preconditioning::newton;
	}
	else if (pre == "none")
	{
		pt.solver.preconditioning = Preconditioning::none;
	}
	else
	{
		throw ScenarioError(so.at("preconditioning") + ": expected newton or none");
	}
	detail::with_path("solver", [&] { pt.solver.validate(); });
	if (!(pt.solver.max_log_step > 0))
	{
		throw ScenarioError(so.at("max_log_step") + ": must be positive");
	}

	if (top.has("events"))
	{
		const auto& ev = top.raw("events");
		if (!ev.is_array())
		{
			throw ScenarioError(top.at("events") + ": expected a list");
		}
		for (std::size_t i = 0; i < ev.size(); ++i)
		{
			pt.events.push_back(detail::event_from(detail::Fields(ev[i], "events[" + std::to_string(i) + "]")));
			if (pt.events.back().at_iter > pt.solver.max_iters)
			{
				throw ScenarioError("events[" + std::to_string(i) + "].at_iter: beyond solver.max_iters");
			}
		}
	}
	return pt;
}

namespace detail {

inline std::string value_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Expands points x grid into (label, document) pairs in declaration order.
inline std::vector<std::pair<std::string, json>> expand_sweep(const json& doc)
{
	std::vector<std::pair<std::string, json>> base;
	json plain = doc;
	plain.erase("sweep");
	if (!doc.contains("sweep") || doc.at("sweep").is_null())
	{
		return {{"", plain}};
	}
	const Fields sw(doc.at("sweep"), "sweep");
	sw.only({"points", "grid"});
	if (sw.has("points"))
	{
		const auto& pts = sw.raw("points");
		if (!pts.is_array() || pts.empty())
		{
			throw ScenarioError("sweep.points: expected a non-empty list");
		}
		for (std::size_t i = 0; i < pts.size(); ++i)
		{
			const std::string p = "sweep.points[" + std::to_string(i) + "]";
			const Fields f(pts[i], p);
			f.only({"label", "set"});
			json d = plain;
			if (f.has("set"))
			{
				for (auto it = f.raw("set").begin(); it != f.raw("set").end(); ++it)
				{
					set_path(d, it.key(), it.value());
				}
			}
			base.emplace_back(f.text("label", std::to_string(i)), std::move(d));
		}
	}
	else
	{
		base.emplace_back("", plain);
	}
	if (!sw.has("grid"))
	{
		return base;
	}
	const auto& grid = sw.raw("grid");
	if (!grid.is_object())
	{
		throw ScenarioError("sweep.grid: expected an object of field path -> value list");
	}
	std::vector<std::pair<std::string, json>> out = base;
	for (auto it = grid.begin(); it != grid.end(); ++it)
	{
		if (!it.value().is_array() || it.value().empty())
		{
			throw ScenarioError("sweep.grid." + it.key() + ": expected a non-empty list of values");
		}
		std::vector<std::pair<std::string, json>> next;
		for (const auto& [label, d] : out)
		{
			for (const auto& v : it.value())
			{
				json nd = d;
				set_path(nd, it.key(), v);
				const auto tag = it.key() + "=" + value_label(v);
				next.emplace_back(label.empty() ? tag : label + "/" + tag, std::move(nd));
			}
		}
		out = std::move(next);
	}
	return out;
}

} // namespace detail

// Resolves a scenario document (already parsed) against the library.
inline Scenario resolve_scenario(const PresetLibrary& lib, const json& raw,
                                 const std::vector<std::pair<std::string, json>>& overrides = {})
{
	json doc = merge_extends(lib, raw);
	for (const auto& [path, value] : overrides)
	{
		apply_override(doc, path, value);
	}
	Scenario sc;
	sc.name = doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>() : "scenario";
	sc.document = doc;
	for (const auto& [label, d] : detail::expand_sweep(doc))
	{
		try
		{
			sc.points.push_back(resolve_point(lib, d, label));
		}
		catch (const ScenarioError& e)
		{
			throw ScenarioError(label.empty() ? std::string(e.what()) : "point '" + label + "': " + e.what());
		}
	}
	return sc;
}

inline Scenario load_scenario_text(const PresetLibrary& lib, const std::string& text, const std::string& source,
                                   const std::vector<std::pair<std::string, json>>& overrides = {})
{
	const json doc = detail::parse_json(text, source);
	try
	{
		return resolve_scenario(lib, doc, overrides);
	}
	catch (const ScenarioError& e)
	{
		throw ScenarioError(source + ": " + e.what());
	}
}

inline Scenario load_scenario(const std::string& path, const PresetLibrary& lib,
                              const std::vector<std::pair<std::string, json>>& overrides = {})
{
	return load_scenario_text(lib, detail::read_text(path), path, overrides);
}

// A scenario preset by name, with optional overrides.
inline Scenario preset_scenario(const PresetLibrary& lib, const std::string& name,
                                const std::vector<std::pair<std::string, json>>& overrides = {})
{
	json doc = {{"extends", name}};
	try
	{
		return resolve_scenario(lib, doc, overrides);
	}
	catch (const ScenarioError& e)
	{
		throw ScenarioError("preset '" + name + "': " + e.what());
	}
}

} // namespace scbm::harness

#endif // SCBM_HARNESS_SCENARIO_HPP
