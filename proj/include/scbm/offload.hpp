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

#ifndef SCBM_OFFLOAD_HPP
#define SCBM_OFFLOAD_HPP

// Migrate-or-not advice: local vs fog execution time and energy budgets.

#include <scbm/error.hpp>
#include <scbm/model.hpp>

#include <algorithm>

namespace scbm {

struct DevicePowerProfile
{
	double p_com_w = 0;
	double p_idle_w = 0;
	double p_rx_w = 0;
	double s_com_mbps = 1; // workload processed per second

	void validate() const
	{
		detail::require(p_com_w >= 0 && p_idle_w >= 0 && p_rx_w >= 0, "device profile: powers must be non-negative");
		detail::require(s_com_mbps > 0, "device profile: compute speed must be positive");
	}
};

struct FogProfile
{
	double s_com_mbps = 1;
	double r_down_mbps = 1;

	void validate() const
	{
		detail::require(s_com_mbps > 0 && r_down_mbps > 0, "fog profile: speed and download rate must be positive");
	}
};

struct OffloadScenario
{
	double gamma = 1;   // workload-to-size ratio
	double t_ratio = 0; // returned data relative to M0

	void validate() const
	{
		detail::require(gamma > 0, "offload scenario: gamma must be positive");
		detail::require(t_ratio >= 0, "offload scenario: returned-data ratio must be non-negative");
	}
};

inline double local_execution_time(const DevicePowerProfile& dev, const OffloadScenario& scen, double m0)
{
	dev.validate();
	scen.validate();
	return scen.gamma * m0 / dev.s_com_mbps;
}

inline double remote_execution_time(const FogProfile& fog, const OffloadScenario& scen, double m0, double t_tot)
{
	fog.validate();
	scen.validate();
	return t_tot + scen.gamma * m0 / fog.s_com_mbps;
}

struct Budget
{
	double value = 0;
	bool clamped = false; // the unclamped expression was negative
};

inline Budget migration_time_budget(const DevicePowerProfile& dev, const FogProfile& fog, const OffloadScenario& scen,
                                    double m0, const StageOverheads& overheads)
{
	dev.validate();
	fog.validate();
	scen.validate();
	overheads.validate();
	const double raw = scen.gamma * m0 * (1 / dev.s_com_mbps - 1 / fog.s_com_mbps) - overheads.total();
	return {std::max(0.0, raw), raw < 0};
}

struct EnergyBudgetParts
{
	double e_com = 0;   // local compute energy
	double e_idle = 0;  // device idle while the fog computes
	double e_rx = 0;    // receiving the processed data
	Budget budget;
};

inline EnergyBudgetParts migration_energy_budget(const DevicePowerProfile& dev, const FogProfile& fog,
                                                 const OffloadScenario& scen, double m0)
{
	dev.validate();
	fog.validate();
	scen.validate();
	EnergyBudgetParts p;
	p.e_com = m0 * scen.gamma * dev.p_com_w / dev.s_com_mbps;
	p.e_idle = m0 * scen.gamma * dev.p_idle_w / fog.s_com_mbps;
	p.e_rx = m0 * scen.t_ratio * dev.p_rx_w / fog.r_down_mbps;
	const double raw = p.e_com - p.e_idle - p.e_rx;
	p.budget = {std::max(0.0, raw), raw < 0};
	return p;
}

struct MigrationDecision
{
	bool time_ok = false;
	bool energy_ok = false;
};

inline MigrationDecision should_migrate(const EnergyReport& report, double time_budget_s, double energy_budget_j)
{
	return {report.t_mt <= time_budget_s, report.e_tot <= energy_budget_j};
}

} // namespace scbm

#endif // SCBM_OFFLOAD_HPP
