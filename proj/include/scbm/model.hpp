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

#ifndef SCBM_MODEL_HPP
#define SCBM_MODEL_HPP

// Pre-copy round model: volumes, times and energy of a migration, per round
// and in the clustered closed forms used by the optimizer.
//
// Units: Mb, Mb/s, s, W, J.

#include <scbm/error.hpp>
#include <scbm/power.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace scbm {

inline constexpr double default_tolerance = 1e-9;

struct StageOverheads
{
	double pre_migration_s = 0; // T_PM
	double reservation_s = 0;   // T_RE
	double commitment_s = 0;    // T_CM
	double activation_s = 0;    // T_AT

	double total() const { return pre_migration_s + reservation_s + commitment_s + activation_s; }

	void validate() const
	{
		detail::require(pre_migration_s >= 0 && reservation_s >= 0 && commitment_s >= 0 && activation_s >= 0,
		                "overheads: stage durations must be non-negative");
	}
};

// Dirty rate, either constant or a per-round trace (entry k is round k+1).
class DirtyRate
{
public:
	DirtyRate() = default;

	static DirtyRate constant(double w)
	{
		DirtyRate d;
		d.samples_ = {w};
		return d;
	}

	static DirtyRate trace(std::vector<double> per_round)
	{
		detail::require(!per_round.empty(), "dirty-rate trace must not be empty");
		DirtyRate d;
		d.samples_ = std::move(per_round);
		d.constant_ = false;
		return d;
	}

	bool is_constant() const { return constant_; }
	const std::vector<double>& samples() const { return samples_; }

	// Rate for pre-copy round `round` >= 1.
	double at(int round) const
	{
		if (constant_)
		{
			return samples_.front();
		}
		detail::require(round >= 1 && static_cast<std::size_t>(round) <= samples_.size(),
		                "dirty-rate trace shorter than the requested round " + std::to_string(round));
		return samples_[static_cast<std::size_t>(round) - 1];
	}

	// Largest rate over rounds 1..rounds.
	double max_over(int rounds) const
	{
		double m = 0;
		for (int i = 1; i <= std::max(rounds, 1); ++i)
		{
			m = std::max(m, at(i));
		}
		return m;
	}

	DirtyRate scaled(double f) const
	{
		DirtyRate d = *this;
		for (auto& w : d.samples_)
		{
			w *= f;
		}
		return d;
	}

private:
	std::vector<double> samples_{0.0};
	bool constant_ = true;
};

struct MigrationSpec
{
	double m0_mb = 0;
	DirtyRate dirty_rate;
	int i_max = 0;
	int q = 1;
	double beta = 1;
	double delta_mt_s = 0;
	double delta_dt_s = 0;
	double r_hat_mbps = 0;
	StageOverheads overheads;

	int cluster_size() const { return i_max == 0 ? 0 : i_max / q; }

	std::size_t free_rate_count() const { return i_max == 0 ? 2 : static_cast<std::size_t>(q) + 2; }
	std::size_t round_count() const { return static_cast<std::size_t>(i_max) + 2; }

	// Rounds whose rate carries a speed-up constraint: 0 and the cluster heads.
	std::vector<int> beta_rounds() const
	{
		std::vector<int> r{0};
		const int s = cluster_size();
		for (int j = 0; i_max > 0 && j < q; ++j)
		{
			r.push_back(j * s + 1);
		}
		return r;
	}

	double w_max() const { return dirty_rate.max_over(i_max + 1); }

	// log of Gamma_i = prod_{k=1..i} w_k; Gamma_0 = 1.
	double log_gamma(int i) const
	{
		double g = 0;
		for (int k = 1; k <= i; ++k)
		{
			const double w = dirty_rate.at(k);
			if (w <= 0)
			{
				return -std::numeric_limits<double>::infinity();
			}
			g += std::log(w);
		}
		return g;
	}

	void validate() const
	{
		detail::require(m0_mb > 0, "spec.m0_mb: must be positive");
		detail::require(i_max >= 0, "spec.i_max: must be non-negative");
		if (i_max == 0)
		{
			detail::require(q == 1, "spec.q: with i_max = 0 the rule is Q = 1 and S = 0");
		}
		else
		{
			detail::require(q >= 1 && q <= i_max, "spec.q: must satisfy 1 <= Q <= i_max");
			detail::require(i_max % q == 0,
			                "spec.q: Q=" + std::to_string(q) + " does not divide i_max=" + std::to_string(i_max)
			                    + " (cluster size S = i_max/Q must be an integer)");
		}
		detail::require(beta >= 1, "spec.beta: must be >= 1");
		detail::require(delta_mt_s > 0, "spec.delta_mt_s: must be positive");
		detail::require(delta_dt_s > 0, "spec.delta_dt_s: must be positive");
		detail::require(r_hat_mbps > 0 && std::isfinite(r_hat_mbps), "spec.r_hat_mbps: must be positive and finite");
		if (!dirty_rate.is_constant())
		{
			detail::require(dirty_rate.samples().size() >= static_cast<std::size_t>(i_max) + 1,
			                "spec.dirty_rate: trace must cover rounds 1..i_max+1");
		}
		for (double w : dirty_rate.samples())
		{
			detail::require(w >= 0 && std::isfinite(w), "spec.dirty_rate: rates must be finite and non-negative");
		}
		overheads.validate();
	}
};

struct VmImage
{
	double raw_size_mb = 0;
	double cp = 1; // compression ratio
	double cr = 1; // coding rate
};

struct VmSize
{
	double m0_mb = 0;
	bool degenerate = false; // zero size; not a usable migration instance
};

inline VmSize effective_vm_size(const VmImage& img)
{
	detail::require(img.cr > 0 && img.cr <= 1, "vm image: coding rate must lie in (0, 1]");
	detail::require(img.cp >= 0 && img.cp <= 1, "vm image: compression ratio must lie in [0, 1]");
	detail::require(img.raw_size_mb >= 0, "vm image: raw size must be non-negative");
	const double m0 = (img.cp / img.cr) * img.raw_size_mb;
	return {m0, m0 <= 0};
}

struct BandwidthPolicy
{
	double r_max_mbps = std::numeric_limits<double>::infinity();
	double r_agr_mbps = std::numeric_limits<double>::infinity();
	double rho_mgr = 1;

	double r_hat() const
	{
		detail::require(rho_mgr >= 0 && rho_mgr <= 1, "bandwidth policy: rho_mgr must lie in [0, 1]");
		const double in_band = rho_mgr * r_agr_mbps;
		detail::require(std::isfinite(r_max_mbps) || std::isfinite(in_band),
		                "bandwidth policy: R_MAX and rho_mgr*R_AGR cannot both be infinite");
		return std::min(r_max_mbps, in_band);
	}
};

inline double stretching_ratio(double rho_mgr)
{
	detail::require(rho_mgr >= 0 && rho_mgr < 1, "stretching ratio: rho_mgr must lie in [0, 1)");
	return 1 / (1 - rho_mgr);
}

struct RateSchedule
{
	std::vector<double> free_rates;
	std::vector<double> expanded;
};

// Index into the free-rate vector of the rate used by round i.
inline std::size_t free_index(const MigrationSpec& spec, int i)
{
	if (i == 0)
	{
		return 0;
	}
	if (i == spec.i_max + 1)
	{
		return spec.free_rate_count() - 1;
	}
	return 1 + static_cast<std::size_t>((i - 1) / spec.cluster_size());
}

inline RateSchedule expand_schedule(const MigrationSpec& spec, const std::vector<double>& free_rates)
{
	spec.validate();
	detail::require(free_rates.size() == spec.free_rate_count(),
	                "expand_schedule: expected " + std::to_string(spec.free_rate_count()) + " free rates, got "
	                    + std::to_string(free_rates.size()));
	for (double r : free_rates)
	{
		detail::require(r > 0 && std::isfinite(r), "expand_schedule: rates must be positive and finite");
	}
	RateSchedule s;
	s.free_rates = free_rates;
	s.expanded.resize(spec.round_count());
	for (int i = 0; i <= spec.i_max + 1; ++i)
	{
		s.expanded[static_cast<std::size_t>(i)] = free_rates[free_index(spec, i)];
	}
	return s;
}

// Same rate in every round.
inline RateSchedule uniform_schedule(const MigrationSpec& spec, double rate)
{
	return expand_schedule(spec, std::vector<double>(spec.free_rate_count(), rate));
}

struct RoundStat
{
	double volume_mb = 0;
	double time_s = 0;
};

namespace detail {

inline void check_expanded(const MigrationSpec& spec, const RateSchedule& sched)
{
	require(sched.expanded.size() == spec.round_count(),
	        "schedule: expected " + std::to_string(spec.round_count()) + " per-round rates");
	for (double r : sched.expanded)
	{
		require(r > 0 && std::isfinite(r), "schedule: zero or non-finite rate in a round");
	}
}

} // namespace detail

inline std::vector<RoundStat> round_volumes_and_times(const MigrationSpec& spec, const RateSchedule& sched)
{
	spec.validate();
	detail::check_expanded(spec, sched);
	std::vector<RoundStat> out(spec.round_count());
	out[0].volume_mb = spec.m0_mb;
	out[0].time_s = spec.m0_mb / sched.expanded[0];
	for (std::size_t i = 1; i < out.size(); ++i)
	{
		const double w = spec.dirty_rate.at(static_cast<int>(i));
		if (w == 0)
		{
			continue; // nothing dirtied, nothing to resend
		}
		out[i].volume_mb = w * out[i - 1].time_s;
		out[i].time_s = out[i].volume_mb / sched.expanded[i];
	}
	return out;
}

inline double memory_migration_time(const MigrationSpec& spec, const RateSchedule& sched)
{
	double t = 0;
	for (const auto& r : round_volumes_and_times(spec, sched))
	{
		t += r.time_s;
	}
	return t;
}

inline double downtime(const MigrationSpec& spec, const RateSchedule& sched)
{
	return round_volumes_and_times(spec, sched).back().time_s;
}

inline double total_migration_time(const MigrationSpec& spec, double t_mt)
{
	spec.overheads.validate();
	return spec.overheads.pre_migration_s + spec.overheads.reservation_s + t_mt + spec.overheads.commitment_s
	       + spec.overheads.activation_s;
}

namespace closed_form {

// Clustered expressions over the free rates Xi = [R0, R1, R_{S+1}, ..., R_{(Q-1)S+1}, R_{I+1}].
// Each round term is M0 Gamma_i / prod(rates), accumulated in the log domain.

inline double kronecker(long v) { return v == 0 ? 1.0 : 0.0; }

inline double downtime(const MigrationSpec& spec, const std::vector<double>& xi)
{
	spec.validate();
	detail::require(xi.size() == spec.free_rate_count(), "closed form: wrong free-rate count");
	const int imax = spec.i_max;
	const int s = spec.cluster_size();
	const double log_m0 = std::log(spec.m0_mb);
	const double d_stop = kronecker(1 + imax); // unreachable: i_max >= 0

	double log_den = std::log(xi.front()) + std::log(xi.back());
	for (int j = 0; imax > 0 && j < spec.q; ++j)
	{
		log_den += s * std::log(xi[1 + static_cast<std::size_t>(j)]);
	}
	const double precopy = std::exp(log_m0 + spec.log_gamma(imax + 1) - log_den);
	return d_stop * spec.m0_mb / xi.front() + (1 - d_stop) * precopy;
}

inline double migration_time(const MigrationSpec& spec, const std::vector<double>& xi)
{
	spec.validate();
	detail::require(xi.size() == spec.free_rate_count(), "closed form: wrong free-rate count");
	const int imax = spec.i_max;
	const int s = spec.cluster_size();
	const double log_m0 = std::log(spec.m0_mb);
	const double log_r0 = std::log(xi.front());
	const double d_sac = kronecker(imax); // pure stop-and-copy after round 0

	double t = spec.m0_mb / xi.front();
	double log_head = log_r0; // log of R0 * prod of completed clusters
	for (int j = 0; (1 - d_sac) > 0 && j < spec.q; ++j)
	{
		const double log_rj = std::log(xi[1 + static_cast<std::size_t>(j)]);
		for (int l = 1; l <= s; ++l)
		{
			const int i = j * s + l;
			t += std::exp(log_m0 + spec.log_gamma(i) - log_head - l * log_rj);
		}
		log_head += s * log_rj;
	}
	t += std::exp(log_m0 + spec.log_gamma(imax + 1) - log_head - std::log(xi.back()));
	return t;
}

inline double dynamic_energy(const MigrationSpec& spec, const std::vector<double>& xi, const BalancedPowerModel& p)
{
	spec.validate();
	detail::require(xi.size() == spec.free_rate_count(), "closed form: wrong free-rate count");
	const int imax = spec.i_max;
	const int s = spec.cluster_size();
	const double a = p.alpha;
	const double log_m0 = std::log(spec.m0_mb);
	const double log_k0 = std::log(p.k0);
	const double log_r0 = std::log(xi.front());
	const double d_sac = kronecker(imax);

	double e = std::exp(log_k0 + log_m0 + (a - 1) * log_r0);
	double log_head = log_r0;
	for (int j = 0; (1 - d_sac) > 0 && j < spec.q; ++j)
	{
		const double log_rj = std::log(xi[1 + static_cast<std::size_t>(j)]);
		for (int l = 1; l <= s; ++l)
		{
			const int i = j * s + l;
			e += std::exp(log_k0 + log_m0 + spec.log_gamma(i) - log_head + (a - l) * log_rj);
		}
		log_head += s * log_rj;
	}
	const double log_rs = std::log(xi.back());
	e += std::exp(log_k0 + log_m0 + spec.log_gamma(imax + 1) - log_head + (a - 1) * log_rs);
	return e;
}

} // namespace closed_form

struct EnergyReport
{
	double e_setup = 0;
	double e_dyn = 0;
	double e_tot = 0;
	double t_mt = 0;
	double t_dt = 0;
	double t_tot = 0;
	double phi_mt = 0;              // T_MT / Delta_MT - 1
	double phi_dt = 0;              // T_DT / Delta_DT - 1
	std::vector<double> phi_beta;   // beta w_max / R_k - 1 per constrained round
	double phi_bandwidth = 0;       // max_i R_i / R_hat - 1
	bool feasible = false;

	double max_phi_beta() const
	{
		double m = -std::numeric_limits<double>::infinity();
		for (double v : phi_beta)
		{
			m = std::max(m, v);
		}
		return m;
	}

	double max_residual() const { return std::max({phi_mt, phi_dt, max_phi_beta(), phi_bandwidth}); }
};

// Setup power times the migration-time deadline, plus the per-round dynamic energy.
inline EnergyReport migration_energy(const MigrationSpec& spec, const RateSchedule& sched,
                                     const BalancedPowerModel& power, double tolerance = default_tolerance)
{
	power.validate();
	const auto rounds = round_volumes_and_times(spec, sched);
	EnergyReport rep;
	for (std::size_t i = 0; i < rounds.size(); ++i)
	{
		rep.t_mt += rounds[i].time_s;
		rep.e_dyn += power.k0 * std::pow(sched.expanded[i], power.alpha) * rounds[i].time_s;
	}
	rep.t_dt = rounds.back().time_s;
	rep.e_setup = power.p_setup_total_w * spec.delta_mt_s;
	rep.e_tot = rep.e_setup + rep.e_dyn;
	rep.t_tot = total_migration_time(spec, rep.t_mt);

	rep.phi_mt = rep.t_mt / spec.delta_mt_s - 1;
	rep.phi_dt = rep.t_dt / spec.delta_dt_s - 1;
	const double bw = spec.beta * spec.w_max();
	for (int k : spec.beta_rounds())
	{
		rep.phi_beta.push_back(bw / sched.expanded[static_cast<std::size_t>(k)] - 1);
	}
	rep.phi_bandwidth = *std::max_element(sched.expanded.begin(), sched.expanded.end()) / spec.r_hat_mbps - 1;
	rep.feasible = rep.max_residual() <= tolerance;
	return rep;
}

struct FailureModel
{
	double sigma = 0;
	double t_con_s = 1;
	double n_mgr = 0;
};

struct FailureEstimate
{
	double probability = 0;
	bool in_unit_interval = true; // false when the shaping factor pushes the curve outside [0, 1]
};

inline FailureEstimate failure_probability(const FailureModel& fm, double delta_mt_s)
{
	detail::require(delta_mt_s >= 0, "failure probability: negative migration-time deadline");
	detail::require(fm.t_con_s > 0, "failure model: t_con must be positive");
	detail::require(fm.sigma >= 0, "failure model: sigma must be non-negative");
	FailureEstimate f;
	if (delta_mt_s > fm.t_con_s)
	{
		f.probability = 1;
	}
	else
	{
		const double x = delta_mt_s / fm.t_con_s;
		f.probability = (1 + fm.sigma) * x - fm.sigma * x * x * x;
	}
	f.in_unit_interval = f.probability >= 0 && f.probability <= 1;
	return f;
}

inline double expected_failure_energy_loss(const FailureModel& fm, double delta_mt_s, double e_tot_avg)
{
	detail::require(fm.n_mgr >= 0 && e_tot_avg >= 0, "failure energy loss: inputs must be non-negative");
	return fm.n_mgr * failure_probability(fm, delta_mt_s).probability * e_tot_avg;
}

} // namespace scbm

#endif // SCBM_MODEL_HPP
