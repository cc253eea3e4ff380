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

#ifndef SCBM_POWER_HPP
#define SCBM_POWER_HPP

#include <scbm/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace scbm {

enum class CongestionControl
{
	ewtcp,
	semicoupled,
	max_mptcp,
	balia,
	newreno
};

inline constexpr std::array<std::string_view, 5> congestion_control_ids{
	"EWTCP", "Semicoupled", "MaxMPTCP", "Balia", "NewRenoSPTCP"};

inline std::string_view to_string(CongestionControl cc)
{
	return congestion_control_ids[static_cast<std::size_t>(cc)];
}

inline CongestionControl parse_congestion_control(std::string_view id)
{
	for (std::size_t i = 0; i < congestion_control_ids.size(); ++i)
	{
		if (congestion_control_ids[i] == id)
		{
			return static_cast<CongestionControl>(i);
		}
	}
	std::string msg = "unknown congestion-control id '" + std::string(id) + "'; valid ids are:";
	for (auto v : congestion_control_ids)
	{
		msg += " ";
		msg += v;
	}
	throw InvalidArgument(msg);
}

inline constexpr double default_mss_mb = 8e-3;

struct SubflowProfile
{
	double rtt_s = 0;
	double omega = 0; // W^(1/alpha)
	double mss_mb = default_mss_mb;
	double r_max_mbps = 0;
	double p_setup_w = 0;

	void validate() const
	{
		detail::require(rtt_s > 0 && omega > 0 && mss_mb > 0 && r_max_mbps > 0 && p_setup_w > 0,
		                "subflow profile: rtt, omega, mss, r_max and p_setup must be strictly positive");
	}
};

// Increment constant a of the CWND rule for n subflows.
inline double cc_constant(CongestionControl cc, std::size_t n)
{
	const auto dn = static_cast<double>(n);
	switch (cc)
	{
		case CongestionControl::ewtcp:
			return 1.0;
		case CongestionControl::semicoupled:
			return dn;
		case CongestionControl::max_mptcp:
		case CongestionControl::balia:
			return dn * dn;
		case CongestionControl::newreno:
			return 1.0;
	}
	return 1.0;
}

struct ConnectionProfile
{
	std::vector<SubflowProfile> subflows;
	CongestionControl cc = CongestionControl::ewtcp;
	double alpha = 2;
	double a_const = 1;

	std::size_t size() const { return subflows.size(); }

	void validate() const
	{
		detail::require(!subflows.empty(), "connection profile: at least one subflow required");
		for (const auto& s : subflows)
		{
			s.validate();
		}
		detail::require(alpha > 1, "connection profile: alpha must exceed 1");
		detail::require(cc != CongestionControl::newreno || subflows.size() == 1,
		                "connection profile: NewRenoSPTCP requires exactly one subflow");
		const double a = cc_constant(cc, subflows.size());
		detail::require(std::abs(a_const - a) <= 1e-12 * a,
		                "connection profile: a_const does not match the congestion-control rule");
	}
};

inline ConnectionProfile make_connection(std::vector<SubflowProfile> subflows, CongestionControl cc, double alpha)
{
	ConnectionProfile c;
	c.a_const = cc_constant(cc, subflows.size());
	c.subflows = std::move(subflows);
	c.cc = cc;
	c.alpha = alpha;
	c.validate();
	return c;
}

// P = k0 * R^alpha plus an aggregated setup power.
struct BalancedPowerModel
{
	double k0 = 0;
	double alpha = 2;
	double p_setup_total_w = 0;

	void validate() const
	{
		detail::require(k0 > 0, "balanced power model: k0 must be positive");
		detail::require(alpha > 1, "balanced power model: alpha must exceed 1");
		detail::require(p_setup_total_w >= 0, "balanced power model: setup power must be non-negative");
	}
};

struct UnifiedPowerTerms
{
	double prefactor = 0;     // rate-dependent for Semicoupled, Max, Balia
	std::vector<double> tau;  // one per subflow
	double exponent = 0;      // c
};

namespace detail {

inline void check_rates(const ConnectionProfile& conn, const std::vector<double>& rates)
{
	require(rates.size() == conn.size(), "rates: one entry per subflow required");
	for (std::size_t j = 0; j < rates.size(); ++j)
	{
		require(rates[j] >= 0, "rates: negative subflow rate");
		require(rates[j] <= conn.subflows[j].r_max_mbps * (1 + 1e-12),
		        "rates: subflow " + std::to_string(j) + " exceeds its cap r_max");
	}
}

} // namespace detail

inline UnifiedPowerTerms unified_power_terms(const ConnectionProfile& conn, const std::vector<double>& rates)
{
	conn.validate();
	detail::check_rates(conn, rates);

	const double alpha = conn.alpha;
	const double a = conn.a_const;
	UnifiedPowerTerms t;
	t.tau.resize(conn.size());

	double sum_rtt = 0;
	double sum_rtt_r = 0;
	double max_r_over_rtt = 0;
	double max_r = 0;
	for (std::size_t j = 0; j < conn.size(); ++j)
	{
		const auto& s = conn.subflows[j];
		sum_rtt += s.rtt_s;
		sum_rtt_r += s.rtt_s * rates[j];
		max_r_over_rtt = std::max(max_r_over_rtt, rates[j] / s.rtt_s);
		max_r = std::max(max_r, rates[j]);
	}
	// Every row shares one MSS in the table; take the first subflow's.
	const double mss = conn.subflows.front().mss_mb;

	switch (conn.cc)
	{
		case CongestionControl::ewtcp:
			t.prefactor = 1;
			for (std::size_t j = 0; j < conn.size(); ++j)
			{
				const auto& s = conn.subflows[j];
				t.tau[j] = std::pow(s.rtt_s * s.omega / (s.mss_mb * std::sqrt(2 * a)), alpha);
			}
			t.exponent = 2 * alpha;
			break;
		case CongestionControl::semicoupled:
			t.prefactor = std::pow(sum_rtt_r / (2 * a * mss * mss), alpha);
			for (std::size_t j = 0; j < conn.size(); ++j)
			{
				const auto& s = conn.subflows[j];
				t.tau[j] = std::pow(s.rtt_s * s.omega, alpha);
			}
			t.exponent = alpha;
			break;
		case CongestionControl::max_mptcp:
			t.prefactor = max_r_over_rtt > 0
			                  ? std::pow(sum_rtt * sum_rtt / (2 * a * mss * mss * max_r_over_rtt), alpha)
			                  : 0;
			for (std::size_t j = 0; j < conn.size(); ++j)
			{
				const auto& s = conn.subflows[j];
				t.tau[j] = std::pow(s.rtt_s * s.omega, alpha);
			}
			t.exponent = alpha;
			break;
		case CongestionControl::balia:
			t.prefactor = max_r > 0 ? std::pow(sum_rtt * sum_rtt / (0.4 * a * mss * mss * max_r), alpha) : 0;
			for (std::size_t j = 0; j < conn.size(); ++j)
			{
				const auto& s = conn.subflows[j];
				t.tau[j] = std::pow(s.rtt_s * s.rtt_s * s.omega, alpha);
			}
			t.exponent = alpha;
			break;
		case CongestionControl::newreno:
		{
			const auto& s = conn.subflows.front();
			t.prefactor = 1;
			t.tau[0] = std::pow((s.rtt_s / s.mss_mb) * (s.omega / 2), alpha);
			t.exponent = alpha;
			break;
		}
	}
	return t;
}

// Per-subflow dynamic powers; their sum is the connection's dynamic power.
inline std::vector<double> subflow_powers(const ConnectionProfile& conn, const std::vector<double>& rates)
{
	const auto t = unified_power_terms(conn, rates);
	std::vector<double> p(conn.size());
	for (std::size_t j = 0; j < p.size(); ++j)
	{
		p[j] = rates[j] > 0 ? t.prefactor * t.tau[j] * std::pow(rates[j], t.exponent) : 0.0;
	}
	return p;
}

inline double dynamic_power(const ConnectionProfile& conn, const std::vector<double>& rates)
{
	const auto p = subflow_powers(conn, rates);
	return std::accumulate(p.begin(), p.end(), 0.0);
}

// K0 of the load-balanced monomial model.
inline BalancedPowerModel balanced_k0(const ConnectionProfile& conn)
{
	conn.validate();
	const double alpha = conn.alpha;
	const double a = conn.a_const;
	const double n = static_cast<double>(conn.size());
	const double mss = conn.subflows.front().mss_mb;

	double sum_rtt = 0;
	double min_rtt = conn.subflows.front().rtt_s;
	double sum_rtt_sqrt_omega = 0; // sum (RTT sqrt(Omega))^alpha
	double sum_rtt_omega_half = 0; // sum (RTT Omega)^(alpha/2)
	double p_setup = 0;
	for (const auto& s : conn.subflows)
	{
		sum_rtt += s.rtt_s;
		min_rtt = std::min(min_rtt, s.rtt_s);
		sum_rtt_sqrt_omega += std::pow(s.rtt_s * std::sqrt(s.omega), alpha);
		sum_rtt_omega_half += std::pow(s.rtt_s * s.omega, alpha / 2);
		p_setup += s.p_setup_w;
	}

	BalancedPowerModel m;
	m.alpha = alpha;
	m.p_setup_total_w = p_setup;
	switch (conn.cc)
	{
		case CongestionControl::ewtcp:
			m.k0 = std::pow(1 / (std::sqrt(2 * a) * n * mss), alpha) * sum_rtt_sqrt_omega;
			break;
		case CongestionControl::semicoupled:
			m.k0 = std::pow(std::sqrt(sum_rtt) / (n * mss * std::sqrt(2 * a)), alpha) * sum_rtt_omega_half;
			break;
		case CongestionControl::max_mptcp:
			m.k0 = std::pow(min_rtt / (2 * a * mss * mss), alpha / 2) * sum_rtt_omega_half;
			break;
		case CongestionControl::balia:
			m.k0 = std::pow(1 / (0.4 * a * mss * mss), alpha / 2) * sum_rtt_sqrt_omega;
			break;
		case CongestionControl::newreno:
		{
			const auto& s = conn.subflows.front();
			m.k0 = std::pow((s.rtt_s / s.mss_mb) * (s.omega / 2), alpha);
			break;
		}
	}
	return m;
}

inline double balanced_power(const BalancedPowerModel& m, double r_total)
{
	detail::require(r_total >= 0, "balanced_power: negative rate");
	return r_total > 0 ? m.k0 * std::pow(r_total, m.alpha) : 0.0;
}

inline double loss_probability(const SubflowProfile& sub, double p_dyn_w, double alpha)
{
	detail::require(p_dyn_w > 0, "loss_probability: dynamic power must be positive");
	detail::require(alpha > 0, "loss_probability: alpha must be positive");
	return sub.omega * std::pow(p_dyn_w, -1 / alpha);
}

struct SteadyStateTerm
{
	double increment = 0;   // I_c(j)
	double decrement = 0;   // D_c(j)
	double loss_probability = 0;
	double residual = 0;    // I_c - Pr_loss * D_c

	double relative() const { return std::abs(residual) / std::abs(increment); }
};

// CWND balance of the congestion-avoidance phase, with W_d(j) = R(j) RTT(j).
inline std::vector<SteadyStateTerm> steady_state_residual(const ConnectionProfile& conn,
                                                          const std::vector<double>& rates,
                                                          const std::vector<double>& p_dyn)
{
	conn.validate();
	detail::check_rates(conn, rates);
	detail::require(p_dyn.size() == conn.size(), "steady_state_residual: one power per subflow required");

	const std::size_t n = conn.size();
	const double a = conn.a_const;
	std::vector<double> w(n);
	double w_sum = 0;
	double r_sum = 0;
	double r_max = 0;
	double max_w_rtt2 = 0;
	double sum_w_rtt = 0;
	for (std::size_t j = 0; j < n; ++j)
	{
		const auto& s = conn.subflows[j];
		w[j] = rates[j] * s.rtt_s;
		detail::require(w[j] > 0, "steady_state_residual: zero congestion window on subflow " + std::to_string(j));
		w_sum += w[j];
		r_sum += rates[j];
		r_max = std::max(r_max, rates[j]);
		max_w_rtt2 = std::max(max_w_rtt2, w[j] / (s.rtt_s * s.rtt_s));
		sum_w_rtt += w[j] / s.rtt_s;
	}

	std::vector<SteadyStateTerm> out(n);
	for (std::size_t j = 0; j < n; ++j)
	{
		const auto& s = conn.subflows[j];
		auto& t = out[j];
		t.decrement = w[j] / 2;
		switch (conn.cc)
		{
			case CongestionControl::ewtcp:
				t.increment = a / w[j];
				break;
			case CongestionControl::semicoupled:
				t.increment = a / w_sum;
				break;
			case CongestionControl::max_mptcp:
				t.increment = std::min(1 / w[j], max_w_rtt2 / (sum_w_rtt * sum_w_rtt));
				break;
			case CongestionControl::balia:
			{
				const double gamma = r_max / rates[j];
				t.increment = (rates[j] / (s.rtt_s * r_sum * r_sum)) * ((1 + gamma) / 2) * ((4 + gamma) / 5);
				t.decrement = (w[j] / 2) * std::min(gamma, 1.5);
				break;
			}
			case CongestionControl::newreno:
				t.increment = 1 / w_sum;
				break;
		}
		t.loss_probability = loss_probability(s, p_dyn[j], conn.alpha);
		t.residual = t.increment - t.loss_probability * t.decrement;
	}
	return out;
}

// Exponent recovered from a power reading at R_hat; p_setup_w is the total setup power.
inline double profile_alpha(double p_tot_at_rhat_w, double p_setup_w, double k0, double r_hat)
{
	detail::require(k0 > 0, "profile_alpha: k0 must be positive");
	detail::require(r_hat > 0 && r_hat != 1, "profile_alpha: r_hat must be positive and different from 1");
	const double p_dyn = p_tot_at_rhat_w - p_setup_w;
	detail::require(p_dyn > 0, "profile_alpha: dynamic power must be positive");
	const double alpha = std::log(p_dyn / k0) / std::log(r_hat);
	detail::require(alpha > 1 + 1e-9, "profile_alpha: recovered exponent does not exceed 1");
	return alpha;
}

} // namespace scbm

#endif // SCBM_POWER_HPP
