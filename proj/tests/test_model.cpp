// Copyright 2026 The scbm Authors
// SPDX-License-Identifier: Apache-2.0

#include <scbm/model.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace scbm;

namespace {

MigrationSpec make_spec(double m0, double w, int imax, int q, double rh = 18)
{
	MigrationSpec s;
	s.m0_mb = m0;
	s.dirty_rate = DirtyRate::constant(w);
	s.i_max = imax;
	s.q = q;
	s.beta = 1;
	s.delta_mt_s = 100;
	s.delta_dt_s = 1;
	s.r_hat_mbps = rh;
	return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(ExpandSchedule, HoldsRatesWithinClusters)
{
	const auto spec = make_spec(64, 1, 6, 3);
	const auto s = expand_schedule(spec, {10, 11, 13, 15, 17});
	EXPECT_EQ(s.expanded, (std::vector<double>{10, 11, 11, 13, 13, 15, 15, 17}));
	EXPECT_EQ(s.free_rates, (std::vector<double>{10, 11, 13, 15, 17}));
}

TEST(ExpandSchedule, StopAndCopyOnly)
{
	const auto spec = make_spec(64, 1, 0, 1);
	EXPECT_EQ(expand_schedule(spec, {3, 4}).expanded, (std::vector<double>{3, 4}));
}

TEST(ExpandSchedule, SingleCluster)
{
	const auto spec = make_spec(64, 1, 4, 1);
	EXPECT_EQ(expand_schedule(spec, {2, 3, 5}).expanded, (std::vector<double>{2, 3, 3, 3, 3, 5}));
}

TEST(ExpandSchedule, RejectsBadInput)
{
	const auto spec = make_spec(64, 1, 4, 1);
	EXPECT_THROW(expand_schedule(spec, {2, 3}), InvalidArgument);
	EXPECT_THROW(expand_schedule(spec, {2, 0, 3}), InvalidArgument);
	EXPECT_THROW(expand_schedule(make_spec(64, 1, 6, 4), {1, 1, 1, 1, 1, 1}), InvalidArgument);
}

TEST(Rounds, ZeroDirtyRate)
{
	const auto spec = make_spec(100, 0, 0, 1);
	const auto r = round_volumes_and_times(spec, uniform_schedule(spec, 10));
	ASSERT_EQ(r.size(), 2u);
	EXPECT_DOUBLE_EQ(r[0].volume_mb, 100);
	EXPECT_DOUBLE_EQ(r[1].volume_mb, 0);
	EXPECT_DOUBLE_EQ(r[0].time_s, 10);
	EXPECT_DOUBLE_EQ(r[1].time_s, 0);
}

TEST(Rounds, DirectRecursion)
{
	const auto spec = make_spec(100, 1, 0, 1);
	const auto r = round_volumes_and_times(spec, uniform_schedule(spec, 10));
	EXPECT_DOUBLE_EQ(r[1].volume_mb, 10);
	EXPECT_DOUBLE_EQ(r[1].time_s, 1);
}

TEST(Rounds, GeometricHalving)
{
	const auto spec = make_spec(64, 8, 2, 1);
	const auto sched = uniform_schedule(spec, 16);
	const auto r = round_volumes_and_times(spec, sched);
	const std::vector<double> t{4, 2, 1, 0.5};
	for (std::size_t i = 0; i < t.size(); ++i)
	{
		EXPECT_DOUBLE_EQ(r[i].time_s, t[i]);
	}
	EXPECT_DOUBLE_EQ(memory_migration_time(spec, sched), 7.5);
	EXPECT_DOUBLE_EQ(downtime(spec, sched), 0.5);
}

TEST(Rounds, ZeroDirtyMigrationTime)
{
	const auto spec = make_spec(100, 0, 3, 1);
	const auto sched = expand_schedule(spec, {4, 9, 9});
	EXPECT_DOUBLE_EQ(memory_migration_time(spec, sched), 25);
	EXPECT_DOUBLE_EQ(downtime(spec, sched), 0);
}

TEST(Rounds, GeometricSeriesAtRhat)
{
	const double rh = 18;
	const auto spec = make_spec(128, 0.33 * rh, 4, 1, rh);
	double series = 0;
	for (int i = 0; i <= 5; ++i)
	{
		series += std::pow(0.33, i);
	}
	EXPECT_LT(rel(memory_migration_time(spec, uniform_schedule(spec, rh)), 128 / rh * series), 1e-14);
}

TEST(Rounds, DowntimeAgainstDeadline)
{
	const auto spec = make_spec(128, 6, 3, 1, 18);
	const double t = downtime(spec, uniform_schedule(spec, 18));
	EXPECT_NEAR(t, 128.0 / 18 / 81, 1e-15);
	EXPECT_NEAR(t, 0.0878, 5e-5);
	EXPECT_LE(t, 0.103);
}

TEST(Energy, ConstantRateMonomial)
{
	const auto spec = make_spec(64, 8, 2, 1);
	const BalancedPowerModel p{0.025, 2, 0};
	const auto rep = migration_energy(spec, uniform_schedule(spec, 16), p);
	EXPECT_NEAR(rep.e_dyn, 48, 1e-12);
	EXPECT_DOUBLE_EQ(rep.e_tot, rep.e_dyn);
	EXPECT_DOUBLE_EQ(rep.t_mt, 7.5);
}

TEST(Energy, VanishingRateWithoutDirtying)
{
	const auto spec = make_spec(64, 0, 0, 1);
	const BalancedPowerModel p{0.025, 2, 0};
	double prev = 1e300;
	for (double r : {1.0, 1e-2, 1e-4, 1e-6})
	{
		const double e = migration_energy(spec, uniform_schedule(spec, r), p).e_dyn;
		EXPECT_NEAR(e, 0.025 * 64 * r, 1e-15);
		EXPECT_LT(e, prev);
		prev = e;
	}
}

TEST(Energy, SetupAndResiduals)
{
	auto spec = make_spec(64, 8, 2, 1);
	spec.delta_mt_s = 10;
	spec.delta_dt_s = 0.25;
	spec.beta = 2;
	const BalancedPowerModel p{0.025, 2, 0.3};
	const auto rep = migration_energy(spec, uniform_schedule(spec, 16), p);
	EXPECT_DOUBLE_EQ(rep.e_setup, 3.0);
	EXPECT_DOUBLE_EQ(rep.e_tot, rep.e_setup + rep.e_dyn);
	EXPECT_DOUBLE_EQ(rep.phi_mt, 7.5 / 10 - 1);
	EXPECT_DOUBLE_EQ(rep.phi_dt, 0.5 / 0.25 - 1);
	ASSERT_EQ(rep.phi_beta.size(), 2u);
	EXPECT_DOUBLE_EQ(rep.phi_beta[0], 0);
	EXPECT_DOUBLE_EQ(rep.phi_bandwidth, 16.0 / 18 - 1);
	EXPECT_FALSE(rep.feasible);
}

TEST(TotalTime, Overheads)
{
	auto spec = make_spec(64, 8, 2, 1);
	EXPECT_DOUBLE_EQ(total_migration_time(spec, 7.5), 7.5);
	spec.overheads = {1, 1, 1, 1};
	EXPECT_DOUBLE_EQ(total_migration_time(spec, 7.5), 11.5);
	spec.overheads = {0.125, 2.5, 0.375, 1.75};
	EXPECT_DOUBLE_EQ(total_migration_time(spec, 3), 0.125 + 2.5 + 3 + 0.375 + 1.75);
	spec.overheads.commitment_s = -1;
	EXPECT_THROW(total_migration_time(spec, 1), InvalidArgument);
}

TEST(Failure, Probability)
{
	for (double sigma : {0.0, 0.4, 1.0})
	{
		EXPECT_DOUBLE_EQ(failure_probability({sigma, 10, 1}, 10).probability, 1);
	}
	EXPECT_DOUBLE_EQ(failure_probability({0, 10, 1}, 5).probability, 0.5);
	EXPECT_DOUBLE_EQ(failure_probability({1, 10, 1}, 5).probability, 0.875);
	EXPECT_DOUBLE_EQ(failure_probability({1, 10, 1}, 50).probability, 1);
	EXPECT_THROW(failure_probability({1, 10, 1}, -1), InvalidArgument);
}

TEST(Failure, OutOfRangeIsFlagged)
{
	const auto f = failure_probability({10, 1, 1}, 0.6);
	EXPECT_NEAR(f.probability, 11 * 0.6 - 10 * 0.216, 1e-12);
	EXPECT_FALSE(f.in_unit_interval);
	EXPECT_TRUE(failure_probability({1, 1, 1}, 0.6).in_unit_interval);
}

TEST(Failure, EnergyLoss)
{
	EXPECT_DOUBLE_EQ(expected_failure_energy_loss({1, 10, 0}, 5, 100), 0);
	EXPECT_DOUBLE_EQ(expected_failure_energy_loss({1, 10, 2}, 20, 100), 200);
	EXPECT_DOUBLE_EQ(expected_failure_energy_loss({1, 10, 1}, 5, 48), 42);
}

TEST(Sizing, StretchingRatio)
{
	EXPECT_DOUBLE_EQ(stretching_ratio(0), 1);
	EXPECT_DOUBLE_EQ(stretching_ratio(0.5), 2);
	EXPECT_NEAR(stretching_ratio(0.9), 10, 1e-12);
	EXPECT_THROW(stretching_ratio(1), InvalidArgument);
}

TEST(Sizing, EffectiveVmSize)
{
	EXPECT_DOUBLE_EQ(effective_vm_size({128, 1, 1}).m0_mb, 128);
	EXPECT_DOUBLE_EQ(effective_vm_size({128, 0.5, 0.8}).m0_mb, 80);
	const auto z = effective_vm_size({128, 0, 0.5});
	EXPECT_DOUBLE_EQ(z.m0_mb, 0);
	EXPECT_TRUE(z.degenerate);
	EXPECT_THROW(effective_vm_size({128, 1, 0}), InvalidArgument);
}

TEST(Sizing, BandwidthCap)
{
	BandwidthPolicy b;
	b.r_max_mbps = 11;
	EXPECT_DOUBLE_EQ(b.r_hat(), 11);
	b.r_agr_mbps = 40;
	b.rho_mgr = 0.25;
	EXPECT_DOUBLE_EQ(b.r_hat(), 10);
	EXPECT_THROW(BandwidthPolicy{}.r_hat(), InvalidArgument);
}

TEST(Spec, Validation)
{
	EXPECT_NO_THROW(make_spec(64, 1, 6, 3).validate());
	EXPECT_THROW(make_spec(64, 1, 6, 4).validate(), InvalidArgument);
	EXPECT_THROW(make_spec(64, 1, 0, 2).validate(), InvalidArgument);
	auto s = make_spec(64, 1, 2, 1);
	s.beta = 0.5;
	EXPECT_THROW(s.validate(), InvalidArgument);
	s = make_spec(64, -1, 2, 1);
	EXPECT_THROW(s.validate(), InvalidArgument);
	s = make_spec(64, 1, 2, 1);
	s.dirty_rate = DirtyRate::trace({1, 2});
	EXPECT_THROW(s.validate(), InvalidArgument);
}

// Independent recursion in the test for the property checks below.
namespace {

struct Oracle
{
	double t_mt = 0, t_dt = 0, e_dyn = 0;
};

Oracle recursion(const MigrationSpec& s, const std::vector<double>& r, const BalancedPowerModel& p)
{
	Oracle o;
	double t = s.m0_mb / r[0];
	o.t_mt = t;
	o.e_dyn = p.k0 * std::pow(r[0], p.alpha) * t;
	for (int i = 1; i <= s.i_max + 1; ++i)
	{
		t = s.dirty_rate.at(i) * t / r[static_cast<std::size_t>(i)];
		o.t_mt += t;
		o.e_dyn += p.k0 * std::pow(r[static_cast<std::size_t>(i)], p.alpha) * t;
	}
	o.t_dt = t;
	return o;
}

} // namespace

TEST(ClosedForm, MatchesRecursionOnRandomInstances)
{
	std::mt19937 rng(7);
	std::uniform_real_distribution<double> u(0, 1);
	const int imaxes[] = {0, 1, 2, 3, 4, 6, 8, 12};
	for (int trial = 0; trial < 400; ++trial)
	{
		const int imax = imaxes[trial % 8];
		std::vector<int> qs;
		for (int q = 1; q <= std::max(imax, 1); ++q)
		{
			if (imax == 0 ? q == 1 : imax % q == 0)
			{
				qs.push_back(q);
			}
		}
		const int q = qs[static_cast<std::size_t>(trial) % qs.size()];
		auto spec = make_spec(10 + 200 * u(rng), 0.1 + 10 * u(rng), imax, q, 30);
		if (trial % 3 == 0)
		{
			std::vector<double> tr;
			for (int i = 0; i <= imax; ++i)
			{
				tr.push_back(0.1 + 10 * u(rng));
			}
			spec.dirty_rate = DirtyRate::trace(tr);
		}
		std::vector<double> xi;
		for (std::size_t k = 0; k < spec.free_rate_count(); ++k)
		{
			xi.push_back(0.5 + 29.5 * u(rng));
		}
		const BalancedPowerModel p{0.01 + 0.1 * u(rng), 1.5 + 1.5 * u(rng), 0};
		const auto sched = expand_schedule(spec, xi);
		const auto o = recursion(spec, sched.expanded, p);
		const auto rep = migration_energy(spec, sched, p);

		EXPECT_LT(rel(rep.t_mt, o.t_mt), 1e-12);
		EXPECT_LT(rel(rep.t_dt, o.t_dt), 1e-12);
		EXPECT_LT(rel(rep.e_dyn, o.e_dyn), 1e-12);
		EXPECT_LT(rel(closed_form::migration_time(spec, xi), o.t_mt), 1e-12);
		EXPECT_LT(rel(closed_form::downtime(spec, xi), o.t_dt), 1e-12);
		EXPECT_LT(rel(closed_form::dynamic_energy(spec, xi, p), o.e_dyn), 1e-12);
		EXPECT_DOUBLE_EQ(rep.t_dt, round_volumes_and_times(spec, sched).back().time_s);
	}
}

TEST(ClosedForm, ConstantTraceReproducesConstantRate)
{
	auto c = make_spec(128, 3.3, 6, 2);
	auto t = c;
	t.dirty_rate = DirtyRate::trace(std::vector<double>(7, 3.3));
	const std::vector<double> xi{4, 5, 7, 9};
	const BalancedPowerModel p{0.025, 2, 0};
	EXPECT_LT(rel(closed_form::migration_time(t, xi), closed_form::migration_time(c, xi)), 1e-14);
	EXPECT_LT(rel(closed_form::downtime(t, xi), closed_form::downtime(c, xi)), 1e-14);
	EXPECT_LT(rel(closed_form::dynamic_energy(t, xi, p), closed_form::dynamic_energy(c, xi, p)), 1e-14);
	const auto st = expand_schedule(t, xi);
	EXPECT_DOUBLE_EQ(memory_migration_time(t, st), memory_migration_time(c, st));
}

TEST(ClosedForm, ZeroDirtyRateDropsPrecopyTerms)
{
	const auto spec = make_spec(100, 0, 4, 2);
	const std::vector<double> xi{5, 6, 7, 8};
	EXPECT_DOUBLE_EQ(closed_form::migration_time(spec, xi), 20);
	EXPECT_DOUBLE_EQ(closed_form::downtime(spec, xi), 0);
}

TEST(Monotonicity, TimesNonIncreasingInRatesNonDecreasingInDirtyRate)
{
	std::mt19937 rng(11);
	std::uniform_real_distribution<double> u(0, 1);
	for (int trial = 0; trial < 100; ++trial)
	{
		auto spec = make_spec(50 + 100 * u(rng), 0.5 + 5 * u(rng), 6, (trial % 2) ? 3 : 2);
		std::vector<double> xi(spec.free_rate_count());
		for (auto& r : xi)
		{
			r = 1 + 20 * u(rng);
		}
		const double tm = memory_migration_time(spec, expand_schedule(spec, xi));
		const double td = downtime(spec, expand_schedule(spec, xi));
		for (std::size_t k = 0; k < xi.size(); ++k)
		{
			auto up = xi;
			up[k] *= 1.01;
			EXPECT_LE(memory_migration_time(spec, expand_schedule(spec, up)), tm);
			EXPECT_LE(downtime(spec, expand_schedule(spec, up)), td);
		}
		auto dirtier = spec;
		dirtier.dirty_rate = spec.dirty_rate.scaled(1.01);
		EXPECT_GE(memory_migration_time(dirtier, expand_schedule(dirtier, xi)), tm);
		EXPECT_GE(downtime(dirtier, expand_schedule(dirtier, xi)), td);
	}
}
