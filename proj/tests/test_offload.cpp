// Copyright 2026 The scbm Authors
// SPDX-License-Identifier: Apache-2.0

#include <scbm/offload.hpp>

#include <gtest/gtest.h>

using namespace scbm;

TEST(ExecutionTime, LocalAndRemote)
{
	const DevicePowerProfile dev{2, 0.5, 1, 50};
	const OffloadScenario sc{2, 0};
	EXPECT_DOUBLE_EQ(local_execution_time(dev, sc, 100), 4);
	EXPECT_DOUBLE_EQ(remote_execution_time({50, 10}, sc, 100, 0), local_execution_time(dev, sc, 100));
	EXPECT_DOUBLE_EQ(remote_execution_time({500, 10}, sc, 100, 1), 1.4);
}

TEST(TimeBudget, Cases)
{
	const DevicePowerProfile dev{2, 0.5, 1, 50};
	const OffloadScenario sc{2, 0};
	EXPECT_DOUBLE_EQ(migration_time_budget(dev, {50, 10}, sc, 100, {}).value, 0);
	const auto b = migration_time_budget(dev, {500, 10}, sc, 100, {0.125, 0.125, 0.125, 0.125});
	EXPECT_NEAR(b.value, 200 * (0.02 - 0.002) - 0.5, 1e-12);
	EXPECT_NEAR(b.value, 3.1, 1e-12);
	EXPECT_FALSE(b.clamped);
	const auto z = migration_time_budget(dev, {500, 10}, sc, 100, {2, 2, 0, 0});
	EXPECT_DOUBLE_EQ(z.value, 0);
	EXPECT_TRUE(z.clamped);
}

TEST(EnergyBudget, Cases)
{
	const DevicePowerProfile dev{2, 0, 1, 50};
	const auto a = migration_energy_budget(dev, {500, 50}, {2, 0}, 100);
	EXPECT_DOUBLE_EQ(a.budget.value, 100 * 2 * 2.0 / 50);

	const auto b = migration_energy_budget({2, 0.5, 1, 50}, {500, 50}, {2, 0.1}, 100);
	EXPECT_NEAR(b.budget.value, 7.6, 1e-12);
	EXPECT_NEAR(b.e_com, 8, 1e-12);
	EXPECT_NEAR(b.e_idle, 0.2, 1e-12);
	EXPECT_NEAR(b.e_rx, 0.2, 1e-12);

	const auto c = migration_energy_budget({0.1, 0.5, 5, 50}, {500, 1}, {1, 2}, 100);
	EXPECT_DOUBLE_EQ(c.budget.value, 0);
	EXPECT_TRUE(c.budget.clamped);
}

TEST(Decision, Rules)
{
	EnergyReport r;
	r.t_mt = 1;
	r.e_tot = 5;
	auto d = should_migrate(r, 0, 0);
	EXPECT_FALSE(d.time_ok);
	EXPECT_FALSE(d.energy_ok);
	EnergyReport zero;
	d = should_migrate(zero, 0, 0);
	EXPECT_TRUE(d.time_ok && d.energy_ok);
	d = should_migrate(r, 2, 4);
	EXPECT_TRUE(d.time_ok);
	EXPECT_FALSE(d.energy_ok);
}

TEST(Budgets, Monotonicity)
{
	const DevicePowerProfile dev{2, 0.5, 1, 50};
	double prev = -1;
	for (double g = 0.5; g < 10; g += 0.5)
	{
		const double b = migration_time_budget(dev, {500, 50}, {g, 0.1}, 100, {0.5, 0, 0, 0}).value;
		EXPECT_GE(b, prev);
		prev = b;
	}
	prev = -1;
	for (double m0 = 10; m0 < 500; m0 += 10)
	{
		const double b = migration_time_budget(dev, {500, 50}, {2, 0.1}, m0, {0.5, 0, 0, 0}).value;
		EXPECT_GE(b, prev);
		prev = b;
	}
	prev = -1;
	for (double sf = 60; sf < 1000; sf += 20)
	{
		const double b = migration_time_budget(dev, {sf, 50}, {2, 0.1}, 100, {0.5, 0, 0, 0}).value;
		EXPECT_GE(b, prev);
		prev = b;
	}
	prev = 1e300;
	for (double t = 0; t < 5; t += 0.25)
	{
		const double b = migration_energy_budget(dev, {500, 50}, {2, t}, 100).budget.value;
		EXPECT_LE(b, prev);
		prev = b;
	}
	prev = 1e300;
	for (double prx = 0; prx < 5; prx += 0.25)
	{
		const double b = migration_energy_budget({2, 0.5, prx, 50}, {500, 50}, {2, 0.5}, 100).budget.value;
		EXPECT_LE(b, prev);
		prev = b;
	}
}

// With T_MT exactly at the time budget, local and fog execution take equally long.
TEST(Budgets, TimeBoundaryConsistency)
{
	const DevicePowerProfile dev{2, 0.5, 1, 50};
	const FogProfile fog{500, 50};
	const OffloadScenario sc{2, 0.1};
	const StageOverheads ov{0.1, 0.2, 0.05, 0.15};
	const double m0 = 100;
	const double budget = migration_time_budget(dev, fog, sc, m0, ov).value;
	EnergyReport r;
	r.t_mt = budget;
	const double t_tot = budget + ov.total();
	EXPECT_NEAR(local_execution_time(dev, sc, m0), remote_execution_time(fog, sc, m0, t_tot), 1e-12);
	EXPECT_TRUE(should_migrate(r, budget, 0).time_ok);
	r.t_mt = budget * (1 + 1e-6);
	EXPECT_FALSE(should_migrate(r, budget, 0).time_ok);
	EXPECT_LT(local_execution_time(dev, sc, m0), remote_execution_time(fog, sc, m0, r.t_mt + ov.total()));
}
