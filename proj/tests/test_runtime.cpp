#include "spareflow/errors.hpp"
#include "spareflow/runtime.hpp"

#include <gtest/gtest.h>

#include <array>
#include <atomic>
#include <memory>
#include <thread>
#include <vector>

using namespace spareflow;

TEST(Backoff, SpinsThenYieldsWithoutParking) {
    const BackoffPolicy p{100, 10, false};
    EXPECT_EQ(backoff_action(p, 0), WaitAction::spin);
    EXPECT_EQ(backoff_action(p, 5), WaitAction::spin);
    EXPECT_EQ(backoff_action(p, 99), WaitAction::spin);
    EXPECT_EQ(backoff_action(p, 100), WaitAction::yield);
    EXPECT_EQ(backoff_action(p, 105), WaitAction::yield);
    EXPECT_EQ(backoff_action(p, 110), WaitAction::yield);
    EXPECT_EQ(backoff_action(p, 1'000'000), WaitAction::yield);
}

TEST(Backoff, ParksOnlyWhenAllowed) {
    const BackoffPolicy p{100, 10, true};
    EXPECT_EQ(backoff_action(p, 109), WaitAction::yield);
    EXPECT_EQ(backoff_action(p, 110), WaitAction::park);
    EXPECT_EQ(backoff_action(p, 1'000'000), WaitAction::park);
}

TEST(Backoff, ActionIsMonotoneInAttempt) {
    for (bool park : {false, true}) {
        const BackoffPolicy p{50, 20, park};
        int prev = 0;
        for (std::uint64_t a = 0; a < 200; ++a) {
            const int cur = static_cast<int>(backoff_action(p, a));
            ASSERT_GE(cur, prev);
            prev = cur;
        }
    }
}

TEST(Backoff, StatefulHelperCountsAndResets) {
    Backoff b(BackoffPolicy{2, 2, false});
    b.pause();
    b.pause();
    b.pause();
    EXPECT_EQ(b.attempts(), 3u);
    b.reset();
    EXPECT_EQ(b.attempts(), 0u);
}

TEST(RuntimeEnv, ParsesSpinBudgetAndPinSwitch) {
    auto d = parse_runtime_env(nullptr, nullptr);
    EXPECT_EQ(d.spin_budget, 1000u);
    EXPECT_TRUE(d.pinning_enabled);

    EXPECT_EQ(parse_runtime_env("250", nullptr).spin_budget, 250u);
    EXPECT_EQ(parse_runtime_env("abc", nullptr).spin_budget, 1000u);
    EXPECT_EQ(parse_runtime_env("-3", nullptr).spin_budget, 1000u);

    EXPECT_FALSE(parse_runtime_env(nullptr, "1").pinning_enabled);
    EXPECT_FALSE(parse_runtime_env(nullptr, "yes").pinning_enabled);
    EXPECT_TRUE(parse_runtime_env(nullptr, "0").pinning_enabled);
    EXPECT_TRUE(parse_runtime_env(nullptr, "").pinning_enabled);
}

TEST(Topology, CountsAreConsistent) {
    const unsigned logical = logical_core_count();
    const unsigned physical = physical_core_count();
    EXPECT_GE(logical, 1u);
    EXPECT_GE(physical, 1u);
    EXPECT_LE(physical, logical);
    const auto cores = distinct_physical_cores();
    EXPECT_EQ(cores.size(), physical);
    for (unsigned c : cores) {
        EXPECT_LT(c, logical);
    }
}

TEST(CoreMap, ExplicitListWrapsModuloLength) {
    const std::array<unsigned, 2> cores{0, 1};
    auto map = make_core_map(6, cores, 2);
    ASSERT_EQ(map.assignments.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        ASSERT_TRUE(map.assignments[i].has_value());
        EXPECT_EQ(*map.assignments[i], i % 2);
    }
}

TEST(CoreMap, RejectsCoresBeyondTopology) {
    const std::array<unsigned, 2> cores{0, 4};
    EXPECT_THROW(make_core_map(3, cores, 4), ConfigError);
}

TEST(CoreMap, DefaultLeavesCoreZeroWhenRoomy) {
    auto map = make_core_map(6, {}, 8);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(map.assignments[i], std::optional<unsigned>(static_cast<unsigned>(i + 1)));
    }
}

TEST(CoreMap, DefaultWrapsOnSmallHosts) {
    auto map = make_core_map(6, {}, 4);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(map.assignments[i], std::optional<unsigned>(static_cast<unsigned>(i % 4)));
    }
}

TEST(CoreMap, DisabledPinningLeavesThreadsUnassigned) {
    const std::array<unsigned, 1> cores{0};
    auto map = make_core_map(3, cores, 1, false);
    ASSERT_EQ(map.assignments.size(), 3u);
    for (const auto& a : map.assignments) {
        EXPECT_FALSE(a.has_value());
    }
}

TEST(SpawnPinned, BindsToRequestedCore) {
    std::vector<unsigned> seen;
    auto t = spawn_pinned([&] {
        // affinity is applied right after creation; give it a moment
        for (int i = 0; i < 1000 && current_thread_affinity().size() != 1; ++i) {
            std::this_thread::yield();
        }
        seen = current_thread_affinity();
    }, 0u);
    t.join();
    EXPECT_FALSE(t.warning().has_value());
    EXPECT_EQ(t.core(), std::optional<unsigned>(0));
    EXPECT_EQ(seen, std::vector<unsigned>{0});
}

TEST(SpawnPinned, NoCoreMeansNoPinning) {
    std::atomic<bool> ran{false};
    auto t = spawn_pinned([&] { ran = true; }, std::nullopt);
    t.join();
    EXPECT_TRUE(ran);
    EXPECT_FALSE(t.core().has_value());
    EXPECT_FALSE(t.warning().has_value());
}

TEST(SpawnPinned, BadCoreWarnsButStillRuns) {
    std::atomic<bool> ran{false};
    auto t = spawn_pinned([&] { ran = true; }, 9999u);
    t.join();
    EXPECT_TRUE(ran);
    EXPECT_FALSE(t.core().has_value());
    EXPECT_TRUE(t.warning().has_value());
}

TEST(SpawnPinned, CpuTimeGrowsWhileBusy) {
    std::atomic<bool> stop{false};
    auto t = spawn_pinned([&] {
        volatile std::uint64_t x = 0;
        while (!stop.load(std::memory_order_relaxed)) {
            x = x + 1;
        }
    }, std::nullopt);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    const auto a = t.cpu_time();
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    const auto b = t.cpu_time();
    stop = true;
    t.join();
    EXPECT_GT(b, a);
}

TEST(FreezeLatch, FrozenThreadsResumeOnThawAll) {
    constexpr int kThreads = 6;
    std::vector<std::unique_ptr<FreezeLatch>> latches;
    std::vector<FreezeLatch*> raw;
    for (int i = 0; i < kThreads; ++i) {
        latches.push_back(std::make_unique<FreezeLatch>());
        raw.push_back(latches.back().get());
    }
    std::atomic<int> resumed{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < kThreads; ++i) {
        threads.emplace_back([&, i] {
            raw[static_cast<std::size_t>(i)]->freeze_point();
            resumed.fetch_add(1);
        });
    }
    for (auto* l : raw) {
        ASSERT_TRUE(l->wait_frozen_for(std::chrono::seconds(10)));
    }
    EXPECT_EQ(resumed.load(), 0);
    EXPECT_EQ(thaw_all(raw), static_cast<std::size_t>(kThreads));
    for (auto& t : threads) {
        t.join();
    }
    EXPECT_EQ(resumed.load(), kThreads);
    for (auto* l : raw) {
        EXPECT_FALSE(l->is_frozen());
        EXPECT_EQ(l->completed_cycles(), 1u);
    }
}

TEST(FreezeLatch, ThawWithNothingParkedIsNoop) {
    FreezeLatch a;
    FreezeLatch b;
    std::array<FreezeLatch*, 2> raw{&a, &b};
    EXPECT_EQ(thaw_all(raw), 0u);
    EXPECT_EQ(a.completed_cycles(), 0u);
}

TEST(FreezeLatch, RepeatedCycles) {
    FreezeLatch latch;
    constexpr int kCycles = 100;
    std::thread t([&] {
        for (int i = 0; i < kCycles; ++i) {
            latch.freeze_point();
        }
    });
    for (int i = 0; i < kCycles; ++i) {
        ASSERT_TRUE(latch.wait_frozen_for(std::chrono::seconds(10)));
        ASSERT_TRUE(latch.thaw());
    }
    t.join();
    EXPECT_EQ(latch.completed_cycles(), static_cast<std::uint64_t>(kCycles));
}
