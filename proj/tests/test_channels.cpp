#include "spareflow/channels.hpp"
#include "spareflow/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <thread>
#include <vector>

using namespace spareflow;

namespace {

EmitterState make_emitter(int n_out, std::size_t cap, SchedulingPolicy policy = SchedulingPolicy::round_robin) {
    EmitterState s;
    s.input = make_channel(cap);
    for (int i = 0; i < n_out; ++i) {
        s.outputs.push_back(make_channel(cap));
    }
    s.policy = policy;
    return s;
}

CollectorState make_collector(int n_in, std::size_t cap) {
    CollectorState s;
    for (int i = 0; i < n_in; ++i) {
        s.inputs.push_back(make_channel(cap));
    }
    s.output = make_channel(cap);
    return s;
}

std::vector<Message> drain(Channel& q) {
    std::vector<Message> out;
    while (auto m = q.pop()) {
        out.push_back(*m);
    }
    return out;
}

}  // namespace

TEST(Channel, RejectsTinyCapacity) {
    EXPECT_THROW(make_channel(1), ConfigError);
    EXPECT_THROW(make_channel(0), ConfigError);
}

TEST(Emitter, RoundRobinStepGoesToCursor) {
    auto s = make_emitter(3, 8);
    s.input->push(Message::data(1));
    auto r = emitter_step(s);
    EXPECT_TRUE(r.dispatched);
    EXPECT_FALSE(r.eos_done);
    EXPECT_EQ(s.outputs[0]->unsafe_len(), 1u);
    EXPECT_EQ(s.outputs[1]->unsafe_len(), 0u);
    EXPECT_EQ(s.next_rr, 1u);
}

TEST(Emitter, EmptyInputMakesNoProgress) {
    auto s = make_emitter(2, 8);
    EXPECT_FALSE(emitter_step(s).progressed());
}

TEST(Emitter, EosReachesEveryOutputOnce) {
    auto s = make_emitter(3, 8);
    s.input->push(Message::eos());
    auto r = emitter_step(s);
    EXPECT_TRUE(r.eos_done);
    for (auto& out : s.outputs) {
        auto msgs = drain(*out);
        ASSERT_EQ(msgs.size(), 1u);
        EXPECT_TRUE(msgs[0].is_eos());
    }
}

TEST(Emitter, RoundRobinSplitsEvenlyAndInOrder) {
    auto s = make_emitter(4, 1024);
    for (Payload i = 0; i < 1000; ++i) {
        s.input->push(Message::data(i));
        ASSERT_TRUE(emitter_step(s).dispatched);
    }
    for (std::size_t k = 0; k < 4; ++k) {
        auto msgs = drain(*s.outputs[k]);
        ASSERT_EQ(msgs.size(), 250u);
        for (std::size_t j = 0; j < msgs.size(); ++j) {
            EXPECT_EQ(msgs[j].word, k + 4 * j);
        }
        EXPECT_EQ(s.sent[k], 250u);
    }
}

TEST(Emitter, OnDemandPicksMostFreeLowestIndexOnTie) {
    auto s = make_emitter(3, 4, SchedulingPolicy::on_demand);
    EXPECT_EQ(select_output(s.policy, s.outputs, 0), std::optional<std::size_t>(0));
    s.outputs[0]->push(Message::data(0));
    EXPECT_EQ(select_output(s.policy, s.outputs, 0), std::optional<std::size_t>(1));
    s.outputs[1]->push(Message::data(0));
    s.outputs[1]->push(Message::data(0));
    EXPECT_EQ(select_output(s.policy, s.outputs, 0), std::optional<std::size_t>(2));
    s.outputs[2]->push(Message::data(0));
    EXPECT_EQ(select_output(s.policy, s.outputs, 0), std::optional<std::size_t>(0));
}

TEST(Emitter, OnDemandReportsAllFull) {
    auto s = make_emitter(2, 2, SchedulingPolicy::on_demand);
    for (auto& out : s.outputs) {
        out->push(Message::data(0));
        out->push(Message::data(0));
    }
    EXPECT_FALSE(select_output(s.policy, s.outputs, 0).has_value());
}

TEST(Emitter, OnDemandBalancesSlowConsumers) {
    auto s = make_emitter(2, 4, SchedulingPolicy::on_demand);
    // output 0 is never drained, output 1 always is
    for (Payload i = 0; i < 20; ++i) {
        s.input->push(Message::data(i));
        emitter_step(s);
        drain(*s.outputs[1]);
    }
    EXPECT_LE(s.sent[0], 4u);
    EXPECT_EQ(s.sent[0] + s.sent[1], 20u);
}

TEST(Collector, ForwardsEachInputOnce) {
    auto s = make_collector(2, 8);
    s.inputs[0]->push(Message::data(10));
    s.inputs[1]->push(Message::data(20));
    EXPECT_TRUE(collector_step(s).dispatched);
    EXPECT_TRUE(collector_step(s).dispatched);
    EXPECT_FALSE(collector_step(s).progressed());
    auto out = drain(*s.output);
    ASSERT_EQ(out.size(), 2u);
    std::multiset<Payload> got{out[0].word, out[1].word};
    EXPECT_EQ(got, (std::multiset<Payload>{10, 20}));
}

TEST(Collector, EmitsSingleEosAfterAllInputsEnd) {
    auto s = make_collector(2, 8);
    s.inputs[0]->push(Message::eos());
    EXPECT_FALSE(collector_step(s).eos_done);
    s.inputs[1]->push(Message::eos());
    EXPECT_TRUE(collector_step(s).eos_done);
    auto out = drain(*s.output);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_TRUE(out[0].is_eos());
}

TEST(Collector, PollsCyclicallyAfterLastServiced) {
    auto s = make_collector(3, 8);
    for (int i = 0; i < 3; ++i) {
        s.inputs[static_cast<std::size_t>(i)]->push(Message::data(static_cast<Payload>(i)));
        s.inputs[static_cast<std::size_t>(i)]->push(Message::data(static_cast<Payload>(10 + i)));
    }
    for (int i = 0; i < 6; ++i) {
        collector_step(s);
    }
    auto out = drain(*s.output);
    std::vector<Payload> words;
    for (auto& m : out) {
        words.push_back(m.word);
    }
    EXPECT_EQ(words, (std::vector<Payload>{0, 1, 2, 10, 11, 12}));
}

TEST(Collector, DataThenEosFromFourInputs) {
    auto s = make_collector(4, 512);
    for (std::size_t k = 0; k < 4; ++k) {
        for (Payload j = 0; j < 250; ++j) {
            s.inputs[k]->push(Message::data(k * 1000 + j));
        }
        s.inputs[k]->push(Message::eos());
    }
    std::vector<Message> out;
    std::thread reader([&] {
        for (;;) {
            auto m = pop_blocking(*s.output);
            out.push_back(m);
            if (m.is_eos()) {
                return;
            }
        }
    });
    run_collector(s);
    reader.join();
    ASSERT_EQ(out.size(), 1001u);
    EXPECT_TRUE(out.back().is_eos());
    std::set<Payload> distinct;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        EXPECT_TRUE(out[i].is_data());
        distinct.insert(out[i].word);
    }
    EXPECT_EQ(distinct.size(), 1000u);
}

TEST(CollectorEmitter, GathersAndScatters) {
    CollectorEmitterState s;
    s.gather = make_collector(2, 8);
    s.scatter = make_emitter(2, 8);
    s.gather.inputs[0]->push(Message::data(1));
    s.gather.inputs[1]->push(Message::data(2));
    s.gather.inputs[0]->push(Message::eos());
    s.gather.inputs[1]->push(Message::eos());
    EXPECT_TRUE(collector_emitter_step(s).dispatched);
    EXPECT_TRUE(collector_emitter_step(s).dispatched);
    EXPECT_TRUE(collector_emitter_step(s).eos_done);
    auto a = drain(*s.scatter.outputs[0]);
    auto b = drain(*s.scatter.outputs[1]);
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(a[0], Message::data(1));
    EXPECT_TRUE(a[1].is_eos());
    EXPECT_EQ(b[0], Message::data(2));
    EXPECT_TRUE(b[1].is_eos());
}

TEST(Builders, RejectBadArity) {
    EXPECT_THROW(build_spmc(0, 8, SchedulingPolicy::round_robin), ConfigError);
    EXPECT_THROW(build_mpsc(0, 8), ConfigError);
    EXPECT_THROW(build_mpmc(1, 0, 8, SchedulingPolicy::round_robin), ConfigError);
    EXPECT_THROW(build_mpmc(0, 1, 8, SchedulingPolicy::round_robin), ConfigError);
    EXPECT_THROW(build_spmc(2, 1, SchedulingPolicy::round_robin), ConfigError);
}

TEST(Builders, SpmcWithOneConsumerPreservesOrder) {
    auto ch = build_spmc(1, 8, SchedulingPolicy::round_robin);
    std::thread arbiter(ch.arbiter);
    std::vector<Payload> got;
    std::thread consumer([&] {
        for (;;) {
            auto m = pop_blocking(*ch.consumers[0]);
            if (m.is_eos()) {
                return;
            }
            got.push_back(m.word);
        }
    });
    for (Payload i = 0; i < 10000; ++i) {
        push_blocking(*ch.producer, Message::data(i));
    }
    push_blocking(*ch.producer, Message::eos());
    consumer.join();
    arbiter.join();
    ASSERT_EQ(got.size(), 10000u);
    for (Payload i = 0; i < 10000; ++i) {
        ASSERT_EQ(got[i], i);
    }
}

TEST(Builders, MpscKeepsPerProducerOrder) {
    constexpr int kProducers = 4;
    constexpr Payload kEach = 2000;
    auto ch = build_mpsc(kProducers, 8);
    std::thread arbiter(ch.arbiter);
    std::vector<std::thread> producers;
    for (int p = 0; p < kProducers; ++p) {
        producers.emplace_back([&, p] {
            for (Payload i = 0; i < kEach; ++i) {
                push_blocking(*ch.producers[static_cast<std::size_t>(p)],
                              Message::data(static_cast<Payload>(p) * 100000 + i));
            }
            push_blocking(*ch.producers[static_cast<std::size_t>(p)], Message::eos());
        });
    }
    std::map<Payload, Payload> next;
    std::size_t count = 0;
    std::size_t eos = 0;
    bool ordered = true;
    for (;;) {
        auto m = pop_blocking(*ch.consumer);
        if (m.is_eos()) {
            ++eos;
            break;
        }
        const Payload p = m.word / 100000;
        ordered = ordered && (m.word % 100000 == next[p]);
        ++next[p];
        ++count;
    }
    for (auto& t : producers) {
        t.join();
    }
    arbiter.join();
    EXPECT_TRUE(ordered);
    EXPECT_EQ(count, kProducers * kEach);
    EXPECT_EQ(eos, 1u);
    EXPECT_FALSE(ch.consumer->pop().has_value());
}

class MpmcPolicies : public ::testing::TestWithParam<SchedulingPolicy> {};

TEST_P(MpmcPolicies, DeliversEveryPayloadExactlyOnce) {
    auto ch = build_mpmc(2, 2, 8, GetParam());
    std::thread arbiter(ch.arbiter);
    std::vector<std::thread> producers;
    for (int p = 0; p < 2; ++p) {
        producers.emplace_back([&, p] {
            for (Payload i = 0; i < 100; ++i) {
                push_blocking(*ch.producers[static_cast<std::size_t>(p)],
                              Message::data(static_cast<Payload>(p) * 1000 + i));
            }
            push_blocking(*ch.producers[static_cast<std::size_t>(p)], Message::eos());
        });
    }
    std::vector<std::vector<Payload>> got(2);
    std::vector<int> eos(2, 0);
    std::vector<std::thread> consumers;
    for (int c = 0; c < 2; ++c) {
        consumers.emplace_back([&, c] {
            const auto ci = static_cast<std::size_t>(c);
            for (;;) {
                auto m = pop_blocking(*ch.consumers[ci]);
                if (m.is_eos()) {
                    ++eos[ci];
                    return;
                }
                got[ci].push_back(m.word);
            }
        });
    }
    for (auto& t : producers) {
        t.join();
    }
    for (auto& t : consumers) {
        t.join();
    }
    arbiter.join();
    std::multiset<Payload> all(got[0].begin(), got[0].end());
    all.insert(got[1].begin(), got[1].end());
    std::multiset<Payload> expected;
    for (Payload p = 0; p < 2; ++p) {
        for (Payload i = 0; i < 100; ++i) {
            expected.insert(p * 1000 + i);
        }
    }
    EXPECT_EQ(all, expected);
    EXPECT_EQ(eos, (std::vector<int>{1, 1}));
}

INSTANTIATE_TEST_SUITE_P(Policies, MpmcPolicies,
                         ::testing::Values(SchedulingPolicy::round_robin, SchedulingPolicy::on_demand));

TEST(Builders, ArbiterServesSecondStream) {
    auto ch = build_mpsc(2, 8);
    for (int stream = 0; stream < 2; ++stream) {
        std::thread arbiter(ch.arbiter);
        for (auto& p : ch.producers) {
            push_blocking(*p, Message::data(static_cast<Payload>(stream)));
            push_blocking(*p, Message::eos());
        }
        arbiter.join();
        auto out = drain(*ch.consumer);
        ASSERT_EQ(out.size(), 3u);
        EXPECT_TRUE(out[2].is_eos());
    }
}
