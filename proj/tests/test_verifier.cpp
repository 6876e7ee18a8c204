/*
 * Copyright 2026 The deltasynth Authors
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

#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace deltasynth;
using namespace testing;

namespace {

// Exhaustive check over short adversary lassos: the first losing one, if any.
std::optional<BWord> short_counterexample(const FiniteMemoryMachine &s, const GameSpec &g, int total)
{
    std::optional<BWord> found;
    for_each_bword(g.monitor.alphabet().size_b(), total, [&](const BWord &b) {
        if (!found && !member(machine_play(s, b), g.condition, g.monitor)) found = b;
    });
    return found;
}

} // namespace

TEST_CASE("the naive machine of example 10 loses to 0^omega", "[verifier]")
{
    auto g = example10();
    auto s = load_machine(games("fig2.machine.json"));
    auto v = verify_machine(s, g.condition, g.monitor);
    REQUIRE(v.outcome == Verdict::Losing);
    REQUIRE(v.witness);
    CHECK(v.witness->prefix.empty());
    CHECK(v.witness->cycle == std::vector<int>{0});
    CHECK_FALSE(member(machine_play(s, *v.witness), g.condition, g.monitor));
}

TEST_CASE("the corrected machine of example 10 wins", "[verifier]")
{
    auto g = example10();
    auto s = load_machine(games("fig3.machine.json"));
    CHECK(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning);
    CHECK_FALSE(short_counterexample(s, g, 8));
}

TEST_CASE("any machine wins the full condition", "[verifier]")
{
    auto g = load_game(games("w_full.game"));
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; i++) {
        auto s = random_machine(rng, g.monitor.alphabet(), uniform(rng, 1, 4));
        CHECK(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning);
    }
}

TEST_CASE("verdicts agree with exhaustive short adversary words", "[verifier][property]")
{
    std::mt19937_64 rng(67);
    RandomParams p;
    p.max_dim = 2;
    int losing = 0, winning = 0;
    for (int iter = 0; iter < 400; iter++) {
        GameSpec g = iter % 2 ? random_energy_game(rng, p) : random_expr_game(rng, p);
        auto s = random_machine(rng, g.monitor.alphabet(), uniform(rng, 1, 3));
        auto v = verify_machine(s, g.condition, g.monitor);
        auto shortw = short_counterexample(s, g, 6);
        if (v.outcome == Verdict::Losing) {
            losing++;
            REQUIRE(v.witness);
            // witness validity: replaying it really loses
            REQUIRE_FALSE(member(machine_play(s, *v.witness), g.condition, g.monitor));
        } else {
            REQUIRE(v.outcome == Verdict::Winning);
            winning++;
            REQUIRE_FALSE(shortw);
        }
    }
    CHECK(losing > 50);
    CHECK(winning > 50);
}

TEST_CASE("a winning machine loses the complement with a valid witness", "[verifier][property]")
{
    std::mt19937_64 rng(71);
    RandomParams p;
    int checked = 0;
    for (int iter = 0; iter < 400; iter++) {
        GameSpec g = random_expr_game(rng, p);
        auto s = random_machine(rng, g.monitor.alphabet(), uniform(rng, 1, 3));
        auto v = verify_machine(s, g.condition, g.monitor);
        auto dual = verify_machine(s, expr::negate(g.condition), g.monitor);
        if (v.outcome == Verdict::Winning) {
            checked++;
            REQUIRE(dual.outcome == Verdict::Losing);
            REQUIRE(member(machine_play(s, *dual.witness), g.condition, g.monitor));
        }
        if (dual.outcome == Verdict::Winning) REQUIRE(v.outcome == Verdict::Losing);
    }
    CHECK(checked > 30);
}

TEST_CASE("machines over another alphabet are rejected", "[verifier]")
{
    auto g = example10();
    FiniteMemoryMachine s(Alphabet::numbered(3, 2), {"m"}, {0}, {std::vector<int>(6, 0)}, 0);
    CHECK_THROWS_AS(verify_machine(s, g.condition, g.monitor), Error);
}

TEST_CASE("simulation replays the naive machine along 0^omega", "[verifier]")
{
    auto g = example10();
    auto s = load_machine(games("fig2.machine.json"));
    auto t = simulate(s, g.monitor, parse_beta("0 : 0", g.monitor.alphabet()), 4);
    REQUIRE(t.history.size() == 4);
    for (auto &p : t.history) CHECK(p == Pair{0, 0});
    for (int x : t.memory) CHECK(s.name(x) == "eps");
    CHECK(g.monitor.name(t.configs.back().state) == "q2");
    CHECK(simulate(s, g.monitor, BWord{{}, {0}}, 0).history.empty());
}

TEST_CASE("simulation of the corrected machine reaches goal on 0^omega", "[verifier]")
{
    auto g = example10();
    auto s = load_machine(games("fig3.machine.json"));
    auto t = simulate(s, g.monitor, BWord{{}, {0}}, 6);
    int goal = state_of(g.monitor, "goal");
    size_t first = 0;
    while (first < t.configs.size() && t.configs[first].state != goal) first++;
    CHECK(first == 3);
    // scripted adversary answering 1 once Player 1 has played 1
    auto scripted = simulate(s, g.monitor, [](const History &h) { return !h.empty() && h.back().a == 1 ? 1 : 0; }, 6);
    for (size_t k = 0; k < 3; k++) CHECK(scripted.history[k] == t.history[k]);
    REQUIRE(t.history[2].a == 1);
    CHECK(scripted.history[3].b == 1);
}

TEST_CASE("champernowne and Thue-Morse prefixes", "[verifier][counterexample]")
{
    CHECK(champernowne(2, 10) == std::vector<int>{0, 1, 0, 0, 0, 1, 1, 0, 1, 1});
    CHECK(thue_morse(8) == std::vector<int>{0, 1, 1, 0, 1, 0, 0, 1});
    auto tm = thue_morse(4096);
    for (size_t p = 1; p <= 64; p++) CHECK_FALSE(find_overlap(tm, p));
    CHECK(find_overlap(std::vector<int>{0, 1, 0, 1, 0}, 2));
}

TEST_CASE("disjunctive game: a constant machine misses a short prefix", "[verifier][counterexample]")
{
    auto g = build_counterexample(CounterexampleKind::DisjunctivePi02);
    Alphabet al = g.alphabet;
    FiniteMemoryMachine zero(al, {"m"}, {0}, {{0, 0}}, 0), one(al, {"m"}, {1}, {{0, 0}}, 0);
    auto w0 = falsify_machine(zero, g);
    CHECK(w0.length == 2); // "01" is not a factor of 0^omega
    auto w1 = falsify_machine(one, g);
    CHECK(w1.length == 1);
    CHECK_FALSE(g.member(w0.play));
}

TEST_CASE("every machine with at most two states is falsified", "[verifier][counterexample]")
{
    std::string err;
    long long total = (long long)detail::one_player_machines(2, 2).size();
    CHECK(falsify_all_small(CounterexampleKind::DisjunctivePi02, 2, &err) == total);
    CHECK(err.empty());
    CHECK(falsify_all_small(CounterexampleKind::IrregularSuffixSigma02, 2, &err) == total);
    CHECK(err.empty());
}

TEST_CASE("opponent game: every small opponent machine is defeated by its prelude", "[verifier][counterexample]")
{
    auto g = build_counterexample(CounterexampleKind::OpponentGame);
    for (int n = 1; n <= 2; n++) {
        long long count = 0;
        for_each_opponent_machine(n, [&](const FiniteMemoryMachine &s) {
            auto w = falsify_machine(s, g);
            REQUIRE(w.prelude);
            REQUIRE(w.prelude->prefix.size() == (size_t)s.size() + 2);
            REQUIRE(g.member(w.play));
            count++;
        });
        CHECK(count == (long long)std::pow(2 * n * n, n));
    }
    // Player 1 never playing 1 loses
    CHECK_FALSE(opponent_member(UltimatelyPeriodicPlay{{}, {{0, 0}}}));
    // a late reply after an early 1 is too late
    CHECK_FALSE(opponent_member(UltimatelyPeriodicPlay{{{1, 0}, {0, 0}, {0, 1}}, {{0, 0}}}));
    CHECK(opponent_member(UltimatelyPeriodicPlay{{{1, 0}, {0, 1}}, {{0, 0}}}));
}
