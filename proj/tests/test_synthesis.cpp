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
using namespace deltasynth::expr;

namespace {

ErrorKind kind_of(const std::function<void()> &f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    return ErrorKind::Internal;
}

bool no_short_loss(const FiniteMemoryMachine &s, const GameSpec &g, int total)
{
    bool ok = true;
    for_each_bword(g.monitor.alphabet().size_b(), total, [&](const BWord &b) {
        ok = ok && member(machine_play(s, b), g.condition, g.monitor);
    });
    return ok;
}

// Chain s0 -> goal on (0,0); everything else stays put.
ConditionMonitor chain(int na, int nb)
{
    Alphabet al = Alphabet::numbered(na, nb);
    std::vector<std::vector<int>> step(2, std::vector<int>(al.letters(), 0));
    step[0][al.letter(0, 0)] = 1;
    for (auto &t : step[1]) t = 1;
    return ConditionMonitor(al, {"s0", "goal"}, 0, step);
}

// Replays s against adversary words and checks the assembly invariants:
// tracked tree nodes sit below the real configuration, hand-offs land above
// their representative, and tree nodes never grow past the depth.
struct AssemblyCheck {
    long long steps = 0, tracked = 0, handoffs = 0;
};

AssemblyCheck check_assembly(const KPlan &plan, const KAssembly &ka, const std::vector<BWord> &words, size_t horizon)
{
    AssemblyCheck r;
    const auto &s = ka.machine;
    const auto &m = plan.monitor;
    auto sub_of = [&](const std::string &name) {
        for (size_t i = 0; i < ka.sub_prefix.size(); i++)
            if (!ka.sub_prefix[i].empty() && name.rfind(ka.sub_prefix[i], 0) == 0) return (int)i;
        return -1;
    };
    for (auto &w : words) {
        auto t = simulate(s, m, w, horizon);
        for (size_t k = 0; k <= horizon; k++) {
            r.steps++;
            const std::string &name = s.name(t.memory[k]);
            if (auto it = ka.tracked.find(name); it != ka.tracked.end()) {
                r.tracked++;
                REQUIRE(leq(it->second, t.configs[k], plan.order));
                int j = std::stoi(name.substr(1));
                int len = 0;
                for (char ch : name) len += ch == '(';
                REQUIRE(len <= plan.depths[j]);
                continue;
            }
            int i = sub_of(name);
            REQUIRE(i >= 0);
            if (k > 0 && sub_of(s.name(t.memory[k - 1])) != i) {
                r.handoffs++;
                REQUIRE_FALSE(plan.prefc.contains(t.configs[k]));
                REQUIRE(leq(plan.reps_open.elements[i], t.configs[k], plan.order));
            }
        }
    }
    return r;
}

std::vector<BWord> random_words(std::mt19937_64 &rng, int nb, int count, int len)
{
    std::vector<BWord> out;
    for (int i = 0; i < count; i++) {
        BWord w;
        for (int k = 0; k < len; k++) w.prefix.push_back(uniform(rng, 0, nb - 1));
        w.cycle.push_back(uniform(rng, 0, nb - 1));
        out.push_back(w);
    }
    return out;
}

int max_depth(const KPlan &p)
{
    int d = 0;
    for (int x : p.depths) d = std::max(d, x);
    return d;
}

// Strategic tree of the attractor strategy, counted node by node.
long long tree_nodes(const ConditionMonitor &m, const std::vector<bool> &target, const Attractor &att, int q)
{
    long long n = 1;
    if (target[q]) return n;
    for (int b = 0; b < m.alphabet().size_b(); b++) n += tree_nodes(m, target, att, m.step(q, {att.action[q], b}));
    return n;
}

} // namespace

TEST_CASE("open synthesis: reaching a cylinder needs two memory states", "[synthesis]")
{
    auto m = chain(1, 1);
    auto s = synth_open(open({1}), m);
    CHECK(s.size() == 2);
    CHECK(verify_machine(s, open({1}), m).outcome == Verdict::Winning);
    // Player 2 can dodge the goal with a second action
    auto m2 = chain(1, 2);
    CHECK(kind_of([&] { synth_open(open({1}), m2); }) == ErrorKind::NoWinningStrategy);
    CHECK(kind_of([&] { synth(open({}), m); }) == ErrorKind::NoWinningStrategy);
}

TEST_CASE("open synthesis memory stays within the attractor depth", "[synthesis]")
{
    // three-step ladder: memory is bounded by the states outside the target plus one
    Alphabet al = Alphabet::numbered(2, 1);
    ConditionMonitor m(al, {"a", "b", "c", "goal"}, 0, {{1, 0}, {2, 1}, {3, 2}, {3, 3}});
    auto s = synth_open(open({3}), m);
    CHECK(s.size() <= 4);
    CHECK(verify_machine(s, open({3}), m).outcome == Verdict::Winning);
}

TEST_CASE("closed synthesis on a safe monitor is memoryless", "[synthesis]")
{
    auto g = load_game(games("w_full.game"));
    auto e = closed({});
    CHECK(synth_closed_antichain(e, g.monitor).size() == 1);
    CHECK(synth_closed_pruning(e, g.monitor).size() == 1);
}

TEST_CASE("one-dimensional energy needs at most two states", "[synthesis][energy]")
{
    // action 0 costs one unit, action 1 refills one
    Alphabet al = Alphabet::numbered(2, 1);
    ConditionMonitor m(al, {"s"}, 0, {{0, 0}}, 1, {{{-1}, {1}}}, {2});
    auto s = synth_closed_antichain(energy_safe(), m);
    CHECK(s.size() <= 2);
    CHECK(verify_machine(s, energy_safe(), m).outcome == Verdict::Winning);
    ConditionMonitor broke(al, {"s"}, 0, {{0, 0}}, 1, {{{-1}, {-1}}}, {2});
    CHECK(kind_of([&] { synth(energy_safe(), broke); }) == ErrorKind::NoWinningStrategy);
}

TEST_CASE("the closed part of example 10 after (0,1) is memoryless", "[synthesis]")
{
    auto g = example10();
    auto c = state_of(g.monitor, "c");
    auto dec = decompose_K(g.condition);
    auto s = synth_closed_antichain(dec.closed, rooted(g.monitor, c));
    REQUIRE(s.size() == 1);
    CHECK(s.decide(0) == 0);
}

TEST_CASE("closed constructions applied to example 10 lose to 0^omega", "[synthesis]")
{
    auto g = example10();
    SynthOptions any;
    any.allow_any_class = true;
    CHECK(kind_of([&] { synth_closed_antichain(g.condition, g.monitor); }) == ErrorKind::WrongClass);
    for (auto s : {synth_closed_antichain(g.condition, g.monitor, any),
                   synth_closed_pruning(g.condition, g.monitor, nullptr, any)}) {
        CHECK(s.size() == 2);
        auto v = verify_machine(s, g.condition, g.monitor);
        REQUIRE(v.outcome == Verdict::Losing);
        CHECK(v.witness->canonical() == BWord{{}, {0}});
    }
}

TEST_CASE("depths on example 10", "[synthesis]")
{
    auto g = example10();
    for (bool by_rank : {false, true}) {
        auto plan = plan_K(g.condition, g.monitor, by_rank);
        std::map<std::string, int> d;
        for (size_t j = 0; j < plan.depths.size(); j++)
            d[config_string(plan.reps_closed.elements[j], g.monitor)] = plan.depths[j];
        INFO("by_rank " << by_rank);
        CHECK(d == std::map<std::string, int>{{"q0", 2}, {"c", 0}});
    }
}

TEST_CASE("K2 and K-theta synthesis win example 10", "[synthesis]")
{
    auto g = example10();
    auto k2 = synth_K2(g.condition, g.monitor);
    auto kt = synth_K_theta(g.condition, g.monitor);
    auto s = synth(g.condition, g.monitor);
    CHECK(s.size() == 9);
    for (auto &x : {k2, kt, s}) {
        CHECK(verify_machine(x, g.condition, g.monitor).outcome == Verdict::Winning);
        CHECK(no_short_loss(x, g, 8));
    }
    // against 0^omega the machine leaves q2 at step 3
    auto t = simulate(s, g.monitor, BWord{{}, {0}}, 4);
    CHECK(g.monitor.name(t.configs[3].state) == "goal");
}

TEST_CASE("assembly invariants on example 10, exhaustive to depth 6", "[synthesis][property]")
{
    auto g = example10();
    for (bool by_rank : {false, true}) {
        auto plan = plan_K(g.condition, g.monitor, by_rank);
        auto ka = assemble_K(plan);
        std::vector<BWord> words;
        for_each_word(2, 6, [&](const std::vector<int> &w) {
            words.push_back(BWord{w, {0}});
            words.push_back(BWord{w, {1}});
        });
        auto r = check_assembly(plan, ka, words, 6);
        CHECK(r.tracked > 0);
        CHECK(r.handoffs > 0);
    }
}

TEST_CASE("assembly invariants against random adversaries", "[synthesis][property]")
{
    auto g = example10();
    std::mt19937_64 rng(73);
    auto plan = plan_K(g.condition, g.monitor, false);
    auto ka = assemble_K(plan);
    check_assembly(plan, ka, random_words(rng, 2, 1000, 30), 30);
}

TEST_CASE("a K2 condition with an empty open part has depth 0 everywhere", "[synthesis]")
{
    auto g = example10();
    const auto &m = g.monitor;
    StateSet guard = normalize_set({state_of(m, "q2"), state_of(m, "goal"), state_of(m, "sink")});
    auto e = negate(open_union({branch(guard, negate(open({})))}));
    REQUIRE(class_string(classify(e)) == "K2");
    // from q0 Player 2 forces q2; from c Player 1 stays safe
    CHECK(kind_of([&] { synth(e, m); }) == ErrorKind::NoWinningStrategy);
    auto mc = rooted(m, state_of(m, "c"));
    auto plan = plan_K(e, mc, false);
    for (int d : plan.depths) CHECK(d == 0);
    GameSpec h{"", "", mc, e};
    auto s = synth(e, mc);
    CHECK(s.size() == 1);
    CHECK(no_short_loss(s, h, 8));
}

TEST_CASE("Lambda synthesis delegates and hands off", "[synthesis]")
{
    auto m = chain(1, 1);
    CHECK(synth_lambda(open({1}), m) == synth_open(open({1}), m));

    // s0 picks one of two absorbing sides; each side must stay out of its bad twin
    Alphabet al = Alphabet::numbered(2, 1);
    ConditionMonitor two(al, {"s0", "a", "b"}, 0, {{1, 2}, {1, 1}, {2, 2}});
    auto e = open_union({branch({1}, closed({})), branch({2}, closed({2}))});
    REQUIRE(class_string(classify(e)) == "Lambda2");
    auto s = synth(e, two);
    CHECK(verify_machine(s, e, two).outcome == Verdict::Winning);
    CHECK(s.decide(0) == 0);
    CHECK(kind_of([&] { synth(open_union({branch({2}, closed({2}))}), two); }) == ErrorKind::NoWinningStrategy);
}

TEST_CASE("energy synthesis on the two-counter game", "[synthesis][energy]")
{
    auto g = load_game(games("multienergy_d2.game"));
    auto s = synth(g.condition, g.monitor);
    CHECK(s.size() == 3);
    CHECK(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning);
    CHECK(kind_of([&] { synth(negate(energy_safe()), g.monitor); }) == ErrorKind::Unsupported);
}

TEST_CASE("class guards and budgets", "[synthesis]")
{
    auto g = example10();
    CHECK(kind_of([&] { synth_open(g.condition, g.monitor); }) == ErrorKind::WrongClass);
    CHECK(kind_of([&] { synth_K2(open({state_of(g.monitor, "goal")}), g.monitor); }) == ErrorKind::WrongClass);
    CHECK(kind_of([&] { synth_lambda(g.condition, g.monitor); }) == ErrorKind::WrongClass);
    SynthOptions tight;
    tight.budget = 1;
    CHECK(kind_of([&] { synth(g.condition, g.monitor, tight); }) == ErrorKind::BudgetExceeded);
}

TEST_CASE("synthesis agrees with the oracle in every class", "[synthesis][property]")
{
    std::mt19937_64 rng(79);
    const std::vector<HierarchyClass> classes = {{HierarchyClass::Lambda, 1}, {HierarchyClass::K, 1},
                                                 {HierarchyClass::Lambda, 2}, {HierarchyClass::K, 2},
                                                 {HierarchyClass::Lambda, 3}, {HierarchyClass::K, 3}};
    for (auto c : classes) {
        int wins = 0, losses = 0;
        for (int iter = 0; iter < 300; iter++) {
            GameSpec g;
            if (!random_class_game(rng, c, g, 1, 5)) continue;
            REQUIRE(classify(g.condition) == c);
            if (oracle::player1_wins_d0(g.condition, g.monitor)) {
                wins++;
                auto s = synth(g.condition, g.monitor);
                REQUIRE(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning);
                REQUIRE(no_short_loss(s, g, 5));
            } else {
                losses++;
                REQUIRE(kind_of([&] { synth(g.condition, g.monitor); }) == ErrorKind::NoWinningStrategy);
            }
        }
        INFO(class_string(c));
        CHECK(wins > 10);
        CHECK(losses > 5);
    }
}

TEST_CASE("energy synthesis agrees with the clamped oracle", "[synthesis][energy][property]")
{
    std::mt19937_64 rng(83);
    RandomParams p;
    p.max_dim = 2;
    for (int iter = 0; iter < 120; iter++) {
        GameSpec g = random_energy_game(rng, p);
        if (oracle::player1_wins_energy(g.condition, g.monitor)) {
            auto s = synth(g.condition, g.monitor);
            REQUIRE(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning);
            REQUIRE(no_short_loss(s, g, 5));
        } else {
            REQUIRE(kind_of([&] { synth(g.condition, g.monitor); }) == ErrorKind::NoWinningStrategy);
        }
    }
}

TEST_CASE("antichain memory equals the size of the minimal set", "[synthesis][property]")
{
    std::mt19937_64 rng(89);
    RandomParams p;
    p.max_dim = 2;
    int checked = 0;
    for (int iter = 0; iter < 200; iter++) {
        GameSpec g = random_energy_game(rng, p);
        if (g.condition->kind != ExprKind::EnergySafe) continue;
        auto region = winning_region(g.condition, g.monitor);
        if (!region.contains(initial_config(g.monitor))) continue;
        auto ms = min_set(reachable_gamma(region, initial_config(g.monitor), env_budget()), structural_order(g.monitor),
                          g.monitor);
        CHECK(synth_closed_antichain(g.condition, g.monitor).size() <= (int)ms.elements.size());
        checked++;
    }
    CHECK(checked > 20);
}

TEST_CASE("open synthesis memory is bounded by the pruned tree", "[synthesis][property]")
{
    std::mt19937_64 rng(97);
    RandomParams p;
    p.max_states = 6;
    int checked = 0;
    for (int iter = 0; iter < 300; iter++) {
        auto m = random_monitor(rng, uniform(rng, 2, 6), uniform(rng, 1, 2), uniform(rng, 1, 2), 0, p);
        auto e = open(random_trap(rng, m));
        auto sure = detail::labelled(m, e);
        StateSet target;
        for (int q = 0; q < m.size(); q++)
            if (sure[q]) target.push_back(q);
        auto att = attractor(m, target);
        if (!att.in[m.initial()]) continue;
        long long tree = tree_nodes(m, sure, att, m.initial());
        REQUIRE(pruned_tree_size(e, m) == tree);
        auto s = synth_open(e, m);
        REQUIRE(s.size() <= tree);
        checked++;
    }
    CHECK(checked > 50);
}

TEST_CASE("deep K2 and K3 instances keep the assembly invariants", "[synthesis][property]")
{
    std::mt19937_64 rng(5);
    for (int level : {2, 3}) {
        int deep = 0, tries = 0, best = 0;
        const int want = level == 2 ? 25 : 2;
        while (deep < want && tries < 60000) {
            tries++;
            GameSpec g;
            RandomParams p;
            p.layered = true;
            g.monitor = random_monitor(rng, uniform(rng, 4, 8), 2, 2, 0, p);
            g.condition = random_expr_of_class(rng, g.monitor, {HierarchyClass::K, level});
            if (!g.condition) continue;
            auto region = winning_region(g.condition, g.monitor);
            if (!region.contains(initial_config(g.monitor))) continue;
            auto plan = plan_K(g.condition, g.monitor, level > 2);
            if (max_depth(plan) == 0) continue;
            deep++;
            best = std::max(best, max_depth(plan));
            auto ka = assemble_K(plan);
            REQUIRE(verify_machine(ka.machine, g.condition, g.monitor).outcome == Verdict::Winning);
            REQUIRE(no_short_loss(ka.machine, g, 6));
            check_assembly(plan, ka, random_words(rng, 2, 200, 20), 20);
        }
        INFO("level " << level << " tries " << tries);
        CHECK(deep >= want);
        CHECK(best >= (level == 2 ? 2 : 1));
    }
}

TEST_CASE("K-theta assembly agrees with K2 on K2 conditions", "[synthesis][property]")
{
    std::mt19937_64 rng(101);
    int checked = 0;
    for (int iter = 0; iter < 300; iter++) {
        GameSpec g;
        if (!random_class_game(rng, {HierarchyClass::K, 2}, g)) continue;
        if (!winning_region(g.condition, g.monitor).contains(initial_config(g.monitor))) continue;
        auto a = synth_K2(g.condition, g.monitor), b = synth_K_theta(g.condition, g.monitor);
        REQUIRE(verify_machine(a, g.condition, g.monitor).outcome == Verdict::Winning);
        REQUIRE(verify_machine(b, g.condition, g.monitor).outcome == Verdict::Winning);
        checked++;
    }
    CHECK(checked > 50);
}
