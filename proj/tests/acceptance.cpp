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

// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace deltasynth;
using namespace testing;

namespace {

// Pinned limits.
constexpr double kExample10Seconds = 1.0;
constexpr double kEnergySeconds = 60.0;
constexpr double kRepresentationSeconds = 120.0;
constexpr int kEnergyGames = 200;
constexpr long long kEnergyCap = 16;
constexpr int kExpressions = 100;
constexpr int kLassoLength = 6;
constexpr int kOrderTriples = 10000;
constexpr int kGamesPerClass = 100;
constexpr int kSmallMachineStates = 2;
constexpr int kOpponentStates = 4;
constexpr int kReachGames = 100;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string &why)
    {
        if (!ok && pass) detail << "first failure: " << why << "; ";
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(int n, const std::string &title, const std::function<void(Outcome &)> &body, double limit = 0)
{
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception &e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    double s = seconds_since(t0);
    if (limit > 0) o.require(s < limit, "runtime over the limit");
    char time[64];
    if (limit > 0) std::snprintf(time, sizeof time, "%.2fs < %.0fs", s, limit);
    else std::snprintf(time, sizeof time, "%.2fs", s);
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << "  [" << o.detail.str()
              << time << "]" << std::endl;
    failures += !o.pass;
}

void example10_pipeline(Outcome &o)
{
    auto g = example10();
    o.require(class_string(classify(g.condition)) == "K2", "class");
    auto plan = plan_K(g.condition, g.monitor, false);
    auto h_eps = initial_config(g.monitor);
    auto h01 = config({{0, 1}}, g.monitor);
    int d_eps = compute_depth(plan, h_eps), d01 = compute_depth(plan, h01);
    o.require(d_eps == 2, "depth(eps)");
    o.require(d01 == 0, "depth((0,1))");
    auto s = synth_K2(g.condition, g.monitor);
    o.require(verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning, "synth_K2 machine");
    auto naive = load_machine(games("fig2.machine.json"));
    auto v = verify_machine(naive, g.condition, g.monitor);
    o.require(v.outcome == Verdict::Losing, "naive machine verdict");
    o.require(v.witness && v.witness->canonical() == BWord{{}, {0}}, "witness 0^omega");
    o.detail << "class K2, depth(eps)=" << d_eps << ", depth((0,1))=" << d01 << ", machine " << s.size()
             << " states Winning, naive machine Losing on 0^omega; ";
}

void energy_corollary(Outcome &o)
{
    std::mt19937_64 rng(42);
    RandomParams p;
    p.max_states = 4;
    p.max_a = p.max_b = 2;
    p.max_dim = 2;
    p.wmin = -2, p.wmax = 2;
    int agree = 0, winning = 0, verified = 0;
    for (int i = 0; i < kEnergyGames; i++) {
        GameSpec g = random_energy_game(rng, p);
        bool brute = oracle::player1_wins_energy(g.condition, g.monitor, kEnergyCap);
        bool ours = winning_region(g.condition, g.monitor).contains(initial_config(g.monitor));
        agree += brute == ours;
        if (ours) {
            winning++;
            auto s = synth(g.condition, g.monitor);
            verified += verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning;
        }
    }
    o.require(agree == kEnergyGames, "oracle agreement");
    o.require(verified == winning, "machine verification");
    o.detail << "agree " << agree << "/" << kEnergyGames << ", verified " << verified << "/" << winning << "; ";
}

void representation_equivalence(Outcome &o)
{
    std::mt19937_64 rng(42);
    RandomParams p;
    p.max_states = 5;
    p.depth = 3;
    long long lassos = 0, discrepancies = 0;
    for (int i = 0; i < kExpressions; i++) {
        GameSpec g = random_expr_game(rng, p);
        const auto &m = g.monitor;
        auto df = to_difference_form(g.condition, m);
        auto lab = to_labelling(g.condition, m);
        auto bc = to_buchi_coloring(m, pi02_from_labelling(lab, m));
        for_each_lasso(m.alphabet(), kLassoLength, [&](const UltimatelyPeriodicPlay &play) {
            bool direct = oracle::member_by_run(play, g.condition, m);
            bool same = member(play, g.condition, m) == direct && member(play, df, m) == direct &&
                        member(play, lab, m) == direct && member(play, bc, m) == direct;
            discrepancies += !same;
            lassos++;
        });
    }
    o.require(discrepancies == 0, "membership discrepancy");
    o.detail << kExpressions << " expressions, " << lassos << " lassos, " << discrepancies << " discrepancies; ";
}

void order_laws(Outcome &o)
{
    std::mt19937_64 rng(42);
    RandomParams p;
    p.max_dim = 2;
    long long triples = 0, violations = 0;
    while (triples < kOrderTriples) {
        bool energy = uniform(rng, 0, 1);
        GameSpec g = energy ? random_energy_game(rng, p) : random_expr_game(rng, p);
        const auto &m = g.monitor;
        auto ord = make_order(energy ? OrderMode::Structural : OrderMode::ExactRegular, g.condition, m);
        auto region = winning_region(g.condition, m);
        for (int k = 0; k < 50; k++) {
            Configuration c1 = initial_config(m), c2 = c1;
            c1.state = uniform(rng, 0, m.size() - 1);
            if (energy) {
                for (auto &x : c1.energy) x = uniform(rng, 0, 4);
                c2 = c1;
                for (auto &x : c2.energy) x += uniform(rng, 0, 2);
            } else {
                c2.state = uniform(rng, 0, m.size() - 1);
            }
            if (!leq(c1, c2, ord)) continue;
            Pair pr{uniform(rng, 0, m.alphabet().size_a() - 1), uniform(rng, 0, m.alphabet().size_b() - 1)};
            bool ok = step_order_preserved(c1, c2, pr, ord, m);
            if (region.contains(c1)) {
                ok = ok && region.contains(c2);
                if (ok) {
                    auto a1 = non_losing_actions(c1, region), a2 = non_losing_actions(c2, region);
                    ok = std::includes(a2.begin(), a2.end(), a1.begin(), a1.end());
                }
            }
            violations += !ok;
            if (++triples == kOrderTriples) break;
        }
    }
    o.require(violations == 0, "order law violated");
    o.detail << triples << " triples, " << violations << " violations; ";
}

void synthesis_soundness(Outcome &o)
{
    std::mt19937_64 rng(42);
    const std::vector<HierarchyClass> classes = {{HierarchyClass::Lambda, 1}, {HierarchyClass::K, 1},
                                                 {HierarchyClass::K, 2},      {HierarchyClass::Lambda, 2},
                                                 {HierarchyClass::Lambda, 3}, {HierarchyClass::K, 3}};
    for (auto c : classes) {
        int winning = 0, verified = 0, losing = 0, refused = 0, small = 0, disagree = 0;
        for (int tries = 0; winning < kGamesPerClass && tries < 100000; tries++) {
            GameSpec g;
            if (!random_class_game(rng, c, g, 1, 5)) continue;
            bool ours = winning_region(g.condition, g.monitor).contains(initial_config(g.monitor));
            if (g.monitor.size() <= 3) {
                small++;
                disagree += ours != oracle::player1_wins_d0(g.condition, g.monitor);
            }
            if (ours) {
                winning++;
                auto s = synth(g.condition, g.monitor);
                verified += verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning;
            } else {
                losing++;
                try {
                    synth(g.condition, g.monitor);
                } catch (const Error &e) {
                    refused += e.kind() == ErrorKind::NoWinningStrategy;
                }
            }
        }
        std::string name = class_string(c);
        o.require(winning == kGamesPerClass, name + ": not enough winning games");
        o.require(verified == winning, name + ": unverified machine");
        o.require(refused == losing, name + ": losing game not refused");
        o.require(disagree == 0, name + ": oracle disagreement");
        o.detail << name << " " << verified << "/" << winning << " verified, " << refused << "/" << losing
                 << " refused, oracle " << small - disagree << "/" << small << "; ";
    }
}

void tightness(Outcome &o)
{
    long long total = (long long)detail::one_player_machines(2, kSmallMachineStates).size();
    for (auto k : {CounterexampleKind::DisjunctivePi02, CounterexampleKind::IrregularSuffixSigma02}) {
        std::string err;
        long long n = falsify_all_small(k, kSmallMachineStates, &err);
        o.require(n == total, std::string(counterexample_name(k)) + " " + err);
        o.detail << counterexample_name(k) << " " << n << "/" << total << "; ";
    }
    auto g = build_counterexample(CounterexampleKind::OpponentGame);
    for (int m = 1; m <= kOpponentStates; m++) {
        long long machines = 0, defeated = 0;
        for_each_opponent_machine(m, [&](const FiniteMemoryMachine &s) {
            machines++;
            auto w = falsify_machine(s, g);
            bool prelude = w.prelude && w.prelude->prefix.size() == (size_t)s.size() + 2 &&
                           w.prelude->prefix.back() == 1 && w.prelude->cycle == std::vector<int>{0};
            defeated += prelude && g.member(w.play);
        });
        o.require(defeated == machines, "opponent machine with " + std::to_string(m) + " states survived");
        o.detail << "opponent m=" << m << " " << defeated << "/" << machines << "; ";
    }
}

long long tree_nodes(const ConditionMonitor &m, const std::vector<bool> &target, const Attractor &att, int q)
{
    long long n = 1;
    if (target[q]) return n;
    for (int b = 0; b < m.alphabet().size_b(); b++) n += tree_nodes(m, target, att, m.step(q, {att.action[q], b}));
    return n;
}

void pruning_bound(Outcome &o)
{
    std::mt19937_64 rng(42);
    RandomParams p;
    long long budget = env_budget();
    int games = 0, within = 0, max_mem = 0;
    long long max_tree = 0;
    for (int tries = 0; games < kReachGames && tries < 100000; tries++) {
        p.layered = tries % 2;
        auto m = random_monitor(rng, uniform(rng, 2, 8), uniform(rng, 1, 2), uniform(rng, 1, 2), 0, p);
        auto e = expr::open(random_trap(rng, m));
        auto target = detail::labelled(m, e);
        StateSet t;
        for (int q = 0; q < m.size(); q++)
            if (target[q]) t.push_back(q);
        auto att = attractor(m, t);
        if (!att.in[m.initial()]) continue;
        games++;
        long long tree = tree_nodes(m, target, att, m.initial());
        auto s = synth_open(e, m);
        bool ok = pruned_tree_size(e, m) == tree && s.size() <= tree && tree <= budget;
        ok = ok && verify_machine(s, e, m).outcome == Verdict::Winning;
        within += ok;
        max_mem = std::max(max_mem, s.size());
        max_tree = std::max(max_tree, tree);
    }
    o.require(games == kReachGames, "not enough winning reachability games");
    o.require(within == games, "memory above the pruned tree");
    o.detail << within << "/" << games << " within bound, max memory " << max_mem << ", max tree " << max_tree
             << ", budget " << budget << "; ";
}

} // namespace

int main()
{
    report(1, "example 10 pipeline", example10_pipeline, kExample10Seconds);
    report(2, "multi-energy games against the clamped oracle", energy_corollary, kEnergySeconds);
    report(3, "representation equivalence on short lassos", representation_equivalence, kRepresentationSeconds);
    report(4, "order laws on fuzzed triples", order_laws);
    report(5, "synthesis soundness per class", synthesis_soundness);
    report(6, "tightness counterexamples", tightness);
    report(7, "open synthesis within the pruned tree", pruning_bound);
    return failures;
}
