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

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <random>
#include <thread>

#include "io.hpp"

namespace deltasynth {

// ---------------------------------------------------------------------------
// Random games

struct RandomParams {
    int min_states = 1, max_states = 4;
    int max_a = 2, max_b = 2;
    int max_dim = 0;
    long long wmin = -2, wmax = 2;
    long long max_credit = 2;
    int depth = 3;
    bool layered = false; // transitions mostly go to higher-numbered states
};

inline int uniform(std::mt19937_64 &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline ConditionMonitor random_monitor(std::mt19937_64 &rng, int nq, int na, int nb, int dim, const RandomParams &p)
{
    Alphabet al = Alphabet::numbered(na, nb);
    std::vector<std::string> names;
    for (int q = 0; q < nq; q++) names.push_back("q" + std::to_string(q));
    std::vector<std::vector<int>> step(nq, std::vector<int>(al.letters()));
    for (auto &row : step)
        for (auto &t : row) t = uniform(rng, 0, nq - 1);
    if (p.layered)
        for (int q = 0; q < nq; q++)
            for (auto &t : step[q])
                if (uniform(rng, 0, 3) > 0) t = uniform(rng, q, nq - 1);
    std::vector<std::vector<Vec>> w;
    Vec credit;
    if (dim > 0) {
        w.assign(nq, std::vector<Vec>(al.letters(), Vec(dim)));
        for (auto &row : w)
            for (auto &v : row)
                for (auto &x : v) x = uniform(rng, (int)p.wmin, (int)p.wmax);
        for (int i = 0; i < dim; i++) credit.push_back(uniform(rng, 0, (int)p.max_credit));
    }
    return ConditionMonitor(al, names, 0, step, dim, w, credit);
}

/** Forward closure of a random state outside avoid, or empty if it meets avoid. */
inline StateSet random_trap(std::mt19937_64 &rng, const ConditionMonitor &m, const StateSet &avoid = {})
{
    StateSet t = m.closure({uniform(rng, 0, m.size() - 1)});
    for (int q : t)
        if (set_has(avoid, q)) return {};
    return t;
}

inline ExprPtr random_expr(std::mt19937_64 &rng, const ConditionMonitor &m, int depth)
{
    int pick = depth == 0 ? 0 : uniform(rng, 0, 3);
    if (pick == 0) return expr::open(random_trap(rng, m));
    if (pick == 1) return expr::negate(random_expr(rng, m, depth - 1));
    std::vector<Branch> bs;
    StateSet used;
    int n = uniform(rng, 1, 2);
    for (int i = 0; i < n; i++) {
        StateSet g = random_trap(rng, m, used);
        if (g.empty()) continue;
        used.insert(used.end(), g.begin(), g.end());
        used = normalize_set(used);
        bs.push_back(expr::branch(g, random_expr(rng, m, depth - 1)));
    }
    return expr::open_union(bs);
}

/**
 * Random expression of exactly the given class; nullptr when the monitor
 * has no room for the guards it needs.
 */
inline ExprPtr random_expr_of_class(std::mt19937_64 &rng, const ConditionMonitor &m, HierarchyClass c)
{
    if (c.kind == HierarchyClass::K) {
        auto inner = random_expr_of_class(rng, m, {HierarchyClass::Lambda, c.level});
        return inner ? expr::negate(inner) : nullptr;
    }
    if (c.level == 1) {
        if (uniform(rng, 0, 2) > 0) return expr::open(random_trap(rng, m));
        std::vector<Branch> bs;
        StateSet used;
        for (int i = uniform(rng, 1, 2); i > 0; i--) {
            StateSet g = random_trap(rng, m, used);
            if (g.empty()) continue;
            used = normalize_set([&] { auto u = used; u.insert(u.end(), g.begin(), g.end()); return u; }());
            bs.push_back(expr::branch(g, expr::open(random_trap(rng, m))));
        }
        return expr::open_union(bs);
    }
    // one branch carries K_{level-1}; the others are lower
    std::vector<Branch> bs;
    StateSet used;
    int n = uniform(rng, 1, 2);
    for (int i = 0; i < n; i++) {
        StateSet g = random_trap(rng, m, used);
        if (g.empty()) continue;
        used.insert(used.end(), g.begin(), g.end());
        used = normalize_set(used);
        HierarchyClass cc{HierarchyClass::K, c.level - 1};
        if (!bs.empty()) cc = {uniform(rng, 0, 1) ? HierarchyClass::K : HierarchyClass::Lambda, uniform(rng, 1, c.level - 1)};
        auto child = random_expr_of_class(rng, m, cc);
        if (!child) return nullptr;
        bs.push_back(expr::branch(g, child));
    }
    if (bs.empty()) return nullptr;
    return expr::open_union(bs);
}

inline GameSpec random_expr_game(std::mt19937_64 &rng, const RandomParams &p)
{
    GameSpec g;
    g.monitor = random_monitor(rng, uniform(rng, p.min_states, p.max_states), uniform(rng, 1, p.max_a),
                               uniform(rng, 1, p.max_b), 0, p);
    g.condition = random_expr(rng, g.monitor, uniform(rng, 0, p.depth));
    g.name = "random-expr";
    return g;
}

inline GameSpec random_energy_game(std::mt19937_64 &rng, const RandomParams &p)
{
    GameSpec g;
    g.monitor = random_monitor(rng, uniform(rng, p.min_states, p.max_states), uniform(rng, 1, p.max_a),
                               uniform(rng, 1, p.max_b), uniform(rng, 1, std::max(1, p.max_dim)), p);
    if (uniform(rng, 0, 1) == 0)
        g.condition = expr::energy_safe();
    else
        g.condition = expr::safe_or_reach(random_trap(rng, g.monitor));
    g.name = "random-energy";
    return g;
}

// ---------------------------------------------------------------------------
// Brute-force oracles, written independently of the solvers

namespace oracle {

/** Truth of e on a play whose periodic part runs through q (all sets are traps). */
inline bool holds(const ExprPtr &e, int q)
{
    if (e->kind == ExprKind::Open) return std::find(e->target.begin(), e->target.end(), q) != e->target.end();
    if (e->kind == ExprKind::Not) return !holds(e->child, q);
    if (e->kind == ExprKind::OpenUnion) {
        bool any = false;
        for (auto &b : e->branches)
            any = any || (std::find(b.guard.begin(), b.guard.end(), q) != b.guard.end() && holds(b.expr, q));
        return any;
    }
    fail(ErrorKind::Unsupported, "oracle::holds on an energy expression");
}

/** Membership of a lasso, by running the monitor over it directly. */
inline bool member_by_run(const UltimatelyPeriodicPlay &play, const ExprPtr &e, const ConditionMonitor &m)
{
    int q = m.initial();
    for (auto &p : play.prefix) q = m.step(q, p);
    // iterate the cycle until the state at the cycle start repeats
    std::vector<int> starts;
    while (std::find(starts.begin(), starts.end(), q) == starts.end()) {
        starts.push_back(q);
        for (auto &p : play.cycle) q = m.step(q, p);
    }
    return holds(e, q);
}

/**
 * Winner at the initial state of an energy-free game by enumerating the
 * positional strategies of Player 1 (weak conditions are positionally
 * determined).
 */
inline bool player1_wins_d0(const ExprPtr &e, const ConditionMonitor &m)
{
    const int n = m.size(), na = m.alphabet().size_a(), nb = m.alphabet().size_b();
    std::vector<int> sigma(n, 0);
    for (;;) {
        std::vector<std::vector<int>> succ(n);
        for (int q = 0; q < n; q++)
            for (int b = 0; b < nb; b++) succ[q].push_back(m.step(q, {sigma[q], b}));
        auto reach_from = [&](int s) {
            std::vector<bool> seen(n, false);
            std::vector<int> stack{s};
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int w : succ[v])
                    if (!seen[w]) seen[w] = true, stack.push_back(w);
            }
            return seen; // strict successors
        };
        auto reach = reach_from(m.initial());
        reach[m.initial()] = true;
        bool ok = true;
        for (int q = 0; q < n && ok; q++)
            if (reach[q] && reach_from(q)[q] && !holds(e, q)) ok = false;
        if (ok) return true;
        int i = 0;
        while (i < n && sigma[i] == na - 1) sigma[i++] = 0;
        if (i == n) return false;
        sigma[i]++;
    }
}

/**
 * Winner of the energy game where every counter is clamped at cap, as an
 * explicit safety game over (state, credit vector) nodes.
 */
inline bool player1_wins_energy(const ExprPtr &e, const ConditionMonitor &m, long long cap = 16)
{
    EnergyForm f = energy_form(e);
    const int d = m.dim(), n = m.size(), na = m.alphabet().size_a(), nb = m.alphabet().size_b();
    long long span = cap + 1, per = 1;
    for (int i = 0; i < d; i++) per *= span;
    const long long N = n * per;
    auto encode = [&](int q, const Vec &v) {
        long long k = 0;
        for (int i = d - 1; i >= 0; i--) k = k * span + v[i];
        return q * per + k;
    };
    auto decode = [&](long long id, int &q, Vec &v) {
        q = (int)(id / per);
        long long k = id % per;
        v.assign(d, 0);
        for (int i = 0; i < d; i++) v[i] = k % span, k /= span;
    };
    bool reach = f.kind == EnergyForm::SafeOrReach;
    auto in_target = [&](int q) { return reach && set_has(f.target, q); };
    // -1: leads to a loss, -2: leads to the target, else the node
    auto succ = [&](long long id, int a, int b) -> long long {
        int q;
        Vec v;
        decode(id, q, v);
        int t = m.step(q, {a, b});
        if (in_target(t)) return -2;
        const Vec &w = m.weight(q, {a, b});
        for (int i = 0; i < d; i++) {
            v[i] += w[i];
            if (v[i] < 0) return -1;
            v[i] = std::min(v[i], cap);
        }
        return encode(t, v);
    };
    std::vector<char> win(N, 1);
    for (bool changed = true; changed;) {
        changed = false;
        for (long long id = 0; id < N; id++) {
            if (!win[id]) continue;
            bool some = false;
            for (int a = 0; a < na && !some; a++) {
                bool all = true;
                for (int b = 0; b < nb && all; b++) {
                    long long s = succ(id, a, b);
                    all = s == -2 || (s >= 0 && win[s]);
                }
                some = all;
            }
            if (!some) win[id] = 0, changed = true;
        }
    }
    if (in_target(m.initial())) return true;
    Vec c = m.credit();
    for (auto &x : c) x = std::min(x, cap);
    return win[encode(m.initial(), c)];
}

} // namespace oracle

// ---------------------------------------------------------------------------
// Corpus runner

struct CorpusResult {
    std::string name;
    bool pass = true;
    std::vector<std::string> failures;
    json report;
};

struct CorpusOptions {
    unsigned jobs = 0; // 0 = hardware concurrency
    uint64_t seed = 42;
    bool timing = true;
    std::string base_dir;
};

namespace detail {

inline void expect(CorpusResult &r, bool ok, const std::string &what)
{
    if (!ok) {
        r.pass = false;
        r.failures.push_back(what);
    }
}

// Every machine over A x {0} with at most k states, totalised canonically.
inline std::vector<FiniteMemoryMachine> one_player_machines(int na, int max_states)
{
    std::vector<FiniteMemoryMachine> out;
    Alphabet al = Alphabet::numbered(na, 1);
    for (int n = 1; n <= max_states; n++) {
        std::vector<std::string> names;
        for (int i = 0; i < n; i++) names.push_back("m" + std::to_string(i));
        long long total = 1;
        for (int i = 0; i < n; i++) total *= na * n; // decision and successor per state
        for (long long code = 0; code < total; code++) {
            long long c = code;
            std::vector<int> dec(n);
            std::vector<std::vector<int>> up(n, std::vector<int>(al.letters()));
            for (int i = 0; i < n; i++) {
                dec[i] = (int)(c % na), c /= na;
                int t = (int)(c % n);
                c /= n;
                for (int l = 0; l < al.letters(); l++) up[i][l] = i;
                up[i][al.letter(dec[i], 0)] = t;
            }
            out.emplace_back(al, names, dec, up, 0);
        }
    }
    return out;
}

} // namespace detail

/**
 * Player-2 machines with exactly n states for the opponent game, over the
 * swapped alphabet: only the pairs (sigma(x), a) are free, the rest loop.
 */
inline void for_each_opponent_machine(int n, const std::function<void(const FiniteMemoryMachine &)> &fn)
{
    Alphabet al = Alphabet::numbered(2, 2);
    std::vector<std::string> names;
    for (int i = 0; i < n; i++) names.push_back("m" + std::to_string(i));
    long long total = 1;
    for (int i = 0; i < n; i++) total *= 2LL * n * n;
    for (long long code = 0; code < total; code++) {
        long long c = code;
        std::vector<int> dec(n);
        std::vector<std::vector<int>> up(n, std::vector<int>(4));
        for (int i = 0; i < n; i++) {
            dec[i] = (int)(c % 2), c /= 2;
            for (int l = 0; l < 4; l++) up[i][l] = i;
            for (int a = 0; a < 2; a++) {
                up[i][al.letter(dec[i], a)] = (int)(c % n);
                c /= n;
            }
        }
        fn(FiniteMemoryMachine(al, names, dec, up, 0));
    }
}

/** Falsifies every small machine of a one-player counterexample game; returns the count. */
inline long long falsify_all_small(CounterexampleKind kind, int max_states, std::string *error = nullptr)
{
    auto g = build_counterexample(kind);
    long long n = 0;
    for (auto &s : detail::one_player_machines(g.alphabet.size_a(), max_states)) {
        try {
            auto w = falsify_machine(s, g);
            bool valid = true;
            if (kind == CounterexampleKind::DisjunctivePi02) {
                std::vector<int> pre(g.base.begin(), g.base.begin() + (long)w.length);
                valid = !is_factor(pre, a_projection(w.play));
            } else {
                valid = w.window == 2 * w.play.cycle.size() + 1 && !find_overlap(g.base, w.play.cycle.size());
            }
            if (!valid) {
                if (error) *error = "invalid witness";
                return n;
            }
            n++;
        } catch (const Error &e) {
            if (error) *error = e.what();
            return n;
        }
    }
    return n;
}

inline json game_report(const GameSpec &g, const SynthOptions &opts, bool timing)
{
    json r;
    auto t0 = std::chrono::steady_clock::now();
    r["classification"] = class_string(classify(g.condition));
    try {
        auto s = synth(g.condition, g.monitor, opts);
        r["winner"] = "player1";
        r["machine"] = {{"states", s.size()}};
        r["verdict"] = "Winning";
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NoWinningStrategy) throw;
        r["winner"] = "player2";
    }
    if (timing)
        r["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline CorpusResult run_entry(const json &e, const CorpusOptions &opts)
{
    CorpusResult r;
    r.name = e.value("name", "");
    auto path = [&](const std::string &p) {
        std::filesystem::path x(p);
        return x.is_absolute() || opts.base_dir.empty() ? p : (std::filesystem::path(opts.base_dir) / x).string();
    };
    const json expect = e.value("expect", json::object());
    SynthOptions so;
    try {
        if (e.contains("game")) {
            GameSpec g = load_game(path(e["game"]));
            r.report = game_report(g, so, opts.timing);
            if (expect.contains("class")) detail::expect(r, r.report["classification"] == expect["class"], "class");
            if (expect.contains("winner")) detail::expect(r, r.report["winner"] == expect["winner"], "winner");
            if (e.contains("machine")) {
                auto s = load_machine(path(e["machine"]));
                Verdict v = verify_machine(s, g.condition, g.monitor);
                r.report["supplied"] = verdict_to_json(v, g.monitor.alphabet());
                if (expect.contains("verdict"))
                    detail::expect(r, expect["verdict"] == outcome_name(v.outcome), "verdict");
                if (expect.contains("witness") && v.witness)
                    detail::expect(r, expect["witness"] == bword_to_json(*v.witness, g.monitor.alphabet()), "witness");
            }
            if (expect.contains("depths")) {
                auto plan = plan_K(g.condition, g.monitor, false);
                json d = json::object();
                for (size_t j = 0; j < plan.depths.size(); j++)
                    d[config_string(plan.reps_closed.elements[j], g.monitor)] = plan.depths[j];
                r.report["depths"] = d;
                detail::expect(r, d == expect["depths"], "depths");
            }
        } else if (e.contains("generator")) {
            std::string kind = e["generator"];
            int count = e.value("count", 10);
            std::mt19937_64 rng(opts.seed + e.value("seedOffset", 0));
            int agree = 0, winning = 0, verified = 0;
            RandomParams p;
            if (kind == "energy") p.max_dim = 2;
            for (int i = 0; i < count; i++) {
                GameSpec g = kind == "energy" ? random_energy_game(rng, p) : random_expr_game(rng, p);
                bool brute = kind == "energy" ? oracle::player1_wins_energy(g.condition, g.monitor)
                                              : oracle::player1_wins_d0(g.condition, g.monitor);
                auto region = winning_region(g.condition, g.monitor);
                bool ours = region.contains(initial_config(g.monitor));
                agree += brute == ours;
                if (ours) {
                    winning++;
                    auto s = synth(g.condition, g.monitor, so);
                    verified += verify_machine(s, g.condition, g.monitor).outcome == Verdict::Winning;
                }
            }
            r.report = {{"generator", kind}, {"count", count}, {"agree", agree}, {"winning", winning}, {"verified", verified}};
            if (expect.contains("agree")) detail::expect(r, agree == expect["agree"].get<int>(), "agree");
            detail::expect(r, verified == winning, "verified");
        } else if (e.contains("counterexample")) {
            std::string kind = e["counterexample"];
            if (kind == "OpponentGame") {
                int m = e.value("maxStates", 2);
                long long defeated = 0, total = 0;
                auto g = build_counterexample(CounterexampleKind::OpponentGame);
                for (int n = 1; n <= m; n++)
                    for_each_opponent_machine(n, [&](const FiniteMemoryMachine &s) {
                        total++;
                        auto w = falsify_machine(s, g);
                        defeated += g.member(w.play);
                    });
                r.report = {{"counterexample", kind}, {"machines", total}, {"defeated", defeated}};
                detail::expect(r, defeated == total, "defeated");
            } else {
                auto k = kind == "DisjunctivePi02" ? CounterexampleKind::DisjunctivePi02
                                                   : CounterexampleKind::IrregularSuffixSigma02;
                if (kind != "DisjunctivePi02" && kind != "IrregularSuffixSigma02")
                    fail(ErrorKind::InvalidParams, "unknown counterexample " + kind);
                int m = e.value("maxStates", 2);
                std::string err;
                long long n = falsify_all_small(k, m, &err);
                long long total = (long long)detail::one_player_machines(2, m).size();
                r.report = {{"counterexample", kind}, {"machines", total}, {"falsified", n}};
                detail::expect(r, n == total, "falsified" + (err.empty() ? "" : ": " + err));
            }
        } else {
            fail(ErrorKind::Schema, "manifest entry \"" + r.name + "\" has no game, generator or counterexample");
        }
    } catch (const Error &x) {
        r.report["error"] = {{"kind", error_kind_name(x.kind())}, {"message", x.what()}};
        detail::expect(r, expect.value("error", "") == error_kind_name(x.kind()), std::string("error: ") + x.what());
    } catch (const std::exception &x) {
        r.report["error"] = {{"kind", "Schema"}, {"message", x.what()}};
        detail::expect(r, false, std::string("error: ") + x.what());
    }
    r.report["pass"] = r.pass;
    if (!r.failures.empty()) r.report["failures"] = r.failures;
    return r;
}

/** Runs the entries on a worker pool; results are ordered by name. */
inline std::vector<CorpusResult> run_corpus(const json &manifest, const CorpusOptions &opts)
{
    const json entries = manifest.is_object() ? manifest.value("entries", json::array()) : manifest;
    if (!entries.is_array()) fail(ErrorKind::Schema, "manifest entries must be an array");
    std::vector<CorpusResult> out(entries.size());
    std::atomic<size_t> next{0};
    unsigned jobs = opts.jobs ? opts.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, std::max<size_t>(1, entries.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; t++)
        pool.emplace_back([&] {
            for (size_t i; (i = next++) < entries.size();) out[i] = run_entry(entries[i], opts);
        });
    for (auto &t : pool) t.join();
    std::stable_sort(out.begin(), out.end(), [](const CorpusResult &a, const CorpusResult &b) { return a.name < b.name; });
    return out;
}

} // namespace deltasynth
