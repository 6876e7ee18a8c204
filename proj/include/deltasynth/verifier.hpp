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

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "order.hpp"

namespace deltasynth {

struct Verdict {
    enum Outcome { Winning, Losing, Unsupported } outcome = Winning;
    std::optional<BWord> witness;
    std::string reason;
};

inline const char *outcome_name(Verdict::Outcome o)
{
    switch (o) {
    case Verdict::Winning: return "Winning";
    case Verdict::Losing: return "Losing";
    case Verdict::Unsupported: return "Unsupported";
    }
    return "?";
}

/** Machine x monitor: one edge per Player-2 action, labelled by it. */
struct ProductGraph {
    int machine_states = 0, monitor_states = 0;
    graph::Edges edges;
    int start = 0;

    int node(int m, int q) const { return m * monitor_states + q; }
    int machine_of(int v) const { return v / monitor_states; }
    int monitor_of(int v) const { return v % monitor_states; }
};

inline ProductGraph product_graph(const FiniteMemoryMachine &s, const ConditionMonitor &m)
{
    if (!(s.alphabet().size_a() == m.alphabet().size_a() && s.alphabet().size_b() == m.alphabet().size_b()))
        fail(ErrorKind::InvalidAction, "machine and monitor alphabets differ");
    ProductGraph g;
    g.machine_states = s.size();
    g.monitor_states = m.size();
    g.edges.resize(s.size() * m.size());
    for (int x = 0; x < s.size(); x++)
        for (int q = 0; q < m.size(); q++)
            for (int b = 0; b < m.alphabet().size_b(); b++) {
                Pair p{s.decide(x), b};
                g.edges[g.node(x, q)].push_back({b, g.node(s.update(x, p), m.step(q, p))});
            }
    g.start = g.node(s.initial(), m.initial());
    return g;
}

namespace detail {

inline Verdict losing(std::vector<int> prefix, std::vector<int> cycle, std::string why)
{
    Verdict v;
    v.outcome = Verdict::Losing;
    v.witness = BWord{std::move(prefix), std::move(cycle)}.canonical();
    v.reason = std::move(why);
    return v;
}

// Searches for a play inside `allowed` along which counter i drops below
// -credit; any such play is extended to a lasso that stays in `allowed`.
inline std::optional<Verdict> energy_violation(const ProductGraph &g, const ConditionMonitor &m,
                                               const FiniteMemoryMachine &s, const std::vector<bool> &allowed)
{
    const int N = (int)g.edges.size();
    const long long INF = std::numeric_limits<long long>::max() / 4;
    auto weight = [&](int v, int b, int i) {
        int x = g.machine_of(v), q = g.monitor_of(v);
        return m.weight(q, {s.decide(x), b})[i];
    };
    for (int i = 0; i < m.dim(); i++) {
        std::vector<long long> dist(N, INF);
        std::vector<int> pred(N, -1), plab(N, -1);
        dist[g.start] = 0;
        int relaxed = -1;
        for (int round = 0; round < N; round++) {
            relaxed = -1;
            for (int v = 0; v < N; v++) {
                if (dist[v] == INF || !allowed[v]) continue;
                for (auto &[b, w] : g.edges[v]) {
                    if (!allowed[w]) continue;
                    long long nd = dist[v] + weight(v, b, i);
                    if (nd < dist[w]) {
                        dist[w] = nd;
                        pred[w] = v;
                        plab[w] = b;
                        relaxed = w;
                    }
                }
            }
            if (relaxed < 0) break;
        }
        auto path_to = [&](int v) {
            std::vector<int> labels;
            std::vector<bool> seen(N, false);
            for (int u = v; u != g.start && !seen[u]; u = pred[u]) {
                seen[u] = true;
                labels.push_back(plab[u]);
            }
            std::reverse(labels.begin(), labels.end());
            return labels;
        };
        if (relaxed >= 0) {
            // negative cycle: walk back into it
            int v = relaxed;
            for (int k = 0; k < N; k++) v = pred[v];
            std::vector<int> cycle;
            int u = v;
            do {
                cycle.push_back(plab[u]);
                u = pred[u];
            } while (u != v);
            std::reverse(cycle.begin(), cycle.end());
            auto stem = graph::bfs_path(g.edges, g.start, [&](int x) { return x == v; }, allowed);
            return losing(stem->first, cycle, "counter " + std::to_string(i) + " decreases along a reachable cycle");
        }
        for (int v = 0; v < N; v++) {
            if (dist[v] == INF || dist[v] >= -m.credit()[i]) continue;
            auto prefix = path_to(v);
            auto tail = graph::lasso_into(g.edges, v, allowed, allowed);
            if (!tail) continue;
            prefix.insert(prefix.end(), tail->first.begin(), tail->first.end());
            return losing(prefix, tail->second, "counter " + std::to_string(i) + " drops below zero");
        }
    }
    return std::nullopt;
}

} // namespace detail

/** Decides whether every play compatible with the machine lies in W. */
inline Verdict verify_machine(const FiniteMemoryMachine &s, const ExprPtr &expr, const ConditionMonitor &m)
{
    validate(expr, m);
    EnergyForm form = energy_form(expr);
    ProductGraph g = product_graph(s, m);
    const int N = (int)g.edges.size();
    auto reach = graph::reachable(g.edges, {g.start});

    if (form.kind == EnergyForm::None) {
        auto lab = state_labels(expr, m);
        std::vector<bool> bad(N);
        for (int v = 0; v < N; v++) bad[v] = reach[v] && lab[g.monitor_of(v)] == 0;
        auto l = graph::lasso_into(g.edges, g.start, bad);
        if (l) return detail::losing(l->first, l->second, "reachable cycle outside the winning set");
        return {};
    }

    std::vector<bool> allowed = reach;
    if (form.kind == EnergyForm::SafeOrReach) {
        // plays that avoid the target forever
        std::vector<bool> outside(N);
        for (int v = 0; v < N; v++) outside[v] = reach[v] && !set_has(form.target, g.monitor_of(v));
        auto sc = graph::tarjan(g.edges, outside);
        std::vector<int> seeds;
        for (int v = 0; v < N; v++)
            if (outside[v] && sc.cyclic[sc.comp[v]]) seeds.push_back(v);
        graph::Edges rev(N);
        for (int v = 0; v < N; v++)
            for (auto &[b, w] : g.edges[v])
                if (outside[v] && outside[w]) rev[w].push_back({b, v});
        allowed = graph::reachable(rev, seeds);
        if (!allowed[g.start]) return {};
    }
    if (auto v = detail::energy_violation(g, m, s, allowed)) return *v;
    return {};
}

struct Trace {
    History history;
    std::vector<Configuration> configs; // configs[k] after k steps
    std::vector<int> memory;            // memory state after k steps
};

inline Trace simulate(const FiniteMemoryMachine &s, const ConditionMonitor &m, const BWord &beta, size_t horizon)
{
    check_lasso(beta, s.alphabet());
    Trace t;
    Configuration c = initial_config(m);
    int x = s.initial();
    t.configs.push_back(c);
    t.memory.push_back(x);
    for (size_t k = 0; k < horizon; k++) {
        Pair p{s.decide(x), beta.at(k)};
        t.history.push_back(p);
        c = step(m, c, p);
        x = s.update(x, p);
        t.configs.push_back(c);
        t.memory.push_back(x);
    }
    return t;
}

/** Scripted adversary: the reply may depend on the history so far. */
inline Trace simulate(const FiniteMemoryMachine &s, const ConditionMonitor &m,
                      const std::function<int(const History &)> &responder, size_t horizon)
{
    Trace t;
    Configuration c = initial_config(m);
    int x = s.initial();
    t.configs.push_back(c);
    t.memory.push_back(x);
    for (size_t k = 0; k < horizon; k++) {
        Pair p{s.decide(x), responder(t.history)};
        check_history(s.alphabet(), {p});
        t.history.push_back(p);
        c = step(m, c, p);
        x = s.update(x, p);
        t.configs.push_back(c);
        t.memory.push_back(x);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Counterexample games

enum class CounterexampleKind { DisjunctivePi02, IrregularSuffixSigma02, OpponentGame };

inline const char *counterexample_name(CounterexampleKind k)
{
    switch (k) {
    case CounterexampleKind::DisjunctivePi02: return "DisjunctivePi02";
    case CounterexampleKind::IrregularSuffixSigma02: return "IrregularSuffixSigma02";
    case CounterexampleKind::OpponentGame: return "OpponentGame";
    }
    return "?";
}

/** Champernowne-style word over k letters: all words by length, then lexicographically. */
inline std::vector<int> champernowne(int k, size_t length)
{
    std::vector<int> w;
    for (int n = 1; w.size() < length; n++) {
        std::vector<int> word(n, 0);
        for (;;) {
            w.insert(w.end(), word.begin(), word.end());
            if (w.size() >= length) break;
            int i = n - 1;
            while (i >= 0 && word[i] == k - 1) word[i--] = 0;
            if (i < 0) break;
            word[i]++;
        }
    }
    w.resize(length);
    return w;
}

inline std::vector<int> thue_morse(size_t length)
{
    std::vector<int> w(length);
    for (size_t i = 0; i < length; i++) w[i] = __builtin_popcountll(i) & 1;
    return w;
}

struct CounterexampleParams {
    int actions = 2;       // |A| for the one-player games
    size_t search = 4096;  // length of w examined by oracles
};

/**
 * A game whose winning set is given by a membership oracle on lassos
 * rather than by a monitor.
 */
struct CounterexampleGame {
    CounterexampleKind kind;
    Alphabet alphabet;
    std::vector<int> base; // prefix of w (A-indices); empty for the opponent game
    CounterexampleParams params;
    std::function<bool(const UltimatelyPeriodicPlay &)> member;
};

/** Whether x occurs in u v^omega. */
inline bool is_factor(const std::vector<int> &x, const Lasso<int> &rho)
{
    size_t span = rho.prefix.size() + rho.cycle.size();
    for (size_t i = 0; i < span; i++) {
        bool ok = true;
        for (size_t j = 0; j < x.size() && ok; j++) ok = rho.at(i + j) == x[j];
        if (ok) return true;
    }
    return x.empty();
}

inline Lasso<int> a_projection(const UltimatelyPeriodicPlay &p)
{
    Lasso<int> r;
    for (auto &x : p.prefix) r.prefix.push_back(x.a);
    for (auto &x : p.cycle) r.cycle.push_back(x.a);
    return r;
}

/** Length of the shortest prefix of w that is not a factor of rho, if any up to |w|. */
inline std::optional<size_t> first_missing_prefix(const std::vector<int> &w, const Lasso<int> &rho)
{
    // factors are prefix-closed in length, so binary search would do; lengths are small
    for (size_t n = 1; n <= w.size(); n++)
        if (!is_factor(std::vector<int>(w.begin(), w.begin() + (long)n), rho)) return n;
    return std::nullopt;
}

/** Whether w[i .. i+len) has period p. */
inline bool window_periodic(const std::vector<int> &w, size_t i, size_t len, size_t p)
{
    for (size_t j = i + p; j < i + len; j++)
        if (w[j] != w[j - p]) return false;
    return true;
}

/** Some window of w of length 2p+1 with period p (an overlap), searched in w. */
inline std::optional<size_t> find_overlap(const std::vector<int> &w, size_t p)
{
    size_t len = 2 * p + 1;
    for (size_t i = 0; i + len <= w.size(); i++)
        if (window_periodic(w, i, len, p)) return i;
    return std::nullopt;
}

// Opponent game: Player 1 plays 0^n then 1 at position n; afterwards
// Player 2 either never plays 1 or plays his first 1 at offset k <= n.
inline bool opponent_member(const UltimatelyPeriodicPlay &rho)
{
    size_t span = rho.prefix.size() + 2 * rho.cycle.size() + 2;
    std::optional<size_t> n;
    for (size_t i = 0; i < span && !n; i++)
        if (rho.at(i).a == 1) n = i;
    if (!n) return false;
    size_t limit = *n + 1 + *n; // offsets 0..n
    for (size_t j = *n + 1; j <= limit; j++)
        if (rho.at(j).b == 1) return true;
    // no 1 within the allowed window: Player 1 wins only if Player 2 never plays 1
    size_t horizon = limit + 1 + rho.prefix.size() + rho.cycle.size();
    for (size_t j = limit + 1; j <= horizon; j++)
        if (rho.at(j).b == 1) return false;
    return true;
}

inline CounterexampleGame build_counterexample(CounterexampleKind kind, CounterexampleParams params = {})
{
    CounterexampleGame g;
    g.kind = kind;
    g.params = params;
    switch (kind) {
    case CounterexampleKind::DisjunctivePi02: {
        if (params.actions < 2) fail(ErrorKind::InvalidParams, "disjunctive game needs at least two actions");
        g.alphabet = Alphabet::numbered(params.actions, 1);
        g.base = champernowne(params.actions, params.search);
        auto w = g.base;
        g.member = [w](const UltimatelyPeriodicPlay &rho) {
            // winning iff every prefix of w is a factor; a lasso misses one
            auto miss = first_missing_prefix(w, a_projection(rho));
            if (!miss) fail(ErrorKind::BudgetExceeded, "all examined prefixes of w are factors of the play");
            return false;
        };
        return g;
    }
    case CounterexampleKind::IrregularSuffixSigma02: {
        if (params.actions != 2) fail(ErrorKind::InvalidParams, "the Thue-Morse game is over two actions");
        g.alphabet = Alphabet::numbered(2, 1);
        g.base = thue_morse(params.search);
        auto w = g.base;
        g.member = [w](const UltimatelyPeriodicPlay &rho) {
            // a common suffix with a lasso would give w an overlap of period |cycle|
            if (find_overlap(w, rho.cycle.size()))
                fail(ErrorKind::BudgetExceeded, "base word is not overlap-free in the examined range");
            return false;
        };
        return g;
    }
    case CounterexampleKind::OpponentGame:
        g.alphabet = Alphabet::numbered(2, 2);
        g.member = opponent_member;
        return g;
    }
    fail(ErrorKind::InvalidParams, "unknown counterexample kind");
}

struct FalsificationWitness {
    UltimatelyPeriodicPlay play; // the defeated machine's play
    size_t length = 0;           // C.1: missing prefix length; C.2: first index of the periodic part
    size_t window = 0;           // C.2: overlap window length 2p+1
    std::optional<BWord> prelude; // C.4: Player-1 word, as a lasso over A
};

/**
 * Player-2 machine for the opponent game: decide picks b, update reads
 * the pair with the roles swapped, i.e. over Alphabet(B, A).
 */
inline UltimatelyPeriodicPlay opponent_play(const FiniteMemoryMachine &p2, const BWord &alpha_word)
{
    auto swapped = machine_play(p2, alpha_word);
    UltimatelyPeriodicPlay r;
    for (auto &x : swapped.prefix) r.prefix.push_back({x.b, x.a});
    for (auto &x : swapped.cycle) r.cycle.push_back({x.b, x.a});
    return r.canonical();
}

inline FalsificationWitness falsify_machine(const FiniteMemoryMachine &s, const CounterexampleGame &g)
{
    FalsificationWitness fw;
    switch (g.kind) {
    case CounterexampleKind::DisjunctivePi02: {
        if (!(s.alphabet() == g.alphabet)) fail(ErrorKind::InvalidAction, "machine over another alphabet");
        fw.play = machine_play(s, BWord{{}, {0}});
        auto miss = first_missing_prefix(g.base, a_projection(fw.play));
        if (!miss) fail(ErrorKind::BudgetExceeded, "no missing prefix of w within the search bound");
        fw.length = *miss;
        return fw;
    }
    case CounterexampleKind::IrregularSuffixSigma02: {
        if (!(s.alphabet() == g.alphabet)) fail(ErrorKind::InvalidAction, "machine over another alphabet");
        fw.play = machine_play(s, BWord{{}, {0}});
        size_t p = fw.play.cycle.size();
        if (find_overlap(g.base, p)) fail(ErrorKind::BudgetExceeded, "base word has an overlap of that period");
        fw.length = fw.play.prefix.size();
        fw.window = 2 * p + 1;
        return fw;
    }
    case CounterexampleKind::OpponentGame: {
        if (s.alphabet().size_a() != 2 || s.alphabet().size_b() != 2)
            fail(ErrorKind::InvalidAction, "opponent machine must be over {0,1} x {0,1}");
        BWord prelude;
        prelude.prefix.assign(s.size() + 1, 0);
        prelude.prefix.push_back(1);
        prelude.cycle = {0};
        fw.prelude = prelude;
        fw.play = opponent_play(s, prelude);
        fw.length = s.size() + 1;
        if (!opponent_member(fw.play)) fail(ErrorKind::Internal, "prelude did not defeat the opponent machine");
        return fw;
    }
    }
    fail(ErrorKind::InvalidParams, "unknown counterexample kind");
}

} // namespace deltasynth
