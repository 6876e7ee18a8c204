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

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "condition.hpp"

namespace deltasynth {

/**
 * Finite surrogate of a history: monitor state plus energy. A history
 * whose energy ever dropped below zero is marked exhausted; its energy
 * vector is then meaningless and kept at zero.
 */
struct Configuration {
    int state = 0;
    Vec energy;
    bool exhausted = false;
    uint64_t monitor = 0;

    bool operator==(const Configuration &) const = default;
    auto operator<=>(const Configuration &) const = default;
};

inline Configuration initial_config(const ConditionMonitor &m) { return {m.initial(), m.credit(), false, m.id()}; }

/** One step; cap < 0 means no clamping. */
inline Configuration step(const ConditionMonitor &m, const Configuration &c, Pair p, long long cap = -1)
{
    Configuration r = c;
    r.state = m.step(c.state, p);
    if (m.dim() == 0 || c.exhausted) return r;
    const Vec &w = m.weight(c.state, p);
    for (int i = 0; i < m.dim(); i++) {
        r.energy[i] += w[i];
        if (r.energy[i] < 0) r.exhausted = true;
        if (cap >= 0 && r.energy[i] > cap) r.energy[i] = cap;
    }
    if (r.exhausted) std::fill(r.energy.begin(), r.energy.end(), 0);
    return r;
}

inline Configuration config(const History &h, const ConditionMonitor &m)
{
    check_history(m.alphabet(), h);
    Configuration c = initial_config(m);
    for (auto &p : h) c = step(m, c, p);
    return c;
}

inline std::string config_string(const Configuration &c, const ConditionMonitor &m)
{
    std::string s = m.name(c.state);
    if (c.exhausted) return s + "[-]";
    if (!c.energy.empty()) {
        s += "[";
        for (size_t i = 0; i < c.energy.size(); i++) s += (i ? "," : "") + std::to_string(c.energy[i]);
        s += "]";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Order

enum class OrderMode { Structural, ExactRegular };

struct OrderWitness {
    OrderMode mode = OrderMode::Structural;
    uint64_t monitor = 0;
    int n = 0;
    std::vector<char> rel; // ExactRegular: rel[p * n + q] iff W_p c W_q
};

inline OrderWitness structural_order(const ConditionMonitor &m) { return {OrderMode::Structural, m.id(), m.size(), {}}; }

/**
 * Exact inclusion of induced winning sets for energy-free conditions on
 * energy-free monitors. W_p is not included in W_q iff some word drives
 * the pair (p, q) into a cycle labelled 1 on the left and 0 on the right.
 */
inline OrderWitness exact_order(const ExprPtr &e, const ConditionMonitor &m)
{
    if (m.dim() > 0 || mentions_energy(e)) fail(ErrorKind::Unsupported, "exact order needs an energy-free game");
    validate(e, m);
    const int n = m.size(), L = m.alphabet().letters();
    auto lab = state_labels(e, m);
    graph::Edges g(n * n);
    for (int p = 0; p < n; p++)
        for (int q = 0; q < n; q++)
            for (int l = 0; l < L; l++) g[p * n + q].push_back({l, m.step_letter(p, l) * n + m.step_letter(q, l)});
    std::vector<bool> mask(n * n);
    for (int p = 0; p < n; p++)
        for (int q = 0; q < n; q++) mask[p * n + q] = lab[p] == 1 && lab[q] == 0;
    auto s = graph::tarjan(g, mask);
    std::vector<int> seeds;
    for (int v = 0; v < n * n; v++)
        if (mask[v] && s.cyclic[s.comp[v]]) seeds.push_back(v);
    graph::Edges rev(n * n);
    for (int v = 0; v < n * n; v++)
        for (auto &[l, w] : g[v]) rev[w].push_back({l, v});
    auto bad = graph::reachable(rev, seeds);
    OrderWitness o{OrderMode::ExactRegular, m.id(), n, std::vector<char>(n * n)};
    for (int v = 0; v < n * n; v++) o.rel[v] = !bad[v];
    return o;
}

inline OrderWitness make_order(OrderMode mode, const ExprPtr &e, const ConditionMonitor &m)
{
    return mode == OrderMode::Structural ? structural_order(m) : exact_order(e, m);
}

inline bool leq(const Configuration &c1, const Configuration &c2, const OrderWitness &ord)
{
    if (c1.monitor != c2.monitor || c1.monitor != ord.monitor)
        fail(ErrorKind::MonitorMismatch, "configurations from different monitors");
    if (ord.mode == OrderMode::ExactRegular) return ord.rel[c1.state * ord.n + c2.state];
    if (c1.state != c2.state) return false;
    if (c1.exhausted) return true;
    if (c2.exhausted) return false;
    for (size_t i = 0; i < c1.energy.size(); i++)
        if (c1.energy[i] > c2.energy[i]) return false;
    return true;
}

inline bool step_order_preserved(const Configuration &c1, const Configuration &c2, Pair p, const OrderWitness &ord,
                                 const ConditionMonitor &m)
{
    return leq(step(m, c1, p), step(m, c2, p), ord);
}

// ---------------------------------------------------------------------------
// Controllable predecessors

/** d = 0: states with an action keeping every reply in target. */
inline StateSet cpre(const ConditionMonitor &m, const StateSet &target)
{
    StateSet r;
    const Alphabet &al = m.alphabet();
    for (int q = 0; q < m.size(); q++)
        for (int a = 0; a < al.size_a(); a++) {
            bool ok = true;
            for (int b = 0; b < al.size_b() && ok; b++) ok = set_has(target, m.step(q, {a, b}));
            if (ok) {
                r.push_back(q);
                break;
            }
        }
    return r;
}

/**
 * Upward-closed configuration set: per state, the minimal credits, or
 * everything (exhausted configurations included).
 */
struct EnergySet {
    std::vector<std::vector<Vec>> frontier;
    std::vector<bool> all;

    bool contains(const Configuration &c) const
    {
        if (all[c.state]) return true;
        if (c.exhausted) return false;
        for (auto &x : frontier[c.state]) {
            bool ge = true;
            for (size_t i = 0; i < x.size() && ge; i++) ge = c.energy[i] >= x[i];
            if (ge) return true;
        }
        return false;
    }
};

inline bool vec_leq(const Vec &x, const Vec &y)
{
    for (size_t i = 0; i < x.size(); i++)
        if (x[i] > y[i]) return false;
    return true;
}

inline std::vector<Vec> minimal_vectors(std::vector<Vec> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<Vec> out;
    for (auto &x : v) {
        bool dominated = false;
        for (auto &y : out)
            if (vec_leq(y, x)) dominated = true;
        if (!dominated) out.push_back(x);
    }
    return out;
}

namespace detail {

// Minimal credits at q from which action a keeps every reply in target
// within the clamped arena; nullopt when a loses outright.
inline std::optional<std::vector<Vec>> credits_for(const ConditionMonitor &m, const EnergySet &target, int q, int a,
                                                   long long cap)
{
    const int d = m.dim();
    std::vector<Vec> acc{Vec(d, 0)};
    for (int b = 0; b < m.alphabet().size_b(); b++) {
        int t = m.step(q, {a, b});
        if (target.all[t]) continue;
        const Vec &w = m.weight(q, {a, b});
        std::vector<Vec> next;
        for (auto &s : acc)
            for (auto &x : target.frontier[t]) {
                Vec e(d);
                bool ok = true;
                for (int i = 0; i < d; i++) {
                    e[i] = std::max({s[i], x[i] - w[i], 0LL});
                    if (e[i] > cap) ok = false;
                }
                if (ok) next.push_back(e);
            }
        if (next.empty()) return std::nullopt;
        acc = minimal_vectors(std::move(next));
    }
    return acc;
}

} // namespace detail

/** d > 0: controllable predecessor of an upward-closed set, clamped at cap. */
inline EnergySet cpre(const ConditionMonitor &m, const EnergySet &target, long long cap)
{
    EnergySet r;
    r.frontier.resize(m.size());
    r.all.assign(m.size(), false);
    const Alphabet &al = m.alphabet();
    for (int q = 0; q < m.size(); q++) {
        for (int a = 0; a < al.size_a(); a++) {
            bool every = true;
            for (int b = 0; b < al.size_b() && every; b++) every = target.all[m.step(q, {a, b})];
            if (every) r.all[q] = true;
        }
        if (r.all[q]) {
            r.frontier[q] = {Vec(m.dim(), 0)};
            continue;
        }
        std::vector<Vec> acc;
        for (int a = 0; a < al.size_a(); a++)
            if (auto c = detail::credits_for(m, target, q, a, cap)) acc.insert(acc.end(), c->begin(), c->end());
        r.frontier[q] = minimal_vectors(std::move(acc));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Winning regions

/** Shape of an energy condition, after peeling double negations. */
struct EnergyForm {
    enum Kind { None, Safe, SafeOrReach } kind = None;
    StateSet target;
};

inline ExprPtr strip_double_negation(ExprPtr e)
{
    while (e->kind == ExprKind::Not && e->child->kind == ExprKind::Not) e = e->child->child;
    return e;
}

inline EnergyForm energy_form(const ExprPtr &expr)
{
    if (!mentions_energy(expr)) return {};
    ExprPtr e = strip_double_negation(expr);
    if (e->kind == ExprKind::EnergySafe) return {EnergyForm::Safe, {}};
    if (e->kind == ExprKind::Not && e->child->kind == ExprKind::OpenUnion && e->child->branches.size() == 1 &&
        e->child->branches[0].deficit) {
        ExprPtr inner = strip_double_negation(e->child->branches[0].expr);
        if (inner->kind == ExprKind::Not && inner->child->kind == ExprKind::Open)
            return {EnergyForm::SafeOrReach, inner->child->target};
    }
    fail(ErrorKind::Unsupported, "energy condition outside {energySafe, energySafe or open}");
}

inline long long default_cap(const ConditionMonitor &m)
{
    long long cap = 16;
    for (auto c : m.credit()) cap = std::max(cap, c);
    cap = std::max(cap, 2LL * m.size() * m.max_abs_weight() * m.dim());
    return cap;
}

/** Attractor of a state set, with the action that makes progress. */
struct Attractor {
    std::vector<bool> in;
    std::vector<int> action;
    std::vector<int> rank;
};

inline Attractor attractor(const ConditionMonitor &m, const StateSet &target)
{
    const Alphabet &al = m.alphabet();
    Attractor r{std::vector<bool>(m.size(), false), std::vector<int>(m.size(), -1), std::vector<int>(m.size(), -1)};
    for (int q : target) r.in[q] = true, r.rank[q] = 0;
    for (int round = 1;; round++) {
        std::vector<int> add;
        for (int q = 0; q < m.size(); q++) {
            if (r.in[q]) continue;
            for (int a = 0; a < al.size_a(); a++) {
                bool ok = true;
                for (int b = 0; b < al.size_b() && ok; b++) ok = r.in[m.step(q, {a, b})];
                if (ok) {
                    add.push_back(q);
                    r.action[q] = a;
                    break;
                }
            }
        }
        if (add.empty()) break;
        for (int q : add) r.in[q] = true, r.rank[q] = round;
    }
    return r;
}

/**
 * Configurations from which Player 1 wins. For energy-free conditions the
 * region is a set of monitor states with a positional winning strategy;
 * for energy conditions it is an upward-closed set in the arena where
 * credits are clamped at cap.
 */
struct WinningRegion {
    enum Kind { States, Energy } kind = States;
    ConditionMonitor monitor;
    ExprPtr expr;
    // States
    std::vector<bool> win;
    std::vector<int> hint;
    // Energy
    EnergyForm form;
    long long cap = 0;
    EnergySet set;
    Attractor attr;

    bool contains(const Configuration &c) const
    {
        if (c.monitor != monitor.id()) fail(ErrorKind::MonitorMismatch, "configuration from another monitor");
        if (kind == States) return win[c.state];
        return set.contains(c);
    }

    /** Positional (on configurations) winning action. */
    int strategy(const Configuration &c) const;
};

namespace detail {

// Weak game: the label is constant on strongly connected parts, so the
// parts are solved bottom-up, greatest fixpoint for label 1, least for 0.
inline void solve_weak(const ConditionMonitor &m, const std::vector<int> &lab, std::vector<bool> &win,
                       std::vector<int> &hint)
{
    const Alphabet &al = m.alphabet();
    auto g = m.edges();
    auto s = graph::tarjan(g);
    std::vector<std::vector<int>> members(s.count);
    for (int q = 0; q < m.size(); q++) members[s.comp[q]].push_back(q);
    win.assign(m.size(), false);
    hint.assign(m.size(), -1);
    for (int c = 0; c < s.count; c++) {
        const auto &mem = members[c];
        std::vector<bool> cur(m.size(), false);
        bool one = lab[mem[0]] == 1;
        if (one)
            for (int q : mem) cur[q] = true;
        auto good = [&](int q, int a) {
            for (int b = 0; b < al.size_b(); b++) {
                int t = m.step(q, {a, b});
                if (s.comp[t] == c ? !cur[t] : !win[t]) return false;
            }
            return true;
        };
        for (bool changed = true; changed;) {
            changed = false;
            for (int q : mem) {
                int found = -1;
                for (int a = 0; a < al.size_a() && found < 0; a++)
                    if (good(q, a)) found = a;
                if (one && cur[q] && found < 0) cur[q] = false, changed = true;
                if (!one && !cur[q] && found >= 0) cur[q] = true, hint[q] = found, changed = true;
            }
        }
        for (int q : mem) {
            win[q] = cur[q];
            if (one && cur[q])
                for (int a = 0; a < al.size_a(); a++)
                    if (good(q, a)) {
                        hint[q] = a;
                        break;
                    }
        }
    }
}

} // namespace detail

inline WinningRegion winning_region(const ExprPtr &expr, const ConditionMonitor &m, long long cap = -1)
{
    validate(expr, m);
    WinningRegion r;
    r.monitor = m;
    r.expr = expr;
    r.form = energy_form(expr);
    if (r.form.kind == EnergyForm::None) {
        r.kind = WinningRegion::States;
        detail::solve_weak(m, state_labels(expr, m), r.win, r.hint);
        return r;
    }
    r.kind = WinningRegion::Energy;
    r.cap = cap >= 0 ? cap : default_cap(m);
    if (r.form.kind == EnergyForm::SafeOrReach)
        r.attr = attractor(m, r.form.target);
    else
        r.attr = attractor(m, {});
    EnergySet cur;
    cur.all = r.attr.in;
    cur.frontier.assign(m.size(), {Vec(m.dim(), 0)});
    // descending from "everything wins"; cpre is monotone
    for (;;) {
        EnergySet next = cpre(m, cur, r.cap);
        for (int q = 0; q < m.size(); q++)
            if (r.attr.in[q]) next.all[q] = true, next.frontier[q] = {Vec(m.dim(), 0)};
        if (next.all == cur.all && next.frontier == cur.frontier) break;
        cur = std::move(next);
    }
    r.set = std::move(cur);
    return r;
}

inline std::vector<int> non_losing_actions(const Configuration &c, const WinningRegion &region)
{
    if (!region.contains(c)) fail(ErrorKind::NotWinning, "configuration outside the winning region");
    const ConditionMonitor &m = region.monitor;
    std::vector<int> r;
    for (int a = 0; a < m.alphabet().size_a(); a++) {
        bool ok = true;
        for (int b = 0; b < m.alphabet().size_b() && ok; b++) ok = region.contains(step(m, c, {a, b}));
        if (ok) r.push_back(a);
    }
    if (r.empty()) fail(ErrorKind::Internal, "winning configuration without a non-losing action");
    return r;
}

inline int WinningRegion::strategy(const Configuration &c) const
{
    if (kind == States) {
        if (!win[c.state]) fail(ErrorKind::NotWinning, "configuration outside the winning region");
        return hint[c.state];
    }
    if (attr.in[c.state] && form.kind == EnergyForm::SafeOrReach) {
        if (attr.action[c.state] >= 0) return attr.action[c.state];
        return 0; // target reached
    }
    return non_losing_actions(c, *this).front();
}

// ---------------------------------------------------------------------------
// Antichains

struct MinSet {
    std::vector<Configuration> elements;
    std::string domain;
};

inline bool canonical_less(const Configuration &x, const Configuration &y, const ConditionMonitor &m)
{
    int rx = m.bfs_rank(x.state), ry = m.bfs_rank(y.state);
    if (rx != ry) return rx < ry;
    if (x.exhausted != y.exhausted) return x.exhausted;
    return x.energy < y.energy;
}

/** Deterministic finite antichain covering the domain from below. */
inline MinSet min_set(std::vector<Configuration> domain, const OrderWitness &ord, const ConditionMonitor &m,
                      std::string what = "")
{
    std::stable_sort(domain.begin(), domain.end(),
                     [&](const Configuration &x, const Configuration &y) { return canonical_less(x, y, m); });
    MinSet r;
    r.domain = std::move(what);
    for (auto &x : domain) {
        bool covered = false;
        for (auto &y : r.elements)
            if (leq(y, x, ord)) {
                covered = true;
                break;
            }
        if (covered) continue;
        std::erase_if(r.elements, [&](const Configuration &z) { return leq(x, z, ord); });
        r.elements.push_back(x);
    }
    std::stable_sort(r.elements.begin(), r.elements.end(),
                     [&](const Configuration &x, const Configuration &y) { return canonical_less(x, y, m); });
    return r;
}

/** First element (canonical order) below c, or -1. */
inline int first_below(const MinSet &s, const Configuration &c, const OrderWitness &ord)
{
    for (size_t i = 0; i < s.elements.size(); i++)
        if (leq(s.elements[i], c, ord)) return (int)i;
    return -1;
}

inline long long env_budget(long long fallback = 1000000)
{
    if (const char *v = std::getenv("DELTASYNTH_BUDGET")) {
        char *end = nullptr;
        long long b = std::strtoll(v, &end, 10);
        if (end && *end == '\0' && b > 0) return b;
    }
    return fallback;
}

/**
 * Configurations of Gamma reachable from start when Player 1 only plays
 * non-losing actions; breadth-first, clamped when the region is.
 */
inline std::vector<Configuration> reachable_gamma(const WinningRegion &region, const Configuration &start,
                                                  long long budget)
{
    const ConditionMonitor &m = region.monitor;
    long long cap = region.kind == WinningRegion::Energy ? region.cap : -1;
    std::vector<Configuration> out;
    if (!region.contains(start)) return out;
    std::map<Configuration, bool> seen;
    std::deque<Configuration> q{start};
    seen[start] = true;
    while (!q.empty()) {
        Configuration c = q.front();
        q.pop_front();
        out.push_back(c);
        if ((long long)out.size() > budget) fail(ErrorKind::BudgetExceeded, "reachable configurations exceed the budget");
        for (int a : non_losing_actions(c, region))
            for (int b = 0; b < m.alphabet().size_b(); b++) {
                Configuration t = step(m, c, {a, b}, cap);
                if (!seen.count(t)) {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
    }
    return out;
}

} // namespace deltasynth
