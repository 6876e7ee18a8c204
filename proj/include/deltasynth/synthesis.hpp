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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "verifier.hpp"

namespace deltasynth {

struct SynthOptions {
    std::optional<OrderMode> order; // default: exact when energy-free, structural otherwise
    long long budget = env_budget();
    long long cap = -1;             // energy clamp; -1 = default_cap
    bool allow_any_class = false;   // apply a construction outside its class (for demonstrations)
};

/** Same monitor started elsewhere. */
inline ConditionMonitor rooted(const ConditionMonitor &m, int state, Vec credit = {})
{
    const int L = m.alphabet().letters();
    std::vector<std::vector<int>> step(m.size(), std::vector<int>(L));
    std::vector<std::vector<Vec>> weights;
    for (int q = 0; q < m.size(); q++)
        for (int l = 0; l < L; l++) step[q][l] = m.step_letter(q, l);
    if (m.dim() > 0) {
        weights.assign(m.size(), std::vector<Vec>(L));
        for (int q = 0; q < m.size(); q++)
            for (int l = 0; l < L; l++) weights[q][l] = m.weight_letter(q, l);
        if (credit.empty()) credit = m.credit();
    }
    return ConditionMonitor(m.alphabet(), m.names(), state, step, m.dim(), weights, credit);
}

/** Collects machine states; pairs never written stay self-loops. */
class MachineBuilder {
public:
    explicit MachineBuilder(Alphabet alpha) : alpha_(std::move(alpha)) {}

    int add(std::string name, int action)
    {
        int id = (int)names_.size();
        names_.push_back(std::move(name));
        decide_.push_back(action);
        update_.push_back(std::vector<int>(alpha_.letters(), id));
        return id;
    }

    void set(int from, Pair p, int to) { update_[from][alpha_.letter(p.a, p.b)] = to; }
    int size() const { return (int)names_.size(); }

    /** Copies a machine in; returns the index of its initial state. */
    int embed(const FiniteMemoryMachine &s, const std::string &prefix)
    {
        int off = size();
        for (int x = 0; x < s.size(); x++) add(prefix + s.name(x), s.decide(x));
        for (int x = 0; x < s.size(); x++)
            for (int a = 0; a < alpha_.size_a(); a++)
                for (int b = 0; b < alpha_.size_b(); b++) set(off + x, {a, b}, off + s.update(x, {a, b}));
        return off + s.initial();
    }

    FiniteMemoryMachine build(int initial) const
    {
        return FiniteMemoryMachine(alpha_, names_, decide_, update_, initial);
    }

private:
    Alphabet alpha_;
    std::vector<std::string> names_;
    std::vector<int> decide_;
    std::vector<std::vector<int>> update_;
};

inline FiniteMemoryMachine synth(const ExprPtr &expr, const ConditionMonitor &m, const SynthOptions &opts = {});

namespace detail {

inline OrderMode order_mode(const SynthOptions &o, const ExprPtr &e, const ConditionMonitor &m)
{
    if (o.order) return *o.order;
    return m.dim() == 0 && !mentions_energy(e) ? OrderMode::ExactRegular : OrderMode::Structural;
}

inline long long clamp_of(const WinningRegion &r) { return r.kind == WinningRegion::Energy ? r.cap : -1; }

inline void require_class(const ExprPtr &e, HierarchyClass::Kind kind, int level, const SynthOptions &o,
                          const char *op)
{
    auto c = classify(e);
    bool ok = c.kind == kind && (level < 0 ? true : c.level == level);
    if (!ok && !o.allow_any_class) fail(ErrorKind::WrongClass, std::string(op) + ": expression is " + class_string(c));
}

// Per state: every reachable cycle carries label 1.
inline std::vector<bool> sure_states(const ConditionMonitor &m, const std::vector<int> &lab)
{
    auto g = m.edges();
    auto s = graph::tarjan(g);
    std::vector<bool> bad_comp(s.count, false);
    for (int q = 0; q < m.size(); q++)
        if (s.cyclic[s.comp[q]] && !lab[q]) bad_comp[s.comp[q]] = true;
    // components are numbered sinks first, so successors come earlier
    std::vector<std::vector<int>> members(s.count);
    for (int q = 0; q < m.size(); q++) members[s.comp[q]].push_back(q);
    for (int c = 0; c < s.count; c++)
        for (int q : members[c])
            for (auto &[l, t] : g[q])
                if (bad_comp[s.comp[t]]) bad_comp[c] = true;
    std::vector<bool> r(m.size());
    for (int q = 0; q < m.size(); q++) r[q] = !bad_comp[s.comp[q]];
    return r;
}

inline std::vector<bool> labelled(const ConditionMonitor &m, const ExprPtr &e)
{
    auto lab = state_labels(e, m);
    return std::vector<bool>(lab.begin(), lab.end());
}

// Per state: some reachable cycle carries label 1.
inline std::vector<bool> possible_states(const ConditionMonitor &m, const std::vector<int> &lab)
{
    std::vector<int> neg(lab.size());
    for (size_t i = 0; i < lab.size(); i++) neg[i] = !lab[i];
    auto s = sure_states(m, neg);
    for (size_t i = 0; i < s.size(); i++) s[i] = !s[i];
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Open sets

/**
 * Attractor strategy to the target trap; one memory state per visited
 * monitor state outside it plus an absorbing "done".
 */
inline FiniteMemoryMachine synth_open(const ExprPtr &expr, const ConditionMonitor &m, const SynthOptions &opts = {})
{
    validate(expr, m);
    detail::require_class(expr, HierarchyClass::Lambda, 1, opts, "synth_open");
    if (mentions_energy(expr)) fail(ErrorKind::Unsupported, "synth_open on an energy condition");
    auto sure = detail::labelled(m, expr); // inside the target trap
    StateSet target;
    for (int q = 0; q < m.size(); q++)
        if (sure[q]) target.push_back(q);
    auto attr = attractor(m, target);
    if (!attr.in[m.initial()]) fail(ErrorKind::NoWinningStrategy, "initial state outside the attractor");

    MachineBuilder mb(m.alphabet());
    std::map<int, int> node;
    std::vector<int> order;
    auto visit = [&](int q) {
        if (node.count(q)) return node[q];
        if ((long long)node.size() >= opts.budget) fail(ErrorKind::BudgetExceeded, "open synthesis exceeds the budget");
        node[q] = mb.add(m.name(q), attr.action[q]);
        order.push_back(q);
        return node[q];
    };
    if (sure[m.initial()]) {
        int done = mb.add("done", 0);
        return mb.build(done);
    }
    int init = visit(m.initial());
    int done = -1;
    for (size_t i = 0; i < order.size(); i++) {
        int q = order[i];
        int a = attr.action[q];
        for (int b = 0; b < m.alphabet().size_b(); b++) {
            int t = m.step(q, {a, b});
            int to;
            if (sure[t]) {
                if (done < 0) done = mb.add("done", 0);
                to = done;
            } else {
                to = visit(t);
            }
            mb.set(node[q], {a, b}, to);
        }
    }
    return mb.build(init);
}

/** Nodes of the strategic tree of the attractor strategy cut at the target. */
inline long long pruned_tree_size(const ExprPtr &expr, const ConditionMonitor &m, long long budget = env_budget())
{
    auto sure = detail::labelled(m, expr); // inside the target trap
    StateSet target;
    for (int q = 0; q < m.size(); q++)
        if (sure[q]) target.push_back(q);
    auto attr = attractor(m, target);
    if (!attr.in[m.initial()]) fail(ErrorKind::NoWinningStrategy, "initial state outside the attractor");
    // ranks strictly decrease, so the count is finite
    std::vector<long long> count(m.size(), -1);
    std::function<long long(int)> size_from = [&](int q) -> long long {
        if (count[q] >= 0) return count[q];
        long long n = 1;
        if (!sure[q])
            for (int b = 0; b < m.alphabet().size_b(); b++) {
                n += size_from(m.step(q, {attr.action[q], b}));
                if (n > budget) fail(ErrorKind::BudgetExceeded, "pruned tree exceeds the budget");
            }
        return count[q] = n;
    };
    return size_from(m.initial());
}

// ---------------------------------------------------------------------------
// Closed sets

/** Approach (*): memory is a finite antichain under-approximating Gamma. */
inline FiniteMemoryMachine synth_closed_antichain(const ExprPtr &expr, const ConditionMonitor &m,
                                                  const SynthOptions &opts = {})
{
    validate(expr, m);
    detail::require_class(expr, HierarchyClass::K, 1, opts, "synth_closed_antichain");
    WinningRegion region = winning_region(expr, m, opts.cap);
    Configuration c0 = initial_config(m);
    if (!region.contains(c0)) fail(ErrorKind::NoWinningStrategy, "initial configuration is losing");
    OrderWitness ord = make_order(detail::order_mode(opts, expr, m), expr, m);
    long long cap = detail::clamp_of(region);
    MinSet M = min_set(reachable_gamma(region, c0, opts.budget), ord, m, "Gamma");

    MachineBuilder mb(m.alphabet());
    for (auto &x : M.elements) mb.add(config_string(x, m), non_losing_actions(x, region).front());
    for (size_t i = 0; i < M.elements.size(); i++) {
        const auto &x = M.elements[i];
        int a = non_losing_actions(x, region).front();
        for (int b = 0; b < m.alphabet().size_b(); b++) {
            int j = first_below(M, step(m, x, {a, b}, cap), ord);
            if (j < 0) fail(ErrorKind::Internal, "successor not covered by the antichain");
            mb.set((int)i, {a, b}, j);
        }
    }
    int init = first_below(M, c0, ord);
    if (init < 0) fail(ErrorKind::Internal, "initial configuration not covered");
    return mb.build(init);
}

using SeedStrategy = std::function<int(const Configuration &)>;

/**
 * Approach (**): strategic tree of the seed strategy, where a node is cut
 * as soon as some earlier node on its branch is below it; the cut node is
 * replaced by a back-edge to the shallowest such node.
 */
inline FiniteMemoryMachine synth_closed_pruning(const ExprPtr &expr, const ConditionMonitor &m,
                                                SeedStrategy seed = nullptr, const SynthOptions &opts = {})
{
    validate(expr, m);
    detail::require_class(expr, HierarchyClass::K, 1, opts, "synth_closed_pruning");
    WinningRegion region = winning_region(expr, m, opts.cap);
    Configuration c0 = initial_config(m);
    if (!region.contains(c0)) fail(ErrorKind::NoWinningStrategy, "initial configuration is losing");
    if (!seed) seed = [&](const Configuration &c) { return region.strategy(c); };
    OrderWitness ord = make_order(detail::order_mode(opts, expr, m), expr, m);
    long long cap = detail::clamp_of(region);

    struct Node {
        Configuration c;
        int parent;
        std::string name;
    };
    std::vector<Node> nodes{{c0, -1, "eps"}};
    MachineBuilder mb(m.alphabet());
    mb.add("eps", seed(c0));
    for (size_t i = 0; i < nodes.size(); i++) {
        Configuration c = nodes[i].c;
        int a = seed(c);
        for (int b = 0; b < m.alphabet().size_b(); b++) {
            Configuration t = step(m, c, {a, b}, cap);
            std::vector<int> path;
            for (int u = (int)i; u >= 0; u = nodes[u].parent) path.push_back(u);
            int back = -1;
            for (auto it = path.rbegin(); it != path.rend() && back < 0; ++it)
                if (leq(nodes[*it].c, t, ord)) back = *it;
            if (back >= 0) {
                mb.set((int)i, {a, b}, back);
                continue;
            }
            if ((long long)nodes.size() >= opts.budget) fail(ErrorKind::BudgetExceeded, "pruned tree exceeds the budget");
            std::string name = (i == 0 ? std::string() : nodes[i].name) + "(" + pair_label(m.alphabet(), {a, b}) + ")";
            nodes.push_back({t, (int)i, name});
            int id = mb.add(name, seed(t));
            mb.set((int)i, {a, b}, id);
        }
    }
    return mb.build(0);
}

// ---------------------------------------------------------------------------
// K levels

/** Configurations with a continuation in the closed part. */
struct PrefC {
    bool energy = false;
    std::vector<bool> states;
    EnergySet set;

    bool contains(const Configuration &c) const { return energy ? set.contains(c) : (bool)states[c.state]; }
};

inline PrefC pref_closed(const ExprPtr &closed, const ConditionMonitor &m, long long cap)
{
    PrefC p;
    if (closed->kind != ExprKind::EnergySafe) {
        p.states = detail::possible_states(m, state_labels(closed, m));
        return p;
    }
    // greatest fixpoint of the existential predecessor in the clamped arena
    p.energy = true;
    const int d = m.dim(), L = m.alphabet().letters();
    EnergySet cur;
    cur.all.assign(m.size(), false);
    cur.frontier.assign(m.size(), {Vec(d, 0)});
    for (;;) {
        EnergySet next;
        next.all.assign(m.size(), false);
        next.frontier.resize(m.size());
        for (int q = 0; q < m.size(); q++) {
            std::vector<Vec> acc;
            for (int l = 0; l < L; l++) {
                const Vec &w = m.weight_letter(q, l);
                for (auto &x : cur.frontier[m.step_letter(q, l)]) {
                    Vec e(d);
                    bool ok = true;
                    for (int i = 0; i < d; i++) {
                        e[i] = std::max(x[i] - w[i], 0LL);
                        if (e[i] > cap) ok = false;
                    }
                    if (ok) acc.push_back(e);
                }
            }
            next.frontier[q] = minimal_vectors(std::move(acc));
        }
        if (next.frontier == cur.frontier) break;
        cur = std::move(next);
    }
    p.set = std::move(cur);
    return p;
}

/**
 * Everything the K-level assembly needs: C and L, Pref(C), the
 * representatives on both sides, and the depth of each closed one.
 */
struct KPlan {
    ExprPtr expr, closed, open;
    ConditionMonitor monitor;
    WinningRegion region;
    OrderWitness order;
    PrefC prefc;
    long long cap = -1;
    long long budget = 0;
    bool by_rank = false;       // K_theta: progress measured by rank
    std::vector<bool> hit;      // K2: the open part is sure from here
    std::vector<int> rank;      // K_theta: rank of each monitor state
    int theta = 1;              // K_theta: level of L's difference form
    std::vector<Configuration> candidates; // Gamma \ Pref(C)
    MinSet reps_open, reps_closed;
    std::vector<int> depths;
};

/** Longest continuation of hbar inside Pref(C) along which h has not yet made progress. */
inline int depth_pair(const KPlan &plan, const Configuration &hbar, const Configuration &h)
{
    const ConditionMonitor &m = plan.monitor;
    auto progress = [&](const Configuration &p) {
        if (plan.by_rank) return plan.rank[p.state] < plan.rank[h.state];
        return (bool)plan.hit[p.state];
    };
    if (progress(h)) return 0;
    using Key = std::pair<Configuration, Configuration>;
    std::map<Key, int> best; // -1: no progress below
    std::map<Key, bool> open;
    long long visited = 0;
    std::function<int(const Key &)> dfs = [&](const Key &k) -> int {
        if (auto it = best.find(k); it != best.end()) return it->second;
        if (open[k]) fail(ErrorKind::Internal, "continuation tree has an infinite branch without progress");
        if (++visited > plan.budget) fail(ErrorKind::BudgetExceeded, "depth exploration exceeds the budget");
        open[k] = true;
        int r = -1;
        for (int l = 0; l < m.alphabet().letters(); l++) {
            Pair p = letter_pair(m.alphabet(), l);
            Configuration pb = step(m, k.first, p, plan.cap), ph = step(m, k.second, p, plan.cap);
            if (!plan.prefc.contains(pb)) continue;
            if (progress(ph)) {
                r = std::max(r, 1);
                continue;
            }
            int sub = dfs({pb, ph});
            if (sub >= 0) r = std::max(r, sub + 1);
        }
        open[k] = false;
        best[k] = r;
        return r;
    };
    return std::max(0, dfs({hbar, h}));
}

/** depth(hbar): K2 takes every eligible h, K_theta the N-set. */
inline int compute_depth(const KPlan &plan, const Configuration &hbar)
{
    std::vector<Configuration> hs;
    for (auto &h : plan.candidates)
        if (leq(hbar, h, plan.order)) hs.push_back(h);
    if (plan.by_rank) {
        std::vector<Configuration> N;
        for (int eta = plan.theta & 1; eta <= plan.theta; eta += 2) {
            std::vector<Configuration> slice;
            for (auto &h : hs)
                if (plan.rank[h.state] == eta) slice.push_back(h);
            auto mins = min_set(slice, plan.order, plan.monitor).elements;
            std::vector<Configuration> add;
            for (auto &h : mins) {
                bool fresh = true;
                for (auto &x : N)
                    if (leq(x, h, plan.order)) fresh = false;
                if (fresh) add.push_back(h);
            }
            N.insert(N.end(), add.begin(), add.end());
        }
        hs = N;
    }
    int d = 0;
    for (auto &h : hs) d = std::max(d, depth_pair(plan, hbar, h));
    return d;
}

namespace detail {

// rank(q) = max of g over the cycles reachable from q
inline std::vector<int> cycle_rank(const ConditionMonitor &m, const StableRank &r)
{
    auto g = m.edges();
    auto s = graph::tarjan(g);
    std::vector<int> cr(s.count, -1);
    std::vector<std::vector<int>> members(s.count);
    for (int q = 0; q < m.size(); q++) members[s.comp[q]].push_back(q);
    for (int c = 0; c < s.count; c++) {
        if (s.cyclic[c]) cr[c] = r.g[members[c][0]];
        for (int q : members[c])
            for (auto &[l, t] : g[q])
                if (s.comp[t] != c) cr[c] = std::max(cr[c], cr[s.comp[t]]);
    }
    std::vector<int> out(m.size());
    for (int q = 0; q < m.size(); q++) out[q] = cr[s.comp[q]];
    return out;
}

} // namespace detail

inline KPlan plan_K(const ExprPtr &expr, const ConditionMonitor &m, bool by_rank, const SynthOptions &opts = {})
{
    validate(expr, m);
    KPlan p;
    p.expr = expr;
    p.monitor = m;
    auto dec = decompose_K(expr);
    p.closed = dec.closed;
    p.open = dec.lambda;
    p.region = winning_region(expr, m, opts.cap);
    p.cap = detail::clamp_of(p.region);
    p.budget = opts.budget;
    p.order = make_order(detail::order_mode(opts, expr, m), expr, m);
    p.prefc = pref_closed(p.closed, m, p.cap >= 0 ? p.cap : default_cap(m));
    p.by_rank = by_rank;
    if (by_rank) {
        if (m.dim() > 0 || mentions_energy(expr)) fail(ErrorKind::Unsupported, "K_theta assembly needs d = 0");
        auto sr = stable_rank(m, state_labels(p.open, m));
        p.rank = detail::cycle_rank(m, sr);
        p.theta = sr.theta;
    } else if (p.region.kind == WinningRegion::Energy) {
        p.hit.assign(m.size(), false);
        for (int q : p.region.form.target) p.hit[q] = true;
    } else {
        p.hit = detail::sure_states(m, state_labels(p.open, m));
    }

    Configuration c0 = initial_config(m);
    std::vector<Configuration> closed_side;
    if (p.region.kind == WinningRegion::States) {
        auto reach = m.reachable_states();
        for (int q = 0; q < m.size(); q++) {
            if (!reach[q] || !p.region.win[q]) continue;
            Configuration c{q, {}, false, m.id()};
            (p.prefc.contains(c) ? closed_side : p.candidates).push_back(c);
        }
    } else {
        for (auto &c : reachable_gamma(p.region, c0, opts.budget))
            (p.prefc.contains(c) ? closed_side : p.candidates).push_back(c);
    }
    p.reps_open = min_set(p.candidates, p.order, m, "Gamma \\ Pref(C)");
    p.reps_closed = min_set(closed_side, p.order, m, "Gamma n Pref(C)");
    for (auto &h : p.reps_closed.elements) p.depths.push_back(compute_depth(p, h));
    return p;
}

namespace detail {

// A strategy for W from a configuration outside Pref(C), where W = L.
inline FiniteMemoryMachine synth_open_part(const KPlan &p, const Configuration &c, const SynthOptions &opts)
{
    const ConditionMonitor &m = p.monitor;
    if (p.region.kind == WinningRegion::Energy) {
        if (p.region.form.kind != EnergyForm::SafeOrReach) fail(ErrorKind::Internal, "energy plan without a target");
        return synth_open(expr::open(p.region.form.target), rooted(m.without_energy(), c.state), opts);
    }
    return synth(p.open, rooted(m, c.state), opts);
}

} // namespace detail

/** Machines per T_j node and per hand-off, kept for inspection. */
struct KAssembly {
    FiniteMemoryMachine machine;
    std::map<std::string, Configuration> tracked; // T_j node name -> configuration it stands for
    std::vector<std::string> sub_prefix;          // prefix of each embedded s_i
    std::vector<std::optional<FiniteMemoryMachine>> subs;
};

inline KAssembly assemble_K(const KPlan &p, const SynthOptions &opts = {})
{
    const ConditionMonitor &m = p.monitor;
    const Alphabet &al = m.alphabet();
    Configuration c0 = initial_config(m);
    if (!p.region.contains(c0)) fail(ErrorKind::NoWinningStrategy, "initial configuration is losing");
    KAssembly out;
    if (!p.prefc.contains(c0)) {
        out.machine = detail::synth_open_part(p, c0, opts);
        return out;
    }
    MachineBuilder mb(al);
    out.subs.resize(p.reps_open.elements.size());
    out.sub_prefix.resize(p.reps_open.elements.size());
    std::vector<int> sub_entry(p.reps_open.elements.size(), -1);
    auto enter_sub = [&](int i) {
        if (sub_entry[i] < 0) {
            out.subs[i] = detail::synth_open_part(p, p.reps_open.elements[i], opts);
            out.sub_prefix[i] = "s" + std::to_string(i) + "/";
            sub_entry[i] = mb.embed(*out.subs[i], out.sub_prefix[i]);
        }
        return sub_entry[i];
    };

    struct Node {
        int j;
        Configuration c;
        int len;
        int id;
        std::string name;
    };
    std::vector<Node> nodes;
    std::vector<int> root(p.reps_closed.elements.size(), -1);
    auto new_node = [&](int j, const Configuration &c, int len, const std::string &name) {
        if ((long long)nodes.size() >= p.budget) fail(ErrorKind::BudgetExceeded, "T_j trees exceed the budget");
        int a = non_losing_actions(c, p.region).front();
        int id = mb.add(name, a);
        nodes.push_back({j, c, len, id, name});
        out.tracked[name] = c;
        return id;
    };
    auto tree_root = [&](int j) {
        if (root[j] < 0) {
            std::string name = "T" + std::to_string(j) + "[" + config_string(p.reps_closed.elements[j], m) + "]";
            root[j] = new_node(j, p.reps_closed.elements[j], 0, name);
        }
        return root[j];
    };
    int j0 = first_below(p.reps_closed, c0, p.order);
    if (j0 < 0) fail(ErrorKind::Internal, "initial configuration not covered");
    int init = tree_root(j0);
    for (size_t k = 0; k < nodes.size(); k++) {
        Node n = nodes[k];
        int a = non_losing_actions(n.c, p.region).front();
        for (int b = 0; b < al.size_b(); b++) {
            Configuration t = step(m, n.c, {a, b}, p.cap);
            int to;
            if (p.prefc.contains(t) && n.len + 1 <= p.depths[n.j]) {
                to = new_node(n.j, t, n.len + 1, n.name + "(" + pair_label(al, {a, b}) + ")");
            } else if (!p.prefc.contains(t)) {
                int i = first_below(p.reps_open, t, p.order);
                if (i < 0) fail(ErrorKind::Internal, "hand-off target not covered");
                to = enter_sub(i);
            } else {
                int j = first_below(p.reps_closed, t, p.order);
                if (j < 0) fail(ErrorKind::Internal, "re-anchoring target not covered");
                to = tree_root(j);
            }
            mb.set(n.id, {a, b}, to);
        }
    }
    out.machine = mb.build(init);
    return out;
}

inline FiniteMemoryMachine synth_K2(const ExprPtr &expr, const ConditionMonitor &m, const SynthOptions &opts = {})
{
    detail::require_class(expr, HierarchyClass::K, 2, opts, "synth_K2");
    return assemble_K(plan_K(expr, m, false, opts), opts).machine;
}

inline FiniteMemoryMachine synth_K_theta(const ExprPtr &expr, const ConditionMonitor &m, const SynthOptions &opts = {})
{
    auto c = classify(expr);
    if (c.kind != HierarchyClass::K || c.level < 2) fail(ErrorKind::WrongClass, "synth_K_theta: expression is " + class_string(c));
    return assemble_K(plan_K(expr, m, true, opts), opts).machine;
}

// ---------------------------------------------------------------------------
// Lambda levels

/**
 * Follows the positional seed outside the guards; on entering guard i at
 * state q, hands off to a machine for the branch expression from q.
 */
inline FiniteMemoryMachine synth_lambda(const ExprPtr &expr, const ConditionMonitor &m, const SynthOptions &opts = {})
{
    validate(expr, m);
    auto c = classify(expr);
    if (c.kind != HierarchyClass::Lambda) fail(ErrorKind::WrongClass, "synth_lambda: expression is " + class_string(c));
    if (m.dim() > 0 || mentions_energy(expr)) fail(ErrorKind::Unsupported, "Lambda-level synthesis needs d = 0");
    ExprPtr e = strip_double_negation(expr);
    if (c.level == 1 && e->kind == ExprKind::Open) return synth_open(e, m, opts);
    if (e->kind != ExprKind::OpenUnion) fail(ErrorKind::Internal, "Lambda expression is not an open union");

    WinningRegion region = winning_region(e, m);
    if (!region.win[m.initial()]) fail(ErrorKind::NoWinningStrategy, "initial state is losing");
    auto guard_of = [&](int q) {
        for (size_t i = 0; i < e->branches.size(); i++)
            if (set_has(e->branches[i].guard, q)) return (int)i;
        return -1;
    };
    MachineBuilder mb(m.alphabet());
    std::map<int, int> entry; // guarded state -> embedded machine
    auto hand_off = [&](int q) {
        if (!entry.count(q)) {
            int i = guard_of(q);
            auto sub = synth(e->branches[i].expr, rooted(m, q), opts);
            entry[q] = mb.embed(sub, "g" + std::to_string(i) + "@" + m.name(q) + "/");
        }
        return entry[q];
    };
    if (guard_of(m.initial()) >= 0) return mb.build(hand_off(m.initial()));

    std::map<int, int> node;
    std::vector<int> order{m.initial()};
    node[m.initial()] = mb.add(m.name(m.initial()), region.hint[m.initial()]);
    for (size_t k = 0; k < order.size(); k++) {
        int q = order[k];
        int a = region.hint[q];
        for (int b = 0; b < m.alphabet().size_b(); b++) {
            int t = m.step(q, {a, b});
            int to;
            if (guard_of(t) >= 0) {
                to = hand_off(t);
            } else {
                if (!node.count(t)) {
                    if ((long long)node.size() >= opts.budget) fail(ErrorKind::BudgetExceeded, "seed tree exceeds the budget");
                    node[t] = mb.add(m.name(t), region.hint[t]);
                    order.push_back(t);
                }
                to = node[t];
            }
            mb.set(node[q], {a, b}, to);
        }
    }
    return mb.build(node[m.initial()]);
}

// ---------------------------------------------------------------------------
// Dispatch

inline FiniteMemoryMachine synth(const ExprPtr &expr, const ConditionMonitor &monitor, const SynthOptions &opts)
{
    validate(expr, monitor);
    energy_form(expr); // Unsupported for other energy shapes
    ConditionMonitor m = monitor.dim() > 0 && !mentions_energy(expr) ? monitor.without_energy() : monitor;
    WinningRegion region = winning_region(expr, m, opts.cap);
    if (!region.contains(initial_config(m))) fail(ErrorKind::NoWinningStrategy, "Player 1 does not win from the start");
    auto c = classify(expr);
    FiniteMemoryMachine s;
    if (c.kind == HierarchyClass::Lambda && c.level == 1)
        s = synth_open(expr, m, opts);
    else if (c.kind == HierarchyClass::K && c.level == 1)
        s = synth_closed_antichain(expr, m, opts);
    else if (c.kind == HierarchyClass::Lambda)
        s = synth_lambda(expr, m, opts);
    else if (c.level == 2)
        s = synth_K2(expr, m, opts);
    else
        s = synth_K_theta(expr, m, opts);
    Verdict v = verify_machine(s, expr, m);
    if (v.outcome != Verdict::Winning) fail(ErrorKind::Internal, "synthesized machine failed verification: " + v.reason);
    return s;
}

} // namespace deltasynth
