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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "graph.hpp"

namespace deltasynth {

using StateSet = std::vector<int>; // sorted, unique
using Vec = std::vector<long long>;

inline StateSet normalize_set(StateSet s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline bool set_has(const StateSet &s, int q) { return std::binary_search(s.begin(), s.end(), q); }

/**
 * Deterministic monitor over A x B with optional integer weights. The
 * state reached by a history, together with its accumulated energy,
 * determines the induced winning set.
 */
class ConditionMonitor {
public:
    ConditionMonitor() = default;

    ConditionMonitor(Alphabet alpha, std::vector<std::string> names, int initial, std::vector<std::vector<int>> step,
                     int dim = 0, std::vector<std::vector<Vec>> weights = {}, Vec credit = {})
        : alpha_(std::move(alpha)), names_(std::move(names)), initial_(initial), step_(std::move(step)), dim_(dim),
          weights_(std::move(weights)), credit_(std::move(credit))
    {
        const int n = size();
        const int L = alpha_.letters();
        if (n == 0) fail(ErrorKind::InvalidParams, "monitor without states");
        if (initial_ < 0 || initial_ >= n) fail(ErrorKind::InvalidParams, "monitor initial state out of range");
        if ((int)step_.size() != n) fail(ErrorKind::InvalidParams, "step table does not cover every state");
        for (int q = 0; q < n; q++) {
            if ((int)step_[q].size() != L) fail(ErrorKind::InvalidParams, "step row not total at " + names_[q]);
            for (int t : step_[q])
                if (t < 0 || t >= n) fail(ErrorKind::InvalidParams, "step target out of range at " + names_[q]);
        }
        if (dim_ < 0) fail(ErrorKind::InvalidParams, "negative energy dimension");
        if (dim_ == 0) {
            weights_.clear();
            credit_.clear();
        } else {
            if (weights_.empty()) weights_.assign(n, std::vector<Vec>(L, Vec(dim_, 0)));
            if ((int)weights_.size() != n) fail(ErrorKind::InvalidParams, "weight table does not cover every state");
            for (auto &row : weights_) {
                if ((int)row.size() != L) fail(ErrorKind::InvalidParams, "weight row not total");
                for (auto &w : row)
                    if ((int)w.size() != dim_) fail(ErrorKind::InvalidParams, "weight vector of wrong length");
            }
            if (credit_.empty()) credit_.assign(dim_, 0);
            if ((int)credit_.size() != dim_) fail(ErrorKind::InvalidParams, "initial credit of wrong length");
            for (auto c : credit_)
                if (c < 0) fail(ErrorKind::InvalidParams, "negative initial credit");
        }
        std::vector<std::string> sorted = names_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            fail(ErrorKind::InvalidParams, "duplicate monitor state name");

        // fingerprint (FNV-1a)
        uint64_t h = 1469598103934665603ull;
        auto mix = [&](long long v) {
            h ^= (uint64_t)v;
            h *= 1099511628211ull;
        };
        mix(n), mix(alpha_.size_a()), mix(alpha_.size_b()), mix(initial_), mix(dim_);
        for (auto &row : step_)
            for (int t : row) mix(t);
        for (auto &row : weights_)
            for (auto &w : row)
                for (auto x : w) mix(x);
        for (auto c : credit_) mix(c);
        id_ = h;

        // breadth-first rank from the initial state; unreachable states last
        bfs_rank_.assign(n, -1);
        std::vector<int> order{initial_};
        bfs_rank_[initial_] = 0;
        for (size_t i = 0; i < order.size(); i++)
            for (int t : step_[order[i]])
                if (bfs_rank_[t] < 0) {
                    bfs_rank_[t] = (int)order.size();
                    order.push_back(t);
                }
        int next = (int)order.size();
        for (int q = 0; q < n; q++)
            if (bfs_rank_[q] < 0) bfs_rank_[q] = next++;
    }

    const Alphabet &alphabet() const { return alpha_; }
    int size() const { return (int)names_.size(); }
    int initial() const { return initial_; }
    int dim() const { return dim_; }
    const Vec &credit() const { return credit_; }
    int step(int q, Pair p) const { return step_[q][alpha_.letter(p.a, p.b)]; }
    int step_letter(int q, int l) const { return step_[q][l]; }
    const Vec &weight(int q, Pair p) const { return weights_[q][alpha_.letter(p.a, p.b)]; }
    const Vec &weight_letter(int q, int l) const { return weights_[q][l]; }
    const std::string &name(int q) const { return names_[q]; }
    const std::vector<std::string> &names() const { return names_; }
    uint64_t id() const { return id_; }
    int bfs_rank(int q) const { return bfs_rank_[q]; }

    int index(const std::string &s) const
    {
        for (int q = 0; q < size(); q++)
            if (names_[q] == s) return q;
        fail(ErrorKind::InvalidParams, "unknown monitor state '" + s + "'");
    }

    long long max_abs_weight() const
    {
        long long m = 0;
        for (auto &row : weights_)
            for (auto &w : row)
                for (auto x : w) m = std::max(m, x < 0 ? -x : x);
        return m;
    }

    /** Same transition structure without weights. */
    ConditionMonitor without_energy() const { return ConditionMonitor(alpha_, names_, initial_, step_); }

    /** Letter-labelled transition graph. */
    graph::Edges edges() const
    {
        graph::Edges g(size());
        for (int q = 0; q < size(); q++)
            for (int l = 0; l < alpha_.letters(); l++) g[q].push_back({l, step_[q][l]});
        return g;
    }

    std::vector<bool> reachable_states() const { return graph::reachable(edges(), {initial_}); }

    /** Forward closure: the least trap containing s. */
    StateSet closure(const StateSet &s) const
    {
        auto r = graph::reachable(edges(), s);
        StateSet out;
        for (int q = 0; q < size(); q++)
            if (r[q]) out.push_back(q);
        return out;
    }

    bool is_trap(const StateSet &s) const
    {
        for (int q : s)
            for (int t : step_[q])
                if (!set_has(s, t)) return false;
        return true;
    }

    int run(const History &h) const
    {
        check_history(alpha_, h);
        int q = initial_;
        for (auto &p : h) q = step(q, p);
        return q;
    }

    bool operator==(const ConditionMonitor &o) const
    {
        return alpha_ == o.alpha_ && names_ == o.names_ && initial_ == o.initial_ && step_ == o.step_ &&
               dim_ == o.dim_ && weights_ == o.weights_ && credit_ == o.credit_;
    }

private:
    Alphabet alpha_;
    std::vector<std::string> names_;
    int initial_ = 0;
    std::vector<std::vector<int>> step_;
    int dim_ = 0;
    std::vector<std::vector<Vec>> weights_;
    Vec credit_;
    uint64_t id_ = 0;
    std::vector<int> bfs_rank_;
};

// ---------------------------------------------------------------------------
// Expressions

enum class ExprKind { Open, Not, OpenUnion, EnergySafe };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Branch {
    bool deficit = false; // guard is "some counter went negative"
    StateSet guard;
    ExprPtr expr;
};

struct Expr {
    ExprKind kind = ExprKind::Open;
    StateSet target;
    ExprPtr child;
    std::vector<Branch> branches;
};

using ConditionExpr = ExprPtr;

namespace expr {

inline ExprPtr open(StateSet target)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Open;
    e->target = normalize_set(std::move(target));
    return e;
}

inline ExprPtr negate(ExprPtr child)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Not;
    e->child = std::move(child);
    return e;
}

inline ExprPtr open_union(std::vector<Branch> branches)
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::OpenUnion;
    for (auto &b : branches) b.guard = normalize_set(b.guard);
    e->branches = std::move(branches);
    return e;
}

inline Branch branch(StateSet guard, ExprPtr child) { return Branch{false, normalize_set(std::move(guard)), std::move(child)}; }

inline Branch deficit_branch(ExprPtr child) { return Branch{true, {}, std::move(child)}; }

inline ExprPtr energy_safe()
{
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::EnergySafe;
    return e;
}

inline ExprPtr closed(StateSet avoid) { return negate(open(std::move(avoid))); }

/** Energy safety or reaching the trap. */
inline ExprPtr safe_or_reach(StateSet target)
{
    return negate(open_union({deficit_branch(negate(open(std::move(target))))}));
}

} // namespace expr

inline bool expr_equal(const ExprPtr &x, const ExprPtr &y)
{
    if (x == y) return true;
    if (!x || !y || x->kind != y->kind) return false;
    switch (x->kind) {
    case ExprKind::Open: return x->target == y->target;
    case ExprKind::EnergySafe: return true;
    case ExprKind::Not: return expr_equal(x->child, y->child);
    case ExprKind::OpenUnion:
        if (x->branches.size() != y->branches.size()) return false;
        for (size_t i = 0; i < x->branches.size(); i++) {
            auto &a = x->branches[i], &b = y->branches[i];
            if (a.deficit != b.deficit || a.guard != b.guard || !expr_equal(a.expr, b.expr)) return false;
        }
        return true;
    }
    return false;
}

inline bool mentions_energy(const ExprPtr &e)
{
    switch (e->kind) {
    case ExprKind::EnergySafe: return true;
    case ExprKind::Open: return false;
    case ExprKind::Not: return mentions_energy(e->child);
    case ExprKind::OpenUnion:
        for (auto &b : e->branches)
            if (b.deficit || mentions_energy(b.expr)) return true;
        return false;
    }
    return false;
}

inline std::string expr_string(const ExprPtr &e, const ConditionMonitor *m = nullptr)
{
    auto set = [&](const StateSet &s) {
        std::string r = "{";
        for (size_t i = 0; i < s.size(); i++) r += (i ? "," : "") + (m ? m->name(s[i]) : std::to_string(s[i]));
        return r + "}";
    };
    switch (e->kind) {
    case ExprKind::Open: return "open" + set(e->target);
    case ExprKind::EnergySafe: return "energySafe";
    case ExprKind::Not: return "not(" + expr_string(e->child, m) + ")";
    case ExprKind::OpenUnion: {
        std::string r = "openUnion[";
        for (size_t i = 0; i < e->branches.size(); i++) {
            auto &b = e->branches[i];
            r += (i ? "; " : "") + (b.deficit ? std::string("energyDeficit") : set(b.guard)) + " -> " +
                 expr_string(b.expr, m);
        }
        return r + "]";
    }
    }
    return "?";
}

/** Well-formedness against a monitor; throws InvalidExpr. */
inline void validate(const ExprPtr &e, const ConditionMonitor &m)
{
    if (!e) fail(ErrorKind::InvalidExpr, "null expression");
    auto check_states = [&](const StateSet &s, const char *what) {
        for (int q : s)
            if (q < 0 || q >= m.size()) fail(ErrorKind::InvalidExpr, std::string(what) + " refers to an unknown state");
        if (!m.is_trap(s)) fail(ErrorKind::InvalidExpr, std::string(what) + " is not closed under the monitor step");
    };
    switch (e->kind) {
    case ExprKind::Open: check_states(e->target, "open target"); return;
    case ExprKind::EnergySafe:
        if (m.dim() == 0) fail(ErrorKind::InvalidExpr, "energySafe on a monitor without energy");
        return;
    case ExprKind::Not: validate(e->child, m); return;
    case ExprKind::OpenUnion:
        for (size_t i = 0; i < e->branches.size(); i++) {
            auto &b = e->branches[i];
            if (b.deficit) {
                if (m.dim() == 0) fail(ErrorKind::InvalidExpr, "energyDeficit guard on a monitor without energy");
                if (e->branches.size() != 1) fail(ErrorKind::InvalidExpr, "energyDeficit guard must be the only branch");
            } else {
                check_states(b.guard, "openUnion guard");
            }
            for (size_t j = 0; j < i; j++) {
                auto &o = e->branches[j];
                for (int q : b.guard)
                    if (set_has(o.guard, q))
                        fail(ErrorKind::InvalidExpr, "openUnion guards " + std::to_string(j) + " and " + std::to_string(i) +
                                                         " overlap at state " + m.name(q));
            }
            validate(b.expr, m);
        }
        return;
    }
}

// ---------------------------------------------------------------------------
// Classification

struct HierarchyClass {
    enum Kind { Lambda, K, Delta } kind = Lambda;
    int level = 1;
    bool operator==(const HierarchyClass &) const = default;
};

inline std::string class_string(const HierarchyClass &c)
{
    switch (c.kind) {
    case HierarchyClass::Lambda: return "Lambda" + std::to_string(c.level);
    case HierarchyClass::K: return "K" + std::to_string(c.level);
    case HierarchyClass::Delta: return "D" + std::to_string(c.level);
    }
    return "?";
}

inline HierarchyClass classify(const ExprPtr &e)
{
    if (!e) fail(ErrorKind::InvalidExpr, "null expression");
    switch (e->kind) {
    case ExprKind::Open: return {HierarchyClass::Lambda, 1};
    case ExprKind::EnergySafe: return {HierarchyClass::K, 1};
    case ExprKind::Not: {
        auto c = classify(e->child);
        c.kind = c.kind == HierarchyClass::Lambda ? HierarchyClass::K : HierarchyClass::Lambda;
        return c;
    }
    case ExprKind::OpenUnion: {
        int level = 1;
        for (auto &b : e->branches) {
            if (!b.expr) fail(ErrorKind::InvalidExpr, "openUnion branch without expression");
            auto c = classify(b.expr);
            level = std::max(level, c.kind == HierarchyClass::Lambda ? c.level : c.level + 1);
        }
        return {HierarchyClass::Lambda, level};
    }
    }
    fail(ErrorKind::InvalidExpr, "unknown expression kind");
}

namespace detail {

inline StateSet intersect(const StateSet &a, const StateSet &b)
{
    StateSet r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

// Rewrites the branches so that every child is K-kind; nullptr marks a
// branch whose child is the whole space.
inline void flatten(const StateSet &guard, const ExprPtr &child, std::vector<Branch> &out)
{
    switch (child->kind) {
    case ExprKind::Open: out.push_back({false, intersect(guard, child->target), nullptr}); return;
    case ExprKind::OpenUnion:
        for (auto &b : child->branches) {
            if (b.deficit) fail(ErrorKind::Unsupported, "nested energyDeficit guard");
            flatten(intersect(guard, b.guard), b.expr, out);
        }
        return;
    case ExprKind::Not:
        if (child->child->kind == ExprKind::Not) {
            flatten(guard, child->child->child, out);
            return;
        }
        break;
    case ExprKind::EnergySafe: break;
    }
    out.push_back({false, guard, child});
}

} // namespace detail

struct KDecomposition {
    ExprPtr closed;
    ExprPtr lambda;
};

/** W = C u L with C closed and L an open union of complements. */
inline KDecomposition decompose_K(const ExprPtr &e)
{
    if (classify(e).kind != HierarchyClass::K) fail(ErrorKind::WrongClass, "decompose_K needs a K-kind expression");
    switch (e->kind) {
    case ExprKind::EnergySafe: return {e, expr::open({})};
    case ExprKind::Not: {
        const ExprPtr &c = e->child;
        if (c->kind == ExprKind::Open) return {e, expr::open({})};
        if (c->kind == ExprKind::Not) return decompose_K(c->child);
        // c is an open union
        if (c->branches.size() == 1 && c->branches[0].deficit) {
            auto &b = c->branches[0];
            return {expr::energy_safe(), expr::open_union({expr::deficit_branch(expr::negate(b.expr))})};
        }
        std::vector<Branch> flat;
        for (auto &b : c->branches) {
            if (b.deficit) fail(ErrorKind::Unsupported, "energyDeficit guard mixed with state guards");
            detail::flatten(b.guard, b.expr, flat);
        }
        StateSet all;
        std::vector<Branch> lb;
        for (auto &b : flat) {
            all.insert(all.end(), b.guard.begin(), b.guard.end());
            if (b.expr) lb.push_back(expr::branch(b.guard, expr::negate(b.expr)));
        }
        return {expr::closed(normalize_set(all)), expr::open_union(lb)};
    }
    default: break;
    }
    fail(ErrorKind::WrongClass, "decompose_K needs a K-kind expression");
}

// ---------------------------------------------------------------------------
// Membership

/** Truth value of e for plays whose eventual monitor state is q. */
inline bool eval(const ExprPtr &e, int q, bool energy_safe = true)
{
    switch (e->kind) {
    case ExprKind::Open: return set_has(e->target, q);
    case ExprKind::EnergySafe: return energy_safe;
    case ExprKind::Not: return !eval(e->child, q, energy_safe);
    case ExprKind::OpenUnion:
        for (auto &b : e->branches)
            if ((b.deficit ? !energy_safe : set_has(b.guard, q)) && eval(b.expr, q, energy_safe)) return true;
        return false;
    }
    return false;
}

/** Per-state truth values (energy-free reading). */
inline std::vector<int> state_labels(const ExprPtr &e, const ConditionMonitor &m)
{
    std::vector<int> r(m.size());
    for (int q = 0; q < m.size(); q++) r[q] = eval(e, q) ? 1 : 0;
    return r;
}

struct MonitorLasso {
    std::vector<int> stem;   // states after each prefix step, before the periodic part
    std::vector<int> period; // states visited in the periodic part
    bool energy_safe = true;
};

/** Runs a monitor (or any step function) over a lasso until it closes. */
template <typename Step>
MonitorLasso run_lasso(int initial, int dim, const Vec &credit, const UltimatelyPeriodicPlay &play, Step step)
{
    if (play.cycle.empty()) fail(ErrorKind::InvalidParams, "play with an empty cycle");
    MonitorLasso r;
    int q = initial;
    Vec e = credit;
    auto advance = [&](const Pair &p) {
        auto [t, w] = step(q, p);
        if (dim > 0) {
            for (int i = 0; i < dim; i++) {
                e[i] += (*w)[i];
                if (e[i] < 0) r.energy_safe = false;
            }
        }
        q = t;
    };
    for (auto &p : play.prefix) {
        advance(p);
        r.stem.push_back(q);
    }
    std::map<int, size_t> seen;
    std::vector<int> starts;
    std::vector<Vec> energies;
    std::vector<std::vector<int>> visits;
    for (size_t it = 0;; it++) {
        auto f = seen.find(q);
        if (f != seen.end()) {
            size_t j = f->second;
            for (size_t k = 0; k < j; k++) r.stem.insert(r.stem.end(), visits[k].begin(), visits[k].end());
            for (size_t k = j; k < it; k++) r.period.insert(r.period.end(), visits[k].begin(), visits[k].end());
            if (dim > 0)
                for (int i = 0; i < dim; i++)
                    if (e[i] - energies[j][i] < 0) r.energy_safe = false;
            return r;
        }
        seen.emplace(q, it);
        energies.push_back(e);
        visits.emplace_back();
        for (auto &p : play.cycle) {
            advance(p);
            visits.back().push_back(q);
        }
    }
}

inline MonitorLasso monitor_lasso(const ConditionMonitor &m, const UltimatelyPeriodicPlay &play)
{
    check_history(m.alphabet(), play.prefix);
    check_history(m.alphabet(), play.cycle);
    static const Vec none;
    return run_lasso(m.initial(), m.dim(), m.credit(), play, [&](int q, const Pair &p) {
        return std::make_pair(m.step(q, p), m.dim() ? &m.weight(q, p) : &none);
    });
}

inline bool member(const UltimatelyPeriodicPlay &play, const ExprPtr &e, const ConditionMonitor &m)
{
    auto r = monitor_lasso(m, play);
    return eval(e, r.period.front(), r.energy_safe);
}

// ---------------------------------------------------------------------------
// Difference forms

struct DifferenceForm {
    std::vector<StateSet> opens; // O_0 c O_1 c ... c O_{theta-1}, each a trap
    int theta = 1;

    HierarchyClass hierarchy() const { return {HierarchyClass::Delta, theta}; }
};

/** Stable rank g: least antitone map whose parity encodes the label. */
struct StableRank {
    std::vector<int> g;
    int theta = 1;
};

namespace detail {

inline StableRank stable_rank_with(const ConditionMonitor &m, const std::vector<int> &label, int p)
{
    auto g = m.edges();
    auto s = graph::tarjan(g);
    // components come sinks first
    std::vector<std::vector<int>> members(s.count);
    for (int q = 0; q < m.size(); q++) members[s.comp[q]].push_back(q);
    std::vector<int> cg(s.count, 0);
    StableRank r;
    r.g.assign(m.size(), 0);
    int top = 0;
    for (int c = 0; c < s.count; c++) {
        int lb = 0;
        int lab = label[members[c][0]];
        for (int q : members[c]) {
            if (label[q] != lab) fail(ErrorKind::NotEventuallyConstant, "label varies inside a strongly connected part");
            for (auto &[l, t] : g[q])
                if (s.comp[t] != c) lb = std::max(lb, cg[s.comp[t]]);
        }
        int want = lab ? p : 1 - p;
        int v = lb;
        if ((v & 1) != want) v++;
        cg[c] = v;
        top = std::max(top, v);
        for (int q : members[c]) r.g[q] = v;
    }
    r.theta = top;
    if ((r.theta & 1) != 1 - p) r.theta++;
    if (r.theta == 0) r.theta = 2; // keep theta >= 1
    return r;
}

} // namespace detail

/**
 * Stable rank for a label map. The label-1 parity is chosen to minimise
 * theta unless forced.
 */
inline StableRank stable_rank(const ConditionMonitor &m, const std::vector<int> &label, int force_parity = -1)
{
    if (force_parity >= 0) return detail::stable_rank_with(m, label, force_parity);
    auto a = detail::stable_rank_with(m, label, 0);
    auto b = detail::stable_rank_with(m, label, 1);
    return b.theta < a.theta ? b : a;
}

inline ExprPtr energy_free_or_throw(const ExprPtr &e, const char *op)
{
    if (mentions_energy(e)) fail(ErrorKind::Unsupported, std::string(op) + " is defined for energy-free expressions");
    return e;
}

inline DifferenceForm difference_form_of(const ConditionMonitor &m, const StableRank &r)
{
    DifferenceForm d;
    d.theta = r.theta;
    for (int eta = 0; eta < r.theta; eta++) {
        StateSet o;
        for (int q = 0; q < m.size(); q++)
            if (r.g[q] <= eta) o.push_back(q);
        d.opens.push_back(o);
    }
    return d;
}

inline DifferenceForm to_difference_form(const ExprPtr &e, const ConditionMonitor &m)
{
    classify(energy_free_or_throw(e, "to_difference_form"));
    validate(e, m);
    return difference_form_of(m, stable_rank(m, state_labels(e, m)));
}

/** Least eta whose open contains the play; theta if none. */
inline int dform_index(const DifferenceForm &d, int q)
{
    for (int eta = 0; eta < (int)d.opens.size(); eta++)
        if (set_has(d.opens[eta], q)) return eta;
    return d.theta;
}

inline bool member(const UltimatelyPeriodicPlay &play, const DifferenceForm &d, const ConditionMonitor &m)
{
    auto r = monitor_lasso(m, play);
    // opens are traps, so the least index is attained on the periodic part
    int eta = dform_index(d, r.period.front());
    return eta < d.theta && (eta & 1) != (d.theta & 1);
}

// ---------------------------------------------------------------------------
// Labellings

struct Labelling {
    std::vector<int> label;
};

struct ConstancyCheck {
    bool constant = true;
    std::optional<UltimatelyPeriodicPlay> witness;
};

inline Pair letter_pair(const Alphabet &a, int l) { return {l / a.size_b(), l % a.size_b()}; }

inline History letters_to_history(const Alphabet &a, const std::vector<int> &ls)
{
    History h;
    for (int l : ls) h.push_back(letter_pair(a, l));
    return h;
}

inline ConstancyCheck is_eventually_constant(const Labelling &lbl, const ConditionMonitor &m)
{
    if ((int)lbl.label.size() != m.size()) fail(ErrorKind::InvalidParams, "labelling size differs from the monitor");
    auto g = m.edges();
    auto reach = graph::reachable(g, {m.initial()});
    auto s = graph::tarjan(g, reach);
    ConstancyCheck r;
    for (int q = 0; q < m.size(); q++) {
        if (!reach[q] || !s.cyclic[s.comp[q]]) continue;
        for (auto &[l, t] : g[q]) {
            if (s.comp[t] != s.comp[q] || lbl.label[t] == lbl.label[q]) continue;
            // q -> t changes the label inside one component: close the loop t ~> q
            std::vector<bool> comp(m.size(), false);
            for (int u = 0; u < m.size(); u++) comp[u] = s.comp[u] == s.comp[q];
            auto stem = graph::bfs_path(g, m.initial(), [&](int u) { return u == q; });
            auto back = graph::bfs_path(g, t, [&](int u) { return u == q; }, comp);
            UltimatelyPeriodicPlay w;
            w.prefix = letters_to_history(m.alphabet(), stem->first);
            w.cycle.push_back(letter_pair(m.alphabet(), l));
            auto rest = letters_to_history(m.alphabet(), back->first);
            w.cycle.insert(w.cycle.end(), rest.begin(), rest.end());
            r.constant = false;
            r.witness = w;
            return r;
        }
    }
    return r;
}

inline Labelling to_labelling(const ExprPtr &e, const ConditionMonitor &m)
{
    energy_free_or_throw(e, "to_labelling");
    validate(e, m);
    auto labels = state_labels(e, m);
    auto r = stable_rank(m, labels);
    Labelling l;
    l.label.resize(m.size());
    for (int q = 0; q < m.size(); q++) l.label[q] = (r.g[q] & 1) != (r.theta & 1) ? 1 : 0;
    auto c = is_eventually_constant(l, m);
    if (!c.constant) fail(ErrorKind::NotEventuallyConstant, "labelling alternates on a reachable cycle");
    return l;
}

/** Infinitely many prefixes labelled 1. */
inline bool member(const UltimatelyPeriodicPlay &play, const Labelling &l, const ConditionMonitor &m)
{
    auto r = monitor_lasso(m, play);
    for (int q : r.period)
        if (l.label[q]) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Buchi colourings

/**
 * Countable intersection of opens presented by a decreasing trap list
 * O_0 = Q, ..., O_{k-1} and a recurrent set R: for n >= k the n-th open
 * holds once O_{k-1} is reached and R has been visited n-k+1 more times.
 */
struct PiTwoPresentation {
    std::vector<StateSet> opens;
    StateSet recurrent;
};

/**
 * Colouring over the monitor augmented with the last trap level, so that
 * "level went up" is a property of a state.
 */
struct BuchiColoring {
    std::vector<std::pair<int, int>> states; // (monitor state, level)
    std::vector<std::vector<int>> step;      // per augmented state, per letter
    std::vector<int> color;
    int initial = 0;
    uint64_t monitor_id = 0;
};

inline PiTwoPresentation pi02_from_labelling(const Labelling &l, const ConditionMonitor &m)
{
    PiTwoPresentation p;
    StateSet all;
    for (int q = 0; q < m.size(); q++) all.push_back(q);
    p.opens.push_back(all);
    for (int q = 0; q < m.size(); q++)
        if (l.label[q]) p.recurrent.push_back(q);
    return p;
}

inline BuchiColoring to_buchi_coloring(const ConditionMonitor &m, const PiTwoPresentation &pres)
{
    const int n = m.size();
    const int k = (int)pres.opens.size();
    if (k == 0) fail(ErrorKind::InvalidPresentation, "empty open list");
    if ((int)pres.opens[0].size() != n) fail(ErrorKind::InvalidPresentation, "first open must be the whole space");
    for (int i = 0; i < k; i++) {
        for (int q : pres.opens[i])
            if (q < 0 || q >= n) fail(ErrorKind::InvalidPresentation, "open refers to an unknown state");
        if (!m.is_trap(pres.opens[i])) fail(ErrorKind::InvalidPresentation, "open " + std::to_string(i) + " is not a trap");
        if (i > 0 && !std::includes(pres.opens[i - 1].begin(), pres.opens[i - 1].end(), pres.opens[i].begin(),
                                    pres.opens[i].end()))
            fail(ErrorKind::InvalidPresentation, "open list is not nested at position " + std::to_string(i));
    }
    for (int q : pres.recurrent)
        if (q < 0 || q >= n) fail(ErrorKind::InvalidPresentation, "recurrent set refers to an unknown state");

    std::vector<int> level(n, 0);
    for (int q = 0; q < n; q++)
        for (int i = 0; i < k; i++)
            if (set_has(pres.opens[i], q)) level[q] = i;
    auto top = pres.opens[k - 1];
    auto good = [&](int q) { return set_has(top, q) && set_has(pres.recurrent, q); };

    // sure states: every path from them stays in the set
    auto g = m.edges();
    std::vector<bool> bad_mask(n);
    for (int q = 0; q < n; q++) bad_mask[q] = !good(q);
    auto s = graph::tarjan(g, bad_mask);
    std::vector<int> seeds;
    for (int q = 0; q < n; q++)
        if (bad_mask[q] && s.cyclic[s.comp[q]]) seeds.push_back(q);
    graph::Edges rev(n);
    for (int q = 0; q < n; q++)
        for (auto &[l, t] : g[q]) rev[t].push_back({l, q});
    auto unsure = graph::reachable(rev, seeds);

    BuchiColoring c;
    c.monitor_id = m.id();
    std::map<std::pair<int, int>, int> index;
    auto add = [&](int q, int prev) {
        auto key = std::make_pair(q, prev);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        int id = (int)c.states.size();
        index.emplace(key, id);
        c.states.push_back(key);
        c.color.push_back(!unsure[q] || level[q] > prev || (level[q] == k - 1 && set_has(pres.recurrent, q)) ? 1 : 0);
        return id;
    };
    c.initial = add(m.initial(), level[m.initial()]);
    for (size_t i = 0; i < c.states.size(); i++) {
        int q = c.states[i].first;
        std::vector<int> row;
        for (int l = 0; l < m.alphabet().letters(); l++) row.push_back(add(m.step_letter(q, l), level[q]));
        c.step.push_back(row);
    }
    return c;
}

inline bool member(const UltimatelyPeriodicPlay &play, const BuchiColoring &c, const ConditionMonitor &m)
{
    if (c.monitor_id != m.id()) fail(ErrorKind::MonitorMismatch, "colouring built for another monitor");
    check_history(m.alphabet(), play.prefix);
    check_history(m.alphabet(), play.cycle);
    static const Vec none;
    auto r = run_lasso(c.initial, 0, none, play, [&](int s, const Pair &p) {
        return std::make_pair(c.step[s][m.alphabet().letter(p.a, p.b)], &none);
    });
    for (int s : r.period)
        if (c.color[s]) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Cylinder intersection

struct CylinderProduct {
    ConditionMonitor monitor; // pairs (q, t) with t the matched length of h or |h|+1 once diverged
    ExprPtr expr;
    std::vector<int> base;    // product state -> monitor state
};

/**
 * Intersects e with cyl(h) over a product monitor that tracks h; the
 * rewritten expression keeps the class of e.
 */
inline CylinderProduct intersect_cylinder(const ConditionMonitor &m, const ExprPtr &e, const History &h)
{
    energy_free_or_throw(e, "intersect_cylinder");
    check_history(m.alphabet(), h);
    const int n = m.size(), H = (int)h.size(), T = H + 2, D = H + 1;
    const Alphabet &alpha = m.alphabet();
    auto id = [&](int q, int t) { return q * T + t; };
    std::vector<std::string> names;
    std::vector<std::vector<int>> step;
    std::vector<int> base;
    for (int q = 0; q < n; q++)
        for (int t = 0; t < T; t++) {
            names.push_back(m.name(q) + "@" + (t == D ? std::string("x") : std::to_string(t)));
            base.push_back(q);
            std::vector<int> row;
            for (int l = 0; l < alpha.letters(); l++) {
                int nt = t;
                if (t < H) nt = letter_pair(alpha, l) == h[t] ? t + 1 : D;
                row.push_back(id(m.step_letter(q, l), nt));
            }
            step.push_back(row);
        }
    ConditionMonitor pm(alpha, names, id(m.initial(), 0), step);
    auto lift_all = [&](const StateSet &s) {
        StateSet r;
        for (int q : s)
            for (int t = 0; t < T; t++) r.push_back(id(q, t));
        return normalize_set(r);
    };
    auto lift_matched = [&](const StateSet &s) {
        StateSet r;
        for (int q : s) r.push_back(id(q, H));
        return normalize_set(r);
    };
    StateSet diverged, everything;
    for (int q = 0; q < n; q++) {
        diverged.push_back(id(q, D));
        for (int t = 0; t < T; t++) everything.push_back(id(q, t));
    }
    diverged = normalize_set(diverged);
    everything = normalize_set(everything);

    std::function<ExprPtr(const ExprPtr &)> lift = [&](const ExprPtr &x) -> ExprPtr {
        switch (x->kind) {
        case ExprKind::Open: return expr::open(lift_all(x->target));
        case ExprKind::Not: return expr::negate(lift(x->child));
        case ExprKind::OpenUnion: {
            std::vector<Branch> bs;
            for (auto &b : x->branches) bs.push_back(expr::branch(lift_all(b.guard), lift(b.expr)));
            return expr::open_union(bs);
        }
        case ExprKind::EnergySafe: break;
        }
        fail(ErrorKind::Unsupported, "energy in cylinder intersection");
    };
    std::function<ExprPtr(const ExprPtr &)> cut = [&](const ExprPtr &x) -> ExprPtr {
        switch (x->kind) {
        case ExprKind::Open: return expr::open(lift_matched(x->target));
        case ExprKind::OpenUnion: {
            std::vector<Branch> bs;
            for (auto &b : x->branches) bs.push_back(expr::branch(lift_matched(b.guard), lift(b.expr)));
            return expr::open_union(bs);
        }
        case ExprKind::Not: {
            const ExprPtr &c = x->child;
            if (c->kind == ExprKind::Not) return cut(c->child);
            if (c->kind == ExprKind::Open) {
                auto t = lift_all(c->target);
                t.insert(t.end(), diverged.begin(), diverged.end());
                return expr::negate(expr::open(normalize_set(t)));
            }
            // not(U) n cyl(h) = not((U n cyl(h)) u diverged)
            std::vector<Branch> bs;
            for (auto &b : c->branches) bs.push_back(expr::branch(lift_matched(b.guard), lift(b.expr)));
            bs.push_back(expr::branch(diverged, expr::open(everything)));
            return expr::negate(expr::open_union(bs));
        }
        case ExprKind::EnergySafe: break;
        }
        fail(ErrorKind::Unsupported, "energy in cylinder intersection");
    };
    return {pm, cut(e), base};
}

} // namespace deltasynth
