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
#include <compare>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace deltasynth {

/**
 * Action sets of both players. Actions are interned as their index in
 * declaration order; the names are kept for I/O only.
 */
class Alphabet {
public:
    Alphabet() = default;

    Alphabet(std::vector<std::string> a, std::vector<std::string> b) : a_(std::move(a)), b_(std::move(b))
    {
        if (a_.empty() || b_.empty()) fail(ErrorKind::InvalidParams, "action lists must be non-empty");
        check_unique(a_, "A");
        check_unique(b_, "B");
    }

    /** Alphabet with actions named "0", "1", ... */
    static Alphabet numbered(int na, int nb)
    {
        std::vector<std::string> a, b;
        for (int i = 0; i < na; i++) a.push_back(std::to_string(i));
        for (int i = 0; i < nb; i++) b.push_back(std::to_string(i));
        return Alphabet(std::move(a), std::move(b));
    }

    int size_a() const { return (int)a_.size(); }
    int size_b() const { return (int)b_.size(); }
    int letters() const { return size_a() * size_b(); }
    int letter(int a, int b) const { return a * size_b() + b; }
    const std::vector<std::string> &actions_a() const { return a_; }
    const std::vector<std::string> &actions_b() const { return b_; }
    const std::string &name_a(int a) const { return a_.at(a); }
    const std::string &name_b(int b) const { return b_.at(b); }

    int index_a(const std::string &s) const { return find(a_, s, "A"); }
    int index_b(const std::string &s) const { return find(b_, s, "B"); }

    bool valid(int a, int b) const { return a >= 0 && a < size_a() && b >= 0 && b < size_b(); }

    bool operator==(const Alphabet &o) const = default;

private:
    static void check_unique(const std::vector<std::string> &v, const char *which)
    {
        std::vector<std::string> s = v;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            fail(ErrorKind::InvalidParams, std::string("duplicate action in ") + which);
    }

    static int find(const std::vector<std::string> &v, const std::string &s, const char *which)
    {
        for (size_t i = 0; i < v.size(); i++)
            if (v[i] == s) return (int)i;
        fail(ErrorKind::InvalidAction, "unknown action '" + s + "' for player " + which);
    }

    std::vector<std::string> a_, b_;
};

struct Pair {
    int a = 0;
    int b = 0;
    auto operator<=>(const Pair &) const = default;
};

using History = std::vector<Pair>;

/**
 * Ultimately periodic word prefix . cycle^omega.
 */
template <typename T>
struct Lasso {
    std::vector<T> prefix;
    std::vector<T> cycle;

    const T &at(size_t i) const
    {
        if (i < prefix.size()) return prefix[i];
        return cycle[(i - prefix.size()) % cycle.size()];
    }

    std::vector<T> unroll(size_t n) const
    {
        std::vector<T> out;
        out.reserve(n);
        for (size_t i = 0; i < n; i++) out.push_back(at(i));
        return out;
    }

    // Primitive cycle, shortest prefix.
    Lasso canonical() const
    {
        Lasso r = *this;
        size_t n = r.cycle.size();
        for (size_t p = 1; p < n; p++) {
            if (n % p) continue;
            bool ok = true;
            for (size_t i = p; i < n && ok; i++) ok = r.cycle[i] == r.cycle[i - p];
            if (ok) {
                r.cycle.resize(p);
                break;
            }
        }
        while (!r.prefix.empty() && r.prefix.back() == r.cycle.back()) {
            std::rotate(r.cycle.rbegin(), r.cycle.rbegin() + 1, r.cycle.rend());
            r.prefix.pop_back();
        }
        return r;
    }

    bool operator==(const Lasso &) const = default;
};

using UltimatelyPeriodicPlay = Lasso<Pair>;
using BWord = Lasso<int>;

inline void check_lasso(const BWord &beta, const Alphabet &alpha)
{
    if (beta.cycle.empty()) fail(ErrorKind::InvalidParams, "adversary word has an empty cycle");
    for (const auto *part : {&beta.prefix, &beta.cycle})
        for (int b : *part)
            if (b < 0 || b >= alpha.size_b()) fail(ErrorKind::InvalidAction, "adversary action out of range");
}

inline std::string pair_label(const Alphabet &alpha, Pair p)
{
    return alpha.name_a(p.a) + "," + alpha.name_b(p.b);
}

inline std::string history_string(const Alphabet &alpha, const History &h)
{
    std::string s;
    for (const auto &p : h) s += "(" + pair_label(alpha, p) + ")";
    return s.empty() ? "eps" : s;
}

/**
 * Decision machine (M, sigma, mu, m0) for Player 1. The constructor keeps
 * only the states reachable from the initial one and renumbers them in
 * breadth-first order over letters.
 */
class FiniteMemoryMachine {
public:
    FiniteMemoryMachine() = default;

    FiniteMemoryMachine(Alphabet alpha, std::vector<std::string> names, std::vector<int> decide,
                        std::vector<std::vector<int>> update, int initial)
        : alpha_(std::move(alpha))
    {
        const int n = (int)names.size();
        const int L = alpha_.letters();
        if (n == 0) fail(ErrorKind::InvalidParams, "machine without states");
        if ((int)decide.size() != n || (int)update.size() != n)
            fail(ErrorKind::InvalidParams, "machine tables do not match the state count");
        if (initial < 0 || initial >= n) fail(ErrorKind::InvalidParams, "initial state out of range");
        for (int m = 0; m < n; m++) {
            if (decide[m] < 0 || decide[m] >= alpha_.size_a())
                fail(ErrorKind::InvalidParams, "decision out of range at state " + names[m]);
            if ((int)update[m].size() != L) fail(ErrorKind::InvalidParams, "update row not total at " + names[m]);
            for (int t : update[m])
                if (t < 0 || t >= n) fail(ErrorKind::InvalidParams, "update target out of range at " + names[m]);
        }

        std::vector<int> order{initial};
        std::vector<int> index(n, -1);
        index[initial] = 0;
        for (size_t i = 0; i < order.size(); i++)
            for (int l = 0; l < L; l++) {
                int t = update[order[i]][l];
                if (index[t] < 0) {
                    index[t] = (int)order.size();
                    order.push_back(t);
                }
            }

        for (int old : order) {
            names_.push_back(names[old]);
            decide_.push_back(decide[old]);
            std::vector<int> row(L);
            for (int l = 0; l < L; l++) row[l] = index[update[old][l]];
            update_.push_back(std::move(row));
        }
        std::vector<std::string> sorted = names_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            fail(ErrorKind::InvalidParams, "duplicate machine state name");
    }

    const Alphabet &alphabet() const { return alpha_; }
    int size() const { return (int)names_.size(); }
    int initial() const { return 0; }
    int decide(int m) const { return decide_[m]; }
    int update(int m, Pair p) const { return update_[m][alpha_.letter(p.a, p.b)]; }
    const std::string &name(int m) const { return names_[m]; }
    const std::vector<std::string> &names() const { return names_; }

    bool operator==(const FiniteMemoryMachine &) const = default;

private:
    Alphabet alpha_;
    std::vector<std::string> names_;
    std::vector<int> decide_;
    std::vector<std::vector<int>> update_;
};

inline void check_history(const Alphabet &alpha, const History &h)
{
    for (const auto &p : h)
        if (!alpha.valid(p.a, p.b))
            fail(ErrorKind::InvalidAction, "pair (" + std::to_string(p.a) + "," + std::to_string(p.b) + ") outside the alphabet");
}

/** mu(m0, h) */
inline int machine_run(const FiniteMemoryMachine &machine, const History &h)
{
    check_history(machine.alphabet(), h);
    int m = machine.initial();
    for (const auto &p : h) m = machine.update(m, p);
    return m;
}

/** Length-horizon prefix of out(h, s, beta). */
inline History outcome(const History &h, const FiniteMemoryMachine &machine, const BWord &beta, size_t horizon)
{
    if (horizon < h.size()) fail(ErrorKind::InvalidHorizon, "horizon shorter than the history");
    check_lasso(beta, machine.alphabet());
    int m = machine_run(machine, h);
    History out = h;
    for (size_t k = 0; out.size() < horizon; k++) {
        Pair p{machine.decide(m), beta.at(k)};
        out.push_back(p);
        m = machine.update(m, p);
    }
    return out;
}

/** out(eps, s, beta) as a lasso. */
inline UltimatelyPeriodicPlay machine_play(const FiniteMemoryMachine &machine, const BWord &beta)
{
    check_lasso(beta, machine.alphabet());
    const size_t np = beta.prefix.size(), nc = beta.cycle.size();
    auto phase = [&](size_t k) { return k < np ? k : np + (k - np) % nc; };
    std::map<std::pair<int, size_t>, size_t> seen;
    History pairs;
    int m = machine.initial();
    for (size_t k = 0;; k++) {
        auto key = std::make_pair(m, phase(k));
        auto it = seen.find(key);
        if (it != seen.end()) {
            UltimatelyPeriodicPlay r;
            r.prefix.assign(pairs.begin(), pairs.begin() + (long)it->second);
            r.cycle.assign(pairs.begin() + (long)it->second, pairs.end());
            return r.canonical();
        }
        seen.emplace(key, k);
        Pair p{machine.decide(m), beta.at(k)};
        pairs.push_back(p);
        m = machine.update(m, p);
    }
}

inline std::string dot_escape(const std::string &s)
{
    std::string r;
    for (char c : s) {
        if (c == '"' || c == '\\') r += '\\';
        r += c;
    }
    return r;
}

/** Graphviz rendering: one node per memory state, one edge per letter. */
inline std::string to_dot(const FiniteMemoryMachine &machine)
{
    const Alphabet &alpha = machine.alphabet();
    std::ostringstream os;
    os << "digraph machine {\n";
    os << "  __start [shape=point];\n";
    os << "  __start -> \"" << dot_escape(machine.name(machine.initial())) << "\";\n";
    for (int m = 0; m < machine.size(); m++)
        os << "  \"" << dot_escape(machine.name(m)) << "\" [label=\"" << dot_escape(machine.name(m)) << " / "
           << dot_escape(alpha.name_a(machine.decide(m))) << "\"];\n";
    for (int m = 0; m < machine.size(); m++)
        for (int a = 0; a < alpha.size_a(); a++)
            for (int b = 0; b < alpha.size_b(); b++)
                os << "  \"" << dot_escape(machine.name(m)) << "\" -> \""
                   << dot_escape(machine.name(machine.update(m, {a, b}))) << "\" [label=\""
                   << dot_escape(pair_label(alpha, {a, b})) << "\"];\n";
    os << "}\n";
    return os.str();
}

} // namespace deltasynth
