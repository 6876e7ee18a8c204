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
#include <random>
#include <string>

#include "deltasynth/deltasynth.hpp"

namespace testing {

using namespace deltasynth;

inline std::string games(const std::string &file) { return std::string(GAMES_DIR) + "/" + file; }

inline GameSpec example10() { return load_game(games("example10.game")); }

inline int state_of(const ConditionMonitor &m, const std::string &name)
{
    for (int q = 0; q < m.size(); q++)
        if (m.name(q) == name) return q;
    throw std::runtime_error("no state " + name);
}

/** Every word over n letters of length len, as digit vectors. */
inline void for_each_word(int n, int len, const std::function<void(const std::vector<int> &)> &fn)
{
    std::vector<int> w(len, 0);
    for (;;) {
        fn(w);
        int i = len - 1;
        while (i >= 0 && w[i] == n - 1) w[i--] = 0;
        if (i < 0) return;
        w[i]++;
    }
}

/** Every lasso play with |prefix| + |cycle| <= total and a non-empty cycle. */
inline void for_each_lasso(const Alphabet &al, int total, const std::function<void(const UltimatelyPeriodicPlay &)> &fn)
{
    for (int n = 1; n <= total; n++)
        for_each_word(al.letters(), n, [&](const std::vector<int> &w) {
            for (int c = 1; c <= n; c++) {
                UltimatelyPeriodicPlay p;
                for (int i = 0; i < n; i++) (i < n - c ? p.prefix : p.cycle).push_back(letter_pair(al, w[i]));
                fn(p);
            }
        });
}

/** Every adversary lasso with |prefix| + |cycle| <= total. */
inline void for_each_bword(int nb, int total, const std::function<void(const BWord &)> &fn)
{
    for (int n = 1; n <= total; n++)
        for_each_word(nb, n, [&](const std::vector<int> &w) {
            for (int c = 1; c <= n; c++) {
                BWord b;
                b.prefix.assign(w.begin(), w.end() - c);
                b.cycle.assign(w.end() - c, w.end());
                fn(b);
            }
        });
}

/** Uniformly random total machine over the alphabet. */
inline FiniteMemoryMachine random_machine(std::mt19937_64 &rng, const Alphabet &al, int n)
{
    std::vector<std::string> names;
    std::vector<int> dec(n);
    std::vector<std::vector<int>> up(n, std::vector<int>(al.letters()));
    for (int i = 0; i < n; i++) {
        names.push_back("x" + std::to_string(i));
        dec[i] = uniform(rng, 0, al.size_a() - 1);
        for (auto &t : up[i]) t = uniform(rng, 0, n - 1);
    }
    return FiniteMemoryMachine(al, names, dec, up, 0);
}

/**
 * Random energy-free game of a requested class on a layered monitor, which
 * is where deep configurations show up. Returns false if the draw has no
 * room for the class.
 */
inline bool random_class_game(std::mt19937_64 &rng, HierarchyClass c, GameSpec &g, int min_q = 2, int max_q = 6)
{
    RandomParams p;
    p.layered = uniform(rng, 0, 1) == 1;
    int nq = uniform(rng, min_q, max_q);
    g.monitor = random_monitor(rng, nq, uniform(rng, 1, 2), uniform(rng, 1, 2), 0, p);
    g.condition = random_expr_of_class(rng, g.monitor, c);
    return g.condition != nullptr;
}

} // namespace testing
