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
#include <deque>
#include <optional>
#include <utility>
#include <vector>

namespace deltasynth::graph {

// Edge list per node: (label, target).
using Edges = std::vector<std::vector<std::pair<int, int>>>;

struct Sccs {
    std::vector<int> comp;    // component of each node
    std::vector<bool> cyclic; // per component: contains a cycle
    int count = 0;            // components are numbered sinks first
};

/**
 * Iterative Tarjan restricted to nodes with allowed[v] (empty mask = all).
 * Nodes outside the mask get component -1.
 */
inline Sccs tarjan(const Edges &g, const std::vector<bool> &allowed = {})
{
    const int n = (int)g.size();
    auto ok = [&](int v) { return allowed.empty() || allowed[v]; };
    Sccs r;
    r.comp.assign(n, -1);
    std::vector<int> index(n, -1), low(n, 0), stack;
    std::vector<bool> on(n, false);
    std::vector<std::pair<int, size_t>> call;
    int counter = 0;
    for (int root = 0; root < n; root++) {
        if (!ok(root) || index[root] >= 0) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto &[v, i] = call.back();
            if (i == 0 && index[v] < 0) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on[v] = true;
            }
            bool pushed = false;
            while (i < g[v].size()) {
                int w = g[v][i].second;
                i++;
                if (!ok(w)) continue;
                if (index[w] < 0) {
                    call.push_back({w, 0});
                    pushed = true;
                    break;
                }
                if (on[w]) low[v] = std::min(low[v], index[w]);
            }
            if (pushed) continue;
            int u = v;
            if (low[u] == index[u]) {
                int c = r.count++;
                bool cyc = false;
                int size = 0;
                for (;;) {
                    int w = stack.back();
                    stack.pop_back();
                    on[w] = false;
                    r.comp[w] = c;
                    size++;
                    if (w == u) break;
                }
                if (size > 1) cyc = true;
                for (auto &e : g[u])
                    if (e.second == u) cyc = true;
                r.cyclic.push_back(cyc);
            }
            call.pop_back();
            if (!call.empty()) {
                int parent = call.back().first;
                low[parent] = std::min(low[parent], low[u]);
            }
        }
    }
    return r;
}

inline std::vector<bool> reachable(const Edges &g, const std::vector<int> &sources, const std::vector<bool> &allowed = {})
{
    std::vector<bool> seen(g.size(), false);
    std::deque<int> q;
    for (int s : sources)
        if ((allowed.empty() || allowed[s]) && !seen[s]) {
            seen[s] = true;
            q.push_back(s);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (auto &[l, w] : g[v])
            if ((allowed.empty() || allowed[w]) && !seen[w]) {
                seen[w] = true;
                q.push_back(w);
            }
    }
    return seen;
}

/** Breadth-first path of labels from src to the first node satisfying goal. */
template <typename Goal>
std::optional<std::pair<std::vector<int>, int>> bfs_path(const Edges &g, int src, Goal goal,
                                                         const std::vector<bool> &allowed = {})
{
    const int n = (int)g.size();
    std::vector<int> parent(n, -2), plabel(n, 0);
    std::deque<int> q{src};
    parent[src] = -1;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        if (goal(v)) {
            std::vector<int> labels;
            for (int u = v; parent[u] >= 0; u = parent[u]) labels.push_back(plabel[u]);
            std::reverse(labels.begin(), labels.end());
            return std::make_pair(labels, v);
        }
        for (auto &[l, w] : g[v])
            if ((allowed.empty() || allowed[w]) && parent[w] == -2) {
                parent[w] = v;
                plabel[w] = l;
                q.push_back(w);
            }
    }
    return std::nullopt;
}

/** Labels of a shortest non-empty cycle through v inside the mask. */
inline std::optional<std::vector<int>> cycle_through(const Edges &g, int v, const std::vector<bool> &allowed = {})
{
    for (auto &[l, w] : g[v]) {
        if (!allowed.empty() && !allowed[w]) continue;
        if (w == v) return std::vector<int>{l};
    }
    std::optional<std::vector<int>> best;
    for (auto &[l, w] : g[v]) {
        if (!allowed.empty() && !allowed[w]) continue;
        auto p = bfs_path(g, w, [&](int u) { return u == v; }, allowed);
        if (p && (!best || p->first.size() + 1 < best->size())) {
            std::vector<int> c{l};
            c.insert(c.end(), p->first.begin(), p->first.end());
            best = c;
        }
    }
    return best;
}

/**
 * A reachable lasso from src that cycles inside the mask: labels of the
 * stem (which may leave the mask only if stem_free) and of the cycle.
 */
inline std::optional<std::pair<std::vector<int>, std::vector<int>>>
lasso_into(const Edges &g, int src, const std::vector<bool> &mask, const std::vector<bool> &stem_allowed = {})
{
    Sccs s = tarjan(g, mask);
    auto on_cycle = [&](int v) { return mask[v] && s.comp[v] >= 0 && s.cyclic[s.comp[v]]; };
    auto stem = bfs_path(g, src, on_cycle, stem_allowed);
    if (!stem) return std::nullopt;
    auto cyc = cycle_through(g, stem->second, mask);
    if (!cyc) return std::nullopt;
    return std::make_pair(stem->first, *cyc);
}

} // namespace deltasynth::graph
