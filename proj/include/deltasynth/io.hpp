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

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "synthesis.hpp"

namespace deltasynth {

using json = nlohmann::json;

/** Parsed game file. */
struct GameSpec {
    std::string name;
    std::string description;
    ConditionMonitor monitor;
    ExprPtr condition;
};

namespace detail {

[[noreturn]] inline void schema(const std::string &where, const std::string &what)
{
    fail(ErrorKind::Schema, where + ": " + what);
}

inline const json &field(const json &j, const std::string &key, const std::string &where)
{
    if (!j.is_object()) schema(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema(where, "missing field \"" + key + "\"");
    return *it;
}

inline std::vector<std::string> string_list(const json &j, const std::string &where)
{
    if (!j.is_array()) schema(where, "expected an array of strings");
    std::vector<std::string> r;
    for (size_t i = 0; i < j.size(); i++) {
        if (!j[i].is_string()) schema(where + "/" + std::to_string(i), "expected a string");
        r.push_back(j[i].get<std::string>());
    }
    return r;
}

inline std::string letter_key(const Alphabet &al, int l)
{
    return pair_label(al, letter_pair(al, l));
}

inline Vec int_vector(const json &j, int dim, const std::string &where)
{
    if (!j.is_array() || (int)j.size() != dim) schema(where, "expected " + std::to_string(dim) + " integers");
    Vec v;
    for (auto &x : j) {
        if (!x.is_number_integer()) schema(where, "expected integers");
        v.push_back(x.get<long long>());
    }
    return v;
}

} // namespace detail

inline ExprPtr parse_expr(const json &j, const ConditionMonitor &m, const std::string &where = "/condition")
{
    auto states = [&](const json &x, const std::string &w) {
        StateSet s;
        for (auto &n : detail::string_list(x, w)) {
            int q = -1;
            for (int i = 0; i < m.size(); i++)
                if (m.name(i) == n) q = i;
            if (q < 0) detail::schema(w, "unknown state \"" + n + "\"");
            s.push_back(q);
        }
        return normalize_set(s);
    };
    if (!j.is_object() || j.size() != 1) detail::schema(where, "expected an object with exactly one operator");
    auto it = j.begin();
    const std::string &op = it.key();
    if (op == "open") return expr::open(states(*it, where + "/open"));
    if (op == "not") return expr::negate(parse_expr(*it, m, where + "/not"));
    if (op == "energySafe") {
        if (*it != true) detail::schema(where + "/energySafe", "expected true");
        return expr::energy_safe();
    }
    if (op == "openUnion") {
        if (!it->is_array()) detail::schema(where + "/openUnion", "expected an array of branches");
        std::vector<Branch> bs;
        for (size_t i = 0; i < it->size(); i++) {
            std::string w = where + "/openUnion/" + std::to_string(i);
            const json &b = (*it)[i];
            const json &g = detail::field(b, "guard", w);
            ExprPtr child = parse_expr(detail::field(b, "expr", w), m, w + "/expr");
            if (g.is_string() && g == "energyDeficit")
                bs.push_back(expr::deficit_branch(child));
            else
                bs.push_back(expr::branch(states(g, w + "/guard"), child));
        }
        return expr::open_union(bs);
    }
    detail::schema(where, "unknown operator \"" + op + "\"");
}

inline json expr_to_json(const ExprPtr &e, const ConditionMonitor &m)
{
    auto names = [&](const StateSet &s) {
        json a = json::array();
        for (int q : s) a.push_back(m.name(q));
        return a;
    };
    switch (e->kind) {
    case ExprKind::Open: return {{"open", names(e->target)}};
    case ExprKind::Not: return {{"not", expr_to_json(e->child, m)}};
    case ExprKind::EnergySafe: return {{"energySafe", true}};
    case ExprKind::OpenUnion: {
        json a = json::array();
        for (auto &b : e->branches)
            a.push_back({{"guard", b.deficit ? json("energyDeficit") : names(b.guard)}, {"expr", expr_to_json(b.expr, m)}});
        return {{"openUnion", a}};
    }
    }
    fail(ErrorKind::InvalidExpr, "unknown expression kind");
}

inline GameSpec parse_game(const json &j)
{
    GameSpec g;
    if (!j.is_object()) detail::schema("/", "expected an object");
    if (auto it = j.find("meta"); it != j.end()) {
        if (it->contains("name")) g.name = (*it)["name"].get<std::string>();
        if (it->contains("description")) g.description = (*it)["description"].get<std::string>();
    }
    const json &al = detail::field(j, "alphabet", "/");
    Alphabet alpha(detail::string_list(detail::field(al, "actionsA", "/alphabet"), "/alphabet/actionsA"),
                   detail::string_list(detail::field(al, "actionsB", "/alphabet"), "/alphabet/actionsB"));
    const json &mon = detail::field(j, "monitor", "/");
    auto names = detail::string_list(detail::field(mon, "states", "/monitor"), "/monitor/states");
    auto index = [&](const std::string &n, const std::string &w) {
        for (size_t i = 0; i < names.size(); i++)
            if (names[i] == n) return (int)i;
        detail::schema(w, "unknown state \"" + n + "\"");
    };
    const json &init = detail::field(mon, "initial", "/monitor");
    if (!init.is_string()) detail::schema("/monitor/initial", "expected a state name");
    int initial = index(init.get<std::string>(), "/monitor/initial");
    const json &st = detail::field(mon, "step", "/monitor");
    const int L = alpha.letters();
    std::vector<std::vector<int>> step(names.size(), std::vector<int>(L, -1));
    for (size_t q = 0; q < names.size(); q++) {
        std::string w = "/monitor/step/" + names[q];
        const json &row = detail::field(st, names[q], "/monitor/step");
        for (int l = 0; l < L; l++) {
            std::string key = detail::letter_key(alpha, l);
            auto it = row.find(key);
            if (it == row.end()) detail::schema(w, "missing transition (" + names[q] + ", \"" + key + "\")");
            if (!it->is_string()) detail::schema(w + "/" + key, "expected a state name");
            step[q][l] = index(it->get<std::string>(), w + "/" + key);
        }
        for (auto &[k, v] : row.items()) {
            bool known = false;
            for (int l = 0; l < L; l++) known |= detail::letter_key(alpha, l) == k;
            if (!known) detail::schema(w, "unknown letter \"" + k + "\"");
        }
    }
    int dim = 0;
    std::vector<std::vector<Vec>> weights;
    Vec credit;
    if (auto it = mon.find("energy"); it != mon.end()) {
        const json &en = *it;
        const json &d = detail::field(en, "dim", "/monitor/energy");
        if (!d.is_number_integer() || d.get<int>() < 1) detail::schema("/monitor/energy/dim", "expected a positive integer");
        dim = d.get<int>();
        weights.assign(names.size(), std::vector<Vec>(L, Vec(dim, 0)));
        if (auto wt = en.find("weights"); wt != en.end()) {
            for (auto &[qn, row] : wt->items()) {
                int q = index(qn, "/monitor/energy/weights");
                for (auto &[k, v] : row.items()) {
                    int found = -1;
                    for (int l = 0; l < L; l++)
                        if (detail::letter_key(alpha, l) == k) found = l;
                    std::string w = "/monitor/energy/weights/" + qn + "/" + k;
                    if (found < 0) detail::schema(w, "unknown letter");
                    weights[q][found] = detail::int_vector(v, dim, w);
                }
            }
        }
        credit = Vec(dim, 0);
        if (auto c = en.find("initialCredit"); c != en.end())
            credit = detail::int_vector(*c, dim, "/monitor/energy/initialCredit");
    }
    g.monitor = ConditionMonitor(alpha, names, initial, step, dim, weights, credit);
    g.condition = parse_expr(detail::field(j, "condition", "/"), g.monitor);
    validate(g.condition, g.monitor);
    return g;
}

inline json game_to_json(const GameSpec &g)
{
    const ConditionMonitor &m = g.monitor;
    const Alphabet &al = m.alphabet();
    json mon;
    mon["states"] = m.names();
    mon["initial"] = m.name(m.initial());
    json st = json::object();
    for (int q = 0; q < m.size(); q++)
        for (int l = 0; l < al.letters(); l++) st[m.name(q)][detail::letter_key(al, l)] = m.name(m.step_letter(q, l));
    mon["step"] = st;
    if (m.dim() > 0) {
        json w = json::object();
        for (int q = 0; q < m.size(); q++)
            for (int l = 0; l < al.letters(); l++) {
                const Vec &v = m.weight_letter(q, l);
                if (std::any_of(v.begin(), v.end(), [](long long x) { return x != 0; }))
                    w[m.name(q)][detail::letter_key(al, l)] = v;
            }
        mon["energy"] = {{"dim", m.dim()}, {"weights", w}, {"initialCredit", m.credit()}};
    }
    json j;
    j["meta"] = {{"name", g.name}, {"description", g.description}};
    j["alphabet"] = {{"actionsA", al.actions_a()}, {"actionsB", al.actions_b()}};
    j["monitor"] = mon;
    j["condition"] = expr_to_json(g.condition, m);
    return j;
}

inline std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IO, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IO, "cannot write " + path);
    out << text;
}

inline json parse_json_text(const std::string &text, const std::string &origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        // e.byte is the 1-based offset of the error
        size_t line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); i++) {
            if (text[i] == '\n') line++, col = 1;
            else col++;
        }
        fail(ErrorKind::Schema, origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
}

inline GameSpec load_game(const std::string &path)
{
    return parse_game(parse_json_text(read_file(path), path));
}

// ---------------------------------------------------------------------------
// Machines

inline json machine_to_json(const FiniteMemoryMachine &s)
{
    const Alphabet &al = s.alphabet();
    json j;
    j["actionsA"] = al.actions_a();
    j["actionsB"] = al.actions_b();
    j["states"] = s.names();
    j["initial"] = s.name(s.initial());
    json dec = json::object(), up = json::object();
    for (int x = 0; x < s.size(); x++) {
        dec[s.name(x)] = al.name_a(s.decide(x));
        for (int a = 0; a < al.size_a(); a++)
            for (int b = 0; b < al.size_b(); b++) up[s.name(x)][pair_label(al, {a, b})] = s.name(s.update(x, {a, b}));
    }
    j["decide"] = dec;
    j["update"] = up;
    return j;
}

inline FiniteMemoryMachine machine_from_json(const json &j)
{
    Alphabet al(detail::string_list(detail::field(j, "actionsA", "/"), "/actionsA"),
                detail::string_list(detail::field(j, "actionsB", "/"), "/actionsB"));
    auto names = detail::string_list(detail::field(j, "states", "/"), "/states");
    auto index = [&](const json &v, const std::string &w) {
        if (!v.is_string()) detail::schema(w, "expected a state name");
        for (size_t i = 0; i < names.size(); i++)
            if (names[i] == v.get<std::string>()) return (int)i;
        detail::schema(w, "unknown state \"" + v.get<std::string>() + "\"");
    };
    int initial = index(detail::field(j, "initial", "/"), "/initial");
    const json &dec = detail::field(j, "decide", "/");
    const json &up = detail::field(j, "update", "/");
    std::vector<int> decide;
    std::vector<std::vector<int>> update;
    for (auto &n : names) {
        const json &a = detail::field(dec, n, "/decide");
        if (!a.is_string()) detail::schema("/decide/" + n, "expected an action name");
        decide.push_back(al.index_a(a.get<std::string>()));
        const json &row = detail::field(up, n, "/update");
        std::vector<int> r;
        for (int l = 0; l < al.letters(); l++) {
            std::string key = detail::letter_key(al, l);
            // pairs incompatible with the decision may be omitted: self-loop
            auto it = row.find(key);
            if (it == row.end()) {
                if (letter_pair(al, l).a == decide.back()) detail::schema("/update/" + n, "missing transition \"" + key + "\"");
                r.push_back((int)update.size());
            } else {
                r.push_back(index(*it, "/update/" + n + "/" + key));
            }
        }
        update.push_back(r);
    }
    return FiniteMemoryMachine(al, names, decide, update, initial);
}

inline FiniteMemoryMachine load_machine(const std::string &path)
{
    return machine_from_json(parse_json_text(read_file(path), path));
}

/** "b0 b1 : b2 b3" with action names of Player 2. */
inline BWord parse_beta(const std::string &text, const Alphabet &al)
{
    auto colon = text.find(':');
    if (colon == std::string::npos) fail(ErrorKind::InvalidParams, "adversary word needs \"prefix : cycle\"");
    auto words = [&](const std::string &s) {
        std::istringstream in(s);
        std::vector<int> r;
        std::string w;
        while (in >> w) r.push_back(al.index_b(w));
        return r;
    };
    BWord beta{words(text.substr(0, colon)), words(text.substr(colon + 1))};
    check_lasso(beta, al);
    return beta;
}

inline json bword_to_json(const BWord &w, const Alphabet &al)
{
    json p = json::array(), c = json::array();
    for (int b : w.prefix) p.push_back(al.name_b(b));
    for (int b : w.cycle) c.push_back(al.name_b(b));
    return {{"prefix", p}, {"cycle", c}};
}

inline json verdict_to_json(const Verdict &v, const Alphabet &al)
{
    json j;
    j["outcome"] = outcome_name(v.outcome);
    if (v.witness) j["witness"] = bword_to_json(*v.witness, al);
    if (!v.reason.empty()) j["reason"] = v.reason;
    return j;
}

inline json trace_to_json(const Trace &t, const FiniteMemoryMachine &s, const ConditionMonitor &m)
{
    json steps = json::array();
    for (size_t k = 0; k < t.configs.size(); k++) {
        json x;
        x["step"] = k;
        x["config"] = config_string(t.configs[k], m);
        x["memory"] = s.name(t.memory[k]);
        if (k > 0) x["pair"] = pair_label(m.alphabet(), t.history[k - 1]);
        steps.push_back(x);
    }
    return {{"history", history_string(m.alphabet(), t.history)}, {"steps", steps}};
}

} // namespace deltasynth
