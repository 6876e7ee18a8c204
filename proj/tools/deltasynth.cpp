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

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "deltasynth/deltasynth.hpp"

using namespace deltasynth;
namespace fs = std::filesystem;

namespace {

enum Exit { Ok = 0, Usage = 1, NoStrategy = 2, Losing = 3, Unsupp = 4 };

int exit_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::NoWinningStrategy: return NoStrategy;
    case ErrorKind::Unsupported: return Unsupp;
    default: return Usage;
    }
}

struct Args {
    std::string game, machine, out, format = "json", beta = "0 :", order, manifest;
    size_t horizon = 10;
    long long budget = env_budget();
    uint64_t seed = 42;
    unsigned jobs = 0;
    bool no_timing = false;
};

SynthOptions synth_options(const Args &a)
{
    SynthOptions o;
    o.budget = a.budget;
    if (a.order == "structural") o.order = OrderMode::Structural;
    else if (a.order == "exact") o.order = OrderMode::ExactRegular;
    else if (!a.order.empty()) fail(ErrorKind::InvalidParams, "--order must be structural or exact");
    return o;
}

std::string stem(const std::string &path)
{
    return fs::path(path).stem().string();
}

void emit(const Args &a, const json &report, const std::string &file = "report.json")
{
    std::string text = report.dump(2) + "\n";
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_file((fs::path(a.out) / file).string(), text);
    }
    std::cout << text;
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_classify(const Args &a)
{
    GameSpec g = load_game(a.game);
    json r;
    r["game"] = g.name.empty() ? stem(a.game) : g.name;
    r["classification"] = class_string(classify(g.condition));
    r["expression"] = expr_string(g.condition, &g.monitor);
    r["energyDim"] = g.monitor.dim();
    if (!mentions_energy(g.condition)) r["differenceForm"] = {{"theta", to_difference_form(g.condition, g.monitor).theta}};
    emit(a, r);
    return Ok;
}

int cmd_synth(const Args &a)
{
    auto t0 = std::chrono::steady_clock::now();
    GameSpec g = load_game(a.game);
    std::string name = g.name.empty() ? stem(a.game) : g.name;
    json r;
    r["game"] = name;
    r["classification"] = class_string(classify(g.condition));
    FiniteMemoryMachine s;
    try {
        s = synth(g.condition, g.monitor, synth_options(a));
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NoWinningStrategy) throw;
        r["winner"] = "player2";
        if (!a.no_timing) r["timing_ms"] = ms_since(t0);
        emit(a, r);
        return NoStrategy;
    }
    r["winner"] = "player1";
    Verdict v = verify_machine(s, g.condition, g.monitor);
    r["verdict"] = verdict_to_json(v, g.monitor.alphabet());
    json mj = {{"states", s.size()}};
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::string base = (fs::path(a.out) / (name + ".machine")).string();
        write_file(base + ".json", machine_to_json(s).dump(2) + "\n");
        write_file(base + ".dot", to_dot(s));
        mj["json"] = base + ".json";
        mj["dot"] = base + ".dot";
    }
    r["machine"] = mj;
    if (!a.no_timing) r["timing_ms"] = ms_since(t0);
    if (a.format == "dot" && a.out.empty()) {
        std::cout << to_dot(s);
        return Ok;
    }
    if (a.format == "json" && a.out.empty()) r["machineJson"] = machine_to_json(s);
    emit(a, r);
    return Ok;
}

int cmd_verify(const Args &a)
{
    auto t0 = std::chrono::steady_clock::now();
    GameSpec g = load_game(a.game);
    FiniteMemoryMachine s = load_machine(a.machine);
    Verdict v = verify_machine(s, g.condition, g.monitor);
    json r;
    r["game"] = g.name.empty() ? stem(a.game) : g.name;
    r["machine"] = {{"states", s.size()}};
    r["verdict"] = verdict_to_json(v, g.monitor.alphabet());
    if (!a.no_timing) r["timing_ms"] = ms_since(t0);
    emit(a, r);
    if (v.outcome == Verdict::Losing) return Losing;
    if (v.outcome == Verdict::Unsupported) return Unsupp;
    return Ok;
}

int cmd_simulate(const Args &a)
{
    GameSpec g = load_game(a.game);
    FiniteMemoryMachine s = load_machine(a.machine);
    BWord beta = parse_beta(a.beta, g.monitor.alphabet());
    Trace t = simulate(s, g.monitor, beta, a.horizon);
    json r = trace_to_json(t, s, g.monitor);
    r["game"] = g.name.empty() ? stem(a.game) : g.name;
    emit(a, r, "trace.json");
    return Ok;
}

int cmd_corpus(const Args &a)
{
    auto t0 = std::chrono::steady_clock::now();
    json manifest = parse_json_text(read_file(a.manifest), a.manifest);
    CorpusOptions co;
    co.jobs = a.jobs;
    co.seed = a.seed;
    co.timing = !a.no_timing;
    co.base_dir = fs::path(a.manifest).parent_path().string();
    auto results = run_corpus(manifest, co);
    json entries = json::array();
    int failed = 0;
    for (auto &res : results) {
        json e = res.report;
        e["name"] = res.name;
        entries.push_back(e);
        if (!res.pass) {
            failed++;
            std::cerr << "FAILED " << res.name;
            for (auto &f : res.failures) std::cerr << " [" << f << "]";
            std::cerr << "\n";
        }
    }
    json r = {{"entries", entries}, {"passed", (int)results.size() - failed}, {"failed", failed}, {"seed", a.seed}};
    if (!a.no_timing) r["timing_ms"] = ms_since(t0);
    emit(a, r, "corpus.json");
    return failed ? Usage : Ok;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"deltasynth: finite-memory strategy synthesis and verification"};
    app.require_subcommand(1);
    Args a;
    auto game = [&](CLI::App *c) { c->add_option("--game", a.game, "game file")->required()->check(CLI::ExistingFile); };
    auto common = [&](CLI::App *c) {
        c->add_option("--out", a.out, "output directory");
        c->add_flag("--no-timing", a.no_timing, "omit timings from reports");
    };

    auto *classify_cmd = app.add_subcommand("classify", "report the hierarchy class of the condition");
    game(classify_cmd);
    common(classify_cmd);

    auto *synth_cmd = app.add_subcommand("synth", "synthesize and verify a finite-memory strategy");
    game(synth_cmd);
    common(synth_cmd);
    synth_cmd->add_option("--format", a.format, "stdout rendering")->check(CLI::IsMember({"dot", "json"}));
    synth_cmd->add_option("--order", a.order, "structural|exact")->check(CLI::IsMember({"structural", "exact"}));
    synth_cmd->add_option("--budget", a.budget, "node budget for tree explorations");

    auto *verify_cmd = app.add_subcommand("verify", "model-check a machine against the condition");
    game(verify_cmd);
    common(verify_cmd);
    verify_cmd->add_option("--machine", a.machine, "machine JSON")->required()->check(CLI::ExistingFile);

    auto *sim_cmd = app.add_subcommand("simulate", "replay a machine against an adversary word");
    game(sim_cmd);
    common(sim_cmd);
    sim_cmd->add_option("--machine", a.machine, "machine JSON")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--beta", a.beta, "adversary word \"prefix : cycle\"");
    sim_cmd->add_option("--horizon", a.horizon, "number of steps");

    auto *corpus_cmd = app.add_subcommand("corpus", "run a manifest of games and check expectations");
    common(corpus_cmd);
    corpus_cmd->add_option("--manifest", a.manifest, "manifest JSON")->required()->check(CLI::ExistingFile);
    corpus_cmd->add_option("--seed", a.seed, "seed for generated entries");
    corpus_cmd->add_option("--jobs", a.jobs, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*classify_cmd) return cmd_classify(a);
        if (*synth_cmd) return cmd_synth(a);
        if (*verify_cmd) return cmd_verify(a);
        if (*sim_cmd) return cmd_simulate(a);
        if (*corpus_cmd) return cmd_corpus(a);
    } catch (const Error &e) {
        std::cerr << "deltasynth: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_for(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "deltasynth: " << e.what() << "\n";
        return Usage;
    }
    return Usage;
}
