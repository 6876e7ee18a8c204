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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace deltasynth;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string &args, const std::string &env = "")
{
    std::string cmd = env + (env.empty() ? "" : " ") + CLI_PATH + std::string(" ") + args + " 2>/dev/null";
    Run r;
    FILE *p = ::popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = ::pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string quoted(const std::string &s) { return "'" + s + "'"; }

fs::path scratch(const std::string &name)
{
    fs::path d = fs::temp_directory_path() / ("deltasynth-cli-" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST_CASE("classify reports the class", "[cli]")
{
    auto r = run("classify --no-timing --game " + quoted(games("example10.game")));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["classification"] == "K2");
    CHECK(j["differenceForm"]["theta"] == 3);
}

TEST_CASE("synth writes a machine that verify accepts", "[cli]")
{
    auto dir = scratch("synth");
    auto r = run("synth --no-timing --game " + quoted(games("example10.game")) + " --out " + quoted(dir.string()));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["winner"] == "player1");
    CHECK(j["verdict"]["outcome"] == "Winning");
    CHECK(j["machine"]["states"] == 9);
    CHECK(fs::exists(dir / "example10.machine.json"));
    CHECK(fs::exists(dir / "example10.machine.dot"));
    CHECK(fs::exists(dir / "report.json"));
    auto v = run("verify --no-timing --game " + quoted(games("example10.game")) + " --machine " +
                 quoted((dir / "example10.machine.json").string()));
    CHECK(v.code == 0);
    CHECK(json::parse(v.out)["verdict"]["outcome"] == "Winning");
}

TEST_CASE("synth output is byte-identical without timings", "[cli]")
{
    std::string args = "synth --no-timing --game " + quoted(games("example10.game"));
    auto a = run(args), b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("timing") == std::string::npos);
    auto dot = run(args + " --format dot");
    CHECK(dot.out.rfind("digraph machine {", 0) == 0);
}

TEST_CASE("verify reports a losing machine with its witness", "[cli]")
{
    auto r = run("verify --no-timing --game " + quoted(games("example10.game")) + " --machine " +
                 quoted(games("fig2.machine.json")));
    CHECK(r.code == 3);
    auto j = json::parse(r.out);
    CHECK(j["verdict"]["outcome"] == "Losing");
    CHECK(j["verdict"]["witness"] == json{{"prefix", json::array()}, {"cycle", {"0"}}});
}

TEST_CASE("simulate prints the trace", "[cli]")
{
    auto r = run("simulate --game " + quoted(games("example10.game")) + " --machine " +
                 quoted(games("fig2.machine.json")) + " --beta '0 : 0' --horizon 4");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["history"] == "(0,0)(0,0)(0,0)(0,0)");
    CHECK(j["steps"].size() == 5);
    CHECK(j["steps"][4]["config"] == "q2");
}

TEST_CASE("exit codes", "[cli]")
{
    CHECK(run("synth --no-timing --game " + quoted(games("example10_open.game"))).code == 2);
    CHECK(run("synth --game /nonexistent.game").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("").code == 1);

    auto dir = scratch("codes");
    write_file((dir / "broken.game").string(), "{ \"alphabet\": ");
    CHECK(run("classify --game " + quoted((dir / "broken.game").string())).code == 1);

    auto g = load_game(games("multienergy_d2.game"));
    g.condition = expr::negate(g.condition);
    write_file((dir / "deficit.game").string(), game_to_json(g).dump(2));
    CHECK(run("synth --game " + quoted((dir / "deficit.game").string())).code == 4);

    CHECK(run("synth --game " + quoted(games("example10.game")), "DELTASYNTH_BUDGET=1").code == 1);
    CHECK(run("synth --game " + quoted(games("example10.game")) + " --budget 1").code == 1);
    CHECK(run("synth --game " + quoted(games("example10.game")) + " --order structural").code == 0);
}

TEST_CASE("corpus runs a manifest and names failures", "[cli]")
{
    auto dir = scratch("corpus");
    fs::copy_file(games("example10.game"), dir / "example10.game");
    json good = {{"entries", {{{"name", "e10"}, {"game", "example10.game"}, {"expect", {{"class", "K2"}}}}}}};
    write_file((dir / "good.json").string(), good.dump());
    auto r = run("corpus --no-timing --manifest " + quoted((dir / "good.json").string()));
    CHECK(r.code == 0);
    CHECK(json::parse(r.out)["passed"] == 1);

    json bad = {{"entries", {{{"name", "wrong-class"}, {"game", "example10.game"}, {"expect", {{"class", "K3"}}}}}}};
    write_file((dir / "bad.json").string(), bad.dump());
    auto b = run("corpus --no-timing --manifest " + quoted((dir / "bad.json").string()));
    CHECK(b.code != 0);
    CHECK(json::parse(b.out)["failed"] == 1);

    write_file((dir / "empty.json").string(), "{\"entries\": []}");
    CHECK(run("corpus --manifest " + quoted((dir / "empty.json").string())).code == 0);
}
