#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "qnet/cli.hpp"
#include "qnet/scenario.hpp"

using namespace qnet;
using namespace qnet::cli;

namespace {

std::string fixture(const std::string &name) {
    return std::string(QNET_TEST_DIR) + "/fixtures/" + name;
}

std::string slurp(const std::string &path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<ParseIssue> issues_of(const std::string &text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioError &e) {
        return e.issues();
    }
    return {};
}

}  // namespace

TEST(Parse, ClusterFixture) {
    auto s = load_scenario(fixture("cluster.scn"));
    EXPECT_EQ(s.name, "cluster");
    EXPECT_EQ(s.seed, 11u);
    ASSERT_EQ(s.networks.size(), 6u);
    EXPECT_EQ(s.networks[2].id, "red");
    EXPECT_EQ(s.networks[2].clients, (std::vector<int>{1, 1, 2}));
    EXPECT_EQ(s.clients.size(), 4u);
    EXPECT_EQ(s.regions[1].members, (std::vector<DeviceId>{"r_g", "r_p", "r_y"}));
    ASSERT_EQ(s.requests.size(), 1u);
    EXPECT_EQ(s.requests[0].edges.size(), 3u);
    EXPECT_EQ(s.requests[0].edges[1], (std::pair<std::string, std::string>{"sw_y.c1", "sw_r1.c1"}));
}

TEST(Parse, EmptyFileIsEmptyScenario) {
    EXPECT_EQ(parse_scenario(""), stack::Scenario{});
    EXPECT_EQ(parse_scenario("# nothing here\n\n"), stack::Scenario{});
    EXPECT_EQ(serialize_scenario(stack::Scenario{}), "");
}

TEST(Parse, CommentsAndBlankLines) {
    auto s = parse_scenario("# header\n\nscenario.name = x   # trailing\ncosts.c = 1,2\ncosts.m = 3\n");
    EXPECT_EQ(s.name, "x");
    EXPECT_EQ(s.cost_c, (std::vector<int>{1, 2}));
    EXPECT_FALSE(s.seed.has_value());
}

TEST(Parse, LayoutAndSymmetrized) {
    auto s = parse_scenario(
        "network.n.devices = a, b, c\nnetwork.n.clients = 1, 1, 1\nnetwork.n.layout = shielded\n");
    EXPECT_EQ(s.networks[0].layout, net::Layout::shielded);
    s = load_scenario(fixture("symmetrized.scn"));
    EXPECT_EQ(s.networks[0].symmetrized, 8);
}

TEST(RoundTrip, EveryFixture) {
    for (auto name : {"nine_routers.scn", "cluster.scn", "symmetrized.scn", "costs.scn", "verify.scn"}) {
        auto s = load_scenario(fixture(name));
        auto text = serialize_scenario(s);
        auto again = parse_scenario(text);
        EXPECT_EQ(again, s) << name;
        EXPECT_EQ(serialize_scenario(again), text) << name;
    }
}

TEST(RoundTrip, FailuresAndChecks) {
    auto s = load_scenario(fixture("cluster.scn"));
    s.failures = {{"r_o", 0}, {"r_g", 4}};
    s.checks.push_back({"c2", "blue", 2, 1, "sw_b"});
    s.route = {"r_b", "r_r"};
    s.m_max = 2;
    EXPECT_EQ(parse_scenario(serialize_scenario(s)), s);
}

TEST(Errors, LineNumbers) {
    auto issues = issues_of("scenario.name = x\nnot a record\nscenario.seed = abc\nwidget.a.b = 1\n");
    ASSERT_EQ(issues.size(), 3u);
    EXPECT_EQ(issues[0].line, 2);
    EXPECT_EQ(issues[1].line, 3);
    EXPECT_EQ(issues[2].line, 4);
    for (const auto &i : issues) EXPECT_EQ(i.code, ErrorCode::syntax_error);
}

TEST(Errors, DuplicateKey) {
    auto issues = issues_of("scenario.name = x\nscenario.name = y\n");
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].code, ErrorCode::duplicate_id);
    EXPECT_EQ(issues[0].line, 2);
}

TEST(Errors, UnknownClientInRequest) {
    auto text = slurp(fixture("cluster.scn"));
    text += "request.q2.edges = sw_b.c1:ghost\n";
    auto issues = issues_of(text);
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].code, ErrorCode::unknown_reference);
    auto lines = std::count(text.begin(), text.end(), '\n');
    EXPECT_EQ(issues[0].line, lines);
    EXPECT_NE(issues[0].message.find("ghost"), std::string::npos);
}

TEST(Errors, UnknownRegionMemberAndCheckNetwork) {
    auto issues = issues_of(
        "network.n.devices = a, r\nnetwork.n.clients = 1, 1\nnetwork.n.router = r\n"
        "region.R.members = r, nowhere\ncheck.c.network = missing\n");
    ASSERT_EQ(issues.size(), 2u);
    EXPECT_EQ(issues[0].line, 4);
    EXPECT_EQ(issues[1].line, 5);
}

TEST(Errors, WhatListsEveryIssue) {
    try {
        parse_scenario("x\ny\n");
        FAIL();
    } catch (const ScenarioError &e) {
        std::string what = e.what();
        EXPECT_NE(what.find("line 1"), std::string::npos);
        EXPECT_NE(what.find("line 2"), std::string::npos);
        EXPECT_EQ(e.code(), ErrorCode::syntax_error);
    }
}

TEST(Errors, MissingSeedWithRequests) {
    auto text = slurp(fixture("cluster.scn"));
    auto pos = text.find("scenario.seed");
    text.erase(pos, text.find('\n', pos) - pos + 1);
    EXPECT_THROW(parse_scenario(text), ScenarioError);
}

TEST(Verbs, CostsMatchGolden) {
    auto report = run_costs(load_scenario(fixture("costs.scn")));
    EXPECT_TRUE(report.ok);
    EXPECT_EQ(report.render(Format::text), slurp(std::string(QNET_TEST_DIR) + "/golden/costs.txt"));
}

TEST(Verbs, RecordsFormatPrefixesKind) {
    auto report = run_costs(load_scenario(fixture("costs.scn")));
    auto text = report.render(Format::records);
    EXPECT_EQ(text.substr(0, text.find('\n')), "kind=cost c=3 m=5 MB=180 MS=129 MM=102");
}

TEST(Verbs, EndToEndCluster) {
    auto report = run_e2e(load_scenario(fixture("cluster.scn")));
    auto text = report.render(Format::text);
    EXPECT_TRUE(report.ok) << text;
    EXPECT_NE(text.find("oracle=PASS target=cluster4"), std::string::npos);
    EXPECT_NE(text.find("created_adaptive=0"), std::string::npos);
    EXPECT_NE(text.find("audit=PASS"), std::string::npos);
    EXPECT_NE(text.find("graph_edges=[sw_b.c1-sw_y.c1,sw_r1.c1-sw_r2.c1,sw_r1.c1-sw_y.c1]"), std::string::npos) << text;
    EXPECT_NE(text.find("client=sw_b.c1 qubit=sw_b.c1#0 byproduct="), std::string::npos);
}

TEST(Verbs, EndToEndReportsErrors) {
    auto s = load_scenario(fixture("cluster.scn"));
    s.failures = {{"r_g", 0}, {"r_o", 0}};
    auto report = run_e2e(s);
    EXPECT_FALSE(report.ok);
    EXPECT_NE(report.render(Format::text).find("error=no-route"), std::string::npos);
}

TEST(Verbs, DrillSymmetrized) {
    auto report = run_drill(load_scenario(fixture("symmetrized.scn")));
    EXPECT_TRUE(report.ok);
    ASSERT_EQ(report.records.size(), 4u);
    for (const auto &line : report.records) {
        std::string text = Report{{line}, true}.render(Format::text);
        EXPECT_NE(text.find("intact_full_copies>=2 PASS"), std::string::npos) << text;
    }
}

TEST(Verbs, RouteTerminals) {
    auto report = run_route(load_scenario(fixture("nine_routers.scn")));
    auto text = report.render(Format::text);
    EXPECT_TRUE(report.ok);
    EXPECT_NE(text.find("step=1 root=N1 tree_edges=[N1-N2,N2-N3,A-N4,A-N1]"), std::string::npos) << text;
    EXPECT_NE(text.find("sizes=[4,3,2]"), std::string::npos);
    EXPECT_NE(text.find("oracle=PASS"), std::string::npos);
    EXPECT_NE(text.find("m_max=3 levels=2"), std::string::npos);
}

TEST(Verbs, VerifyChecks) {
    auto report = run_verify(load_scenario(fixture("verify.scn")));
    auto text = report.render(Format::text);
    EXPECT_NE(text.find("check=intact network=v size=3 budget=4 lost=- verdict=verified"), std::string::npos);
    EXPECT_NE(text.find("check=lost"), std::string::npos);
}

TEST(Verbs, UnknownVerb) {
    EXPECT_THROW(run_verb("dance", {}), Error);
}

TEST(Determinism, SameSeedSameBytes) {
    for (const auto &verb : verbs()) {
        for (auto name : {"nine_routers.scn", "cluster.scn", "symmetrized.scn", "verify.scn"}) {
            auto s = load_scenario(fixture(name));
            if (verb == "costs") continue;
            EXPECT_EQ(run_verb(verb, s).render(Format::records), run_verb(verb, s).render(Format::records))
                << verb << " " << name;
        }
    }
}

TEST(Determinism, SeedChangesOutcomes) {
    auto s = load_scenario(fixture("verify.scn"));
    std::set<std::string> seen;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        s.seed = seed;
        seen.insert(run_verify(s).render(Format::text));
    }
    EXPECT_GT(seen.size(), 1u);
}
