// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "qnet/cli.hpp"
#include "qnet/netstate.hpp"
#include "qnet/routing.hpp"
#include "qnet/scenario.hpp"
#include "qnet/stack.hpp"
#include "support.hpp"

using namespace qnet;
namespace oc = qnet::oracle;
using testing::labels;
using testing::q;

namespace {

constexpr double kTol = 1e-9;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixture(const std::string &name) {
    return std::string(QNET_TEST_DIR) + "/fixtures/" + name;
}

// 1 ---------------------------------------------------------------------------

Outcome cost_rows() {
    auto t0 = Clock::now();
    auto report = cli::run_costs(cli::load_scenario(fixture("costs.scn")));
    double dt = seconds_since(t0);
    const std::vector<std::array<std::int64_t, 3>> want = {
        {180, 129, 102},    {810, 564, 432},    {1890, 1299, 987}, {500, 315, 270},  {2250, 1390, 1170},
        {5250, 3215, 2695}, {980, 581, 518},    {4410, 2576, 2268}, {10290, 5971, 5243}};
    Outcome out;
    if (report.records.size() != want.size()) return {false, "wrong row count"};
    for (std::size_t i = 0; i < want.size(); ++i) {
        const auto &f = report.records[i].fields;
        std::array<std::int64_t, 3> got{std::stoll(f[2].second), std::stoll(f[3].second), std::stoll(f[4].second)};
        if (got != want[i]) {
            out.pass = false;
            out.detail += fmt::format("row {} c={} m={} ", i + 1, f[0].second, f[1].second);
        }
    }
    if (dt >= 1.0) out.pass = false;
    out.detail += fmt::format("rows=9 tol=0 runtime={:.3f}s<1s", dt);
    return out;
}

// 2 ---------------------------------------------------------------------------

GraphState two_ghz(int m, int n) {
    GraphState g;
    g.prepare_ghz(labels("a", m));
    g.prepare_ghz(labels("b", n));
    return g;
}

Outcome fusion_law() {
    auto t0 = Clock::now();
    int cases = 0;
    Outcome out;
    auto fail = [&](const std::string &what) {
        out.pass = false;
        if (out.detail.empty()) out.detail = what + " ";
    };
    for (int m = 2; m <= 5; ++m) {
        for (int n = 2; n <= 5; ++n) {
            auto am = labels("a", m);
            auto bn = labels("b", n);
            auto a = am.back();
            auto b = bn.back();
            for (int s : {0, 1}) {
                for (int t : {0, 1}) {
                    auto g = two_ghz(m, n);
                    auto before = oc::physical_state(g);
                    auto src = OutcomeSource::fixed({s, t});
                    if (g.bell_merge(a, b, src) != std::make_pair(s, t)) fail("bell outcome");
                    // Direct projection of the amplitudes, then textbook
                    // corrections give a literal GHZ on the survivors.
                    auto direct = oc::measure_bell(before, a, b, s, t).state;
                    std::vector<QubitId> rest(am.begin(), am.end() - 1);
                    rest.insert(rest.end(), bn.begin(), bn.end() - 1);
                    auto corrected = direct;
                    for (int i = 0; i + 1 < n; ++i) {
                        if (t) oc::apply_single(corrected, bn[i], pauli_matrix(Pauli::X));
                    }
                    if (s) oc::apply_single(corrected, rest.front(), pauli_matrix(Pauli::Z));
                    bool ok = g.size() == static_cast<std::size_t>(m + n - 2) && testing::is_star(g) &&
                              oc::equal_up_to_phase(oc::physical_state(g), direct, kTol) &&
                              oc::equal_up_to_phase(corrected, oc::ghz(rest), kTol) &&
                              oc::certify(g, kTol).verdict == oc::Verdict::pass;
                    if (!ok) fail(fmt::format("bell_merge m={} n={} s={} t={}", m, n, s, t));
                    ++cases;
                }
                // merge_keep has a single parity outcome.
                auto g = two_ghz(m, n);
                auto before = oc::physical_state(g);
                auto src = OutcomeSource::fixed(s);
                int t = g.merge_keep(a, b, src);
                auto direct = oc::measure_parity(before, a, b, t).state;
                std::vector<QubitId> rest(am.begin(), am.end());
                rest.insert(rest.end(), bn.begin(), bn.end() - 1);
                auto corrected = direct;
                for (int i = 0; i + 1 < n; ++i) {
                    if (t) oc::apply_single(corrected, bn[i], pauli_matrix(Pauli::X));
                }
                bool ok = g.size() == static_cast<std::size_t>(m + n - 1) && testing::is_star(g) &&
                          oc::equal_up_to_phase(oc::physical_state(g), direct, kTol) &&
                          oc::equal_up_to_phase(corrected, oc::ghz(rest), kTol);
                if (!ok) fail(fmt::format("merge_keep m={} n={} t={}", m, n, t));
                ++cases;
            }
        }
    }
    double dt = seconds_since(t0);
    if (dt >= 10.0) out.pass = false;
    out.detail += fmt::format("cases={} tol=1e-9 runtime={:.3f}s<10s", cases, dt);
    return out;
}

// 3 ---------------------------------------------------------------------------

Outcome graph_rules() {
    std::mt19937_64 rng(2718);
    const int graphs = 240;
    int checks = 0;
    int impossible = 0;
    Outcome out;
    for (int k = 0; k < graphs; ++k) {
        int n = 1 + static_cast<int>(rng() % 8);
        auto g = testing::random_graph(rng, n, k % 2 == 1);
        auto before = oc::physical_state(g);
        auto vs = g.vertices();
        for (const auto &v : vs) {
            {
                auto h = g;
                h.local_complement(v);
                ++checks;
                if (!oc::equal_up_to_phase(oc::physical_state(h), before, kTol)) {
                    out.pass = false;
                    out.detail = fmt::format("LC graph={} v={} ", k, v.str());
                }
            }
            for (Pauli p : {Pauli::Z, Pauli::Y, Pauli::X}) {
                for (int bit : {0, 1}) {
                    auto h = g;
                    auto src = OutcomeSource::fixed(bit);
                    int got = h.measure(v, p, src);
                    auto proj = oc::measure_projective(before, v, p, got);
                    ++checks;
                    if (got != bit) {
                        // Deterministic measurement: the forced branch must be impossible.
                        ++impossible;
                        double p_forced = 0;
                        try {
                            p_forced = oc::measure_projective(before, v, p, bit).probability;
                        } catch (const Error &e) {
                            if (e.code() != ErrorCode::impossible_outcome) throw;
                        }
                        if (p_forced > kTol) {
                            out.pass = false;
                            out.detail = fmt::format("outcome graph={} {} ", k, v.str());
                        }
                    }
                    bool ok = proj.probability > kTol &&
                              oc::equal_up_to_phase(oc::physical_state(h), proj.state, kTol) &&
                              oc::certify(h, kTol).verdict == oc::Verdict::pass;
                    if (!ok) {
                        out.pass = false;
                        out.detail = fmt::format("measure graph={} v={} basis={} bit={} ", k, v.str(),
                                                 to_char(p), bit);
                    }
                }
            }
        }
        for (std::size_t i = 0; i < vs.size(); ++i) {
            for (std::size_t j = i + 1; j < vs.size(); ++j) {
                auto h = g;
                h.apply_cz(vs[i], vs[j]);
                auto sv = before;
                oc::apply_cz(sv, vs[i], vs[j]);
                ++checks;
                if (!oc::equal_up_to_phase(oc::physical_state(h), sv, kTol)) {
                    out.pass = false;
                    out.detail = fmt::format("CZ graph={} ", k);
                }
            }
        }
    }
    out.detail += fmt::format("graphs={} checks={} deterministic_branches={} tol=1e-9", graphs, checks, impossible);
    return out;
}

// 4 ---------------------------------------------------------------------------

// A copy has m-1 stars and the survivors need m-2 of them, so with one
// client per device a copy stays full iff exactly one star touched d.
int enumerate_full_copies(const net::NetworkState &s, const DeviceId &d) {
    std::map<int, int> lost;
    for (const auto &inst : s.instances) {
        bool hit = inst.root.device == d;
        for (const auto &l : inst.leaves) hit = hit || l.device == d;
        lost[inst.copy] += hit ? 1 : 0;
    }
    int full = 0;
    for (const auto &[_, n] : lost) full += n == 1;
    return full;
}

Outcome symmetrization() {
    Outcome out;
    int cases = 0;
    for (int m = 2; m <= 6; ++m) {
        for (int n = 1; n <= 3 * m; ++n) {
            auto base = net::symmetrize(net::NetworkSpec::uniform(m, 1), n);
            for (int r = 1; r <= m; ++r) {
                auto s = base;
                auto d = s.spec.device(r);
                int expect = enumerate_full_copies(s, d);
                net::device_fail(s, d);
                int got = net::intact_full_copies(s);
                ++cases;
                if (got != expect || got < n / m) {
                    out.pass = false;
                    out.detail = fmt::format("m={} n={} failed={} got={} enumerated={} ", m, n, d, got, expect);
                }
            }
        }
    }
    out.detail += fmt::format("failures={} bound=floor(n/m)", cases);
    return out;
}

// 5 ---------------------------------------------------------------------------

std::string instance_key(const net::GhzInstance &inst) {
    std::set<DeviceId, NaturalLess> leaves;
    for (const auto &l : inst.leaves) leaves.insert(l.device);
    std::string key = inst.root.device + ":";
    for (const auto &d : leaves) key += d + ",";
    return key;
}

// Stripped state with labels that depend only on the devices an instance
// spans, so states built along different routes compare qubit for qubit.
oc::StateVector canonical_state(const net::NetworkState &s) {
    std::map<QubitId, QubitId> names;
    for (const auto *inst : s.intact()) {
        auto key = instance_key(*inst);
        names[inst->root.qubit] = QubitId{key + "root", 0};
        for (const auto &l : inst->leaves) names[l.qubit] = QubitId{key + l.device, 0};
        for (const auto &[leaf, sh] : inst->shields) {
            auto dev = std::find_if(inst->leaves.begin(), inst->leaves.end(),
                                    [&](const net::Member &mb) { return mb.qubit == leaf; })
                           ->device;
            names[sh.qubit] = QubitId{key + "shield-" + dev, 0};
        }
    }
    return testing::renamed(testing::stripped_state(s.graph()), names);
}

net::NetworkSpec survivors_spec(const net::NetworkSpec &spec, const DeviceId &gone) {
    net::NetworkSpec out;
    for (int r = 1; r <= spec.m(); ++r) {
        if (spec.device(r) == gone) continue;
        out.clients.push_back(spec.clients[static_cast<std::size_t>(r - 1)]);
        out.devices.push_back(spec.device(r));
    }
    return out;
}

Outcome shielding() {
    Outcome out;
    int cases = 0;
    for (int m : {3, 4}) {
        auto spec = net::NetworkSpec::uniform(m, 1);
        for (int r = 1; r <= m; ++r) {
            auto d = spec.device(r);
            auto target = canonical_state(net::build_network_state(survivors_spec(spec, d), net::Layout::shielded));
            for (int bits = 0; bits < 16; ++bits) {
                std::vector<int> outcomes;
                for (int k = 0; k < 4; ++k) outcomes.push_back((bits >> k) & 1);
                auto s = net::build_network_state(spec, net::Layout::shielded);
                net::device_fail(s, d);
                auto src = OutcomeSource::fixed(outcomes);
                net::recover_shielded(s, d, src);
                ++cases;
                bool ok = oc::certify(s.graph(), kTol).verdict == oc::Verdict::pass &&
                          oc::equal_up_to_phase(canonical_state(s), target, kTol);
                if (!ok) {
                    out.pass = false;
                    out.detail = fmt::format("m={} failed={} outcomes={} ", m, d, bits);
                }
            }
        }
    }
    out.detail += fmt::format("recoveries={} shield_outcomes=0,1 tol=1e-9", cases);
    return out;
}

// 6 ---------------------------------------------------------------------------

double brute_force_steiner(const routing::RoutingGraph &g, const routing::RouterSet &s) {
    std::vector<std::string> others;
    for (const auto &v : g.vertices) {
        if (!s.count(v)) others.push_back(v);
    }
    double best = INFINITY;
    for (std::uint32_t mask = 0; mask < (1u << others.size()); ++mask) {
        auto keep = s;
        for (std::size_t i = 0; i < others.size(); ++i) {
            if (mask >> i & 1) keep.insert(others[i]);
        }
        std::vector<routing::RouteEdge> edges;
        for (const auto &e : g.edges) {
            if (keep.count(e.u) && keep.count(e.v)) edges.push_back(e);
        }
        std::sort(edges.begin(), edges.end(), [](const auto &a, const auto &b) { return a.cost < b.cost; });
        std::map<std::string, std::string> parent;
        for (const auto &v : keep) parent[v] = v;
        std::function<std::string(const std::string &)> find = [&](const std::string &x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        double cost = 0;
        std::size_t joined = 0;
        for (const auto &e : edges) {
            auto a = find(e.u), b = find(e.v);
            if (a == b) continue;
            parent[a] = b;
            cost += e.cost;
            ++joined;
        }
        if (joined + 1 == keep.size()) best = std::min(best, cost);
    }
    return best;
}

routing::RegionTopology topology_of(const stack::Scenario &s) {
    routing::RegionTopology t;
    for (const auto &n : s.networks) t.add_router(n.router, n.id);
    for (const auto &r : s.regions) t.add_region(r.id, r.members, r.copies);
    return t;
}

Outcome steiner_quality() {
    Outcome out;
    std::mt19937_64 rng(41);
    int graphs = 0;
    int optimal = 0;
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rng() % 9);
        routing::RoutingGraph g;
        for (int i = 0; i < n; ++i) g.vertices.push_back("v" + std::to_string(i));
        std::set<std::pair<int, int>> used;
        // Random spanning tree plus extra edges keeps the graph connected.
        for (int i = 1; i < n; ++i) {
            int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i));
            used.insert({j, i});
            g.edges.push_back({g.vertices[j], g.vertices[i], 1.0 + static_cast<double>(rng() % 4), "R"});
        }
        for (int k = 0; k < n; ++k) {
            int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
            if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
            used.insert({std::min(a, b), std::max(a, b)});
            g.edges.push_back({g.vertices[a], g.vertices[b], 1.0 + static_cast<double>(rng() % 4), "R"});
        }
        routing::RouterSet s;
        auto order = g.vertices;
        std::shuffle(order.begin(), order.end(), rng);
        int k = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
        s.insert(order.begin(), order.begin() + k);
        auto tree = routing::steiner(g, s, *s.begin());
        double opt = brute_force_steiner(g, s);
        ++graphs;
        bool spans = std::includes(tree.vertices.begin(), tree.vertices.end(), s.begin(), s.end());
        if (!tree.is_valid() || !spans || tree.cost() + kTol < opt) {
            out.pass = false;
            out.detail = fmt::format("graph={} ", trial);
        }
        optimal += std::abs(tree.cost() - opt) < kTol;
    }
    auto t = topology_of(cli::load_scenario(fixture("nine_routers.scn")));
    auto g = routing::collapse_to_graph(t);
    routing::RouterSet s{"N1", "N2", "N3", "N4"};
    auto tree = routing::steiner(g, s, "N1");
    double opt = brute_force_steiner(g, s);
    if (!tree.is_valid() || std::abs(tree.cost() - opt) > kTol) {
        out.pass = false;
        out.detail += fmt::format("fixture cost={} optimum={} ", tree.cost(), opt);
    }
    out.detail += fmt::format("graphs={} optimal={} fixture_cost={}=optimum", graphs, optimal, tree.cost());
    return out;
}

// 7 ---------------------------------------------------------------------------

Outcome routing_replay() {
    Outcome out;
    auto t = topology_of(cli::load_scenario(fixture("nine_routers.scn")));
    auto src = OutcomeSource::seeded(7);
    auto r = routing::region_routing(t, {"N1", "N2", "N3", "N4"}, src);
    std::vector<int> sizes;
    routing::RouterSet roots;
    int certified = 0;
    int skipped = 0;
    for (const auto &inst : r.virtual_state) {
        sizes.push_back(inst.size());
        roots.insert(inst.root.device);
        routing::RouterSet covered{inst.root.device};
        for (const auto &l : inst.leaves) covered.insert(l.device);
        if (covered != routing::RouterSet{"N1", "N2", "N3", "N4"} && inst.size() == 4) out.pass = false;
        if (inst.size() > 16) {
            ++skipped;
            continue;
        }
        std::vector<Edge> star;
        for (const auto &l : inst.leaves) star.push_back(make_edge(inst.root.qubit, l.qubit));
        auto cert = oc::certify_target(t.backing(), inst.qubits(), star, kTol);
        if (cert.verdict != oc::Verdict::pass) {
            out.pass = false;
            out.detail += fmt::format("{}: {} ", inst.id, cert.detail);
        }
        ++certified;
    }
    if (sizes != std::vector<int>{4, 3, 2} || roots.size() != 3) out.pass = false;
    out.detail += fmt::format("sizes=[{},{},{}] distinct_roots={} certified={} skipped={}", sizes.size() > 0 ? sizes[0] : 0,
                              sizes.size() > 1 ? sizes[1] : 0, sizes.size() > 2 ? sizes[2] : 0, roots.size(),
                              certified, skipped);
    return out;
}

// 8 ---------------------------------------------------------------------------

Outcome end_to_end() {
    Outcome out;
    auto s = cli::load_scenario(fixture("cluster.scn"));
    stack::Simulator sim(s);
    auto results = sim.run();
    const auto &ledger = sim.audit();
    if (results.size() != 1) return {false, "expected one request"};
    const auto &r = results.front();
    // Independent check of the stored graph among the four client qubits.
    std::set<Edge> want;
    for (const auto &[a, b] : r.edges) want.insert(make_edge(r.vertex.at(a), r.vertex.at(b)));
    std::set<Edge> got;
    bool isolated = true;
    for (const auto &[c, qb] : r.vertex) {
        for (const auto &nb : sim.world().neighbors(qb)) {
            got.insert(make_edge(qb, nb));
            isolated = isolated && std::any_of(r.vertex.begin(), r.vertex.end(),
                                                [&](const auto &kv) { return kv.second == nb; });
        }
        isolated = isolated && qb.device == c;
    }
    out.pass = r.oracle.verdict == oc::Verdict::pass && r.oracle.qubits == 4 && got == want && isolated &&
               ledger.created_adaptive == 0 && ledger.violations.empty();
    out.detail = fmt::format("oracle={} qubits={} clients=4 cluster_edges={} created_adaptive={} violations={} teleports={}",
                             oc::to_string(r.oracle.verdict), r.oracle.qubits, got.size(), ledger.created_adaptive,
                             ledger.violations.size(), ledger.teleports);
    return out;
}

// 9 ---------------------------------------------------------------------------

Outcome reachability() {
    const int trials = 500;
    const int budget = 4;
    net::NetworkSpec spec;
    spec.devices = {"d1", "d2", "d3"};
    spec.clients = {1, 1, budget + 1};
    int caught = 0;
    int verified = 0;
    for (int k = 0; k < trials; ++k) {
        for (bool lose : {true, false}) {
            auto ns = net::build_network_state(spec, net::Layout::plain);
            std::vector<net::GhzInstance *> ensemble;
            for (auto &inst : ns.instances) {
                if (inst.built_size == 3) ensemble.push_back(&inst);
            }
            std::mt19937_64 rng(static_cast<std::uint64_t>(k) * 2 + (lose ? 1 : 0));
            std::set<DeviceId> lost;
            if (lose) lost.insert("d1");
            auto v = stack::verify_state(ns.graph(), ensemble, budget, lost, rng);
            if (lose) caught += v.verdict == stack::VerifyVerdict::failed;
            if (!lose) verified += v.verdict == stack::VerifyVerdict::verified;
        }
    }
    double p_fail = static_cast<double>(caught) / trials;
    double p_ok = static_cast<double>(verified) / trials;
    Outcome out;
    out.pass = p_fail >= 0.9 && verified == trials;
    out.detail = fmt::format("trials={} budget={} p(failed|lost partner)={:.3f}>=0.9 p(verified|intact)={:.3f}=1",
                             trials, budget, p_fail, p_ok);
    return out;
}

// 10 --------------------------------------------------------------------------

Outcome determinism() {
    Outcome out;
    int runs = 0;
    for (auto name : {"nine_routers.scn", "cluster.scn", "symmetrized.scn", "costs.scn", "verify.scn"}) {
        for (const auto &verb : cli::verbs()) {
            auto first = cli::run_verb(verb, cli::load_scenario(fixture(name))).render(cli::Format::records);
            auto second = cli::run_verb(verb, cli::load_scenario(fixture(name))).render(cli::Format::records);
            ++runs;
            if (first != second) {
                out.pass = false;
                out.detail += fmt::format("{}/{} ", name, verb);
            }
        }
    }
    out.detail += fmt::format("fixture_runs={} byte_identical", runs);
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"cost-table", cost_rows},
        {"ghz-fusion-law", fusion_law},
        {"graph-rule-certification", graph_rules},
        {"symmetrization-guarantee", symmetrization},
        {"shielding-recovery", shielding},
        {"steiner-quality", steiner_quality},
        {"routing-replay", routing_replay},
        {"end-to-end-cluster", end_to_end},
        {"reachability", reachability},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << fmt::format("criterion={} name={} {} {}\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                                 o.detail);
    }
    return failed == 0 ? 0 : 1;
}
