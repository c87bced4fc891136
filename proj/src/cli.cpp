#include "qnet/cli.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qnet/oracle.hpp"
#include "qnet/routing.hpp"

namespace qnet::cli {

using stack::Scenario;

namespace {

std::string list(const std::vector<std::string> &xs) {
    return fmt::format("[{}]", fmt::join(xs, ","));
}

template <class C>
std::string list_of(const C &xs) {
    std::vector<std::string> out;
    for (const auto &x : xs) out.push_back(fmt::format("{}", x));
    return list(out);
}

Record raw(std::string kind, std::string line) {
    return {std::move(kind), {{"", std::move(line)}}};
}

Record error_record(const Error &e) {
    return {"error", {{"error", std::string(to_string(e.code()))}, {"message", e.what()}}};
}

routing::RouterSet request_routers(const Scenario &s, const stack::RequestDef &q) {
    routing::RouterSet out;
    for (const auto &[a, b] : q.edges) {
        for (const auto &c : {a, b}) {
            auto it = std::find_if(s.clients.begin(), s.clients.end(), [&](const auto &x) { return x.id == c; });
            if (it == s.clients.end()) continue;
            for (const auto &n : s.networks) {
                if (std::find(n.devices.begin(), n.devices.end(), it->device) != n.devices.end() && !n.router.empty()) {
                    out.insert(n.router);
                }
            }
        }
    }
    return out;
}

}  // namespace

std::string Report::render(Format f) const {
    std::string out;
    for (const auto &r : records) {
        std::vector<std::string> parts;
        if (f == Format::records) parts.push_back("kind=" + r.kind);
        for (const auto &[k, v] : r.fields) parts.push_back(k.empty() ? v : k + "=" + v);
        out += fmt::format("{}\n", fmt::join(parts, " "));
    }
    return out;
}

Report run_costs(const Scenario &s) {
    Report rep;
    for (int c : s.cost_c) {
        for (int m : s.cost_m) {
            auto r = net::cost_report(net::NetworkSpec::uniform(m, c));
            rep.records.push_back({"cost",
                                   {{"c", std::to_string(c)},
                                    {"m", std::to_string(m)},
                                    {"MB", std::to_string(r.mb)},
                                    {"MS", std::to_string(r.ms)},
                                    {"MM", std::to_string(r.mm)}}});
        }
    }
    return rep;
}

Report run_route(const Scenario &s) {
    Report rep;
    stack::Simulator sim(s);
    sim.provision_dynamic();
    auto src = OutcomeSource::seeded(s.seed.value_or(0));

    std::vector<std::pair<std::string, routing::RouterSet>> runs;
    if (!s.route.empty()) {
        runs.emplace_back("route", routing::RouterSet(s.route.begin(), s.route.end()));
    } else {
        for (const auto &q : s.requests) runs.emplace_back(q.id, request_routers(s, q));
    }
    for (const auto &[name, routers] : runs) {
        rep.records.push_back({"route", {{"route", name}, {"routers", list_of(routers)}}});
        if (routers.size() < 2) {
            rep.records.push_back({"virtual", {{"sizes", "[]"}, {"note", "single-router"}}});
            continue;
        }
        try {
            auto rr = routing::region_routing(sim.topology(), routers, src);
            for (const auto &step : rr.steps) rep.records.push_back(raw("step", routing::format_step(step)));
            std::vector<int> sizes;
            for (const auto &v : rr.virtual_state) sizes.push_back(v.size());
            rep.records.push_back({"virtual",
                                   {{"sizes", list_of(sizes)},
                                    {"consumed", std::to_string(rr.consumed.size())},
                                    {"live", std::to_string(sim.topology().live_resources())}}});
        } catch (const Error &e) {
            rep.records.push_back(error_record(e));
            rep.ok = false;
        }
    }
    auto cert = oracle::certify(sim.world());
    rep.records.push_back({"oracle", {{"oracle", std::string(oracle::to_string(cert.verdict))}}});
    if (cert.verdict == oracle::Verdict::fail) rep.ok = false;

    if (s.m_max > 0) {
        routing::RegionHierarchy h(s.m_max);
        std::vector<DeviceId> routers;
        for (const auto &n : s.networks) {
            if (!n.router.empty()) routers.push_back(n.router);
        }
        std::sort(routers.begin(), routers.end(), NaturalLess{});
        for (const auto &r : routers) {
            auto p = routing::hierarchy_insert(h, r);
            rep.records.push_back({"placement",
                                   {{"router", r},
                                    {"region", p.region},
                                    {"level", std::to_string(p.level)},
                                    {"created", list(p.created)}}});
        }
        rep.records.push_back({"hierarchy",
                               {{"m_max", std::to_string(s.m_max)},
                                {"levels", std::to_string(h.levels())},
                                {"regions", std::to_string(h.regions().size())}}});
    }
    return rep;
}

Report run_drill(const Scenario &s) {
    Report rep;
    for (const auto &n : s.networks) {
        if (n.devices.size() < 2) continue;
        for (const auto &row : stack::drill(n, s.seed.value_or(0))) {
            bool pass = row.intact_full_copies >= row.guarantee;
            std::vector<std::string> counts;
            for (const auto &[k, v] : row.status_counts) counts.push_back(fmt::format("{}:{}", k, v));
            rep.records.push_back({"drill",
                                   {{"network", row.network},
                                    {"failed", row.failed},
                                    {"intact_full_copies", std::to_string(row.intact_full_copies)},
                                    {"status", list(counts)},
                                    {"check", fmt::format("intact_full_copies>={}", row.guarantee)},
                                    {"", pass ? "PASS" : "FAIL"}}});
            if (!pass) rep.ok = false;
        }
    }
    return rep;
}

Report run_e2e(const Scenario &s) {
    Report rep;
    rep.records.push_back({"scenario", {{"scenario", s.name}, {"seed", std::to_string(s.seed.value_or(0))}}});
    stack::Simulator sim(s);
    std::vector<stack::FulfillReport> results;
    try {
        results = sim.run();
    } catch (const Error &e) {
        rep.records.push_back(error_record(e));
        rep.ok = false;
    }
    for (const auto &ev : sim.events()) rep.records.push_back(raw("event", stack::format_event(ev)));
    for (const auto &r : results) {
        std::vector<std::string> edges;
        for (const auto &[a, b] : r.edges) edges.push_back(a + "-" + b);
        rep.records.push_back({"request", {{"request", r.request}, {"edges", list(edges)}}});
        for (const auto &step : r.routing) rep.records.push_back(raw("step", routing::format_step(step)));
        rep.records.push_back({"resources", {{"virtual_sizes", list_of(r.virtual_sizes)}, {"consumed", list(r.consumed)}}});
        std::map<QubitId, stack::ClientId> owner;
        for (const auto &[c, q] : r.vertex) owner[q] = c;
        std::vector<std::string> graph;
        for (const auto &[a, b] : sim.world().edges()) {
            if (owner.count(a) && owner.count(b)) graph.push_back(owner[a] + "-" + owner[b]);
        }
        rep.records.push_back({"graph", {{"graph_edges", list(graph)}}});
        for (const auto &[c, q] : r.vertex) {
            rep.records.push_back(
                {"vertex", {{"client", c}, {"qubit", q.str()}, {"byproduct", sim.world().byproduct(q).name()}}});
        }
        rep.records.push_back({"oracle",
                               {{"oracle", std::string(oracle::to_string(r.oracle.verdict))},
                                {"target", r.target},
                                {"qubits", std::to_string(r.oracle.qubits)}}});
        if (r.oracle.verdict != oracle::Verdict::pass) rep.ok = false;
    }
    const auto &l = sim.audit();
    bool clean = l.violations.empty() && l.created_adaptive == 0;
    rep.records.push_back({"ledger",
                           {{"provisioned", std::to_string(l.provisioned)},
                            {"consumed", std::to_string(l.consumed)},
                            {"destroyed", std::to_string(l.destroyed)},
                            {"created_adaptive", std::to_string(l.created_adaptive)},
                            {"teleports", std::to_string(l.teleports)},
                            {"live", std::to_string(sim.live_instances())},
                            {"audit", clean ? "PASS" : "FAIL"}}});
    for (const auto &v : l.violations) rep.records.push_back({"violation", {{"violation", v}}});
    if (!clean) rep.ok = false;
    return rep;
}

Report run_verify(const Scenario &s) {
    Report rep;
    stack::Simulator sim(s);
    sim.provision_dynamic();
    for (const auto &c : s.checks) {
        try {
            auto v = sim.verify(c);
            rep.records.push_back({"verify",
                                   {{"check", c.id},
                                    {"network", c.network},
                                    {"size", std::to_string(c.size)},
                                    {"budget", std::to_string(c.budget)},
                                    {"lost", c.lost.empty() ? "-" : c.lost},
                                    {"verdict", std::string(stack::to_string(v.verdict))},
                                    {"samples", list_of(v.samples)}}});
        } catch (const Error &e) {
            rep.records.push_back(error_record(e));
            rep.ok = false;
        }
    }
    return rep;
}

const std::vector<std::string> &verbs() {
    static const std::vector<std::string> v{"costs", "route", "drill", "e2e", "verify"};
    return v;
}

Report run_verb(const std::string &verb, const Scenario &s) {
    if (verb == "costs") return run_costs(s);
    if (verb == "route") return run_route(s);
    if (verb == "drill") return run_drill(s);
    if (verb == "e2e") return run_e2e(s);
    if (verb == "verify") return run_verify(s);
    throw Error(ErrorCode::invalid_argument, "unknown verb " + verb);
}

}  // namespace qnet::cli
