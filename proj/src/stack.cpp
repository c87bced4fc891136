#include "qnet/stack.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace qnet::stack {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::repeater: return "repeater";
        case Role::switch_device: return "switch";
        case Role::router: return "router";
        case Role::client: return "client";
    }
    return "?";
}

int top_layer(Role r) {
    switch (r) {
        case Role::client: return 1;
        case Role::repeater: return 2;
        case Role::switch_device: return 3;
        case Role::router: return 4;
    }
    return 0;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::entanglement_ready: return "entanglement-ready";
        case EventKind::ping: return "ping";
        case EventKind::ping_reply: return "ping-reply";
        case EventKind::failure_detected: return "failure-detected";
        case EventKind::request: return "request";
        case EventKind::request_complete: return "request-complete";
    }
    return "?";
}

std::string_view to_string(VerifyVerdict v) {
    switch (v) {
        case VerifyVerdict::verified: return "verified";
        case VerifyVerdict::failed: return "failed";
        case VerifyVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string format_event(const LayerEvent &e) {
    return fmt::format("t={} event={} {}", e.timestamp, to_string(e.kind), e.payload);
}

net::NetworkSpec spec_of(const NetworkDef &n) {
    net::NetworkSpec spec;
    spec.clients = n.clients;
    spec.devices = n.devices;
    return spec;
}

// ---------------------------------------------------------------------------

namespace {

bool nat_less(const std::string &a, const std::string &b) {
    return natural_compare(a, b) < 0;
}

template <class... Args>
[[noreturn]] void fail(ErrorCode code, fmt::format_string<Args...> f, Args &&...args) {
    throw Error(code, fmt::format(f, std::forward<Args>(args)...));
}

void unique(std::set<std::string, NaturalLess> &seen, const std::string &id, std::string_view what) {
    if (id.empty()) fail(ErrorCode::invalid_spec, "{} without an id", what);
    if (!seen.insert(id).second) fail(ErrorCode::duplicate_id, "duplicate {} {}", what, id);
}

}  // namespace

void validate(const Scenario &s) {
    std::set<std::string, NaturalLess> ids;
    std::map<DeviceId, Role, NaturalLess> role;
    std::map<DeviceId, const NetworkDef *, NaturalLess> owner;
    for (const auto &n : s.networks) {
        unique(ids, n.id, "network");
        if (n.devices.empty()) fail(ErrorCode::invalid_spec, "network {} has no devices", n.id);
        if (n.devices.size() != n.clients.size()) {
            fail(ErrorCode::invalid_spec, "network {} lists {} devices but {} client counts", n.id,
                 n.devices.size(), n.clients.size());
        }
        if (n.symmetrized < 0) fail(ErrorCode::invalid_spec, "network {}: negative copy count", n.id);
        if (n.symmetrized > 0 && n.layout != net::Layout::plain) {
            fail(ErrorCode::invalid_spec, "network {}: symmetrization needs the plain layout", n.id);
        }
        for (int c : n.clients) {
            if (c < 0) fail(ErrorCode::invalid_spec, "network {}: negative client count", n.id);
        }
        for (const auto &d : n.devices) {
            if (owner.count(d)) fail(ErrorCode::duplicate_id, "device {} in two networks", d);
            owner[d] = &n;
            role[d] = d == n.router ? Role::router : Role::switch_device;
        }
        if (!n.router.empty() && !role.count(n.router)) {
            fail(ErrorCode::unknown_reference, "router {} is not a device of {}", n.router, n.id);
        }
        for (const auto &r : n.repeaters) {
            if (role.count(r)) fail(ErrorCode::duplicate_id, "duplicate device {}", r);
            role[r] = Role::repeater;
        }
    }
    std::set<std::string, NaturalLess> client_ids;
    for (const auto &c : s.clients) {
        unique(client_ids, c.id, "client");
        if (role.count(c.id)) fail(ErrorCode::duplicate_id, "client {} reuses a device id", c.id);
        auto it = role.find(c.device);
        if (it == role.end()) fail(ErrorCode::unknown_reference, "client {} attached to unknown device {}", c.id, c.device);
        if (it->second != Role::switch_device) {
            fail(ErrorCode::invalid_spec, "client {} must attach to a switch, not {}", c.id, c.device);
        }
    }
    std::set<std::string, NaturalLess> region_ids;
    for (const auto &r : s.regions) {
        unique(region_ids, r.id, "region");
        if (r.members.size() < 2) fail(ErrorCode::invalid_spec, "region {} needs two routers", r.id);
        if (r.copies < 0) fail(ErrorCode::invalid_spec, "region {}: negative copy count", r.id);
        for (const auto &m : r.members) {
            auto it = role.find(m);
            if (it == role.end() || it->second != Role::router) {
                fail(ErrorCode::unknown_reference, "region {} member {} is not a router", r.id, m);
            }
        }
    }
    std::set<std::string, NaturalLess> request_ids;
    for (const auto &q : s.requests) {
        unique(request_ids, q.id, "request");
        if (q.copies < 1) fail(ErrorCode::invalid_spec, "request {}: copies must be positive", q.id);
        if (q.edges.empty()) fail(ErrorCode::invalid_spec, "request {} has no edges", q.id);
        for (const auto &[a, b] : q.edges) {
            for (const auto &c : {a, b}) {
                if (!client_ids.count(c)) fail(ErrorCode::unknown_reference, "request {} names unknown client {}", q.id, c);
            }
            if (a == b) fail(ErrorCode::invalid_spec, "request {}: self loop on {}", q.id, a);
        }
    }
    for (const auto &f : s.failures) {
        if (!role.count(f.device) && !client_ids.count(f.device)) {
            fail(ErrorCode::unknown_reference, "failure of unknown device {}", f.device);
        }
    }
    std::set<std::string, NaturalLess> check_ids;
    for (const auto &c : s.checks) {
        unique(check_ids, c.id, "check");
        auto it = std::find_if(s.networks.begin(), s.networks.end(), [&](const auto &n) { return n.id == c.network; });
        if (it == s.networks.end()) fail(ErrorCode::unknown_reference, "check {} names unknown network {}", c.id, c.network);
        if (c.size < 2 || c.size > static_cast<int>(it->devices.size())) {
            fail(ErrorCode::invalid_spec, "check {}: no GHZ of size {} in {}", c.id, c.size, c.network);
        }
        if (c.budget < 0) fail(ErrorCode::invalid_spec, "check {}: negative budget", c.id);
        if (!c.lost.empty() && (!owner.count(c.lost) || owner[c.lost] != &*it)) {
            fail(ErrorCode::unknown_reference, "check {}: {} is not in {}", c.id, c.lost, c.network);
        }
    }
    for (const auto &r : s.route) {
        auto it = role.find(r);
        if (it == role.end() || it->second != Role::router) fail(ErrorCode::unknown_reference, "{} is not a router", r);
    }
    if (s.cost_c.empty() != s.cost_m.empty()) fail(ErrorCode::invalid_spec, "cost sweep needs both c and m");
    if (s.m_max < 0) fail(ErrorCode::invalid_spec, "negative m_max");
    if (!s.seed && (!s.requests.empty() || !s.checks.empty())) {
        fail(ErrorCode::invalid_spec, "a seed is required for requests and checks");
    }
}

// Linking --------------------------------------------------------------------

namespace {

const net::Member &member_on(const net::GhzInstance &inst, const DeviceId &d) {
    if (inst.root.device == d) return inst.root;
    for (const auto &l : inst.leaves) {
        if (l.device == d) return l;
    }
    throw Error(ErrorCode::not_found, inst.id + " has no qubit on " + d);
}

}  // namespace

LinkResult linking_protocol(GraphState &g, std::vector<net::GhzInstance *> pool,
                            const std::map<ClientId, DeviceId, NaturalLess> &placement, const TargetEdges &target,
                            const std::function<QubitId(const DeviceId &)> &fresh, OutcomeSource &src) {
    std::set<ClientId, NaturalLess> clients;
    std::vector<std::pair<ClientId, ClientId>> edges;
    for (auto [a, b] : target) {
        for (const auto &c : {a, b}) {
            if (!placement.count(c)) fail(ErrorCode::unknown_reference, "unknown client {}", c);
        }
        if (a == b) fail(ErrorCode::invalid_argument, "self loop on {}", a);
        if (nat_less(b, a)) std::swap(a, b);
        edges.emplace_back(a, b);
        clients.insert(a);
        clients.insert(b);
    }
    std::sort(edges.begin(), edges.end(), [](const auto &x, const auto &y) {
        return nat_less(x.first, y.first) || (x.first == y.first && nat_less(x.second, y.second));
    });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    LinkResult out;
    for (const auto &c : clients) {
        auto q = fresh(placement.at(c));
        g.prepare({q}, {});
        out.vertex[c] = q;
    }
    // Assign one pool entry per cross-device edge by augmenting paths, trying
    // smaller entries first, so a feasible assignment is always found.
    std::vector<std::size_t> cross;
    std::vector<std::vector<std::size_t>> options(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto &da = placement.at(edges[e].first);
        const auto &db = placement.at(edges[e].second);
        if (da == db) continue;
        cross.push_back(e);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const auto *inst = pool[i];
            if (inst->status == net::InstanceStatus::intact && inst->touches(da) && inst->touches(db)) {
                options[e].push_back(i);
            }
        }
        std::stable_sort(options[e].begin(), options[e].end(),
                         [&](auto x, auto y) { return pool[x]->size() < pool[y]->size(); });
    }
    std::map<std::size_t, std::size_t> owner;
    std::map<std::size_t, std::size_t> wire_of;
    std::function<bool(std::size_t, std::set<std::size_t> &)> augment = [&](std::size_t e, std::set<std::size_t> &seen) {
        for (auto i : options[e]) {
            if (!seen.insert(i).second) continue;
            auto it = owner.find(i);
            if (it == owner.end() || augment(it->second, seen)) {
                owner[i] = e;
                wire_of[e] = i;
                return true;
            }
        }
        return false;
    };
    for (auto e : cross) {
        std::set<std::size_t> seen;
        if (!augment(e, seen)) {
            fail(ErrorCode::insufficient_resources, "no entanglement left between {} and {}",
                 placement.at(edges[e].first), placement.at(edges[e].second));
        }
    }

    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto &[a, b] = edges[e];
        const auto &da = placement.at(a);
        const auto &db = placement.at(b);
        const auto &qa = out.vertex.at(a);
        const auto &qb = out.vertex.at(b);
        if (da == db) {
            g.apply_cz(qa, qb);
            continue;
        }
        auto pick = wire_of.at(e);
        auto wire = net::shape_instance(g, *pool[pick], {da, db}, src);
        out.used.push_back(pick);
        auto wa = member_on(wire, da).qubit;
        auto wb = member_on(wire, db).qubit;
        g.apply_cz(qa, wa);
        g.apply_cz(qb, wb);
        g.measure_frame(wa, Pauli::Y, src);
        g.measure_frame(wb, Pauli::Y, src);
    }
    return out;
}

LinkResult linking_protocol(net::NetworkState &ns, const std::map<ClientId, DeviceId, NaturalLess> &placement,
                            const TargetEdges &target, OutcomeSource &src) {
    for (const auto &[c, d] : placement) {
        if (!ns.has_device(d)) fail(ErrorCode::unknown_device, "client {} sits on unknown device {}", c, d);
    }
    std::vector<net::GhzInstance *> pool;
    for (auto &inst : ns.instances) pool.push_back(&inst);
    return linking_protocol(ns.graph(), pool, placement, target, [&](const DeviceId &d) { return ns.fresh_qubit(d); },
                            src);
}

// Verification -----------------------------------------------------------------

VerifyReport verify_state(GraphState &g, const std::vector<net::GhzInstance *> &ensemble, int budget,
                          const std::set<DeviceId> &lost, std::mt19937_64 &rng) {
    VerifyReport report;
    if (budget <= 0 || static_cast<int>(ensemble.size()) < budget + 1) return report;
    auto replayed = oracle::replay(g.trace());
    for (int k = 0; k < budget; ++k) {
        auto &inst = *ensemble[static_cast<std::size_t>(k)];
        report.consumed.push_back(inst.id);
        if (inst.status != net::InstanceStatus::intact) {
            // Nothing left to measure: the correlation check cannot succeed.
            report.samples.push_back(1);
            continue;
        }
        auto qubits = inst.qubits();
        std::set<QubitId> want(qubits.begin(), qubits.end());
        oracle::StateVector sv;
        for (const auto &f : replayed.factors) {
            bool hit = std::any_of(f.labels().begin(), f.labels().end(), [&](const auto &l) { return want.count(l); });
            if (!hit) continue;
            for (const auto &l : f.labels()) {
                if (!want.count(l)) fail(ErrorCode::invalid_argument, "{} is entangled beyond its members", inst.id);
            }
            sv = oracle::tensor(sv, f);
        }
        for (const auto &q : qubits) oracle::apply_single(sv, q, g.byproduct(q).inverse().matrix());
        std::vector<QubitId> gone;
        for (const auto &q : qubits) {
            if (lost.count(q.device)) gone.push_back(q);
        }
        auto rho = oracle::ptrace_replace(sv, gone);
        auto k_root = oracle::correlation_operator(g, inst.root.qubit);
        double p_minus = oracle::project_pauli(rho, k_root, 1).probability;
        std::bernoulli_distribution draw(std::clamp(p_minus, 0.0, 1.0));
        report.samples.push_back(draw(rng) ? 1 : 0);
        g.trace_out(qubits);
        inst.status = net::InstanceStatus::consumed;
    }
    bool bad = std::any_of(report.samples.begin(), report.samples.end(), [](int b) { return b == 1; });
    report.verdict = bad ? VerifyVerdict::failed : VerifyVerdict::verified;
    return report;
}

// Simulator --------------------------------------------------------------------

namespace {

constexpr std::uint32_t kNetworkIndexStride = 100000;

}  // namespace

Simulator::Simulator(Scenario s)
    : scenario_(std::move(s)), src_(OutcomeSource::seeded(scenario_.seed.value_or(0))) {
    validate(scenario_);
    for (const auto &n : scenario_.networks) {
        for (const auto &d : n.devices) {
            Role r = d == n.router ? Role::router : Role::switch_device;
            devices_[d] = Device{d, r, top_layer(r), n.id, true, {}};
        }
        for (const auto &d : n.repeaters) devices_[d] = Device{d, Role::repeater, top_layer(Role::repeater), n.id, true, {}};
    }
    for (const auto &c : scenario_.clients) {
        devices_[c.id] = Device{c.id, Role::client, top_layer(Role::client), devices_.at(c.device).network, true, {}};
    }
    topology_ = std::make_unique<routing::RegionTopology>();
}

const Device &Simulator::device(const DeviceId &d) const {
    auto it = devices_.find(d);
    if (it == devices_.end()) fail(ErrorCode::unknown_device, "no device {}", d);
    return it->second;
}

GraphState &Simulator::world() {
    return topology_->backing();
}

const GraphState &Simulator::world() const {
    return topology_->backing();
}

net::NetworkState &Simulator::network(const std::string &id) {
    auto it = networks_.find(id);
    if (it == networks_.end()) fail(ErrorCode::unknown_reference, "network {} holds no state", id);
    return it->second;
}

void Simulator::emit(EventKind kind, std::string payload, std::int64_t at) {
    clock_ = std::max({clock_ + 1, floor_, at});
    events_.push_back(LayerEvent{kind, std::move(payload), clock_});
}

std::int64_t Simulator::live_instances() const {
    std::int64_t n = 0;
    for (const auto &[_, ns] : networks_) {
        for (const auto &inst : ns.instances) n += inst.status == net::InstanceStatus::intact;
    }
    for (const auto &r : topology_->resources()) n += !r.consumed;
    return n;
}

void Simulator::provision_dynamic() {
    ++epoch_;
    topology_ = std::make_unique<routing::RegionTopology>();
    networks_.clear();
    recovered_.clear();
    for (const auto &n : scenario_.networks) {
        if (!n.router.empty()) topology_->add_router(n.router, n.id);
    }
    for (const auto &r : scenario_.regions) {
        topology_->add_region(r.id, r.members, r.copies);
        emit(EventKind::entanglement_ready, fmt::format("region={} resources={}", r.id, topology_->region(r.id).resources.size()));
    }
    std::uint32_t ordinal = 0;
    for (const auto &n : scenario_.networks) {
        ++ordinal;
        if (n.devices.size() < 2) continue;
        auto spec = spec_of(n);
        spec.index_base = ordinal * kNetworkIndexStride;
        auto ns = n.symmetrized > 0 ? net::symmetrize(spec, n.symmetrized) : net::build_network_state(spec, n.layout);
        auto [it, _] = networks_.emplace(n.id, std::move(ns));
        it->second.attach(world());
        emit(EventKind::entanglement_ready, fmt::format("network={} instances={}", n.id, it->second.instances.size()));
    }
    // Devices that are down cannot receive their share of the new states.
    for (const auto &[d, dev] : devices_) {
        if (dev.alive) continue;
        auto nit = networks_.find(dev.network);
        if (nit != networks_.end() && nit->second.has_device(d)) net::device_fail(nit->second, d);
        if (dev.role == Role::router) topology_->fail_router(d);
    }
    ledger_ = ResourceLedger{};
    ledger_.provisioned = live_instances();
    ledger_.adaptive_from = world().trace().size();
}

const ResourceLedger &Simulator::audit() {
    auto &L = ledger_;
    L.created_adaptive = 0;
    L.teleports = 0;
    L.violations.clear();
    L.consumed = 0;
    L.destroyed = 0;
    for (const auto &[_, ns] : networks_) {
        for (const auto &inst : ns.instances) {
            L.consumed += inst.status == net::InstanceStatus::consumed;
            L.destroyed += inst.status == net::InstanceStatus::destroyed;
        }
    }
    for (const auto &r : topology_->resources()) {
        L.consumed += r.ghz.status == net::InstanceStatus::consumed;
        L.destroyed += r.ghz.status == net::InstanceStatus::destroyed;
    }
    const auto &trace = world().trace();
    auto nonlocal = [&](const std::string &what, const QubitId &a, const QubitId &b) {
        if (a.device == b.device) return;
        ++L.created_adaptive;
        L.violations.push_back(fmt::format("{} across {} and {}", what, a.device, b.device));
    };
    for (std::size_t i = L.adaptive_from; i < trace.size(); ++i) {
        std::visit(
            [&](const auto &o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, op::Prepare>) {
                    for (const auto &v : o.vertices) nonlocal("preparation", o.vertices.front(), v);
                } else if constexpr (std::is_same_v<T, op::CZ>) {
                    nonlocal("CZ", o.a, o.b);
                } else if constexpr (std::is_same_v<T, op::Bell> || std::is_same_v<T, op::Parity>) {
                    nonlocal("joint measurement", o.a, o.b);
                } else if constexpr (std::is_same_v<T, op::Relabel>) {
                    if (o.from.device == o.to.device) return;
                    auto it = devices_.find(o.to.device);
                    bool teleport = it != devices_.end() && it->second.role == Role::client &&
                                    std::any_of(scenario_.clients.begin(), scenario_.clients.end(), [&](const auto &c) {
                                        return c.id == o.to.device && c.device == o.from.device;
                                    });
                    if (teleport) {
                        ++L.teleports;
                    } else {
                        L.violations.push_back(fmt::format("qubit moved from {} to {}", o.from.device, o.to.device));
                    }
                }
            },
            trace[i]);
    }
    return L;
}

std::vector<net::GhzInstance> Simulator::expand_virtual(
    const net::GhzInstance &v, const std::map<DeviceId, std::set<DeviceId, NaturalLess>, NaturalLess> &wanted,
    std::vector<std::string> &consumed, int serial) {
    auto &g = world();
    std::vector<net::Member> routers{v.root};
    routers.insert(routers.end(), v.leaves.begin(), v.leaves.end());
    std::vector<net::Member> members;
    for (const auto &r : routers) {
        const auto &netid = devices_.at(r.device).network;
        auto &ns = network(netid);
        std::set<DeviceId, NaturalLess> keep = wanted.at(r.device);
        keep.insert(r.device);
        net::GhzInstance *best = nullptr;
        for (auto &inst : ns.instances) {
            if (inst.status != net::InstanceStatus::intact) continue;
            bool covers = std::all_of(keep.begin(), keep.end(), [&](const auto &d) { return inst.touches(d); });
            if (covers && (!best || inst.size() < best->size())) best = &inst;
        }
        if (!best) {
            fail(ErrorCode::insufficient_resources, "network {} has no state joining {} to {}", netid, r.device,
                 fmt::join(wanted.at(r.device), ","));
        }
        auto shaped = net::shape_instance(g, *best, keep, src_);
        consumed.push_back(netid + "/" + best->id);
        g.bell_merge(r.qubit, member_on(shaped, r.device).qubit, src_);
        std::vector<net::Member> side{shaped.root};
        side.insert(side.end(), shaped.leaves.begin(), shaped.leaves.end());
        for (const auto &m : side) {
            if (m.device != r.device) members.push_back(m);
        }
    }
    net::GhzInstance out;
    out.id = fmt::format("x{}", serial);
    out.root = members.front();
    out.leaves.assign(members.begin() + 1, members.end());
    out.built_size = out.size();
    if (out.size() >= 2) g.normalize_star(out.root.qubit);
    return {out};
}

FulfillReport Simulator::fulfill_request(const RequestDef &req) {
    if (epoch_ == 0) provision_dynamic();
    emit(EventKind::request, fmt::format("request={} target={}", req.id, req.target));
    FulfillReport rep;
    rep.request = req.id;
    rep.target = req.target;
    rep.edges = req.edges;

    std::map<ClientId, DeviceId, NaturalLess> placement;
    for (const auto &c : scenario_.clients) placement[c.id] = c.device;
    std::set<ClientId, NaturalLess> involved;
    for (const auto &[a, b] : req.edges) {
        involved.insert(a);
        involved.insert(b);
    }
    std::map<std::string, std::set<DeviceId, NaturalLess>, NaturalLess> switches_by_net;
    for (const auto &c : involved) {
        if (!placement.count(c)) fail(ErrorCode::unknown_reference, "unknown client {}", c);
        const auto &sw = placement.at(c);
        if (!device(c).alive) fail(ErrorCode::device_down, "client {} is down", c);
        if (!device(sw).alive) fail(ErrorCode::device_down, "switch {} is down", sw);
        switches_by_net[device(sw).network].insert(sw);
    }

    std::vector<net::GhzInstance> expanded;
    if (switches_by_net.size() >= 2) {
        routing::RouterSet routers;
        std::map<DeviceId, std::set<DeviceId, NaturalLess>, NaturalLess> wanted;
        for (const auto &[netid, sws] : switches_by_net) {
            auto it = std::find_if(scenario_.networks.begin(), scenario_.networks.end(),
                                   [&](const auto &n) { return n.id == netid; });
            if (it->router.empty()) fail(ErrorCode::no_route, "network {} has no router", netid);
            if (!device(it->router).alive) fail(ErrorCode::device_down, "router {} is down", it->router);
            routers.insert(it->router);
            wanted[it->router] = sws;
        }
        for (int copy = 0; copy < req.copies; ++copy) {
            auto rr = routing::region_routing(*topology_, routers, src_);
            rep.consumed.insert(rep.consumed.end(), rr.consumed.begin(), rr.consumed.end());
            rep.routing.insert(rep.routing.end(), rr.steps.begin(), rr.steps.end());
            for (const auto &v : rr.virtual_state) {
                rep.virtual_sizes.push_back(v.size());
                auto xs = expand_virtual(v, wanted, rep.consumed, ++virtual_serial_);
                expanded.insert(expanded.end(), xs.begin(), xs.end());
            }
        }
    }

    // Wires come from the expanded virtual states first, then from the
    // requesting networks' own states.
    std::vector<net::GhzInstance *> pool;
    std::vector<std::string> names;
    for (auto &x : expanded) {
        pool.push_back(&x);
        names.push_back(x.id);
    }
    for (const auto &[netid, _] : switches_by_net) {
        auto it = networks_.find(netid);
        if (it == networks_.end()) continue;
        for (auto &inst : it->second.instances) {
            pool.push_back(&inst);
            names.push_back(netid + "/" + inst.id);
        }
    }
    std::map<ClientId, DeviceId, NaturalLess> used_placement;
    for (const auto &c : involved) used_placement[c] = placement.at(c);
    auto link = linking_protocol(world(), pool, used_placement, req.edges,
                                 [&](const DeviceId &d) { return topology_->fresh_qubit(d); }, src_);
    for (auto i : link.used) rep.consumed.push_back(names[i]);

    // Teleportation onto the clients, modeled as relabeling.
    std::vector<QubitId> vertices;
    std::map<ClientId, QubitId, NaturalLess> at_client;
    for (const auto &[c, q] : link.vertex) {
        auto cq = topology_->fresh_qubit(c);
        world().relabel(q, cq);
        at_client[c] = cq;
        vertices.push_back(cq);
    }
    rep.vertex = at_client;
    std::vector<Edge> edges;
    for (const auto &[a, b] : req.edges) edges.push_back(make_edge(at_client.at(a), at_client.at(b)));
    rep.oracle = oracle::certify_target(world(), vertices, edges);
    emit(EventKind::request_complete,
         fmt::format("request={} oracle={}", req.id, oracle::to_string(rep.oracle.verdict)));

    for (auto &[_, dev] : devices_) dev.holdings.clear();
    for (const auto &q : world().vertices()) {
        auto it = devices_.find(q.device);
        if (it != devices_.end()) it->second.holdings.insert(q);
    }
    return rep;
}

std::set<DeviceId, NaturalLess> Simulator::classical_neighbors(const DeviceId &d) const {
    std::set<DeviceId, NaturalLess> out;
    const auto &dev = device(d);
    for (const auto &n : scenario_.networks) {
        if (n.id != dev.network) continue;
        if (dev.role != Role::client) {
            out.insert(n.devices.begin(), n.devices.end());
            out.insert(n.repeaters.begin(), n.repeaters.end());
        }
    }
    for (const auto &c : scenario_.clients) {
        if (c.device == d) out.insert(c.id);
        if (c.id == d) out.insert(c.device);
    }
    if (dev.role == Role::router) {
        for (const auto &r : scenario_.regions) {
            if (std::find(r.members.begin(), r.members.end(), d) != r.members.end()) {
                out.insert(r.members.begin(), r.members.end());
            }
        }
    }
    out.erase(d);
    return out;
}

bool Simulator::ping_classical(const DeviceId &from, const DeviceId &to) {
    device(to);
    emit(EventKind::ping, fmt::format("from={} to={}", from, to));
    bool reached = false;
    if (device(from).alive && device(to).alive) {
        std::set<DeviceId, NaturalLess> seen{from};
        std::deque<DeviceId> queue{from};
        while (!queue.empty() && !reached) {
            auto u = queue.front();
            queue.pop_front();
            if (u == to) reached = true;
            for (const auto &w : classical_neighbors(u)) {
                if (device(w).alive && seen.insert(w).second) queue.push_back(w);
            }
        }
    }
    if (reached) {
        emit(EventKind::ping_reply, fmt::format("from={} to={}", to, from));
        return true;
    }
    emit(EventKind::failure_detected, fmt::format("device={} by={}", to, from));
    const auto &dev = device(to);
    auto nit = networks_.find(dev.network);
    if (!dev.alive && !recovered_.count(to) && nit != networks_.end() && nit->second.has_device(to) &&
        nit->second.layout == net::Layout::shielded) {
        recovered_.insert(to);
        net::recover_shielded(nit->second, to, src_);
    }
    return false;
}

void Simulator::monitor(const DeviceId &failed) {
    for (const auto &w : classical_neighbors(failed)) {
        if (device(w).alive) {
            ping_classical(w, failed);
            return;
        }
    }
}

void Simulator::fail_device(const DeviceId &d) {
    auto it = devices_.find(d);
    if (it == devices_.end()) fail(ErrorCode::unknown_device, "no device {}", d);
    if (!it->second.alive) return;
    if (epoch_ == 0) provision_dynamic();
    it->second.alive = false;
    auto nit = networks_.find(it->second.network);
    if (nit != networks_.end() && nit->second.has_device(d)) net::device_fail(nit->second, d);
    if (it->second.role == Role::router) topology_->fail_router(d);
    monitor(d);
}

VerifyReport Simulator::verify(const CheckDef &check) {
    if (epoch_ == 0) provision_dynamic();
    auto &ns = network(check.network);
    std::vector<net::GhzInstance *> ensemble;
    for (auto &inst : ns.instances) {
        if (inst.built_size == check.size && inst.status == net::InstanceStatus::intact) ensemble.push_back(&inst);
    }
    std::set<DeviceId> lost;
    if (!check.lost.empty()) lost.insert(check.lost);
    std::mt19937_64 rng(scenario_.seed.value_or(0) * 1000003u + static_cast<std::uint64_t>(++checks_run_));
    return verify_state(ns.graph(), ensemble, check.budget, lost, rng);
}

std::vector<FulfillReport> Simulator::run() {
    if (epoch_ == 0) provision_dynamic();
    std::vector<std::tuple<std::int64_t, int, std::size_t>> agenda;
    for (std::size_t i = 0; i < scenario_.failures.size(); ++i) agenda.emplace_back(scenario_.failures[i].at, 0, i);
    for (std::size_t i = 0; i < scenario_.requests.size(); ++i) agenda.emplace_back(scenario_.requests[i].at, 1, i);
    std::sort(agenda.begin(), agenda.end());
    std::vector<FulfillReport> out;
    for (const auto &[at, kind, i] : agenda) {
        floor_ = at;
        if (kind == 0) {
            fail_device(scenario_.failures[i].device);
        } else {
            out.push_back(fulfill_request(scenario_.requests[i]));
        }
    }
    floor_ = 0;
    return out;
}

// Drills ----------------------------------------------------------------------

std::vector<DrillRow> drill(const NetworkDef &n, std::uint64_t seed) {
    auto spec = spec_of(n);
    std::vector<DrillRow> rows;
    auto src = OutcomeSource::seeded(seed);
    for (const auto &d : n.devices) {
        auto ns = n.symmetrized > 0 ? net::symmetrize(spec, n.symmetrized) : net::build_network_state(spec, n.layout);
        net::device_fail(ns, d);
        if (n.layout == net::Layout::shielded) net::recover_shielded(ns, d, src);
        DrillRow row;
        row.network = n.id;
        row.failed = d;
        row.intact_full_copies = net::intact_full_copies(ns);
        const int m = static_cast<int>(n.devices.size());
        row.guarantee = n.symmetrized > 0 ? n.symmetrized / m : (n.layout == net::Layout::shielded ? 1 : 0);
        for (const auto &inst : ns.instances) ++row.status_counts[std::string(net::to_string(inst.status))];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qnet::stack
