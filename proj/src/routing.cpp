#include "qnet/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <fmt/format.h>

namespace qnet::routing {

using net::Member;

namespace {

bool nat_less(const std::string &a, const std::string &b) {
    return natural_compare(a, b) < 0;
}

bool same_cost(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

const Member *member_on(const net::GhzInstance &g, const RouterId &r) {
    if (g.root.device == r) return &g.root;
    for (const auto &l : g.leaves) {
        if (l.device == r) return &l;
    }
    return nullptr;
}

}  // namespace

bool Region::has(const RouterId &r) const {
    return std::find(members.begin(), members.end(), r) != members.end();
}

void RegionTopology::add_router(const RouterId &r, const std::string &network) {
    if (r.empty() || r.find('@') != std::string::npos || r.find('-') != std::string::npos) {
        throw Error(ErrorCode::invalid_argument, "bad router id '" + r + "'");
    }
    if (!routers_.insert(r).second) throw Error(ErrorCode::duplicate_id, "router " + r + " already exists");
    network_[r] = network.empty() ? r : network;
}

void RegionTopology::add_region(const std::string &id, std::vector<RouterId> members, int copies) {
    for (const auto &reg : regions_) {
        if (reg.id == id) throw Error(ErrorCode::duplicate_id, "region " + id + " already exists");
    }
    if (members.size() < 2) throw Error(ErrorCode::invalid_spec, "region " + id + " needs two routers");
    if (copies < 0) throw Error(ErrorCode::invalid_spec, "negative copy count");
    std::sort(members.begin(), members.end(), nat_less);
    if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
        throw Error(ErrorCode::invalid_spec, "region " + id + " lists a router twice");
    }
    for (const auto &r : members) {
        if (!has_router(r)) throw Error(ErrorCode::unknown_reference, "region " + id + ": no router " + r);
    }
    regions_.push_back(Region{id, members, {}});
    for (int copy = 0; copy < copies; ++copy) {
        for (std::size_t k = members.size(); k >= 2; --k) {
            std::vector<RouterId> leaves(members.begin(), members.begin() + static_cast<long>(k - 1));
            add_resource(id, members[k - 1], leaves, fmt::format("{}.{}.g{}", id, copy, k));
        }
    }
}

const Resource &RegionTopology::add_resource(const std::string &region, const RouterId &root,
                                             const std::vector<RouterId> &leaves, std::string id) {
    auto it = std::find_if(regions_.begin(), regions_.end(), [&](const Region &r) { return r.id == region; });
    if (it == regions_.end()) throw Error(ErrorCode::unknown_reference, "no region " + region);
    RouterSet seen{root};
    if (!it->has(root)) throw Error(ErrorCode::unknown_reference, root + " is not in region " + region);
    for (const auto &l : leaves) {
        if (!it->has(l)) throw Error(ErrorCode::unknown_reference, l + " is not in region " + region);
        if (!seen.insert(l).second) throw Error(ErrorCode::invalid_spec, "resource lists " + l + " twice");
    }
    if (leaves.empty()) throw Error(ErrorCode::invalid_size, "a resource needs at least two routers");
    Resource res;
    res.id = id.empty() ? fmt::format("{}.x{}", region, it->resources.size()) : std::move(id);
    for (const auto &other : resources_) {
        if (other.id == res.id) throw Error(ErrorCode::duplicate_id, "resource " + res.id + " already exists");
    }
    res.region = region;
    res.ghz.id = res.id;
    res.ghz.root = {root, fresh_qubit(root)};
    std::vector<QubitId> star{res.ghz.root.qubit};
    for (const auto &l : leaves) {
        res.ghz.leaves.push_back({l, fresh_qubit(l)});
        star.push_back(res.ghz.leaves.back().qubit);
    }
    res.ghz.built_size = static_cast<int>(star.size());
    backing_.prepare_star(star);
    it->resources.push_back(resources_.size());
    resources_.push_back(std::move(res));
    return resources_.back();
}

void RegionTopology::fail_router(const RouterId &r) {
    if (!has_router(r)) throw Error(ErrorCode::unknown_device, "no router " + r);
    down_.insert(r);
    for (auto &res : resources_) {
        if (res.consumed || !res.contains(r)) continue;
        backing_.trace_out(res.ghz.qubits());
        res.consumed = true;
        res.ghz.status = net::InstanceStatus::destroyed;
    }
}

const std::string &RegionTopology::network_of(const RouterId &r) const {
    auto it = network_.find(r);
    if (it == network_.end()) throw Error(ErrorCode::unknown_reference, "no router " + r);
    return it->second;
}

const Region &RegionTopology::region(const std::string &id) const {
    for (const auto &r : regions_) {
        if (r.id == id) return r;
    }
    throw Error(ErrorCode::unknown_reference, "no region " + id);
}

Resource &RegionTopology::resource(const std::string &id) {
    for (auto &r : resources_) {
        if (r.id == id) return r;
    }
    throw Error(ErrorCode::unknown_reference, "no resource " + id);
}

std::size_t RegionTopology::live_resources() const {
    return static_cast<std::size_t>(
        std::count_if(resources_.begin(), resources_.end(), [](const Resource &r) { return !r.consumed; }));
}

QubitId RegionTopology::fresh_qubit(const RouterId &r) {
    return QubitId{r, next_index_[r]++};
}

bool RoutingGraph::has_vertex(const std::string &v) const {
    return std::find(vertices.begin(), vertices.end(), v) != vertices.end();
}

double unit_cost(const Region &, const RouterId &, const RouterId &) {
    return 1.0;
}

namespace {

bool pair_available(const RegionTopology &t, const Region &reg, const RouterId &u, const RouterId &v) {
    for (auto idx : reg.resources) {
        const auto &res = t.resources()[idx];
        if (!res.consumed && res.contains(u) && res.contains(v)) return true;
    }
    return false;
}

std::string port_name(const RouterId &r, const std::string &region) {
    return r + "@" + region;
}

RouterId router_of(const std::string &vertex) {
    return vertex.substr(0, vertex.find('@'));
}

}  // namespace

RoutingGraph collapse_to_graph(const RegionTopology &t, const CostFunction &cost, Collapse mode) {
    RoutingGraph g;
    for (const auto &r : t.routers()) {
        if (t.is_down(r)) continue;
        g.vertices.push_back(r);
        if (mode == Collapse::per_qubit) {
            for (const auto &reg : t.regions()) {
                if (!reg.has(r)) continue;
                g.vertices.push_back(port_name(r, reg.id));
                g.edges.push_back({r, port_name(r, reg.id), 0.0, ""});
            }
        }
    }
    for (const auto &reg : t.regions()) {
        for (std::size_t i = 0; i < reg.members.size(); ++i) {
            for (std::size_t j = i + 1; j < reg.members.size(); ++j) {
                const auto &u = reg.members[i];
                const auto &v = reg.members[j];
                if (t.is_down(u) || t.is_down(v) || !pair_available(t, reg, u, v)) continue;
                double c = cost(reg, u, v);
                if (!(c > 0)) throw Error(ErrorCode::invalid_argument, "edge costs must be positive");
                if (mode == Collapse::fused) {
                    g.edges.push_back({u, v, c, reg.id});
                } else {
                    g.edges.push_back({port_name(u, reg.id), port_name(v, reg.id), c, reg.id});
                }
            }
        }
    }
    std::sort(g.vertices.begin(), g.vertices.end(), nat_less);
    return g;
}

namespace {

struct Label {
    double dist = 0;
    std::vector<std::string> path;
    std::vector<std::size_t> edges;
};

bool path_less(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), nat_less);
}

bool label_less(const Label &a, const Label &b) {
    if (!same_cost(a.dist, b.dist)) return a.dist < b.dist;
    return path_less(a.path, b.path);
}

}  // namespace

PathResult dijkstra(const RoutingGraph &g, const std::string &a, const RouterSet &targets) {
    if (!g.has_vertex(a)) throw Error(ErrorCode::not_found, "no vertex " + a);
    if (targets.empty()) throw Error(ErrorCode::invalid_argument, "empty target set");
    std::map<std::string, std::vector<std::size_t>, NaturalLess> adj;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        adj[g.edges[i].u].push_back(i);
        adj[g.edges[i].v].push_back(i);
    }
    std::map<std::string, Label, NaturalLess> best;
    std::set<std::string, NaturalLess> done;
    best[a] = Label{0, {a}, {}};
    std::optional<double> found;
    while (true) {
        const std::string *pick = nullptr;
        for (const auto &[v, lab] : best) {
            if (done.count(v)) continue;
            if (!pick || label_less(lab, best[*pick])) pick = &v;
        }
        if (!pick) break;
        std::string u = *pick;
        const Label cur = best[u];
        if (found && cur.dist > *found && !same_cost(cur.dist, *found)) break;
        done.insert(u);
        if (targets.count(u) && !found) found = cur.dist;
        for (auto ei : adj[u]) {
            const auto &e = g.edges[ei];
            const auto &w = e.u == u ? e.v : e.u;
            if (done.count(w)) continue;
            Label next{cur.dist + e.cost, cur.path, cur.edges};
            next.path.push_back(w);
            next.edges.push_back(ei);
            auto it = best.find(w);
            if (it == best.end() || label_less(next, it->second)) {
                best[w] = std::move(next);
            } else if (same_cost(next.dist, it->second.dist) && next.path == it->second.path) {
                // Parallel edges: keep the cheaper, then the smaller region.
                const auto &old = g.edges[it->second.edges.back()];
                if (e.cost < old.cost || (e.cost == old.cost && nat_less(e.region, old.region))) {
                    it->second = std::move(next);
                }
            }
        }
    }
    if (!found) throw Error(ErrorCode::no_route, "no route from " + a);
    for (const auto &t : targets) {
        if (!done.count(t) || !same_cost(best[t].dist, *found)) continue;
        PathResult r;
        r.nearest = t;
        r.dist = best[t].dist;
        r.path = best[t].path;
        for (auto ei : best[t].edges) r.edges.push_back(g.edges[ei]);
        return r;
    }
    throw Error(ErrorCode::no_route, "no route from " + a);
}

double SteinerTree::cost() const {
    double c = 0;
    for (const auto &e : edges) c += e.cost;
    return c;
}

int SteinerTree::degree(const std::string &v) const {
    int d = 0;
    for (const auto &e : edges) d += (e.u == v) + (e.v == v);
    return d;
}

bool SteinerTree::is_valid() const {
    if (!vertices.count(root) || !terminals.count(root)) return false;
    for (const auto &t : terminals) {
        if (!vertices.count(t)) return false;
    }
    if (edges.size() + 1 != vertices.size()) return false;
    std::map<std::string, std::string, NaturalLess> parent;
    for (const auto &v : vertices) parent[v] = v;
    std::function<std::string(const std::string &)> find = [&](const std::string &x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const auto &e : edges) {
        if (!vertices.count(e.u) || !vertices.count(e.v)) return false;
        auto a = find(e.u), b = find(e.v);
        if (a == b) return false;
        parent[a] = b;
    }
    return true;
}

SteinerTree steiner(const RoutingGraph &g, const RouterSet &terminals, const std::string &x) {
    if (!terminals.count(x)) throw Error(ErrorCode::invalid_argument, x + " is not a terminal");
    for (const auto &s : terminals) {
        if (!g.has_vertex(s)) throw Error(ErrorCode::no_route, s + " is not in the routing graph");
    }
    SteinerTree tree;
    tree.root = x;
    tree.terminals = terminals;
    tree.vertices.insert(x);
    RouterSet joined{x};
    while (joined.size() < terminals.size()) {
        std::optional<PathResult> best;
        std::string pick;
        for (const auto &s : terminals) {
            if (joined.count(s)) continue;
            auto r = dijkstra(g, s, tree.vertices);
            if (!best || (r.dist < best->dist && !same_cost(r.dist, best->dist))) {
                best = std::move(r);
                pick = s;
            }
        }
        for (const auto &v : best->path) tree.vertices.insert(v);
        for (const auto &e : best->edges) tree.edges.push_back(e);
        joined.insert(pick);
    }
    return tree;
}

namespace {

// Z-measures every other member so the star becomes a Bell pair between
// the qubits of u and v.
std::pair<QubitId, QubitId> shape_to_pair(GraphState &g, Resource &res, const RouterId &u, const RouterId &v,
                                          OutcomeSource &src) {
    auto qu = member_on(res.ghz, u)->qubit;
    auto qv = member_on(res.ghz, v)->qubit;
    for (const auto &l : res.ghz.leaves) {
        if (l.device != u && l.device != v) g.measure_frame(l.qubit, Pauli::Z, src);
    }
    if (res.ghz.root.device != u && res.ghz.root.device != v) {
        g.measure_frame(res.ghz.root.qubit, Pauli::X, src, qu);
    }
    res.consumed = true;
    res.ghz.status = net::InstanceStatus::consumed;
    return std::make_pair(qu, qv);
}

Resource &pick_resource(RegionTopology &t, const RouteEdge &e) {
    const auto &reg = t.region(e.region);
    Resource *best = nullptr;
    for (auto idx : reg.resources) {
        auto &res = t.resource(t.resources()[idx].id);
        if (res.consumed || !res.contains(e.u) || !res.contains(e.v)) continue;
        if (!best || res.ghz.size() < best->ghz.size()) best = &res;
    }
    if (!best) {
        throw Error(ErrorCode::insufficient_resources,
                    fmt::format("region {} has no state left between {} and {}", e.region, e.u, e.v));
    }
    return *best;
}

}  // namespace

net::GhzInstance tree_to_ghz(RegionTopology &t, const SteinerTree &tree, const RouterSet &targets,
                             OutcomeSource &src, std::vector<std::string> &consumed) {
    if (!tree.is_valid()) throw Error(ErrorCode::malformed_tree, "not a tree rooted at a terminal");
    for (const auto &x : targets) {
        if (!tree.vertices.count(x)) throw Error(ErrorCode::malformed_tree, x + " is not in the tree");
    }
    if (!targets.count(tree.root)) throw Error(ErrorCode::malformed_tree, "root is not a target");
    for (const auto &e : tree.edges) {
        if (e.region.empty()) throw Error(ErrorCode::malformed_tree, "tree edge without a region");
    }
    auto &g = t.backing();

    std::map<RouterId, std::vector<QubitId>, NaturalLess> ports;
    for (const auto &e : tree.edges) {
        auto &res = pick_resource(t, e);
        auto [qu, qv] = shape_to_pair(g, res, e.u, e.v, src);
        ports[e.u].push_back(qu);
        ports[e.v].push_back(qv);
        consumed.push_back(res.id);
    }

    std::map<RouterId, QubitId, NaturalLess> kept;
    for (const auto &v : tree.vertices) {
        const auto &qs = ports[v];
        bool target = targets.count(v) > 0;
        if (target && qs.size() == 1) {
            kept[v] = qs[0];
        } else if (target) {
            // Local GHZ of size deg+1: one qubit is kept, the rest are
            // Bell-measured against the tree qubits.
            std::vector<QubitId> local;
            for (std::size_t k = 0; k <= qs.size(); ++k) local.push_back(t.fresh_qubit(v));
            g.prepare_star(local);
            for (std::size_t k = 0; k < qs.size(); ++k) g.bell_merge(qs[k], local[k + 1], src);
            kept[v] = local[0];
        } else if (qs.size() == 1) {
            g.measure_frame(qs[0], Pauli::Z, src);
        } else if (qs.size() == 2) {
            g.bell_merge(qs[0], qs[1], src);
        } else if (qs.size() > 2) {
            std::vector<QubitId> local;
            for (std::size_t k = 0; k < qs.size(); ++k) local.push_back(t.fresh_qubit(v));
            g.prepare_star(local);
            for (std::size_t k = 0; k < qs.size(); ++k) g.bell_merge(qs[k], local[k], src);
        }
    }

    net::GhzInstance out;
    out.root = {tree.root, kept.at(tree.root)};
    for (const auto &x : targets) {
        if (x != tree.root) out.leaves.push_back({x, kept.at(x)});
    }
    out.built_size = out.size();
    if (out.size() > 2) g.normalize_star(out.root.qubit);
    auto comp = g.component(out.root.qubit);
    if (comp.size() != static_cast<std::size_t>(out.size())) {
        throw Error(ErrorCode::malformed_tree, "tree did not produce a GHZ over the targets");
    }
    return out;
}

namespace {

// Maps a tree over ports and hubs back onto routers; merging a router's
// ports can close cycles, which a breadth-first pass drops again.
SteinerTree contract_ports(const SteinerTree &expanded) {
    std::vector<RouteEdge> cross;
    for (const auto &e : expanded.edges) {
        if (e.region.empty()) continue;
        cross.push_back({router_of(e.u), router_of(e.v), e.cost, e.region});
    }
    SteinerTree tree;
    tree.root = expanded.root;
    tree.terminals = expanded.terminals;
    tree.vertices.insert(tree.root);
    std::deque<std::string> queue{tree.root};
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        for (const auto &e : cross) {
            if (e.u != u && e.v != u) continue;
            const auto &w = e.u == u ? e.v : e.u;
            if (tree.vertices.count(w)) continue;
            tree.vertices.insert(w);
            tree.edges.push_back(e);
            queue.push_back(w);
        }
    }
    return tree;
}

}  // namespace

RoutingResult region_routing(RegionTopology &t, const RouterSet &requested, OutcomeSource &src,
                             const RoutingOptions &options) {
    if (requested.size() < 2) throw Error(ErrorCode::invalid_argument, "routing needs two routers");
    for (const auto &r : requested) {
        if (!t.has_router(r)) throw Error(ErrorCode::unknown_reference, "no router " + r);
        if (t.is_down(r)) throw Error(ErrorCode::device_down, r + " is down");
    }
    RoutingResult result;
    RouterSet remaining = requested;
    int step = 1;
    while (remaining.size() >= 2) {
        RouterId v = options.select ? options.select(remaining) : *remaining.begin();
        if (!remaining.count(v)) throw Error(ErrorCode::invalid_argument, "selected root is not requested");
        auto graph = collapse_to_graph(t, options.cost, options.collapse);
        auto tree = steiner(graph, remaining, v);
        if (options.collapse == Collapse::per_qubit) tree = contract_ports(tree);

        RoutingStep rec;
        rec.step = step;
        rec.root = v;
        rec.tree_edges = tree.edges;
        auto inst = tree_to_ghz(t, tree, remaining, src, rec.consumed);
        inst.id = fmt::format("v{}", step);
        result.consumed.insert(result.consumed.end(), rec.consumed.begin(), rec.consumed.end());
        result.virtual_state.push_back(std::move(inst));
        result.steps.push_back(std::move(rec));
        remaining.erase(v);
        ++step;
    }
    return result;
}

std::string format_step(const RoutingStep &s) {
    std::vector<std::string> edges;
    for (const auto &e : s.tree_edges) {
        edges.push_back(nat_less(e.v, e.u) ? e.v + "-" + e.u : e.u + "-" + e.v);
    }
    return fmt::format("step={} root={} tree_edges=[{}] consumed=[{}]", s.step, s.root, fmt::join(edges, ","),
                       fmt::join(s.consumed, ","));
}

// ---------------------------------------------------------------------------

RegionHierarchy::RegionHierarchy(int m_max) : m_max_(m_max) {
    if (m_max < 2) throw Error(ErrorCode::invalid_argument, "regions need room for two routers");
}

int RegionHierarchy::levels() const {
    int top = -1;
    for (const auto &r : regions_) top = std::max(top, r.level);
    return top + 1;
}

namespace {

std::vector<std::size_t> breadth_first(const std::vector<HierRegion> &regions) {
    std::vector<std::size_t> order;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!regions[i].parent) queue.push_back(i);
    }
    while (!queue.empty()) {
        auto i = queue.front();
        queue.pop_front();
        order.push_back(i);
        std::vector<std::size_t> children;
        for (std::size_t j = 0; j < regions.size(); ++j) {
            if (regions[j].parent == i) children.push_back(j);
        }
        const auto &members = regions[i].members;
        auto pos = [&](std::size_t j) {
            return std::find(members.begin(), members.end(), regions[j].designated()) - members.begin();
        };
        std::sort(children.begin(), children.end(), [&](auto a, auto b) { return pos(a) < pos(b); });
        queue.insert(queue.end(), children.begin(), children.end());
    }
    return order;
}

}  // namespace

Placement hierarchy_insert(RegionHierarchy &h, const RouterId &r) {
    auto &regions = h.regions_;
    for (const auto &reg : regions) {
        if (reg.level == 0 && std::find(reg.members.begin(), reg.members.end(), r) != reg.members.end()) {
            throw Error(ErrorCode::duplicate_id, "router " + r + " already placed");
        }
    }
    ++h.routers_;
    Placement p;
    auto create = [&](int level, std::vector<RouterId> members) {
        int n = static_cast<int>(std::count_if(regions.begin(), regions.end(),
                                               [&](const HierRegion &x) { return x.level == level; }));
        regions.push_back({fmt::format("L{}.R{}", level, n), level, std::move(members), std::nullopt});
        p.created.push_back(regions.back().id);
        return regions.size() - 1;
    };
    if (regions.empty()) {
        auto i = create(0, {r});
        p.region = regions[i].id;
        return p;
    }
    for (auto i : breadth_first(regions)) {
        if (regions[i].level == 0 && static_cast<int>(regions[i].members.size()) < h.m_max_) {
            regions[i].members.push_back(r);
            p.region = regions[i].id;
            return p;
        }
    }
    auto fresh = create(0, {r});
    p.region = regions[fresh].id;

    // Link the new region upward through its designated router.
    std::size_t child = fresh;
    while (true) {
        int level = regions[child].level + 1;
        std::optional<std::size_t> room;
        bool level_exists = false;
        for (auto i : breadth_first(regions)) {
            if (regions[i].level != level) continue;
            level_exists = true;
            if (static_cast<int>(regions[i].members.size()) < h.m_max_) {
                room = i;
                break;
            }
        }
        if (room) {
            regions[*room].members.push_back(regions[child].designated());
            regions[child].parent = *room;
            break;
        }
        if (!level_exists) {
            std::size_t top = 0;
            for (std::size_t i = 0; i < regions.size(); ++i) {
                if (i != child && regions[i].level == level - 1 && !regions[i].parent) top = i;
            }
            auto up = create(level, {regions[top].designated(), regions[child].designated()});
            regions[top].parent = up;
            regions[child].parent = up;
            break;
        }
        auto up = create(level, {regions[child].designated()});
        regions[child].parent = up;
        child = up;
    }
    return p;
}

// ---------------------------------------------------------------------------

RegionAssignments symmetrize_region_state(const std::vector<std::vector<RouterId>> &regions, int ghz_size) {
    if (ghz_size < 2 || static_cast<std::size_t>(ghz_size) != regions.size()) {
        throw Error(ErrorCode::invalid_argument, "one region per GHZ qubit is required");
    }
    RegionAssignments out;
    out.count = 1;
    for (const auto &reg : regions) {
        if (reg.empty()) throw Error(ErrorCode::invalid_argument, "empty region");
        out.count *= reg.size();
    }
    std::vector<std::size_t> idx(regions.size(), 0);
    while (true) {
        std::vector<RouterId> a;
        for (std::size_t k = 0; k < regions.size(); ++k) a.push_back(regions[k][idx[k]]);
        out.assignments.push_back(std::move(a));
        std::size_t k = regions.size();
        while (k > 0) {
            --k;
            if (++idx[k] < regions[k].size()) break;
            idx[k] = 0;
            if (k == 0) return out;
        }
    }
}

std::vector<std::vector<RouterId>> surviving_assignments(const RegionAssignments &a, const RouterId &failed) {
    std::vector<std::vector<RouterId>> out;
    for (const auto &x : a.assignments) {
        if (std::find(x.begin(), x.end(), failed) == x.end()) out.push_back(x);
    }
    return out;
}

}  // namespace qnet::routing
