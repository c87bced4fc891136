#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qnet/graph_state.hpp"
#include "qnet/netstate.hpp"

namespace qnet::routing {

using RouterId = std::string;
using RouterSet = std::set<RouterId, NaturalLess>;

/// One GHZ state shared by routers of a region.
struct Resource {
    std::string id;
    std::string region;
    net::GhzInstance ghz;
    bool consumed = false;

    bool contains(const RouterId &r) const {
        return ghz.touches(r);
    }
};

struct Region {
    std::string id;
    std::vector<RouterId> members;
    std::vector<std::size_t> resources;

    bool has(const RouterId &r) const;
};

/// Routers, the regions they form and the GHZ resources held in each
/// region. All resource qubits live in one backing GraphState.
class RegionTopology {
  public:
    void add_router(const RouterId &r, const std::string &network = "");
    /// Region whose members share `copies` GHZ network states with one
    /// "client" per member: stars of every size |members|..2, the size-k
    /// star rooted at the k-th member in natural order.
    void add_region(const std::string &id, std::vector<RouterId> members, int copies = 1);
    /// A single star resource with the given root and leaf routers.
    const Resource &add_resource(const std::string &region, const RouterId &root,
                                 const std::vector<RouterId> &leaves, std::string id = "");
    /// Loss of a router: every live resource touching it is traced out.
    void fail_router(const RouterId &r);

    bool has_router(const RouterId &r) const {
        return routers_.count(r) > 0;
    }
    bool is_down(const RouterId &r) const {
        return down_.count(r) > 0;
    }
    const RouterSet &routers() const {
        return routers_;
    }
    const std::string &network_of(const RouterId &r) const;
    const std::vector<Region> &regions() const {
        return regions_;
    }
    const Region &region(const std::string &id) const;
    const std::vector<Resource> &resources() const {
        return resources_;
    }
    Resource &resource(const std::string &id);
    std::size_t live_resources() const;

    GraphState &backing() {
        return backing_;
    }
    const GraphState &backing() const {
        return backing_;
    }
    QubitId fresh_qubit(const RouterId &r);

  private:
    RouterSet routers_;
    std::map<RouterId, std::string, NaturalLess> network_;
    RouterSet down_;
    std::vector<Region> regions_;
    std::vector<Resource> resources_;
    GraphState backing_;
    std::map<RouterId, std::uint32_t> next_index_;
};

/// Edge of the classical routing graph. `region` is empty for the
/// zero-cost edges joining a router to its ports in the per-qubit form.
struct RouteEdge {
    std::string u;
    std::string v;
    double cost = 1.0;
    std::string region;

    friend bool operator==(const RouteEdge &, const RouteEdge &) = default;
};

struct RoutingGraph {
    std::vector<std::string> vertices;
    std::vector<RouteEdge> edges;

    bool has_vertex(const std::string &v) const;
};

using CostFunction = std::function<double(const Region &, const RouterId &, const RouterId &)>;

double unit_cost(const Region &, const RouterId &, const RouterId &);

enum class Collapse { fused, per_qubit };

/// fused: one vertex per live router, one edge per router pair and region
/// with a live resource holding both. per_qubit: one vertex per
/// (router, region) port plus a hub per router tied to its ports at zero
/// cost; ports are named "router@region".
RoutingGraph collapse_to_graph(const RegionTopology &t, const CostFunction &cost = unit_cost,
                               Collapse mode = Collapse::fused);

struct PathResult {
    std::string nearest;
    std::vector<std::string> path;
    std::vector<RouteEdge> edges;
    double dist = 0;
};

/// Cheapest path from a to any member of targets. Ties: smallest target
/// id, then lexicographically smallest vertex sequence.
PathResult dijkstra(const RoutingGraph &g, const std::string &a, const RouterSet &targets);

struct SteinerTree {
    RouterSet vertices;
    std::vector<RouteEdge> edges;
    std::string root;
    RouterSet terminals;

    double cost() const;
    int degree(const std::string &v) const;
    /// Connected, acyclic and spanning its terminals.
    bool is_valid() const;
};

/// Greedy accretion: start from {x}, repeatedly attach the terminal nearest
/// to the current tree along its cheapest path.
SteinerTree steiner(const RoutingGraph &g, const RouterSet &terminals, const std::string &x);

/// Builds a GHZ over `targets` rooted at tree.root, consuming one region
/// resource per tree edge. Appends the consumed resource ids.
net::GhzInstance tree_to_ghz(RegionTopology &t, const SteinerTree &tree, const RouterSet &targets,
                             OutcomeSource &src, std::vector<std::string> &consumed);

struct RoutingStep {
    int step = 0;
    RouterId root;
    std::vector<RouteEdge> tree_edges;
    std::vector<std::string> consumed;
};

struct RoutingResult {
    /// Sizes |S|, |S|-1, ..., 2.
    std::vector<net::GhzInstance> virtual_state;
    std::vector<std::string> consumed;
    std::vector<RoutingStep> steps;
};

struct RoutingOptions {
    CostFunction cost = unit_cost;
    Collapse collapse = Collapse::fused;
    /// Picks the next root from the remaining set; smallest id by default.
    std::function<RouterId(const RouterSet &)> select;
};

RoutingResult region_routing(RegionTopology &t, const RouterSet &requested, OutcomeSource &src,
                             const RoutingOptions &options = {});

/// `step=<k> root=<id> tree_edges=[u-v,...] consumed=[...]`
std::string format_step(const RoutingStep &s);

// Hierarchical regions -----------------------------------------------------

struct HierRegion {
    std::string id;
    int level = 0;
    std::vector<RouterId> members;
    std::optional<std::size_t> parent;

    /// The member that represents this region one level up.
    const RouterId &designated() const {
        return members.front();
    }
};

struct Placement {
    std::string region;
    int level = 0;
    std::vector<std::string> created;
};

class RegionHierarchy;

/// A new router joins the first bottom-level region (in breadth-first
/// order) with room; otherwise it opens a new region, which is linked
/// upward through its designated router, adding a level when needed.
Placement hierarchy_insert(RegionHierarchy &h, const RouterId &r);

class RegionHierarchy {
  public:
    explicit RegionHierarchy(int m_max);

    int m_max() const {
        return m_max_;
    }
    const std::vector<HierRegion> &regions() const {
        return regions_;
    }
    /// Number of levels (1 for a single region, 0 when empty).
    int levels() const;
    std::size_t router_count() const {
        return routers_;
    }

  private:
    friend Placement hierarchy_insert(RegionHierarchy &h, const RouterId &r);
    int m_max_;
    std::vector<HierRegion> regions_;
    std::size_t routers_ = 0;
};

// Reliable regions -----------------------------------------------------------

struct RegionAssignments {
    std::uint64_t count = 0;
    /// One router per region, in Cartesian-product order; the first entry
    /// (first router of every region) is the regular operating choice.
    std::vector<std::vector<RouterId>> assignments;
};

RegionAssignments symmetrize_region_state(const std::vector<std::vector<RouterId>> &regions,
                                          int ghz_size);
/// Assignments that avoid a failed router.
std::vector<std::vector<RouterId>> surviving_assignments(const RegionAssignments &a,
                                                         const RouterId &failed);

}  // namespace qnet::routing
