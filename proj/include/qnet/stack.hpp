#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qnet/graph_state.hpp"
#include "qnet/netstate.hpp"
#include "qnet/oracle.hpp"
#include "qnet/routing.hpp"

namespace qnet::stack {

using ClientId = std::string;
using TargetEdges = std::vector<std::pair<ClientId, ClientId>>;

enum class Role { repeater, switch_device, router, client };

std::string_view to_string(Role r);
/// Highest stack layer a device of this role operates on.
int top_layer(Role r);

struct Device {
    DeviceId id;
    Role role = Role::switch_device;
    int layer = 3;
    std::string network;
    bool alive = true;
    std::set<QubitId> holdings;
};

// Scenario description ------------------------------------------------------

struct NetworkDef {
    std::string id;
    /// Devices by role (role 1 first); client counts per role.
    std::vector<DeviceId> devices;
    std::vector<int> clients;
    DeviceId router;
    std::vector<DeviceId> repeaters;
    net::Layout layout = net::Layout::plain;
    /// Number of cyclically symmetrized bundles; 0 keeps a single bundle.
    int symmetrized = 0;

    friend bool operator==(const NetworkDef &, const NetworkDef &) = default;
};

struct ClientDef {
    ClientId id;
    DeviceId device;

    friend bool operator==(const ClientDef &, const ClientDef &) = default;
};

struct RegionDef {
    std::string id;
    std::vector<DeviceId> members;
    int copies = 1;

    friend bool operator==(const RegionDef &, const RegionDef &) = default;
};

struct RequestDef {
    std::string id;
    /// Name echoed in reports (e.g. "cluster4").
    std::string target;
    TargetEdges edges;
    int copies = 1;
    std::int64_t at = 0;

    friend bool operator==(const RequestDef &, const RequestDef &) = default;
};

struct FailureDef {
    DeviceId device;
    std::int64_t at = 0;

    friend bool operator==(const FailureDef &, const FailureDef &) = default;
};

/// Reachability check on the GHZ_size ensemble of a network.
struct CheckDef {
    std::string id;
    std::string network;
    int size = 2;
    int budget = 1;
    /// Device whose qubits are lost before the check; empty for none.
    DeviceId lost;

    friend bool operator==(const CheckDef &, const CheckDef &) = default;
};

struct Scenario {
    std::string name;
    std::optional<std::uint64_t> seed;
    std::vector<NetworkDef> networks;
    std::vector<ClientDef> clients;
    std::vector<RegionDef> regions;
    std::vector<RequestDef> requests;
    std::vector<FailureDef> failures;
    std::vector<CheckDef> checks;
    /// Routers to join by the `route` command; requests' routers otherwise.
    std::vector<DeviceId> route;
    /// Routers are also placed into a region hierarchy when > 0.
    int m_max = 0;
    std::vector<int> cost_c;
    std::vector<int> cost_m;

    friend bool operator==(const Scenario &, const Scenario &) = default;
};

/// Referential integrity: unique ids, known devices, clients on switches.
void validate(const Scenario &s);

// Events ---------------------------------------------------------------------

enum class EventKind { entanglement_ready, ping, ping_reply, failure_detected, request, request_complete };

std::string_view to_string(EventKind k);

struct LayerEvent {
    EventKind kind = EventKind::request;
    std::string payload;
    std::int64_t timestamp = 0;
};

std::string format_event(const LayerEvent &e);

// Resource ledger --------------------------------------------------------------

/// Counts entangled resources and audits the adaptive phase: every quantum
/// operation recorded after provisioning must act on a single device,
/// except teleportation onto a client of the acting switch.
struct ResourceLedger {
    std::int64_t provisioned = 0;
    std::int64_t consumed = 0;
    std::int64_t destroyed = 0;
    /// Multi-device preparations or gates seen during the adaptive phase.
    std::int64_t created_adaptive = 0;
    std::int64_t teleports = 0;
    std::vector<std::string> violations;
    /// Trace position where the adaptive phase began.
    std::size_t adaptive_from = 0;
};

// Linking ----------------------------------------------------------------------

struct LinkResult {
    std::map<ClientId, QubitId, NaturalLess> vertex;
    /// Pool positions consumed, in order.
    std::vector<std::size_t> used;
};

/// Builds the target graph over clients placed on devices: every client gets
/// a fresh qubit on its device, same-device edges are CZ gates, and each
/// cross-device edge consumes one pooled GHZ shaped into a wire, joined by
/// CZ gates and Y measurements of the wire ends. Wires are matched to
/// edges so that every edge gets one whenever the pool allows it, preferring
/// smaller entries.
LinkResult linking_protocol(GraphState &g, std::vector<net::GhzInstance *> pool,
                            const std::map<ClientId, DeviceId, NaturalLess> &placement, const TargetEdges &target,
                            const std::function<QubitId(const DeviceId &)> &fresh, OutcomeSource &src);

/// Linking inside one network, drawing wires from its intact instances.
LinkResult linking_protocol(net::NetworkState &ns, const std::map<ClientId, DeviceId, NaturalLess> &placement,
                            const TargetEdges &target, OutcomeSource &src);

// Verification -------------------------------------------------------------------

enum class VerifyVerdict { verified, failed, inconclusive };

std::string_view to_string(VerifyVerdict v);

struct VerifyReport {
    VerifyVerdict verdict = VerifyVerdict::inconclusive;
    /// Sampled eigenvalue bits, 1 meaning -1.
    std::vector<int> samples;
    std::vector<std::string> consumed;
};

/// Samples the root correlation operator on `budget` copies of the ensemble
/// (the root operator is the one generator touching every member). The
/// members on `lost` devices are replaced by maximally mixed qubits. Needs
/// at least budget + 1 copies.
VerifyReport verify_state(GraphState &g, const std::vector<net::GhzInstance *> &ensemble, int budget,
                          const std::set<DeviceId> &lost, std::mt19937_64 &rng);

// Simulator ----------------------------------------------------------------------

struct FulfillReport {
    std::string request;
    std::string target;
    std::map<ClientId, QubitId, NaturalLess> vertex;
    TargetEdges edges;
    std::vector<std::string> consumed;
    std::vector<routing::RoutingStep> routing;
    /// Sizes of the virtual network state per routing run.
    std::vector<int> virtual_sizes;
    oracle::Certificate oracle;
};

struct DrillRow {
    std::string network;
    DeviceId failed;
    int intact_full_copies = 0;
    int guarantee = 0;
    std::map<std::string, int> status_counts;
};

/// One scenario run: devices, the shared state of every network and region,
/// a logical clock and the event trace.
class Simulator {
  public:
    explicit Simulator(Scenario s);

    const Scenario &scenario() const {
        return scenario_;
    }
    const std::map<DeviceId, Device, NaturalLess> &devices() const {
        return devices_;
    }
    const Device &device(const DeviceId &d) const;
    const std::vector<LayerEvent> &events() const {
        return events_;
    }
    const ResourceLedger &ledger() const {
        return ledger_;
    }
    GraphState &world();
    const GraphState &world() const;
    routing::RegionTopology &topology() {
        return *topology_;
    }
    net::NetworkState &network(const std::string &id);
    const std::map<std::string, net::NetworkState, NaturalLess> &networks() const {
        return networks_;
    }
    int epoch() const {
        return epoch_;
    }

    /// Dynamic phase: (re)builds every network and region state from scratch.
    void provision_dynamic();
    /// Adaptive phase request pipeline.
    FulfillReport fulfill_request(const RequestDef &req);
    bool ping_classical(const DeviceId &from, const DeviceId &to);
    /// Unannounced device loss followed by monitoring and recovery.
    void fail_device(const DeviceId &d);
    VerifyReport verify(const CheckDef &check);
    /// Scheduled failures and requests in logical-time order.
    std::vector<FulfillReport> run();

    /// Recomputes the ledger audit over the adaptive part of the trace.
    const ResourceLedger &audit();
    /// Number of live entangled instances in networks and regions.
    std::int64_t live_instances() const;

  private:
    void emit(EventKind kind, std::string payload, std::int64_t at = 0);
    void monitor(const DeviceId &failed);
    std::vector<net::GhzInstance> expand_virtual(const net::GhzInstance &v,
                                                 const std::map<DeviceId, std::set<DeviceId, NaturalLess>,
                                                                NaturalLess> &wanted,
                                                 std::vector<std::string> &consumed, int serial);
    std::set<DeviceId, NaturalLess> classical_neighbors(const DeviceId &d) const;

    Scenario scenario_;
    std::map<DeviceId, Device, NaturalLess> devices_;
    std::unique_ptr<routing::RegionTopology> topology_;
    std::map<std::string, net::NetworkState, NaturalLess> networks_;
    std::vector<LayerEvent> events_;
    std::int64_t clock_ = 0;
    /// Earliest timestamp for the next event (the scheduled time being run).
    std::int64_t floor_ = 0;
    ResourceLedger ledger_;
    OutcomeSource src_;
    int epoch_ = 0;
    int virtual_serial_ = 0;
    int checks_run_ = 0;
    std::set<DeviceId> recovered_;
};

/// Fails each device of the network in turn on a fresh copy of its state
/// (recovering shielded states) and reports the intact full copies.
std::vector<DrillRow> drill(const NetworkDef &n, std::uint64_t seed);

net::NetworkSpec spec_of(const NetworkDef &n);

}  // namespace qnet::stack
