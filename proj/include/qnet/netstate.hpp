#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qnet/graph_state.hpp"

namespace qnet::net {

/// Client counts c_1..c_m; device i (1-based role) roots the GHZ_i copies.
struct NetworkSpec {
    std::vector<int> clients;
    /// Device names by role; defaults to d1..dm.
    std::vector<DeviceId> devices;
    /// First qubit index used on every device.
    std::uint32_t index_base = 0;

    int m() const {
        return static_cast<int>(clients.size());
    }
    DeviceId device(int role) const;
    int role_of(const DeviceId &d) const;

    static NetworkSpec uniform(int m, int c);
};

enum class Layout { plain, shielded };
enum class Symmetrization { none, cyclic, full };
enum class InstanceStatus { intact, destroyed, consumed, pending };

std::string_view to_string(InstanceStatus s);

struct Member {
    DeviceId device;
    QubitId qubit;

    friend bool operator==(const Member &, const Member &) = default;
};

struct GhzInstance {
    std::string id;
    Member root;
    std::vector<Member> leaves;
    /// Shield qubit per leaf qubit, held by the root's device.
    std::map<QubitId, Member> shields;
    InstanceStatus status = InstanceStatus::intact;
    /// Bundle (one copy of the full GHZ set) and configuration it belongs to.
    int copy = 0;
    int config = 0;
    /// Size when built; the role of the root in its configuration.
    int built_size = 0;

    int size() const {
        return 1 + static_cast<int>(leaves.size());
    }
    bool touches(const DeviceId &d) const;
    std::vector<QubitId> qubits() const;
};

struct NetworkState {
    NetworkSpec spec;
    Layout layout = Layout::plain;
    Symmetrization symmetrization = Symmetrization::none;
    /// configs[k][role-1] = device; a single identity entry when unsymmetrized.
    std::vector<std::vector<DeviceId>> configs;
    std::vector<GhzInstance> instances;
    GraphState backing;
    std::set<DeviceId> failed;
    std::set<DeviceId> departed;
    std::map<DeviceId, std::uint32_t> next_index;
    bool expanded = false;
    /// Shared graph the state was moved into; null while it owns `backing`.
    GraphState *world = nullptr;

    GraphState &graph() {
        return world ? *world : backing;
    }
    const GraphState &graph() const {
        return world ? *world : backing;
    }
    /// Moves the qubits into `shared`; later operations act on it.
    void attach(GraphState &shared);
    QubitId fresh_qubit(const DeviceId &d);
    bool has_device(const DeviceId &d) const;
    std::vector<const GhzInstance *> intact() const;
    GhzInstance &instance(const std::string &id);
};

struct CostReport {
    std::int64_t mm = 0;
    std::int64_t ms = 0;
    std::int64_t mb = 0;
};

/// Builds one bundle: role i roots c_i copies of GHZ_i in the given layout.
NetworkState build_network_state(const NetworkSpec &spec, Layout layout);
/// n_copies bundles spread round-robin over the cyclic shifts (or all
/// permutations) of the role -> device assignment.
NetworkState symmetrize(const NetworkSpec &spec, int n_copies,
                        Symmetrization mode = Symmetrization::cyclic);

/// Graceful departure: leaves are measured out, rooted stars re-rooted.
void device_leave(NetworkState &state, const DeviceId &d, OutcomeSource &src);
/// Unannounced loss of every qubit of d.
void device_fail(NetworkState &state, const DeviceId &d);
/// Shield-based recovery after device_fail in the shielded layout.
void recover_shielded(NetworkState &state, const DeviceId &failed, OutcomeSource &src);

/// Number of bundles still forming a complete network state over the
/// surviving devices.
int intact_full_copies(const NetworkState &state);

/// Expands every copy rooted at device i to cover all clients of devices
/// 1..i-1 (plain layout).
void expand_to_clients(NetworkState &state, OutcomeSource &src);

/// Reduces a plain star to one qubit on each device in `keep` by Z
/// measurements of the other leaves (and an X measurement of the root when
/// its device is dropped). Marks `inst` consumed and returns the remnant.
GhzInstance shape_instance(GraphState &g, GhzInstance &inst, const std::set<DeviceId, NaturalLess> &keep,
                           OutcomeSource &src);

CostReport cost_report(const NetworkSpec &spec);
std::string format_cost_row(int c, int m, const CostReport &r);

}  // namespace qnet::net
