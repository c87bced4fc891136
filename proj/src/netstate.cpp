#include "qnet/netstate.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace qnet::net {

DeviceId NetworkSpec::device(int role) const {
    if (role < 1 || role > m()) {
        throw Error(ErrorCode::invalid_spec, fmt::format("no device with role {}", role));
    }
    if (!devices.empty()) return devices[static_cast<std::size_t>(role - 1)];
    return fmt::format("d{}", role);
}

int NetworkSpec::role_of(const DeviceId &d) const {
    for (int r = 1; r <= m(); ++r) {
        if (device(r) == d) return r;
    }
    throw Error(ErrorCode::unknown_device, "no device " + d);
}

NetworkSpec NetworkSpec::uniform(int m, int c) {
    NetworkSpec s;
    s.clients.assign(static_cast<std::size_t>(std::max(m, 0)), c);
    return s;
}

std::string_view to_string(InstanceStatus s) {
    switch (s) {
        case InstanceStatus::intact: return "intact";
        case InstanceStatus::destroyed: return "destroyed";
        case InstanceStatus::consumed: return "consumed";
        case InstanceStatus::pending: return "pending";
    }
    return "?";
}

bool GhzInstance::touches(const DeviceId &d) const {
    if (root.device == d) return true;
    for (const auto &l : leaves) {
        if (l.device == d) return true;
    }
    return false;
}

std::vector<QubitId> GhzInstance::qubits() const {
    std::vector<QubitId> out{root.qubit};
    for (const auto &l : leaves) out.push_back(l.qubit);
    for (const auto &[_, s] : shields) out.push_back(s.qubit);
    return out;
}

QubitId NetworkState::fresh_qubit(const DeviceId &d) {
    auto it = next_index.try_emplace(d, spec.index_base).first;
    return QubitId{d, it->second++};
}

void NetworkState::attach(GraphState &shared) {
    if (world) throw Error(ErrorCode::invalid_argument, "network state already attached");
    shared.absorb(backing);
    backing = GraphState{};
    world = &shared;
}

bool NetworkState::has_device(const DeviceId &d) const {
    for (int r = 1; r <= spec.m(); ++r) {
        if (spec.device(r) == d) return true;
    }
    return false;
}

std::vector<const GhzInstance *> NetworkState::intact() const {
    std::vector<const GhzInstance *> out;
    for (const auto &inst : instances) {
        if (inst.status == InstanceStatus::intact) out.push_back(&inst);
    }
    return out;
}

GhzInstance &NetworkState::instance(const std::string &id) {
    for (auto &inst : instances) {
        if (inst.id == id) return inst;
    }
    throw Error(ErrorCode::not_found, "no instance " + id);
}

namespace {

void validate(const NetworkSpec &spec) {
    if (spec.m() < 2) {
        throw Error(ErrorCode::invalid_spec, "a network needs at least two devices");
    }
    if (!spec.devices.empty() && static_cast<int>(spec.devices.size()) != spec.m()) {
        throw Error(ErrorCode::invalid_spec, "device names do not match the client list");
    }
    for (int c : spec.clients) {
        if (c < 0) throw Error(ErrorCode::invalid_spec, "negative client count");
    }
    std::set<DeviceId, NaturalLess> names;
    for (int r = 1; r <= spec.m(); ++r) {
        if (!names.insert(spec.device(r)).second) {
            throw Error(ErrorCode::invalid_spec, "duplicate device " + spec.device(r));
        }
    }
}

// Adds one bundle for one configuration.
void add_bundle(NetworkState &state, int copy, int config) {
    const auto &roles = state.configs[static_cast<std::size_t>(config)];
    for (int size = state.spec.m(); size >= 2; --size) {
        int count = state.spec.clients[static_cast<std::size_t>(size - 1)];
        for (int k = 0; k < count; ++k) {
            GhzInstance inst;
            inst.id = fmt::format("b{}.g{}.{}", copy, size, k);
            inst.copy = copy;
            inst.config = config;
            inst.built_size = size;
            const DeviceId &root_dev = roles[static_cast<std::size_t>(size - 1)];
            inst.root = {root_dev, state.fresh_qubit(root_dev)};
            for (int r = 1; r < size; ++r) {
                const DeviceId &dev = roles[static_cast<std::size_t>(r - 1)];
                inst.leaves.push_back({dev, state.fresh_qubit(dev)});
            }
            bool shield = state.layout == Layout::shielded && size >= 3;
            std::vector<QubitId> vertices{inst.root.qubit};
            std::vector<Edge> edges;
            for (const auto &l : inst.leaves) {
                vertices.push_back(l.qubit);
                if (shield) {
                    Member s{root_dev, state.fresh_qubit(root_dev)};
                    vertices.push_back(s.qubit);
                    edges.emplace_back(inst.root.qubit, s.qubit);
                    edges.emplace_back(s.qubit, l.qubit);
                    inst.shields.emplace(l.qubit, s);
                } else {
                    edges.emplace_back(inst.root.qubit, l.qubit);
                }
            }
            state.graph().prepare(vertices, edges);
            state.instances.push_back(std::move(inst));
        }
    }
}

std::vector<DeviceId> identity_roles(const NetworkSpec &spec) {
    std::vector<DeviceId> roles;
    for (int r = 1; r <= spec.m(); ++r) roles.push_back(spec.device(r));
    return roles;
}

void require_device(const NetworkState &state, const DeviceId &d) {
    if (!state.has_device(d)) throw Error(ErrorCode::unknown_device, "no device " + d);
    if (state.failed.count(d) || state.departed.count(d)) {
        throw Error(ErrorCode::device_down, d + " is no longer part of the network");
    }
}

void remove_leaf(GhzInstance &inst, const QubitId &q) {
    auto it = std::find_if(inst.leaves.begin(), inst.leaves.end(),
                           [&](const Member &m) { return m.qubit == q; });
    inst.leaves.erase(it);
    inst.shields.erase(q);
}

// A Bell pair needs no decoration: wire its remaining shield through.
void unshield_bell(NetworkState &state, GhzInstance &inst, OutcomeSource &src) {
    if (inst.size() == 2 && !inst.shields.empty()) {
        for (const auto &[_, s] : inst.shields) state.graph().measure_frame(s.qubit, Pauli::Y, src);
        inst.shields.clear();
    }
}

}  // namespace

NetworkState build_network_state(const NetworkSpec &spec, Layout layout) {
    validate(spec);
    NetworkState state;
    state.spec = spec;
    state.layout = layout;
    state.configs.push_back(identity_roles(spec));
    add_bundle(state, 0, 0);
    return state;
}

NetworkState symmetrize(const NetworkSpec &spec, int n_copies, Symmetrization mode) {
    validate(spec);
    if (n_copies < 1) throw Error(ErrorCode::invalid_spec, "need at least one copy");
    NetworkState state;
    state.spec = spec;
    state.layout = Layout::plain;
    state.symmetrization = mode == Symmetrization::none ? Symmetrization::cyclic : mode;
    auto base = identity_roles(spec);
    const int m = spec.m();
    if (state.symmetrization == Symmetrization::cyclic) {
        // Configuration k maps role j to device ((j - 1 + k) mod m) + 1.
        for (int k = 0; k < m; ++k) {
            std::vector<DeviceId> roles;
            for (int j = 1; j <= m; ++j) roles.push_back(base[static_cast<std::size_t>((j - 1 + k) % m)]);
            state.configs.push_back(roles);
        }
    } else {
        std::vector<int> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<DeviceId> roles;
            for (int p : perm) roles.push_back(base[static_cast<std::size_t>(p)]);
            state.configs.push_back(roles);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    for (int copy = 0; copy < n_copies; ++copy) {
        add_bundle(state, copy, copy % static_cast<int>(state.configs.size()));
    }
    return state;
}

void device_leave(NetworkState &state, const DeviceId &d, OutcomeSource &src) {
    require_device(state, d);
    auto &g = state.graph();
    std::vector<std::string> dropped;
    for (auto &inst : state.instances) {
        if (inst.status != InstanceStatus::intact || !inst.touches(d)) continue;

        if (inst.root.device == d) {
            for (const auto &[_, s] : inst.shields) g.measure_frame(s.qubit, Pauli::Y, src);
            inst.shields.clear();
            auto b0 = std::min_element(inst.leaves.begin(), inst.leaves.end(),
                                       [](const Member &a, const Member &b) { return a.qubit < b.qubit; });
            Member new_root = *b0;
            g.measure_frame(inst.root.qubit, Pauli::X, src, new_root.qubit);
            remove_leaf(inst, new_root.qubit);
            inst.root = new_root;
        }
        std::vector<QubitId> mine;
        for (const auto &l : inst.leaves) {
            if (l.device == d) mine.push_back(l.qubit);
        }
        for (const auto &leaf : mine) {
            if (auto it = inst.shields.find(leaf); it != inst.shields.end()) {
                // The root's device cuts the leaf off; what remains of it is
                // a product state the leaving device simply drops.
                g.measure_frame(it->second.qubit, Pauli::Z, src);
                g.discard(leaf);
            } else {
                g.measure_frame(leaf, Pauli::Z, src);
            }
            remove_leaf(inst, leaf);
        }
        unshield_bell(state, inst, src);
        if (inst.size() == 1) {
            g.discard(inst.root.qubit);
            dropped.push_back(inst.id);
        }
    }
    std::erase_if(state.instances, [&](const GhzInstance &inst) {
        return std::find(dropped.begin(), dropped.end(), inst.id) != dropped.end();
    });
    state.departed.insert(d);
}

void device_fail(NetworkState &state, const DeviceId &d) {
    require_device(state, d);
    state.failed.insert(d);
    for (auto &inst : state.instances) {
        if (inst.status != InstanceStatus::intact || !inst.touches(d)) continue;
        if (state.layout == Layout::shielded) {
            inst.status = InstanceStatus::pending;
        } else {
            inst.status = InstanceStatus::destroyed;
            state.graph().trace_out(inst.qubits());
        }
    }
}

void recover_shielded(NetworkState &state, const DeviceId &failed, OutcomeSource &src) {
    if (state.layout != Layout::shielded) {
        throw Error(ErrorCode::not_shielded, "recovery needs the shielded layout");
    }
    if (!state.has_device(failed)) throw Error(ErrorCode::unknown_device, "no device " + failed);
    auto &g = state.graph();
    for (auto &inst : state.instances) {
        if (inst.status != InstanceStatus::pending || !inst.touches(failed)) continue;
        std::vector<QubitId> lost;
        bool destroyed = inst.root.device == failed;
        for (const auto &l : inst.leaves) {
            if (l.device != failed) continue;
            if (!inst.shields.count(l.qubit)) destroyed = true;
            lost.push_back(l.qubit);
        }
        if (destroyed) {
            inst.status = InstanceStatus::destroyed;
            g.trace_out(inst.qubits());
            continue;
        }
        for (const auto &leaf : lost) {
            // Tracing out the leaf commutes with Z on its shield, which
            // decouples it from the rest of the star.
            g.measure_frame(inst.shields.at(leaf).qubit, Pauli::Z, src);
            g.trace_out({leaf});
            remove_leaf(inst, leaf);
        }
        unshield_bell(state, inst, src);
        inst.status = InstanceStatus::intact;
    }
}

int intact_full_copies(const NetworkState &state) {
    std::vector<DeviceId> survivors;
    for (int r = 1; r <= state.spec.m(); ++r) {
        auto d = state.spec.device(r);
        if (!state.failed.count(d) && !state.departed.count(d)) survivors.push_back(d);
    }
    const int m2 = static_cast<int>(survivors.size());
    std::map<int, std::vector<const GhzInstance *>> by_copy;
    int copies = 0;
    for (const auto &inst : state.instances) {
        copies = std::max(copies, inst.copy + 1);
        if (inst.status == InstanceStatus::intact) by_copy[inst.copy].push_back(&inst);
    }
    int full = 0;
    for (int copy = 0; copy < copies; ++copy) {
        // Reconstruct a role order from the roots: the size-s star must be
        // rooted at role s and have its leaves on roles 1..s-1.
        std::map<int, std::set<DeviceId>> roots_by_size;
        for (const auto *inst : by_copy[copy]) roots_by_size[inst->size()].insert(inst->root.device);
        bool ok = true;
        std::vector<DeviceId> order(static_cast<std::size_t>(std::max(m2, 0)));
        std::set<DeviceId> placed;
        for (int s = 2; s <= m2 && ok; ++s) {
            auto it = roots_by_size.find(s);
            if (it == roots_by_size.end() || it->second.size() != 1) {
                ok = false;
                break;
            }
            order[static_cast<std::size_t>(s - 1)] = *it->second.begin();
            ok = placed.insert(*it->second.begin()).second;
        }
        if (!ok) continue;
        for (const auto &d : survivors) {
            if (!placed.count(d)) order[0] = d;
        }
        for (const auto *inst : by_copy[copy]) {
            int s = inst->size();
            if (s > m2) {
                ok = false;
                break;
            }
            std::set<DeviceId> leaves;
            for (const auto &l : inst->leaves) leaves.insert(l.device);
            std::set<DeviceId> want(order.begin(), order.begin() + (s - 1));
            if (leaves != want || static_cast<int>(inst->leaves.size()) != s - 1) ok = false;
        }
        if (ok) ++full;
    }
    return full;
}

void expand_to_clients(NetworkState &state, OutcomeSource &src) {
    if (state.layout != Layout::plain) {
        throw Error(ErrorCode::invalid_spec, "expansion is defined for the plain layout");
    }
    auto &g = state.graph();
    for (auto &inst : state.instances) {
        if (inst.status != InstanceStatus::intact) continue;
        const auto &roles = state.configs[static_cast<std::size_t>(inst.config)];
        std::vector<Member> leaves = inst.leaves;
        std::vector<Member> expanded;
        for (const auto &leaf : leaves) {
            auto role_it = std::find(roles.begin(), roles.end(), leaf.device);
            int role = static_cast<int>(role_it - roles.begin()) + 1;
            int c = state.spec.clients[static_cast<std::size_t>(role - 1)];
            if (c == 0) {
                g.measure_frame(leaf.qubit, Pauli::Z, src);
            } else if (c == 1) {
                expanded.push_back(leaf);
            } else {
                // Local GHZ_{c+1}; its center is fused with the leaf.
                std::vector<QubitId> local;
                for (int k = 0; k <= c; ++k) local.push_back(state.fresh_qubit(leaf.device));
                g.prepare_star(local);
                g.bell_merge(leaf.qubit, local[0], src, inst.root.qubit);
                for (int k = 1; k <= c; ++k) expanded.push_back({leaf.device, local[static_cast<std::size_t>(k)]});
            }
        }
        // A root left without leaves stays as a lone qubit; the storage
        // count charges it like any other root.
        inst.leaves = expanded;
    }
    state.expanded = true;
}

GhzInstance shape_instance(GraphState &g, GhzInstance &inst, const std::set<DeviceId, NaturalLess> &keep,
                           OutcomeSource &src) {
    if (!inst.shields.empty()) throw Error(ErrorCode::unsupported_shape, "cannot shape a shielded star");
    if (inst.status != InstanceStatus::intact) throw Error(ErrorCode::invalid_argument, inst.id + " is not intact");
    GhzInstance out = inst;
    out.leaves.clear();
    for (const auto &l : inst.leaves) {
        if (keep.count(l.device)) {
            out.leaves.push_back(l);
        } else {
            g.measure_frame(l.qubit, Pauli::Z, src);
        }
    }
    if (!keep.count(inst.root.device)) {
        if (out.leaves.empty()) throw Error(ErrorCode::invalid_argument, inst.id + " keeps no qubit");
        auto b0 = out.leaves.front();
        g.measure_frame(inst.root.qubit, Pauli::X, src, b0.qubit);
        out.root = b0;
        out.leaves.erase(out.leaves.begin());
    }
    if (!out.leaves.empty()) g.normalize_star(out.root.qubit);
    inst.status = InstanceStatus::consumed;
    return out;
}

CostReport cost_report(const NetworkSpec &spec) {
    if (spec.m() < 2) throw Error(ErrorCode::invalid_spec, "a network needs at least two devices");
    CostReport r;
    const int m = spec.m();
    auto c = [&](int i) { return static_cast<std::int64_t>(spec.clients[static_cast<std::size_t>(i - 1)]); };
    std::int64_t prefix = c(1);
    for (int i = 2; i <= m; ++i) {
        r.mm += c(i) * (1 + prefix);
        prefix += c(i);
    }
    r.ms = r.mm;
    for (int i = 3; i <= m; ++i) r.ms += c(i) * (i - 1);
    for (int i = 1; i < m; ++i) {
        for (int j = i + 1; j <= m; ++j) r.mb += 2 * c(i) * c(j);
    }
    return r;
}

std::string format_cost_row(int c, int m, const CostReport &r) {
    return fmt::format("c={} m={} MB={} MS={} MM={}", c, m, r.mb, r.ms, r.mm);
}

}  // namespace qnet::net
