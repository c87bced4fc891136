#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "qnet/graph_state.hpp"
#include "qnet/oracle.hpp"

namespace qnet::testing {

inline QubitId q(const std::string &device, std::uint32_t index = 0) {
    return QubitId{device, index};
}

inline std::vector<QubitId> labels(const std::string &prefix, int n) {
    std::vector<QubitId> out;
    for (int i = 0; i < n; ++i) out.push_back(q(prefix + std::to_string(i)));
    return out;
}

/// Random simple graph with each edge present with probability 1/2, and a
/// random local Clifford frame when `random_frame` is set. The frame is
/// applied as physical gates, so the trace stays replayable.
inline GraphState random_graph(std::mt19937_64 &rng, int n, bool random_frame) {
    auto vs = labels("v", n);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng() & 1) edges.emplace_back(vs[i], vs[j]);
        }
    }
    GraphState g;
    g.prepare(vs, edges);
    if (random_frame) {
        for (const auto &v : vs) {
            auto c = LocalClifford::from_index(static_cast<int>(rng() % LocalClifford::kCount));
            g.apply_gate(v, c);
        }
    }
    return g;
}

/// Physical state of g projected by a single-qubit measurement, computed
/// directly on amplitudes.
inline oracle::StateVector expected_after_measure(const GraphState &before, const QubitId &a,
                                                  Pauli basis, int bit) {
    return oracle::measure_projective(oracle::physical_state(before), a, basis, bit).state;
}

inline bool same_physical(const GraphState &g, const oracle::StateVector &sv) {
    return oracle::equal_up_to_phase(oracle::physical_state(g), sv, oracle::kEqualTol);
}

/// True if g is one star-shaped component (a single edge counts).
inline bool is_star(const GraphState &g) {
    if (g.size() < 2) return false;
    auto c = g.star_center(g.vertices().front());
    return c.has_value() && g.component(*c).size() == g.size();
}

/// Physical state rebuilt from g's trace, with g's local frame undone. For a
/// faithful GraphState this is the bare graph state of its edges.
inline oracle::StateVector stripped_state(const GraphState &g) {
    auto rs = oracle::replay(g.trace());
    oracle::StateVector sv;
    for (const auto &f : rs.factors) sv = oracle::tensor(sv, f);
    for (const auto &v : g.vertices()) oracle::apply_single(sv, v, g.byproduct(v).inverse().matrix());
    return sv.sorted();
}

/// Renames every label of sv through `names` (all at once, so swaps work).
inline oracle::StateVector renamed(oracle::StateVector sv, const std::map<QubitId, QubitId> &names) {
    std::vector<QubitId> out;
    for (const auto &l : sv.labels()) out.push_back(names.at(l));
    return oracle::StateVector(out, sv.amplitudes()).sorted();
}

}  // namespace qnet::testing
