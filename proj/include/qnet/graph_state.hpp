#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qnet/clifford.hpp"
#include "qnet/common.hpp"

namespace qnet {

/// Supplies measurement outcome bits. Fixed mode replays a bit pattern
/// (cycling), seeded mode draws uniform bits from a 64-bit Mersenne twister.
class OutcomeSource {
  public:
    static OutcomeSource fixed(int bit);
    static OutcomeSource fixed(std::vector<int> bits);
    static OutcomeSource seeded(std::uint64_t seed);

    int next();

    /// Independent seeded stream derived from this source's seed. Fixed
    /// sources return a copy of themselves.
    OutcomeSource split(std::uint64_t stream) const;

    bool is_seeded() const {
        return seeded_;
    }

  private:
    OutcomeSource() = default;

    bool seeded_ = false;
    std::uint64_t seed_ = 0;
    std::vector<int> bits_;
    std::size_t pos_ = 0;
    std::mt19937_64 rng_;
};

using Edge = std::pair<QubitId, QubitId>;

/// Make an unordered pair canonical (smaller id first).
Edge make_edge(QubitId a, QubitId b);

/// Physical operations recorded by a GraphState, in execution order. The
/// trace is what the oracle replays; graph bookkeeping (local
/// complementations, frame updates) never appears in it.
namespace op {

/// Fresh graph state |G> on new qubits.
struct Prepare {
    std::vector<QubitId> vertices;
    std::vector<Edge> edges;
};
struct Gate {
    QubitId qubit;
    LocalClifford gate;
};
struct CZ {
    QubitId a;
    QubitId b;
};
/// Projective measurement of `basis` with eigenvalue (-1)^bit; qubit removed.
struct Measure {
    QubitId qubit;
    Pauli basis = Pauli::Z;
    int bit = 0;
};
/// Bell measurement: CNOT a->b, H on a, Z outcomes s (a) and t (b).
struct Bell {
    QubitId a;
    QubitId b;
    int s = 0;
    int t = 0;
};
/// CNOT a->b then Z measurement of b with outcome t; a is kept.
struct Parity {
    QubitId a;
    QubitId b;
    int t = 0;
};
/// Qubit released while in the product state state|+>.
struct Discard {
    QubitId qubit;
    LocalClifford state;
};
/// Qubits lost without measurement (device failure, destroyed resources).
struct TraceOut {
    std::vector<QubitId> qubits;
};
struct Relabel {
    QubitId from;
    QubitId to;
};

}  // namespace op

using TraceOp = std::variant<op::Prepare, op::Gate, op::CZ, op::Measure, op::Bell, op::Parity,
                             op::Discard, op::TraceOut, op::Relabel>;

std::string describe(const TraceOp &op);

struct OutcomeRecord {
    std::string tag;
    QubitId qubit;
    int bit = 0;

    friend bool operator==(const OutcomeRecord &, const OutcomeRecord &) = default;
};

/// A graph state with a local Clifford frame. The physical state is
/// (prod_v C_v) |G>, where |G> is the +1 eigenstate of every
/// K_a = X_a prod_{b in N(a)} Z_b and C_v is the byproduct of v.
class GraphState {
  public:
    GraphState() = default;

    // Structure ----------------------------------------------------------

    bool contains(const QubitId &q) const {
        return adj_.count(q) != 0;
    }
    std::size_t size() const {
        return adj_.size();
    }
    std::vector<QubitId> vertices() const;
    std::vector<Edge> edges() const;
    const std::set<QubitId> &neighbors(const QubitId &q) const;
    bool has_edge(const QubitId &a, const QubitId &b) const;
    LocalClifford byproduct(const QubitId &q) const;
    const std::map<QubitId, LocalClifford> &byproducts() const {
        return frame_;
    }
    /// Vertices of the connected component containing q, sorted.
    std::vector<QubitId> component(const QubitId &q) const;
    /// Center of a star-shaped component; for a 2-vertex component the
    /// smaller id. Empty if the component is not a star of size >= 2.
    std::optional<QubitId> star_center(const QubitId &q) const;

    const std::vector<OutcomeRecord> &outcome_log() const {
        return log_;
    }
    const std::vector<TraceOp> &trace() const {
        return trace_;
    }

    // Preparation ----------------------------------------------------------

    /// Adds fresh qubits in the graph state of (vertices, edges), frame I.
    void prepare(const std::vector<QubitId> &vertices, const std::vector<Edge> &edges);
    /// Adds a star with vertices[0] as the center.
    void prepare_star(const std::vector<QubitId> &vertices);
    /// Adds a fresh GHZ state (|0..0> + |1..1>)/sqrt(2): a star whose leaves
    /// carry an H in the frame.
    void prepare_ghz(const std::vector<QubitId> &vertices);
    /// Takes ownership of another state on disjoint qubits.
    void absorb(const GraphState &other);

    // Frame-only transformations (physical state unchanged) ------------------

    void local_complement(const QubitId &a);
    /// Rewrites the component of q into a star centered at `center`
    /// (which must be in that component) if it is LC-equivalent to one.
    void normalize_star(const QubitId &center);

    // Physical operations ---------------------------------------------------

    void apply_gate(const QubitId &q, LocalClifford g);
    void apply_cz(const QubitId &a, const QubitId &b);
    /// Measures the physical Pauli `basis`. Returns the outcome bit.
    int measure(const QubitId &a, Pauli basis, OutcomeSource &src,
                std::optional<QubitId> special = std::nullopt);
    /// Measures the observable that acts as `frame_basis` on the underlying
    /// graph state (physical observable C Q C^dagger). Returns the bit of the
    /// graph-frame observable.
    int measure_frame(const QubitId &a, Pauli frame_basis, OutcomeSource &src,
                      std::optional<QubitId> special = std::nullopt);
    /// Bell measurement of a and b; returns (s, t).
    std::pair<int, int> bell_measure(const QubitId &a, const QubitId &b, OutcomeSource &src);
    /// CNOT a->b and Z measurement of b; returns t.
    int parity_measure(const QubitId &a, const QubitId &b, OutcomeSource &src);

    /// Fuses two GHZ-type star components by a Bell measurement of a and b.
    /// The result is normalized to a star centered at `root` if given.
    std::pair<int, int> bell_merge(const QubitId &a, const QubitId &b, OutcomeSource &src,
                                   std::optional<QubitId> root = std::nullopt);
    /// As bell_merge but keeps a; the result has one more qubit.
    int merge_keep(const QubitId &a, const QubitId &b, OutcomeSource &src,
                   std::optional<QubitId> root = std::nullopt);

    /// Removes an isolated qubit (recorded as a discard of a product state).
    void discard(const QubitId &q);
    /// Drops qubits without measuring them. Every qubit in the component of
    /// a dropped qubit must be dropped too, unless the dropped qubit is
    /// isolated.
    void trace_out(const std::vector<QubitId> &qubits);
    void relabel(const QubitId &from, const QubitId &to);

  private:
    void record(TraceOp op);
    void log(const std::string &tag, const QubitId &q, int bit);
    void require(const QubitId &q) const;
    void toggle_edge(const QubitId &a, const QubitId &b);
    void remove_vertex(const QubitId &q);
    void graph_z_measure(const QubitId &a, int bit);
    int measure_graph_frame(const QubitId &a, Pauli basis, int physical_bit, bool draw,
                            OutcomeSource &src, std::optional<QubitId> special);
    bool reduce_to_diagonal(const QubitId &v, const QubitId &avoid);
    void check_fusable(const QubitId &a, const QubitId &b) const;
    void align_for_fusion(const QubitId &q);
    QubitId pick_root(const QubitId &a, const QubitId &b, const std::vector<QubitId> &comp_a,
                      const std::vector<QubitId> &comp_b, std::optional<QubitId> root,
                      const std::optional<QubitId> &center_a,
                      const std::optional<QubitId> &center_b) const;

    std::map<QubitId, std::set<QubitId>> adj_;
    std::map<QubitId, LocalClifford> frame_;
    std::vector<OutcomeRecord> log_;
    std::vector<TraceOp> trace_;
    int quiet_ = 0;

    friend class QuietTrace;
};

/// Suppresses trace recording while a composite operation runs its steps.
class QuietTrace {
  public:
    explicit QuietTrace(GraphState &g) : g_(g) {
        ++g_.quiet_;
    }
    ~QuietTrace() {
        --g_.quiet_;
    }
    QuietTrace(const QuietTrace &) = delete;
    QuietTrace &operator=(const QuietTrace &) = delete;

  private:
    GraphState &g_;
};

// Value-returning forms --------------------------------------------------

GraphState ghz_star(int n, const std::vector<QubitId> &labels);
GraphState local_complement(GraphState state, const QubitId &a);
GraphState measure_z(GraphState state, const QubitId &a, OutcomeSource &src);
GraphState measure_y(GraphState state, const QubitId &a, OutcomeSource &src);
GraphState measure_x(GraphState state, const QubitId &a, const QubitId &b0, OutcomeSource &src);
GraphState apply_cz(GraphState state, const QubitId &a, const QubitId &b);
GraphState bell_merge(GraphState state, const QubitId &a, const QubitId &b, OutcomeSource &src);
GraphState merge_keep(GraphState state, const QubitId &a, const QubitId &b, OutcomeSource &src);

}  // namespace qnet
