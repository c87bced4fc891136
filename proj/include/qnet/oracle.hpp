#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qnet/clifford.hpp"
#include "qnet/common.hpp"
#include "qnet/graph_state.hpp"

namespace qnet::oracle {

using cd = std::complex<double>;

constexpr std::size_t kMaxQubits = 16;
constexpr std::size_t kMaxDensityQubits = 12;
constexpr double kEqualTol = 1e-9;
constexpr double kExpectTol = 1e-10;

/// Dense pure state. Qubit k of `labels` is bit (n-1-k) of the amplitude
/// index, so the first label is the most significant bit.
class StateVector {
  public:
    /// The empty (zero-qubit) state, amplitude 1.
    StateVector();
    StateVector(std::vector<QubitId> labels, std::vector<cd> amplitudes);

    const std::vector<QubitId> &labels() const {
        return labels_;
    }
    const std::vector<cd> &amplitudes() const {
        return amps_;
    }
    std::vector<cd> &amplitudes() {
        return amps_;
    }
    std::size_t size() const {
        return labels_.size();
    }
    bool has(const QubitId &q) const;
    /// Bit position (from the least significant end) of q.
    std::size_t bit_of(const QubitId &q) const;
    double norm() const;
    void relabel(const QubitId &from, const QubitId &to);
    /// Same state with labels in ascending order.
    StateVector sorted() const;

  private:
    std::vector<QubitId> labels_;
    std::vector<cd> amps_;
};

class DensityMatrix {
  public:
    DensityMatrix(std::vector<QubitId> labels, std::vector<cd> data);
    static DensityMatrix from_state(const StateVector &sv);

    const std::vector<QubitId> &labels() const {
        return labels_;
    }
    std::size_t dim() const {
        return dim_;
    }
    cd at(std::size_t r, std::size_t c) const {
        return data_[r * dim_ + c];
    }
    cd &at(std::size_t r, std::size_t c) {
        return data_[r * dim_ + c];
    }
    std::size_t bit_of(const QubitId &q) const;
    double trace() const;
    double purity() const;

  private:
    std::vector<QubitId> labels_;
    std::size_t dim_ = 1;
    std::vector<cd> data_;
};

struct PauliString {
    std::map<QubitId, Pauli> ops;
    cd phase = 1.0;
};

/// K_a = X_a prod_{b in N(a)} Z_b for the graph of `g`.
PauliString correlation_operator(const GraphState &g, const QubitId &a);

// Construction ------------------------------------------------------------

StateVector build_statevector(const std::vector<QubitId> &vertices, const std::vector<Edge> &edges);
/// |G> from the edges of g; the byproduct frame is ignored.
StateVector build_statevector(const GraphState &g);
/// The physical state (prod C_v)|G> represented by g.
StateVector physical_state(const GraphState &g);
/// (|0..0> + |1..1>)/sqrt(2)
StateVector ghz(const std::vector<QubitId> &labels);
StateVector tensor(const StateVector &a, const StateVector &b);

// Gates -------------------------------------------------------------------

void apply_single(StateVector &sv, const QubitId &q, const Matrix2 &m);
void apply_cz(StateVector &sv, const QubitId &a, const QubitId &b);
void apply_cnot(StateVector &sv, const QubitId &control, const QubitId &target);
void apply_pauli(StateVector &sv, const PauliString &p);

// Expectations --------------------------------------------------------------

cd expect_pauli_complex(const StateVector &sv, const PauliString &p);
/// <sv|P|sv>; throws label-error if P references a qubit not in sv.
double expect_pauli(const StateVector &sv, const PauliString &p);
double expect_pauli(const DensityMatrix &rho, const PauliString &p);

// Measurements (measured qubits are removed from the returned state) --------

struct Projection {
    double probability = 0.0;
    StateVector state;
};

/// Projects q onto the (-1)^bit eigenspace of `basis`.
Projection measure_projective(const StateVector &sv, const QubitId &q, Pauli basis, int bit);
/// Projects (a, b) onto |beta_st> = (|0,t> + (-1)^s |1,1-t>)/sqrt(2).
Projection measure_bell(const StateVector &sv, const QubitId &a, const QubitId &b, int s, int t);
/// CNOT a->b, then b projected onto |t>; a is kept.
Projection measure_parity(const StateVector &sv, const QubitId &a, const QubitId &b, int t);
/// Projects q onto the single-qubit state psi (length 2).
Projection project_onto(const StateVector &sv, const QubitId &q, const std::array<cd, 2> &psi);

struct DensityProjection {
    double probability = 0.0;
    DensityMatrix state;
};

/// Projects rho with (I + (-1)^bit P)/2; the state keeps all qubits.
DensityProjection project_pauli(const DensityMatrix &rho, const PauliString &p, int bit);

// Reduced states --------------------------------------------------------------

/// Reduced density operator on the labels not in `traced`.
DensityMatrix partial_trace(const StateVector &sv, const std::vector<QubitId> &traced);
/// rho_rest (x) I/2 on every traced qubit: the state the remaining parties
/// see when the traced qubits were lost and replaced by fresh noise.
DensityMatrix ptrace_replace(const StateVector &sv, const std::vector<QubitId> &qubits);

// Comparison ------------------------------------------------------------------

bool equal_up_to_phase(const StateVector &a, const StateVector &b, double tol = kEqualTol);
double fidelity(const StateVector &a, const StateVector &b);

// Replay ----------------------------------------------------------------------

/// Product of pure factors obtained by replaying a GraphState trace.
struct ReplayState {
    std::vector<StateVector> factors;

    std::vector<QubitId> labels() const;
};

/// Replays physical operations in order. Throws impossible-outcome if a
/// recorded outcome has zero probability and capacity-exceeded if a factor
/// grows beyond kMaxQubits.
ReplayState replay(const std::vector<TraceOp> &trace);

enum class Verdict { pass, fail, skipped };

std::string_view to_string(Verdict v);

struct Certificate {
    Verdict verdict = Verdict::skipped;
    std::size_t qubits = 0;
    std::string detail;
};

/// Replays g's trace and checks that the result equals the physical state
/// of g up to global phase. Skipped (not failed) when a comparison group
/// exceeds the oracle capacity.
Certificate certify(const GraphState &g, double tol = kEqualTol);

/// Replays g's trace and checks that `vertices` hold the graph state of
/// `edges` (unentangled with anything else) once g's byproducts on those
/// vertices are undone.
Certificate certify_target(const GraphState &g, const std::vector<QubitId> &vertices,
                           const std::vector<Edge> &edges, double tol = kEqualTol);

}  // namespace qnet::oracle
