#include "qnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include <fmt/format.h>

namespace qnet::oracle {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_capacity(std::size_t n, std::size_t cap = kMaxQubits) {
    if (n > cap) {
        throw Error(ErrorCode::capacity_exceeded,
                    fmt::format("{} qubits exceed the oracle limit of {}", n, cap));
    }
}

// P|x> = c(x) |x ^ flip>
struct PauliAction {
    std::size_t flip = 0;
    std::size_t z_mask = 0;  // positions carrying Z or Y
    std::size_t y_mask = 0;
    cd phase = 1.0;

    cd coefficient(std::size_t x) const {
        // Y = i X Z: Y|0> = i|1>, Y|1> = -i|0>.
        cd c = phase;
        std::size_t zs = x & z_mask;
        if (std::popcount(zs) % 2) c = -c;
        int ys = std::popcount(y_mask);
        static const cd powers[4] = {1.0, cd(0, 1), -1.0, cd(0, -1)};
        return c * powers[ys % 4];
    }
};

template <class BitOf>
PauliAction pauli_action(const PauliString &p, BitOf bit_of) {
    PauliAction a;
    a.phase = p.phase;
    for (const auto &[q, op] : p.ops) {
        std::size_t bit = std::size_t{1} << bit_of(q);
        switch (op) {
            case Pauli::I: break;
            case Pauli::X: a.flip |= bit; break;
            case Pauli::Z: a.z_mask |= bit; break;
            case Pauli::Y:
                a.flip |= bit;
                a.z_mask |= bit;
                a.y_mask |= bit;
                break;
        }
    }
    return a;
}

// Contracts qubit q of sv with <psi| and drops it. Returns the unnormalized
// remainder.
StateVector contract(const StateVector &sv, const QubitId &q, const std::array<cd, 2> &psi) {
    std::size_t bit = sv.bit_of(q);
    std::vector<QubitId> labels;
    for (const auto &l : sv.labels()) {
        if (l != q) labels.push_back(l);
    }
    const auto &amps = sv.amplitudes();
    std::vector<cd> out(amps.size() / 2);
    std::size_t low = (std::size_t{1} << bit) - 1;
    for (std::size_t r = 0; r < out.size(); ++r) {
        std::size_t base = ((r & ~low) << 1) | (r & low);
        out[r] = std::conj(psi[0]) * amps[base] + std::conj(psi[1]) * amps[base | (std::size_t{1} << bit)];
    }
    return StateVector(std::move(labels), std::move(out));
}

Projection normalize(StateVector sv, const std::string &what) {
    double p = 0;
    for (const auto &a : sv.amplitudes()) p += std::norm(a);
    if (p < 1e-12) {
        throw Error(ErrorCode::impossible_outcome, what + " has zero probability");
    }
    double s = 1.0 / std::sqrt(p);
    for (auto &a : sv.amplitudes()) a *= s;
    return {p, std::move(sv)};
}

std::array<cd, 2> eigenvector(Pauli basis, int bit) {
    switch (basis) {
        case Pauli::Z:
            return bit ? std::array<cd, 2>{0.0, 1.0} : std::array<cd, 2>{1.0, 0.0};
        case Pauli::X:
            return {kInvSqrt2, bit ? -kInvSqrt2 : kInvSqrt2};
        case Pauli::Y:
            return {kInvSqrt2, bit ? cd(0, -kInvSqrt2) : cd(0, kInvSqrt2)};
        case Pauli::I: break;
    }
    throw Error(ErrorCode::invalid_argument, "cannot measure the identity");
}

}  // namespace

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector() : amps_{1.0} {
}

StateVector::StateVector(std::vector<QubitId> labels, std::vector<cd> amplitudes)
    : labels_(std::move(labels)), amps_(std::move(amplitudes)) {
    check_capacity(labels_.size());
    if (amps_.size() != (std::size_t{1} << labels_.size())) {
        throw Error(ErrorCode::invalid_argument, "amplitude count does not match qubit count");
    }
    std::set<QubitId> unique(labels_.begin(), labels_.end());
    if (unique.size() != labels_.size()) {
        throw Error(ErrorCode::label_error, "duplicate labels in state vector");
    }
}

bool StateVector::has(const QubitId &q) const {
    return std::find(labels_.begin(), labels_.end(), q) != labels_.end();
}

std::size_t StateVector::bit_of(const QubitId &q) const {
    auto it = std::find(labels_.begin(), labels_.end(), q);
    if (it == labels_.end()) {
        throw Error(ErrorCode::label_error, "state has no qubit " + q.str());
    }
    return labels_.size() - 1 - static_cast<std::size_t>(it - labels_.begin());
}

double StateVector::norm() const {
    double s = 0;
    for (const auto &a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

void StateVector::relabel(const QubitId &from, const QubitId &to) {
    if (has(to)) {
        throw Error(ErrorCode::label_error, "label in use: " + to.str());
    }
    auto it = std::find(labels_.begin(), labels_.end(), from);
    if (it == labels_.end()) {
        throw Error(ErrorCode::label_error, "state has no qubit " + from.str());
    }
    *it = to;
}

StateVector StateVector::sorted() const {
    std::vector<QubitId> labels = labels_;
    std::sort(labels.begin(), labels.end());
    if (labels == labels_) return *this;
    const std::size_t n = labels.size();
    std::vector<std::size_t> src_bit(n);
    for (std::size_t k = 0; k < n; ++k) {
        src_bit[k] = bit_of(labels[k]);
    }
    std::vector<cd> out(amps_.size());
    for (std::size_t x = 0; x < out.size(); ++x) {
        std::size_t y = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if ((x >> (n - 1 - k)) & 1) y |= std::size_t{1} << src_bit[k];
        }
        out[x] = amps_[y];
    }
    return StateVector(std::move(labels), std::move(out));
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(std::vector<QubitId> labels, std::vector<cd> data)
    : labels_(std::move(labels)), data_(std::move(data)) {
    check_capacity(labels_.size(), kMaxDensityQubits);
    dim_ = std::size_t{1} << labels_.size();
    if (data_.size() != dim_ * dim_) {
        throw Error(ErrorCode::invalid_argument, "density matrix has the wrong size");
    }
}

DensityMatrix DensityMatrix::from_state(const StateVector &sv) {
    check_capacity(sv.size(), kMaxDensityQubits);
    const auto &a = sv.amplitudes();
    std::vector<cd> data(a.size() * a.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < a.size(); ++c) {
            data[r * a.size() + c] = a[r] * std::conj(a[c]);
        }
    }
    return DensityMatrix(sv.labels(), std::move(data));
}

std::size_t DensityMatrix::bit_of(const QubitId &q) const {
    auto it = std::find(labels_.begin(), labels_.end(), q);
    if (it == labels_.end()) {
        throw Error(ErrorCode::label_error, "density matrix has no qubit " + q.str());
    }
    return labels_.size() - 1 - static_cast<std::size_t>(it - labels_.begin());
}

double DensityMatrix::trace() const {
    double t = 0;
    for (std::size_t r = 0; r < dim_; ++r) t += at(r, r).real();
    return t;
}

double DensityMatrix::purity() const {
    double p = 0;
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c < dim_; ++c) p += std::norm(at(r, c));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Construction

PauliString correlation_operator(const GraphState &g, const QubitId &a) {
    PauliString p;
    p.ops[a] = Pauli::X;
    for (const auto &b : g.neighbors(a)) p.ops[b] = Pauli::Z;
    return p;
}

StateVector build_statevector(const std::vector<QubitId> &vertices, const std::vector<Edge> &edges) {
    check_capacity(vertices.size());
    const std::size_t dim = std::size_t{1} << vertices.size();
    std::vector<cd> amps(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    StateVector sv(vertices, std::move(amps));
    for (const auto &[a, b] : edges) apply_cz(sv, a, b);
    return sv;
}

StateVector build_statevector(const GraphState &g) {
    return build_statevector(g.vertices(), g.edges());
}

StateVector physical_state(const GraphState &g) {
    StateVector sv = build_statevector(g);
    for (const auto &[q, c] : g.byproducts()) {
        if (c != LocalClifford::identity()) apply_single(sv, q, c.matrix());
    }
    return sv;
}

StateVector ghz(const std::vector<QubitId> &labels) {
    check_capacity(labels.size());
    std::vector<cd> amps(std::size_t{1} << labels.size(), 0.0);
    amps.front() = kInvSqrt2;
    amps.back() = kInvSqrt2;
    return StateVector(labels, std::move(amps));
}

StateVector tensor(const StateVector &a, const StateVector &b) {
    std::vector<QubitId> labels = a.labels();
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    check_capacity(labels.size());
    const auto &x = a.amplitudes();
    const auto &y = b.amplitudes();
    std::vector<cd> amps(x.size() * y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) amps[i * y.size() + j] = x[i] * y[j];
    }
    return StateVector(std::move(labels), std::move(amps));
}

// ---------------------------------------------------------------------------
// Gates

void apply_single(StateVector &sv, const QubitId &q, const Matrix2 &m) {
    std::size_t bit = std::size_t{1} << sv.bit_of(q);
    auto &a = sv.amplitudes();
    for (std::size_t x = 0; x < a.size(); ++x) {
        if (x & bit) continue;
        cd v0 = a[x];
        cd v1 = a[x | bit];
        a[x] = m[0] * v0 + m[1] * v1;
        a[x | bit] = m[2] * v0 + m[3] * v1;
    }
}

void apply_cz(StateVector &sv, const QubitId &a, const QubitId &b) {
    if (a == b) throw Error(ErrorCode::invalid_pair, "CZ needs two distinct qubits");
    std::size_t mask = (std::size_t{1} << sv.bit_of(a)) | (std::size_t{1} << sv.bit_of(b));
    auto &amps = sv.amplitudes();
    for (std::size_t x = 0; x < amps.size(); ++x) {
        if ((x & mask) == mask) amps[x] = -amps[x];
    }
}

void apply_cnot(StateVector &sv, const QubitId &control, const QubitId &target) {
    if (control == target) throw Error(ErrorCode::invalid_pair, "CNOT needs two distinct qubits");
    std::size_t c = std::size_t{1} << sv.bit_of(control);
    std::size_t t = std::size_t{1} << sv.bit_of(target);
    auto &amps = sv.amplitudes();
    for (std::size_t x = 0; x < amps.size(); ++x) {
        if ((x & c) && !(x & t)) std::swap(amps[x], amps[x | t]);
    }
}

void apply_pauli(StateVector &sv, const PauliString &p) {
    auto act = pauli_action(p, [&](const QubitId &q) { return sv.bit_of(q); });
    const auto &a = sv.amplitudes();
    std::vector<cd> out(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) out[x ^ act.flip] = act.coefficient(x) * a[x];
    sv.amplitudes() = std::move(out);
}

// ---------------------------------------------------------------------------
// Expectations

cd expect_pauli_complex(const StateVector &sv, const PauliString &p) {
    auto act = pauli_action(p, [&](const QubitId &q) { return sv.bit_of(q); });
    const auto &a = sv.amplitudes();
    cd sum = 0;
    for (std::size_t x = 0; x < a.size(); ++x) {
        sum += std::conj(a[x ^ act.flip]) * act.coefficient(x) * a[x];
    }
    return sum;
}

double expect_pauli(const StateVector &sv, const PauliString &p) {
    return expect_pauli_complex(sv, p).real();
}

double expect_pauli(const DensityMatrix &rho, const PauliString &p) {
    auto act = pauli_action(p, [&](const QubitId &q) { return rho.bit_of(q); });
    cd sum = 0;
    // Tr(P rho) = sum_r c(r ^ f) rho[r ^ f][r]
    for (std::size_t r = 0; r < rho.dim(); ++r) {
        sum += act.coefficient(r ^ act.flip) * rho.at(r ^ act.flip, r);
    }
    return sum.real();
}

// ---------------------------------------------------------------------------
// Measurements

Projection measure_projective(const StateVector &sv, const QubitId &q, Pauli basis, int bit) {
    return project_onto(sv, q, eigenvector(basis, bit & 1));
}

Projection project_onto(const StateVector &sv, const QubitId &q, const std::array<cd, 2> &psi) {
    return normalize(contract(sv, q, psi), "projection of " + q.str());
}

Projection measure_bell(const StateVector &sv, const QubitId &a, const QubitId &b, int s, int t) {
    StateVector work = sv;
    apply_cnot(work, a, b);
    const double r = kInvSqrt2;
    apply_single(work, a, Matrix2{r, r, r, -r});
    StateVector rest = contract(work, a, eigenvector(Pauli::Z, s & 1));
    rest = contract(rest, b, eigenvector(Pauli::Z, t & 1));
    return normalize(std::move(rest), "Bell outcome on " + a.str() + "," + b.str());
}

Projection measure_parity(const StateVector &sv, const QubitId &a, const QubitId &b, int t) {
    StateVector work = sv;
    apply_cnot(work, a, b);
    return normalize(contract(work, b, eigenvector(Pauli::Z, t & 1)),
                     "parity outcome on " + a.str() + "," + b.str());
}

DensityProjection project_pauli(const DensityMatrix &rho, const PauliString &p, int bit) {
    auto act = pauli_action(p, [&](const QubitId &q) { return rho.bit_of(q); });
    const double sign = (bit & 1) ? -1.0 : 1.0;
    const std::size_t d = rho.dim();
    const std::size_t f = act.flip;
    std::vector<cd> out(d * d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            cd p_rho = act.coefficient(r ^ f) * rho.at(r ^ f, c);
            cd rho_p = rho.at(r, c ^ f) * act.coefficient(c);
            cd p_rho_p = act.coefficient(r ^ f) * rho.at(r ^ f, c ^ f) * act.coefficient(c);
            out[r * d + c] = (rho.at(r, c) + sign * p_rho + sign * rho_p + p_rho_p) / 4.0;
        }
    }
    DensityMatrix projected(rho.labels(), std::move(out));
    double prob = projected.trace();
    if (prob > 1e-12) {
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) projected.at(r, c) /= prob;
        }
    }
    return {prob, std::move(projected)};
}

// ---------------------------------------------------------------------------
// Reduced states

DensityMatrix partial_trace(const StateVector &sv, const std::vector<QubitId> &traced) {
    std::set<QubitId> gone(traced.begin(), traced.end());
    for (const auto &q : gone) sv.bit_of(q);
    std::vector<QubitId> kept;
    for (const auto &l : sv.labels()) {
        if (!gone.count(l)) kept.push_back(l);
    }
    check_capacity(kept.size(), kMaxDensityQubits);
    const std::size_t n = sv.size();
    std::vector<std::size_t> kept_bits;
    for (const auto &l : kept) kept_bits.push_back(sv.bit_of(l));
    std::vector<std::size_t> gone_bits;
    for (const auto &l : sv.labels()) {
        if (gone.count(l)) gone_bits.push_back(sv.bit_of(l));
    }
    auto compose = [&](std::size_t k, std::size_t g) {
        std::size_t x = 0;
        for (std::size_t i = 0; i < kept_bits.size(); ++i) {
            if ((k >> (kept_bits.size() - 1 - i)) & 1) x |= std::size_t{1} << kept_bits[i];
        }
        for (std::size_t i = 0; i < gone_bits.size(); ++i) {
            if ((g >> i) & 1) x |= std::size_t{1} << gone_bits[i];
        }
        return x;
    };
    (void)n;
    const std::size_t dk = std::size_t{1} << kept.size();
    const std::size_t dg = std::size_t{1} << gone_bits.size();
    const auto &a = sv.amplitudes();
    std::vector<cd> data(dk * dk, 0.0);
    for (std::size_t r = 0; r < dk; ++r) {
        for (std::size_t c = 0; c < dk; ++c) {
            cd sum = 0;
            for (std::size_t g = 0; g < dg; ++g) sum += a[compose(r, g)] * std::conj(a[compose(c, g)]);
            data[r * dk + c] = sum;
        }
    }
    return DensityMatrix(std::move(kept), std::move(data));
}

DensityMatrix ptrace_replace(const StateVector &sv, const std::vector<QubitId> &qubits) {
    DensityMatrix rest = partial_trace(sv, qubits);
    std::vector<QubitId> labels = rest.labels();
    for (const auto &l : sv.labels()) {
        if (std::find(qubits.begin(), qubits.end(), l) != qubits.end()) labels.push_back(l);
    }
    check_capacity(labels.size(), kMaxDensityQubits);
    const std::size_t k = labels.size() - rest.labels().size();
    const std::size_t dg = std::size_t{1} << k;
    const std::size_t d = rest.dim() * dg;
    std::vector<cd> data(d * d, 0.0);
    for (std::size_t r = 0; r < rest.dim(); ++r) {
        for (std::size_t c = 0; c < rest.dim(); ++c) {
            for (std::size_t g = 0; g < dg; ++g) {
                data[(r * dg + g) * d + (c * dg + g)] = rest.at(r, c) / static_cast<double>(dg);
            }
        }
    }
    return DensityMatrix(std::move(labels), std::move(data));
}

// ---------------------------------------------------------------------------
// Comparison

bool equal_up_to_phase(const StateVector &a, const StateVector &b, double tol) {
    StateVector x = a.sorted();
    StateVector y = b.sorted();
    if (x.labels() != y.labels()) {
        throw Error(ErrorCode::label_error, "compared states have different qubits");
    }
    const auto &u = x.amplitudes();
    const auto &v = y.amplitudes();
    std::size_t k = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) > std::abs(u[k])) k = i;
    }
    if (std::abs(v[k]) < 1e-12) return false;
    cd phase = u[k] / v[k];
    phase /= std::abs(phase);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i] - phase * v[i]) > tol) return false;
    }
    return true;
}

double fidelity(const StateVector &a, const StateVector &b) {
    StateVector x = a.sorted();
    StateVector y = b.sorted();
    if (x.labels() != y.labels()) {
        throw Error(ErrorCode::label_error, "compared states have different qubits");
    }
    cd overlap = 0;
    for (std::size_t i = 0; i < x.amplitudes().size(); ++i) {
        overlap += std::conj(x.amplitudes()[i]) * y.amplitudes()[i];
    }
    return std::norm(overlap);
}

// ---------------------------------------------------------------------------
// Replay

std::vector<QubitId> ReplayState::labels() const {
    std::vector<QubitId> out;
    for (const auto &f : factors) out.insert(out.end(), f.labels().begin(), f.labels().end());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

class Replayer {
  public:
    void run(const TraceOp &op) {
        std::visit([this](const auto &o) { step(o); }, op);
    }

    ReplayState finish() {
        ReplayState out;
        for (auto &f : factors_) {
            if (f && f->size() > 0) out.factors.push_back(std::move(*f));
        }
        return out;
    }

  private:
    std::size_t factor_of(const QubitId &q) const {
        auto it = where_.find(q);
        if (it == where_.end()) {
            throw Error(ErrorCode::label_error, "replay references unknown qubit " + q.str());
        }
        return it->second;
    }

    std::size_t join(const QubitId &a, const QubitId &b) {
        std::size_t fa = factor_of(a);
        std::size_t fb = factor_of(b);
        if (fa == fb) return fa;
        check_capacity(factors_[fa]->size() + factors_[fb]->size());
        factors_[fa] = tensor(*factors_[fa], *factors_[fb]);
        for (const auto &l : factors_[fb]->labels()) where_[l] = fa;
        factors_[fb].reset();
        return fa;
    }

    void replace(std::size_t f, StateVector sv) {
        factors_[f] = std::move(sv);
    }

    void step(const op::Prepare &p) {
        // One factor per connected component keeps factors small.
        std::map<QubitId, QubitId> parent;
        for (const auto &v : p.vertices) {
            if (where_.count(v)) throw Error(ErrorCode::label_error, "qubit prepared twice: " + v.str());
            parent[v] = v;
        }
        auto find = [&](QubitId v) {
            while (parent.at(v) != v) v = parent.at(v);
            return v;
        };
        for (const auto &[a, b] : p.edges) parent[find(a)] = find(b);
        std::map<QubitId, std::vector<QubitId>> groups;
        for (const auto &v : p.vertices) groups[find(v)].push_back(v);
        for (const auto &[_, members] : groups) {
            std::set<QubitId> in(members.begin(), members.end());
            std::vector<Edge> edges;
            for (const auto &e : p.edges) {
                if (in.count(e.first)) edges.push_back(e);
            }
            factors_.push_back(build_statevector(members, edges));
            for (const auto &v : members) where_[v] = factors_.size() - 1;
        }
    }

    void step(const op::Gate &g) {
        apply_single(*factors_[factor_of(g.qubit)], g.qubit, g.gate.matrix());
    }

    void step(const op::CZ &c) {
        std::size_t f = join(c.a, c.b);
        apply_cz(*factors_[f], c.a, c.b);
    }

    void step(const op::Measure &m) {
        std::size_t f = factor_of(m.qubit);
        replace(f, measure_projective(*factors_[f], m.qubit, m.basis, m.bit).state);
        where_.erase(m.qubit);
    }

    void step(const op::Bell &b) {
        std::size_t f = join(b.a, b.b);
        replace(f, measure_bell(*factors_[f], b.a, b.b, b.s, b.t).state);
        where_.erase(b.a);
        where_.erase(b.b);
    }

    void step(const op::Parity &p) {
        std::size_t f = join(p.a, p.b);
        replace(f, measure_parity(*factors_[f], p.a, p.b, p.t).state);
        where_.erase(p.b);
    }

    void step(const op::Discard &d) {
        std::size_t f = factor_of(d.qubit);
        const auto &m = d.state.matrix();
        std::array<cd, 2> psi{(m[0] + m[1]) * kInvSqrt2, (m[2] + m[3]) * kInvSqrt2};
        auto proj = project_onto(*factors_[f], d.qubit, psi);
        if (proj.probability < 1.0 - 1e-9) {
            throw Error(ErrorCode::impossible_outcome,
                        "discarded qubit " + d.qubit.str() + " was not in the recorded product state");
        }
        replace(f, std::move(proj.state));
        where_.erase(d.qubit);
    }

    void step(const op::TraceOut &t) {
        std::map<std::size_t, std::vector<QubitId>> by_factor;
        for (const auto &q : t.qubits) by_factor[factor_of(q)].push_back(q);
        for (const auto &[f, qs] : by_factor) {
            for (const auto &q : qs) where_.erase(q);
            if (qs.size() == factors_[f]->size()) {
                factors_[f].reset();
                continue;
            }
            replace(f, split_off(*factors_[f], qs));
        }
    }

    void step(const op::Relabel &r) {
        std::size_t f = factor_of(r.from);
        if (where_.count(r.to)) throw Error(ErrorCode::label_error, "label in use: " + r.to.str());
        factors_[f]->relabel(r.from, r.to);
        where_.erase(r.from);
        where_[r.to] = f;
    }

    // Removes `gone` from sv, which must factor as |rest> (x) |gone>.
    static StateVector split_off(const StateVector &sv, const std::vector<QubitId> &gone) {
        std::vector<QubitId> order;
        for (const auto &l : sv.labels()) {
            if (std::find(gone.begin(), gone.end(), l) == gone.end()) order.push_back(l);
        }
        std::vector<QubitId> rest = order;
        order.insert(order.end(), gone.begin(), gone.end());
        // Reorder so gone qubits are the low bits, then check rank one.
        StateVector permuted = reorder(sv, order);
        const std::size_t dg = std::size_t{1} << gone.size();
        const std::size_t dr = permuted.amplitudes().size() / dg;
        const auto &a = permuted.amplitudes();
        std::size_t best = 0;
        double best_norm = -1;
        for (std::size_t g = 0; g < dg; ++g) {
            double s = 0;
            for (std::size_t r = 0; r < dr; ++r) s += std::norm(a[r * dg + g]);
            if (s > best_norm) {
                best_norm = s;
                best = g;
            }
        }
        std::vector<cd> v(dr);
        for (std::size_t r = 0; r < dr; ++r) v[r] = a[r * dg + best] / std::sqrt(best_norm);
        for (std::size_t g = 0; g < dg; ++g) {
            cd coef = 0;
            for (std::size_t r = 0; r < dr; ++r) coef += std::conj(v[r]) * a[r * dg + g];
            for (std::size_t r = 0; r < dr; ++r) {
                if (std::abs(a[r * dg + g] - coef * v[r]) > 1e-9) {
                    throw Error(ErrorCode::invalid_argument, "trace-out leaves a mixed state");
                }
            }
        }
        return StateVector(std::move(rest), std::move(v));
    }

    static StateVector reorder(const StateVector &sv, const std::vector<QubitId> &order) {
        const std::size_t n = order.size();
        std::vector<std::size_t> src_bit(n);
        for (std::size_t k = 0; k < n; ++k) src_bit[k] = sv.bit_of(order[k]);
        std::vector<cd> out(sv.amplitudes().size());
        for (std::size_t x = 0; x < out.size(); ++x) {
            std::size_t y = 0;
            for (std::size_t k = 0; k < n; ++k) {
                if ((x >> (n - 1 - k)) & 1) y |= std::size_t{1} << src_bit[k];
            }
            out[x] = sv.amplitudes()[y];
        }
        return StateVector(order, std::move(out));
    }

    std::vector<std::optional<StateVector>> factors_;
    std::map<QubitId, std::size_t> where_;
};

}  // namespace

ReplayState replay(const std::vector<TraceOp> &trace) {
    Replayer r;
    for (const auto &op : trace) r.run(op);
    return r.finish();
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::skipped: return "SKIPPED";
    }
    return "?";
}

Certificate certify(const GraphState &g, double tol) {
    Certificate cert;
    cert.qubits = g.size();
    ReplayState replayed;
    try {
        replayed = replay(g.trace());
    } catch (const Error &e) {
        if (e.code() == ErrorCode::capacity_exceeded) {
            cert.verdict = Verdict::skipped;
            cert.detail = e.what();
            return cert;
        }
        cert.verdict = Verdict::fail;
        cert.detail = e.what();
        return cert;
    }
    if (replayed.labels() != g.vertices()) {
        cert.verdict = Verdict::fail;
        cert.detail = "replayed qubits differ from the graph's qubits";
        return cert;
    }

    // Group qubits that are linked either by a replay factor or by a graph
    // component; both states are products over these groups.
    std::map<QubitId, QubitId> parent;
    for (const auto &v : g.vertices()) parent[v] = v;
    auto find = [&](QubitId v) {
        while (parent.at(v) != v) v = parent.at(v);
        return v;
    };
    auto unite = [&](const QubitId &a, const QubitId &b) { parent[find(a)] = find(b); };
    for (const auto &f : replayed.factors) {
        for (std::size_t k = 1; k < f.labels().size(); ++k) unite(f.labels()[0], f.labels()[k]);
    }
    for (const auto &[a, b] : g.edges()) unite(a, b);

    std::map<QubitId, std::vector<QubitId>> groups;
    for (const auto &v : g.vertices()) groups[find(v)].push_back(v);
    std::map<QubitId, std::vector<const StateVector *>> factor_groups;
    for (const auto &f : replayed.factors) factor_groups[find(f.labels()[0])].push_back(&f);

    bool skipped = false;
    for (const auto &[root, members] : groups) {
        if (members.size() > kMaxQubits) {
            skipped = true;
            continue;
        }
        StateVector expected;
        for (const auto *f : factor_groups[root]) expected = tensor(expected, *f);
        std::set<QubitId> in(members.begin(), members.end());
        std::vector<Edge> edges;
        for (const auto &e : g.edges()) {
            if (in.count(e.first)) edges.push_back(e);
        }
        StateVector actual = build_statevector(members, edges);
        for (const auto &q : members) {
            LocalClifford c = g.byproduct(q);
            if (c != LocalClifford::identity()) apply_single(actual, q, c.matrix());
        }
        if (!equal_up_to_phase(expected, actual, tol)) {
            cert.verdict = Verdict::fail;
            cert.detail = "state mismatch on group containing " + root.str();
            return cert;
        }
    }
    cert.verdict = skipped ? Verdict::skipped : Verdict::pass;
    if (skipped) cert.detail = "some groups exceed the oracle capacity";
    return cert;
}

Certificate certify_target(const GraphState &g, const std::vector<QubitId> &vertices,
                           const std::vector<Edge> &edges, double tol) {
    Certificate cert;
    cert.qubits = vertices.size();
    if (vertices.size() > kMaxQubits) {
        cert.detail = "target exceeds the oracle capacity";
        return cert;
    }
    std::set<QubitId> want(vertices.begin(), vertices.end());
    for (const auto &v : vertices) {
        if (!g.contains(v)) {
            cert.verdict = Verdict::fail;
            cert.detail = "missing qubit " + v.str();
            return cert;
        }
    }
    ReplayState replayed;
    try {
        replayed = replay(g.trace());
    } catch (const Error &e) {
        cert.verdict = e.code() == ErrorCode::capacity_exceeded ? Verdict::skipped : Verdict::fail;
        cert.detail = e.what();
        return cert;
    }
    StateVector actual;
    std::set<QubitId> seen;
    for (const auto &f : replayed.factors) {
        bool hit = false;
        for (const auto &l : f.labels()) hit = hit || want.count(l);
        if (!hit) continue;
        for (const auto &l : f.labels()) {
            if (!want.count(l)) {
                cert.verdict = Verdict::fail;
                cert.detail = "target entangled with " + l.str();
                return cert;
            }
            seen.insert(l);
        }
        actual = tensor(actual, f);
    }
    if (seen != want) {
        cert.verdict = Verdict::fail;
        cert.detail = "target qubits not all present after replay";
        return cert;
    }
    for (const auto &v : vertices) apply_single(actual, v, g.byproduct(v).inverse().matrix());
    auto expected = build_statevector(vertices, edges);
    if (!equal_up_to_phase(actual.sorted(), expected.sorted(), tol)) {
        cert.verdict = Verdict::fail;
        cert.detail = "state differs from the target graph state";
        return cert;
    }
    cert.verdict = Verdict::pass;
    return cert;
}

}  // namespace qnet::oracle
