#include "qnet/graph_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <deque>
#include <mutex>

#include <fmt/format.h>

namespace qnet {

// ---------------------------------------------------------------------------
// OutcomeSource

OutcomeSource OutcomeSource::fixed(int bit) {
    return fixed(std::vector<int>{bit});
}

OutcomeSource OutcomeSource::fixed(std::vector<int> bits) {
    if (bits.empty()) {
        throw Error(ErrorCode::invalid_argument, "fixed outcome source needs at least one bit");
    }
    OutcomeSource s;
    for (int &b : bits) {
        b &= 1;
    }
    s.bits_ = std::move(bits);
    return s;
}

OutcomeSource OutcomeSource::seeded(std::uint64_t seed) {
    OutcomeSource s;
    s.seeded_ = true;
    s.seed_ = seed;
    s.rng_.seed(seed);
    return s;
}

int OutcomeSource::next() {
    if (seeded_) {
        return static_cast<int>(rng_() >> 63);
    }
    int b = bits_[pos_ % bits_.size()];
    ++pos_;
    return b;
}

OutcomeSource OutcomeSource::split(std::uint64_t stream) const {
    if (!seeded_) {
        return *this;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return seeded((static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
}

// ---------------------------------------------------------------------------
// Trace helpers

Edge make_edge(QubitId a, QubitId b) {
    if (b < a) {
        std::swap(a, b);
    }
    return {std::move(a), std::move(b)};
}

namespace {

std::string join(const std::vector<QubitId> &qs) {
    std::string out;
    for (const auto &q : qs) {
        if (!out.empty()) out += ",";
        out += q.str();
    }
    return out;
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string describe(const TraceOp &op) {
    return std::visit(
        Overloaded{
            [](const op::Prepare &p) {
                std::string edges;
                for (const auto &[a, b] : p.edges) {
                    if (!edges.empty()) edges += ",";
                    edges += a.str() + "-" + b.str();
                }
                return fmt::format("prepare [{}] edges [{}]", join(p.vertices), edges);
            },
            [](const op::Gate &g) {
                return fmt::format("gate {} {}", g.gate.name(), g.qubit.str());
            },
            [](const op::CZ &c) { return fmt::format("cz {} {}", c.a.str(), c.b.str()); },
            [](const op::Measure &m) {
                return fmt::format("measure {} {} -> {}", to_char(m.basis), m.qubit.str(), m.bit);
            },
            [](const op::Bell &b) {
                return fmt::format("bell {} {} -> {}{}", b.a.str(), b.b.str(), b.s, b.t);
            },
            [](const op::Parity &p) {
                return fmt::format("parity {} {} -> {}", p.a.str(), p.b.str(), p.t);
            },
            [](const op::Discard &d) {
                return fmt::format("discard {} ({}|+>)", d.qubit.str(), d.state.name());
            },
            [](const op::TraceOut &t) { return fmt::format("trace-out [{}]", join(t.qubits)); },
            [](const op::Relabel &r) {
                return fmt::format("relabel {} -> {}", r.from.str(), r.to.str());
            },
        },
        op);
}

// ---------------------------------------------------------------------------
// Frame constants

namespace {

// |tau_a G> = sqrt(-iX_a) prod_{b in N(a)} sqrt(iZ_b) |G>, so keeping the
// physical state fixed multiplies the frame by the inverses.
LocalClifford lc_self() {
    static const LocalClifford c = LocalClifford::sqrt_minus_ix().inverse();
    return c;
}

LocalClifford lc_neighbor() {
    static const LocalClifford c = LocalClifford::sqrt_plus_iz().inverse();
    return c;
}

const LocalClifford kZ = LocalClifford::pauli(Pauli::Z);

// Shortest move sequence (false = LC at the vertex, true = LC at a neighbor)
// turning each frame element into one that maps Z to +-Z.
const std::vector<bool> &reduction_word(LocalClifford c) {
    static const auto words = [] {
        std::array<std::optional<std::vector<bool>>, LocalClifford::kCount> w;
        std::deque<int> queue;
        for (int k = 0; k < LocalClifford::kCount; ++k) {
            // Search backwards: diagonal elements need no moves.
            if (LocalClifford::from_index(k).is_diagonal()) {
                w[k] = std::vector<bool>{};
                queue.push_back(k);
            }
        }
        while (!queue.empty()) {
            int k = queue.front();
            queue.pop_front();
            for (bool neighbor : {false, true}) {
                LocalClifford move = neighbor ? lc_neighbor() : lc_self();
                // prev * move = k  =>  prev = k * move^-1
                int prev = (LocalClifford::from_index(k) * move.inverse()).index();
                if (!w[prev]) {
                    auto word = *w[k];
                    word.insert(word.begin(), neighbor);
                    w[prev] = word;
                    queue.push_back(prev);
                }
            }
        }
        std::array<std::vector<bool>, LocalClifford::kCount> out;
        for (int k = 0; k < LocalClifford::kCount; ++k) {
            out[k] = *w[k];
        }
        return out;
    }();
    return words[c.index()];
}

using cd = std::complex<double>;

// Two-qubit vector with qubit x as the high bit.
using Vec4 = std::array<cd, 4>;

Vec4 apply_local(const Vec4 &v, const Matrix2 &mx, const Matrix2 &my) {
    Vec4 out{};
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            cd acc = 0;
            for (int x2 = 0; x2 < 2; ++x2) {
                for (int y2 = 0; y2 < 2; ++y2) {
                    acc += mx[x * 2 + x2] * my[y * 2 + y2] * v[x2 * 2 + y2];
                }
            }
            out[x * 2 + y] = acc;
        }
    }
    return out;
}

Vec4 apply_cz4(Vec4 v) {
    v[3] = -v[3];
    return v;
}

bool proportional(const std::vector<cd> &a, const std::vector<cd> &b) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i]) > std::abs(a[k])) k = i;
    }
    if (std::abs(b[k]) < 1e-9) return false;
    cd phase = a[k] / b[k];
    if (std::abs(std::abs(phase) - 1.0) > 1e-9) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - phase * b[i]) > 1e-9) return false;
    }
    return true;
}

// Columns: (Cx (x) Cy) CZ^e |+>_x |y_in>, for y_in = 0, 1. When `pair` is
// true, y is also |+> and only one column is produced.
std::vector<cd> pair_image(int e, LocalClifford cx, LocalClifford cy, bool pair, bool cz_after) {
    const double r = 1.0 / std::sqrt(2.0);
    std::vector<Vec4> inputs;
    if (pair) {
        inputs.push_back({0.5, 0.5, 0.5, 0.5});
    } else {
        inputs.push_back({r, 0, r, 0});
        inputs.push_back({0, r, 0, r});
    }
    std::vector<cd> out;
    for (auto v : inputs) {
        if (e) v = apply_cz4(v);
        v = apply_local(v, cx.matrix(), cy.matrix());
        if (cz_after) v = apply_cz4(v);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

struct PairResult {
    int edge;
    LocalClifford cx;
    LocalClifford cy;
};

// CZ on (x, y) where x has no neighbor besides y. `pair` means y has no
// other neighbor either. Brute force over all frame pairs, cached.
PairResult cz_lookup(int e, LocalClifford cx, LocalClifford cy, bool pair) {
    static std::mutex mu;
    static std::map<std::array<int, 4>, PairResult> cache;
    std::array<int, 4> key{e, cx.index(), cy.index(), pair ? 1 : 0};
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    auto want = pair_image(e, cx, cy, pair, true);
    std::optional<PairResult> found;
    // Prefer keeping y's frame diagonal so further CZs on y stay cheap.
    for (int pass = 0; pass < 2 && !found; ++pass) {
        for (int e2 = 0; e2 < 2 && !found; ++e2) {
            for (int b = 0; b < LocalClifford::kCount && !found; ++b) {
                LocalClifford cy2 = LocalClifford::from_index(b);
                if (pass == 0 && !cy2.is_diagonal()) continue;
                for (int a = 0; a < LocalClifford::kCount; ++a) {
                    LocalClifford cx2 = LocalClifford::from_index(a);
                    if (proportional(want, pair_image(e2, cx2, cy2, pair, false))) {
                        found = PairResult{e2, cx2, cy2};
                        break;
                    }
                }
            }
        }
    }
    if (!found) {
        throw std::logic_error("no graph representation for CZ on an isolated pair");
    }
    cache.emplace(key, *found);
    return *found;
}

}  // namespace

// ---------------------------------------------------------------------------
// GraphState structure

std::vector<QubitId> GraphState::vertices() const {
    std::vector<QubitId> out;
    out.reserve(adj_.size());
    for (const auto &[q, _] : adj_) out.push_back(q);
    return out;
}

std::vector<Edge> GraphState::edges() const {
    std::vector<Edge> out;
    for (const auto &[q, nb] : adj_) {
        for (const auto &n : nb) {
            if (q < n) out.emplace_back(q, n);
        }
    }
    return out;
}

const std::set<QubitId> &GraphState::neighbors(const QubitId &q) const {
    require(q);
    return adj_.at(q);
}

bool GraphState::has_edge(const QubitId &a, const QubitId &b) const {
    auto it = adj_.find(a);
    return it != adj_.end() && it->second.count(b) != 0;
}

LocalClifford GraphState::byproduct(const QubitId &q) const {
    require(q);
    return frame_.at(q);
}

std::vector<QubitId> GraphState::component(const QubitId &q) const {
    require(q);
    std::set<QubitId> seen{q};
    std::deque<QubitId> queue{q};
    while (!queue.empty()) {
        QubitId cur = queue.front();
        queue.pop_front();
        for (const auto &n : adj_.at(cur)) {
            if (seen.insert(n).second) queue.push_back(n);
        }
    }
    return {seen.begin(), seen.end()};
}

std::optional<QubitId> GraphState::star_center(const QubitId &q) const {
    auto comp = component(q);
    if (comp.size() < 2) return std::nullopt;
    if (comp.size() == 2) return comp.front();
    std::size_t edge_ends = 0;
    std::optional<QubitId> center;
    for (const auto &v : comp) {
        edge_ends += adj_.at(v).size();
        if (adj_.at(v).size() == comp.size() - 1) {
            if (center) return std::nullopt;  // complete graph or similar
            center = v;
        }
    }
    if (!center || edge_ends != 2 * (comp.size() - 1)) return std::nullopt;
    return center;
}

void GraphState::require(const QubitId &q) const {
    if (!contains(q)) {
        throw Error(ErrorCode::not_found, "no qubit " + q.str());
    }
}

void GraphState::record(TraceOp op) {
    if (quiet_ == 0) trace_.push_back(std::move(op));
}

void GraphState::log(const std::string &tag, const QubitId &q, int bit) {
    if (quiet_ == 0) log_.push_back({tag, q, bit});
}

void GraphState::toggle_edge(const QubitId &a, const QubitId &b) {
    auto &na = adj_.at(a);
    if (na.erase(b)) {
        adj_.at(b).erase(a);
    } else {
        na.insert(b);
        adj_.at(b).insert(a);
    }
}

void GraphState::remove_vertex(const QubitId &q) {
    for (const auto &n : adj_.at(q)) {
        adj_.at(n).erase(q);
    }
    adj_.erase(q);
    frame_.erase(q);
}

// ---------------------------------------------------------------------------
// Preparation

void GraphState::prepare(const std::vector<QubitId> &vertices, const std::vector<Edge> &edges) {
    std::set<QubitId> fresh;
    for (const auto &v : vertices) {
        if (contains(v) || !fresh.insert(v).second) {
            throw Error(ErrorCode::invalid_labels, "qubit label in use: " + v.str());
        }
    }
    std::vector<Edge> canon;
    for (const auto &[a, b] : edges) {
        if (a == b || !fresh.count(a) || !fresh.count(b)) {
            throw Error(ErrorCode::invalid_labels, "bad edge " + a.str() + "-" + b.str());
        }
        canon.push_back(make_edge(a, b));
    }
    std::sort(canon.begin(), canon.end());
    if (std::adjacent_find(canon.begin(), canon.end()) != canon.end()) {
        throw Error(ErrorCode::invalid_labels, "duplicate edge");
    }
    for (const auto &v : vertices) {
        adj_[v];
        frame_[v] = LocalClifford::identity();
    }
    for (const auto &[a, b] : canon) {
        adj_[a].insert(b);
        adj_[b].insert(a);
    }
    record(op::Prepare{vertices, canon});
}

void GraphState::prepare_star(const std::vector<QubitId> &vertices) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        edges.emplace_back(vertices[0], vertices[i]);
    }
    prepare(vertices, edges);
}

void GraphState::prepare_ghz(const std::vector<QubitId> &vertices) {
    prepare_star(vertices);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        apply_gate(vertices[i], LocalClifford::h());
    }
}

void GraphState::absorb(const GraphState &other) {
    for (const auto &[q, _] : other.adj_) {
        if (contains(q)) {
            throw Error(ErrorCode::invalid_labels, "qubit label in use: " + q.str());
        }
    }
    for (const auto &[q, nb] : other.adj_) adj_[q] = nb;
    for (const auto &[q, c] : other.frame_) frame_[q] = c;
    log_.insert(log_.end(), other.log_.begin(), other.log_.end());
    trace_.insert(trace_.end(), other.trace_.begin(), other.trace_.end());
}

// ---------------------------------------------------------------------------
// Frame-only transformations

void GraphState::local_complement(const QubitId &a) {
    require(a);
    std::vector<QubitId> nb(adj_.at(a).begin(), adj_.at(a).end());
    for (std::size_t i = 0; i < nb.size(); ++i) {
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
            toggle_edge(nb[i], nb[j]);
        }
    }
    frame_.at(a) = frame_.at(a) * lc_self();
    for (const auto &b : nb) {
        frame_.at(b) = frame_.at(b) * lc_neighbor();
    }
}

void GraphState::normalize_star(const QubitId &center) {
    auto comp = component(center);
    if (comp.size() <= 2) return;
    std::size_t edge_ends = 0;
    for (const auto &v : comp) edge_ends += adj_.at(v).size();
    bool complete = edge_ends == comp.size() * (comp.size() - 1);
    if (complete) {
        local_complement(center);
        return;
    }
    auto c = star_center(center);
    if (!c) {
        throw Error(ErrorCode::unsupported_shape, "component of " + center.str() + " is not GHZ-type");
    }
    if (*c == center) return;
    local_complement(*c);
    local_complement(center);
}

// ---------------------------------------------------------------------------
// Physical operations

void GraphState::apply_gate(const QubitId &q, LocalClifford g) {
    require(q);
    frame_.at(q) = g * frame_.at(q);
    record(op::Gate{q, g});
}

bool GraphState::reduce_to_diagonal(const QubitId &v, const QubitId &avoid) {
    if (frame_.at(v).is_diagonal()) return true;
    std::optional<QubitId> helper;
    for (const auto &n : adj_.at(v)) {
        if (n != avoid) {
            helper = n;
            break;
        }
    }
    if (!helper) return false;
    // The helper stays adjacent to v: LC at either endpoint never toggles
    // the edge between them.
    for (bool neighbor : reduction_word(frame_.at(v))) {
        local_complement(neighbor ? *helper : v);
    }
    return true;
}

void GraphState::apply_cz(const QubitId &a, const QubitId &b) {
    if (a == b) {
        throw Error(ErrorCode::invalid_pair, "CZ needs two distinct qubits");
    }
    require(a);
    require(b);
    record(op::CZ{a, b});
    QuietTrace quiet(*this);

    reduce_to_diagonal(a, b);
    reduce_to_diagonal(b, a);
    reduce_to_diagonal(a, b);
    LocalClifford ca = frame_.at(a);
    LocalClifford cb = frame_.at(b);
    if (ca.is_diagonal() && cb.is_diagonal()) {
        // C^dagger CZ C = CZ times Z corrections when C flips the sign of Z.
        bool flip_a = ca.inverse().conjugate(Pauli::Z).negative;
        bool flip_b = cb.inverse().conjugate(Pauli::Z).negative;
        if (flip_b) frame_.at(a) = ca * kZ;
        if (flip_a) frame_.at(b) = cb * kZ;
        toggle_edge(a, b);
        return;
    }
    // One endpoint could not be reduced, so its only possible neighbor is
    // the other endpoint.
    QubitId x = a;
    QubitId y = b;
    if (frame_.at(a).is_diagonal()) std::swap(x, y);
    auto others = [&](const QubitId &v, const QubitId &skip) {
        return adj_.at(v).size() - (adj_.at(v).count(skip) ? 1 : 0);
    };
    bool pair = others(y, x) == 0;
    int e = has_edge(x, y) ? 1 : 0;
    PairResult res = cz_lookup(e, frame_.at(x), frame_.at(y), pair);
    if (res.edge != e) toggle_edge(x, y);
    frame_.at(x) = res.cx;
    frame_.at(y) = res.cy;
}

void GraphState::graph_z_measure(const QubitId &a, int bit) {
    if (bit) {
        for (const auto &n : adj_.at(a)) {
            frame_.at(n) = frame_.at(n) * kZ;
        }
    }
    remove_vertex(a);
}

int GraphState::measure_graph_frame(const QubitId &a, Pauli basis, int physical_bit, bool draw,
                                    OutcomeSource &src, std::optional<QubitId> special) {
    const auto &nb = adj_.at(a);
    if (special && !nb.empty() && !nb.count(*special)) {
        throw Error(ErrorCode::invalid_special_neighbor,
                    special->str() + " is not a neighbor of " + a.str());
    }
    auto frame_pauli = [&] { return frame_.at(a).inverse().conjugate(basis); };
    SignedPauli q = frame_pauli();
    int bit = physical_bit;
    if (q.pauli == Pauli::X && nb.empty()) {
        // |+> is an X eigenstate: the outcome is fixed.
        bit = q.negative ? 1 : 0;
    } else if (draw) {
        bit = src.next();
    }
    record(op::Measure{a, basis, bit});
    QuietTrace quiet(*this);

    std::optional<QubitId> b0;
    while (q.pauli != Pauli::Z) {
        if (q.pauli == Pauli::X) {
            if (adj_.at(a).empty()) break;
            if (!b0) b0 = special ? *special : *adj_.at(a).begin();
            local_complement(*b0);
        } else {
            local_complement(a);
        }
        q = frame_pauli();
    }
    int graph_bit = bit ^ (q.negative ? 1 : 0);
    graph_z_measure(a, q.pauli == Pauli::Z ? graph_bit : 0);
    if (b0 && contains(*b0)) {
        local_complement(*b0);
    }
    return bit;
}

int GraphState::measure(const QubitId &a, Pauli basis, OutcomeSource &src,
                        std::optional<QubitId> special) {
    require(a);
    if (basis == Pauli::I) {
        throw Error(ErrorCode::invalid_argument, "cannot measure the identity");
    }
    int bit = measure_graph_frame(a, basis, 0, true, src, special);
    log(std::string("measure-") + to_char(basis), a, bit);
    return bit;
}

int GraphState::measure_frame(const QubitId &a, Pauli frame_basis, OutcomeSource &src,
                              std::optional<QubitId> special) {
    require(a);
    if (frame_basis == Pauli::I) {
        throw Error(ErrorCode::invalid_argument, "cannot measure the identity");
    }
    SignedPauli p = frame_.at(a).conjugate(frame_basis);
    int frame_bit = 0;
    if (!(frame_basis == Pauli::X && adj_.at(a).empty())) {
        frame_bit = src.next();
    }
    int physical = frame_bit ^ (p.negative ? 1 : 0);
    int got = measure_graph_frame(a, p.pauli, physical, false, src, special);
    log(std::string("measure-") + to_char(p.pauli), a, got);
    return got ^ (p.negative ? 1 : 0);
}

std::pair<int, int> GraphState::bell_measure(const QubitId &a, const QubitId &b,
                                             OutcomeSource &src) {
    if (a == b) {
        throw Error(ErrorCode::invalid_pair, "Bell measurement needs two distinct qubits");
    }
    require(a);
    require(b);
    int s = 0;
    int t = 0;
    {
        QuietTrace quiet(*this);
        const auto h = LocalClifford::h();
        apply_gate(b, h);
        apply_cz(a, b);
        apply_gate(b, h);
        apply_gate(a, h);
        s = measure(a, Pauli::Z, src);
        t = measure(b, Pauli::Z, src);
    }
    record(op::Bell{a, b, s, t});
    log("bell-s", a, s);
    log("bell-t", b, t);
    return {s, t};
}

int GraphState::parity_measure(const QubitId &a, const QubitId &b, OutcomeSource &src) {
    if (a == b) {
        throw Error(ErrorCode::invalid_pair, "parity measurement needs two distinct qubits");
    }
    require(a);
    require(b);
    int t = 0;
    {
        QuietTrace quiet(*this);
        const auto h = LocalClifford::h();
        apply_gate(b, h);
        apply_cz(a, b);
        apply_gate(b, h);
        t = measure(b, Pauli::Z, src);
    }
    record(op::Parity{a, b, t});
    log("parity", b, t);
    return t;
}

void GraphState::check_fusable(const QubitId &a, const QubitId &b) const {
    if (a == b) {
        throw Error(ErrorCode::invalid_pair, "fusion needs two distinct qubits");
    }
    require(a);
    require(b);
    auto comp = component(a);
    if (std::binary_search(comp.begin(), comp.end(), b)) {
        throw Error(ErrorCode::would_create_loop,
                    a.str() + " and " + b.str() + " are already connected");
    }
    for (const auto &q : {a, b}) {
        if (!star_center(q)) {
            throw Error(ErrorCode::unsupported_shape, "component of " + q.str() + " is not a star");
        }
    }
}

void GraphState::align_for_fusion(const QubitId &q) {
    // (U (x) U*) fixes a Bell pair, so any frame on one end of a 2-vertex
    // component can be pushed to the partner: nothing to align.
    if (component(q).size() == 2) return;
    bool as_root = *star_center(q) == q;
    // GHZ form: the star with H on every leaf.
    LocalClifford target = as_root ? LocalClifford::identity() : LocalClifford::h();
    LocalClifford c = frame_.at(q);
    if (c != target) {
        apply_gate(q, target * c.inverse());
    }
}

QubitId GraphState::pick_root(const QubitId &a, const QubitId &b,
                              const std::vector<QubitId> &comp_a,
                              const std::vector<QubitId> &comp_b, std::optional<QubitId> root,
                              const std::optional<QubitId> &center_a,
                              const std::optional<QubitId> &center_b) const {
    if (root) {
        if (!contains(*root)) {
            throw Error(ErrorCode::not_found, "requested root " + root->str() + " is gone");
        }
        return *root;
    }
    auto candidate = [](const QubitId &m, const std::vector<QubitId> &comp,
                        const std::optional<QubitId> &center) -> std::optional<QubitId> {
        if (*center != m) return center;
        if (comp.size() == 2) return comp.front() == m ? comp.back() : comp.front();
        return std::nullopt;
    };
    if (auto c = candidate(a, comp_a, center_a); c && contains(*c)) return *c;
    if (auto c = candidate(b, comp_b, center_b); c && contains(*c)) return *c;
    std::vector<QubitId> rest;
    for (const auto &v : comp_a) {
        if (contains(v)) rest.push_back(v);
    }
    for (const auto &v : comp_b) {
        if (contains(v)) rest.push_back(v);
    }
    return *std::min_element(rest.begin(), rest.end());
}

std::pair<int, int> GraphState::bell_merge(const QubitId &a, const QubitId &b,
                                           OutcomeSource &src, std::optional<QubitId> root) {
    check_fusable(a, b);
    auto comp_a = component(a);
    auto comp_b = component(b);
    auto center_a = star_center(a);
    auto center_b = star_center(b);
    align_for_fusion(a);
    align_for_fusion(b);
    auto outcome = bell_measure(a, b, src);
    if (comp_a.size() + comp_b.size() > 2) {
        QubitId r = pick_root(a, b, comp_a, comp_b, root, center_a, center_b);
        normalize_star(r);
    }
    return outcome;
}

int GraphState::merge_keep(const QubitId &a, const QubitId &b, OutcomeSource &src,
                           std::optional<QubitId> root) {
    check_fusable(a, b);
    auto comp_a = component(a);
    auto comp_b = component(b);
    auto center_a = star_center(a);
    auto center_b = star_center(b);
    align_for_fusion(a);
    align_for_fusion(b);
    int t = parity_measure(a, b, src);
    QubitId r = pick_root(a, b, comp_a, comp_b, root, center_a, center_b);
    normalize_star(r);
    return t;
}

void GraphState::discard(const QubitId &q) {
    require(q);
    if (!adj_.at(q).empty()) {
        throw Error(ErrorCode::invalid_argument, q.str() + " is still entangled");
    }
    record(op::Discard{q, frame_.at(q)});
    remove_vertex(q);
}

void GraphState::trace_out(const std::vector<QubitId> &qubits) {
    std::set<QubitId> gone(qubits.begin(), qubits.end());
    for (const auto &q : gone) {
        require(q);
        for (const auto &n : adj_.at(q)) {
            if (!gone.count(n)) {
                throw Error(ErrorCode::invalid_argument,
                            "tracing out " + q.str() + " would leave " + n.str() + " mixed");
            }
        }
    }
    record(op::TraceOut{{gone.begin(), gone.end()}});
    for (const auto &q : gone) remove_vertex(q);
}

void GraphState::relabel(const QubitId &from, const QubitId &to) {
    require(from);
    if (from == to) return;
    if (contains(to)) {
        throw Error(ErrorCode::invalid_labels, "qubit label in use: " + to.str());
    }
    auto nb = adj_.at(from);
    LocalClifford c = frame_.at(from);
    remove_vertex(from);
    adj_[to];
    frame_[to] = c;
    for (const auto &n : nb) {
        adj_[to].insert(n);
        adj_.at(n).insert(to);
    }
    record(op::Relabel{from, to});
}

// ---------------------------------------------------------------------------
// Value-returning forms

GraphState ghz_star(int n, const std::vector<QubitId> &labels) {
    if (n < 2 || static_cast<std::size_t>(n) != labels.size()) {
        throw Error(ErrorCode::invalid_size, "a star needs n >= 2 labels");
    }
    GraphState g;
    g.prepare_star(labels);
    return g;
}

GraphState local_complement(GraphState state, const QubitId &a) {
    state.local_complement(a);
    return state;
}

GraphState measure_z(GraphState state, const QubitId &a, OutcomeSource &src) {
    state.measure(a, Pauli::Z, src);
    return state;
}

GraphState measure_y(GraphState state, const QubitId &a, OutcomeSource &src) {
    state.measure(a, Pauli::Y, src);
    return state;
}

GraphState measure_x(GraphState state, const QubitId &a, const QubitId &b0, OutcomeSource &src) {
    state.measure(a, Pauli::X, src, b0);
    return state;
}

GraphState apply_cz(GraphState state, const QubitId &a, const QubitId &b) {
    state.apply_cz(a, b);
    return state;
}

GraphState bell_merge(GraphState state, const QubitId &a, const QubitId &b, OutcomeSource &src) {
    state.bell_merge(a, b, src);
    return state;
}

GraphState merge_keep(GraphState state, const QubitId &a, const QubitId &b, OutcomeSource &src) {
    state.merge_keep(a, b, src);
    return state;
}

}  // namespace qnet
