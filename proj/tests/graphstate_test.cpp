#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

namespace qnet {
namespace {

using testing::labels;
using testing::q;
namespace oc = oracle;

std::set<Edge> edge_set(const GraphState &g) {
    auto e = g.edges();
    return {e.begin(), e.end()};
}

std::set<Edge> edges_of(std::initializer_list<std::pair<QubitId, QubitId>> list) {
    std::set<Edge> out;
    for (const auto &[a, b] : list) out.insert(make_edge(a, b));
    return out;
}

template <class F>
void expect_error(ErrorCode code, F &&f) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

// ---------------------------------------------------------------------------
// Clifford group

TEST(LocalClifford, HasTwentyFourDistinctElementsClosedUnderProduct) {
    std::set<int> seen;
    for (int a = 0; a < LocalClifford::kCount; ++a) {
        for (int b = 0; b < LocalClifford::kCount; ++b) {
            auto ab = LocalClifford::from_index(a) * LocalClifford::from_index(b);
            auto m = multiply(LocalClifford::from_index(a).matrix(), LocalClifford::from_index(b).matrix());
            EXPECT_EQ(LocalClifford::from_matrix(m), ab);
            seen.insert(ab.index());
        }
    }
    EXPECT_EQ(seen.size(), 24u);
}

TEST(LocalClifford, InverseAndConjugationMatchMatrices) {
    for (int a = 0; a < LocalClifford::kCount; ++a) {
        auto c = LocalClifford::from_index(a);
        EXPECT_EQ(c * c.inverse(), LocalClifford::identity());
        for (auto p : {Pauli::X, Pauli::Y, Pauli::Z}) {
            auto sp = c.conjugate(p);
            // C P C^dagger compared entrywise with the signed Pauli.
            auto lhs = multiply(multiply(c.matrix(), pauli_matrix(p)), c.inverse().matrix());
            auto rhs = pauli_matrix(sp.pauli);
            // c.inverse().matrix() may differ from c^dagger by a phase.
            auto cd = multiply(c.matrix(), c.inverse().matrix());
            for (int k = 0; k < 4; ++k) {
                auto expect = (sp.negative ? -1.0 : 1.0) * rhs[k] * cd[0];
                EXPECT_NEAR(std::abs(lhs[k] - expect), 0.0, 1e-9);
            }
        }
    }
}

TEST(LocalClifford, NamedElements) {
    EXPECT_EQ(LocalClifford::identity().name(), "I");
    EXPECT_EQ(LocalClifford::h().name(), "H");
    EXPECT_EQ(LocalClifford::s().name(), "S");
    EXPECT_TRUE(LocalClifford::s().is_diagonal());
    EXPECT_FALSE(LocalClifford::h().is_diagonal());
    EXPECT_TRUE(LocalClifford::pauli(Pauli::X).is_pauli());
    EXPECT_EQ(LocalClifford::h().conjugate(Pauli::X), (SignedPauli{Pauli::Z, false}));
    EXPECT_EQ(LocalClifford::s().conjugate(Pauli::X), (SignedPauli{Pauli::Y, false}));
}

// ---------------------------------------------------------------------------
// ghz_star

TEST(GhzStar, TwoVerticesIsSingleEdge) {
    auto g = ghz_star(2, {q("a"), q("b")});
    EXPECT_EQ(edge_set(g), edges_of({{q("a"), q("b")}}));
}

TEST(GhzStar, FourVerticesRootDegreeThree) {
    auto vs = labels("n", 4);
    auto g = ghz_star(4, vs);
    EXPECT_EQ(g.neighbors(vs[0]).size(), 3u);
    for (int i = 1; i < 4; ++i) EXPECT_EQ(g.neighbors(vs[i]).size(), 1u);
    for (const auto &[v, c] : g.byproducts()) EXPECT_EQ(c, LocalClifford::identity());
}

TEST(GhzStar, StatevectorSatisfiesCorrelationOperators) {
    auto vs = labels("n", 3);
    auto g = ghz_star(3, vs);
    auto sv = oc::build_statevector(g);
    for (const auto &v : vs) {
        EXPECT_NEAR(oc::expect_pauli(sv, oc::correlation_operator(g, v)), 1.0, 1e-10);
    }
}

TEST(GhzStar, Errors) {
    expect_error(ErrorCode::invalid_size, [] { ghz_star(1, {q("a")}); });
    expect_error(ErrorCode::invalid_labels, [] { ghz_star(2, {q("a"), q("a")}); });
}

TEST(GhzStar, PreparedGhzIsLiteralGhz) {
    auto vs = labels("n", 4);
    GraphState g;
    g.prepare_ghz(vs);
    EXPECT_TRUE(oc::equal_up_to_phase(oc::physical_state(g), oc::ghz(vs)));
}

// ---------------------------------------------------------------------------
// local_complement

TEST(LocalComplement, StarRootGivesCompleteGraph) {
    auto vs = labels("n", 4);
    auto g = local_complement(ghz_star(4, vs), vs[0]);
    EXPECT_EQ(g.edges().size(), 6u);
}

TEST(LocalComplement, TwiceRestoresEdges) {
    std::mt19937_64 rng(3);
    auto g = testing::random_graph(rng, 6, false);
    auto v = g.vertices()[2];
    EXPECT_EQ(edge_set(local_complement(local_complement(g, v), v)), edge_set(g));
}

TEST(LocalComplement, PreservesPhysicalStateOnRandomGraph) {
    std::mt19937_64 rng(7);
    auto g = testing::random_graph(rng, 5, false);
    auto before = oc::physical_state(g);
    for (const auto &v : g.vertices()) {
        auto after = local_complement(g, v);
        EXPECT_TRUE(oc::equal_up_to_phase(before, oc::physical_state(after))) << v.str();
    }
}

TEST(LocalComplement, UnknownVertex) {
    expect_error(ErrorCode::not_found, [] { local_complement(ghz_star(2, labels("n", 2)), q("zz")); });
}

// ---------------------------------------------------------------------------
// measure_z

TEST(MeasureZ, LeafOfStarFourLeavesStarThree) {
    auto vs = labels("n", 4);
    for (int bit : {0, 1}) {
        auto src = OutcomeSource::fixed(bit);
        auto before = ghz_star(4, vs);
        auto g = measure_z(before, vs[3], src);
        EXPECT_TRUE(testing::is_star(g));
        EXPECT_EQ(g.size(), 3u);
        EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(before, vs[3], Pauli::Z, bit)));
    }
}

TEST(MeasureZ, OnlyVertexLeavesEmptyState) {
    GraphState g;
    g.prepare({q("a")}, {});
    auto src = OutcomeSource::fixed(0);
    EXPECT_EQ(measure_z(g, q("a"), src).size(), 0u);
}

TEST(MeasureZ, TriangleOutcomeZeroKeepsOppositeEdge) {
    auto a = q("a"), b = q("b"), c = q("c");
    GraphState tri;
    tri.prepare({a, b, c}, {{a, b}, {b, c}, {a, c}});
    auto src = OutcomeSource::fixed(0);
    auto g = measure_z(tri, a, src);
    EXPECT_EQ(edge_set(g), edges_of({{b, c}}));
    EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(tri, a, Pauli::Z, 0)));
}

TEST(MeasureZ, DisjointMeasurementsCommute) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = testing::random_graph(rng, 7, false);
        auto vs = g.vertices();
        auto x = vs[1], y = vs[4];
        auto s1 = OutcomeSource::fixed({1, 0});
        auto s2 = OutcomeSource::fixed({0, 1});
        auto first = measure_z(measure_z(g, x, s1), y, s1);
        auto second = measure_z(measure_z(g, y, s2), x, s2);
        EXPECT_EQ(edge_set(first), edge_set(second));
        EXPECT_TRUE(oc::equal_up_to_phase(oc::physical_state(first), oc::physical_state(second)));
    }
}

// ---------------------------------------------------------------------------
// measure_y

TEST(MeasureY, MiddleOfPathShortensWire) {
    auto a = q("a"), b = q("b"), c = q("c");
    GraphState path;
    path.prepare({a, b, c}, {{a, b}, {b, c}});
    auto src = OutcomeSource::fixed(0);
    auto g = measure_y(path, b, src);
    EXPECT_EQ(edge_set(g), edges_of({{a, c}}));
}

TEST(MeasureY, LeafOfStarThree) {
    auto vs = labels("n", 3);
    for (int bit : {0, 1}) {
        auto before = ghz_star(3, vs);
        auto src = OutcomeSource::fixed(bit);
        auto g = measure_y(before, vs[2], src);
        EXPECT_EQ(g.size(), 2u);
        EXPECT_TRUE(g.has_edge(vs[0], vs[1]));
        EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(before, vs[2], Pauli::Y, bit)));
    }
}

TEST(MeasureY, FourCycleBothOutcomes) {
    auto vs = labels("c", 4);
    GraphState cyc;
    cyc.prepare(vs, {{vs[0], vs[1]}, {vs[1], vs[2]}, {vs[2], vs[3]}, {vs[3], vs[0]}});
    for (int bit : {0, 1}) {
        auto src = OutcomeSource::fixed(bit);
        auto g = measure_y(cyc, vs[0], src);
        EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(cyc, vs[0], Pauli::Y, bit)));
    }
}

// ---------------------------------------------------------------------------
// measure_x

TEST(MeasureX, RootOfStarFourGivesStarAtSpecialNeighbor) {
    auto vs = labels("n", 4);
    for (int bit : {0, 1}) {
        auto before = ghz_star(4, vs);
        auto src = OutcomeSource::fixed(bit);
        auto g = measure_x(before, vs[0], vs[1], src);
        EXPECT_EQ(g.size(), 3u);
        EXPECT_EQ(g.star_center(vs[1]), vs[1]);
        EXPECT_EQ(g.neighbors(vs[1]).size(), 2u);
        EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(before, vs[0], Pauli::X, bit)));
    }
}

TEST(MeasureX, IsolatedVertexIsRemovedDeterministically) {
    auto a = q("a"), b = q("b"), c = q("c");
    GraphState g;
    g.prepare({a, b, c}, {{b, c}});
    auto src = OutcomeSource::fixed(1);
    auto out = measure_x(g, a, b, src);
    EXPECT_EQ(edge_set(out), edges_of({{b, c}}));
    // |+> always yields +1 for X regardless of the supplied bit.
    EXPECT_EQ(out.outcome_log().back().bit, 0);
}

TEST(MeasureX, FourPathBothOutcomes) {
    auto vs = labels("p", 4);
    GraphState path;
    path.prepare(vs, {{vs[0], vs[1]}, {vs[1], vs[2]}, {vs[2], vs[3]}});
    for (int bit : {0, 1}) {
        auto src = OutcomeSource::fixed(bit);
        auto g = measure_x(path, vs[1], vs[2], src);
        EXPECT_TRUE(testing::same_physical(g, testing::expected_after_measure(path, vs[1], Pauli::X, bit)));
    }
}

TEST(MeasureX, SpecialNeighborMustBeAdjacent) {
    auto vs = labels("p", 3);
    GraphState path;
    path.prepare(vs, {{vs[0], vs[1]}, {vs[1], vs[2]}});
    auto src = OutcomeSource::fixed(0);
    expect_error(ErrorCode::invalid_special_neighbor, [&] { measure_x(path, vs[0], vs[2], src); });
}

// ---------------------------------------------------------------------------
// apply_cz

TEST(ApplyCz, JoinsTwoSingles) {
    GraphState g;
    g.prepare({q("a")}, {});
    g.prepare({q("b")}, {});
    auto out = apply_cz(g, q("a"), q("b"));
    EXPECT_EQ(edge_set(out), edges_of({{q("a"), q("b")}}));
}

TEST(ApplyCz, TwiceRestores) {
    std::mt19937_64 rng(5);
    auto g = testing::random_graph(rng, 5, false);
    auto vs = g.vertices();
    EXPECT_EQ(edge_set(apply_cz(apply_cz(g, vs[0], vs[3]), vs[0], vs[3])), edge_set(g));
}

TEST(ApplyCz, AcrossTwoBellPairsGivesPath) {
    auto a = q("a"), b = q("b"), c = q("c"), d = q("d");
    GraphState g = ghz_star(2, {a, b});
    g.absorb(ghz_star(2, {c, d}));
    auto out = apply_cz(g, b, c);
    EXPECT_EQ(edge_set(out), edges_of({{a, b}, {b, c}, {c, d}}));
    auto sv = oc::physical_state(g);
    oc::apply_cz(sv, b, c);
    EXPECT_TRUE(testing::same_physical(out, sv));
}

TEST(ApplyCz, SameQubitRejected) {
    expect_error(ErrorCode::invalid_pair, [] { apply_cz(ghz_star(2, labels("n", 2)), q("n0"), q("n0")); });
}

TEST(ApplyCz, ArbitraryFramesMatchOracle) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng() % 5);
        auto g = testing::random_graph(rng, n, true);
        auto vs = g.vertices();
        auto a = vs[rng() % vs.size()];
        auto b = vs[rng() % vs.size()];
        if (a == b) continue;
        auto sv = oc::physical_state(g);
        oc::apply_cz(sv, a, b);
        EXPECT_TRUE(testing::same_physical(apply_cz(g, a, b), sv)) << "trial " << trial;
    }
}

// ---------------------------------------------------------------------------
// bell_merge / merge_keep

GraphState two_ghz(int m, int n) {
    GraphState g;
    g.prepare_ghz(labels("a", m));
    g.prepare_ghz(labels("b", n));
    return g;
}

// Oracle-side reference: Bell-measure the last qubit of each GHZ and apply
// the textbook corrections X^t on the second block and Z^s on one qubit.
oc::StateVector corrected_bell_result(int m, int n, int s, int t, std::vector<QubitId> &rest) {
    auto am = labels("a", m);
    auto bn = labels("b", n);
    auto sv = oc::tensor(oc::ghz(am), oc::ghz(bn));
    auto out = oc::measure_bell(sv, am.back(), bn.back(), s, t).state;
    rest.clear();
    for (int i = 0; i + 1 < m; ++i) rest.push_back(am[i]);
    for (int i = 0; i + 1 < n; ++i) rest.push_back(bn[i]);
    for (int i = 0; i + 1 < n; ++i) {
        if (t) oc::apply_single(out, bn[i], pauli_matrix(Pauli::X));
    }
    if (s) oc::apply_single(out, rest.front(), pauli_matrix(Pauli::Z));
    return out;
}

TEST(BellMerge, TwoGhzThreeGiveGhzFour) {
    auto g = two_ghz(3, 3);
    auto src = OutcomeSource::seeded(1);
    g.bell_merge(q("a2"), q("b2"), src);
    EXPECT_EQ(g.size(), 4u);
    EXPECT_TRUE(testing::is_star(g));
}

TEST(BellMerge, BellPairsSwap) {
    auto g = two_ghz(2, 2);
    auto src = OutcomeSource::seeded(2);
    g.bell_merge(q("a1"), q("b0"), src);
    EXPECT_EQ(edge_set(g), edges_of({{q("a0"), q("b1")}}));
}

TEST(BellMerge, AllOutcomesOnGhzThreeAndFour) {
    for (int s : {0, 1}) {
        for (int t : {0, 1}) {
            auto g = two_ghz(3, 4);
            auto before = oc::physical_state(g);
            auto src = OutcomeSource::fixed({s, t});
            auto got = g.bell_merge(q("a2"), q("b3"), src);
            ASSERT_EQ(got, std::make_pair(s, t));
            EXPECT_TRUE(testing::is_star(g));
            EXPECT_EQ(g.size(), 5u);
            auto direct = oc::measure_bell(before, q("a2"), q("b3"), s, t).state;
            EXPECT_TRUE(testing::same_physical(g, direct));
            std::vector<QubitId> rest;
            auto corrected = corrected_bell_result(3, 4, s, t, rest);
            EXPECT_TRUE(oc::equal_up_to_phase(corrected, oc::ghz(rest)));
        }
    }
}

TEST(BellMerge, SameComponentRejected) {
    auto g = ghz_star(3, labels("n", 3));
    auto src = OutcomeSource::fixed(0);
    expect_error(ErrorCode::would_create_loop, [&] { bell_merge(g, q("n1"), q("n2"), src); });
}

TEST(BellMerge, NonStarRejected) {
    auto vs = labels("p", 4);
    GraphState g;
    g.prepare(vs, {{vs[0], vs[1]}, {vs[1], vs[2]}, {vs[2], vs[3]}});
    g.prepare_ghz({q("x0"), q("x1")});
    auto src = OutcomeSource::fixed(0);
    expect_error(ErrorCode::unsupported_shape, [&] { bell_merge(g, vs[0], q("x0"), src); });
}

TEST(MergeKeep, BellPairsGiveGhzThree) {
    auto g = two_ghz(2, 2);
    auto before = oc::physical_state(g);
    auto src = OutcomeSource::fixed(1);
    int t = g.merge_keep(q("a1"), q("b0"), src);
    EXPECT_EQ(g.size(), 3u);
    EXPECT_TRUE(testing::is_star(g));
    EXPECT_TRUE(testing::same_physical(g, oc::measure_parity(before, q("a1"), q("b0"), t).state));
}

TEST(MergeKeep, SizeLawSweep) {
    for (int m = 2; m <= 4; ++m) {
        for (int n = 2; n <= 4; ++n) {
            auto g = two_ghz(m, n);
            auto before = oc::physical_state(g);
            auto src = OutcomeSource::seeded(static_cast<std::uint64_t>(m * 10 + n));
            int t = g.merge_keep(q("a0"), q("b" + std::to_string(n - 1)), src);
            EXPECT_EQ(g.size(), static_cast<std::size_t>(m + n - 1));
            EXPECT_TRUE(testing::is_star(g));
            EXPECT_TRUE(testing::same_physical(
                g, oc::measure_parity(before, q("a0"), q("b" + std::to_string(n - 1)), t).state));
        }
    }
}

TEST(MergeKeep, PreferredRootHonored) {
    auto g = two_ghz(3, 2);
    auto src = OutcomeSource::fixed(0);
    g.merge_keep(q("a1"), q("b0"), src, q("b1"));
    EXPECT_EQ(g.star_center(q("b1")), q("b1"));
    EXPECT_EQ(g.neighbors(q("b1")).size(), 3u);
}

// ---------------------------------------------------------------------------
// Certification by trace replay

TEST(Certify, RandomOperationSequencesReplayExactly) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        auto g = testing::random_graph(rng, 6, true);
        auto src = OutcomeSource::seeded(rng());
        for (int step = 0; step < 4 && g.size() > 1; ++step) {
            auto vs = g.vertices();
            auto a = vs[rng() % vs.size()];
            auto b = vs[rng() % vs.size()];
            switch (rng() % 4) {
                case 0: g.measure(a, Pauli::Z, src); break;
                case 1: g.measure(a, Pauli::Y, src); break;
                case 2: g.measure(a, Pauli::X, src); break;
                default:
                    if (a != b) g.apply_cz(a, b);
                    break;
            }
        }
        auto cert = oc::certify(g);
        EXPECT_EQ(cert.verdict, oc::Verdict::pass) << cert.detail;
    }
}

TEST(Determinism, SameSeedSameOutcomeLog) {
    auto run = [] {
        std::mt19937_64 rng(99);
        auto g = testing::random_graph(rng, 7, true);
        auto src = OutcomeSource::seeded(1234);
        for (const auto &v : g.vertices()) {
            if (v.device == "v6") break;
            g.measure(v, Pauli::Y, src);
        }
        return g.outcome_log();
    };
    EXPECT_EQ(run(), run());
}

TEST(OutcomeSource, SplitStreamsAreIndependentAndReproducible) {
    auto base = OutcomeSource::seeded(5);
    auto a = base.split(1), b = base.split(1), c = base.split(2);
    std::vector<int> xa, xb, xc;
    for (int i = 0; i < 64; ++i) {
        xa.push_back(a.next());
        xb.push_back(b.next());
        xc.push_back(c.next());
    }
    EXPECT_EQ(xa, xb);
    EXPECT_NE(xa, xc);
}

}  // namespace
}  // namespace qnet
