#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>

namespace qnet {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);

struct SignedPauli {
    Pauli pauli = Pauli::I;
    bool negative = false;

    friend bool operator==(const SignedPauli &, const SignedPauli &) = default;
};

/// Row-major 2x2 complex matrix.
using Matrix2 = std::array<std::complex<double>, 4>;

Matrix2 pauli_matrix(Pauli p);
Matrix2 multiply(const Matrix2 &a, const Matrix2 &b);

/// One of the 24 single-qubit Clifford operations, modulo global phase.
///
/// Elements are enumerated once (breadth first over products of H and S) and
/// afterwards handled as small integers, so composition and Pauli conjugation
/// are table lookups.
class LocalClifford {
  public:
    static constexpr int kCount = 24;

    constexpr LocalClifford() = default;

    static LocalClifford identity() {
        return LocalClifford{};
    }
    static LocalClifford pauli(Pauli p);
    static LocalClifford h();
    /// diag(1, i)
    static LocalClifford s();
    static LocalClifford s_dag();
    /// exp(-i pi/4 X) = (I - iX)/sqrt(2)
    static LocalClifford sqrt_minus_ix();
    /// exp(+i pi/4 Z) = (I + iZ)/sqrt(2)
    static LocalClifford sqrt_plus_iz();
    /// exp(-i pi/4 Z)
    static LocalClifford sqrt_minus_iz();
    /// exp(+i pi/4 Y)
    static LocalClifford sqrt_plus_iy();
    /// exp(-i pi/4 Y)
    static LocalClifford sqrt_minus_iy();

    /// Throws Error(invalid_argument) if `m` is not a Clifford up to phase.
    static LocalClifford from_matrix(const Matrix2 &m);
    static LocalClifford from_index(int index);

    int index() const {
        return index_;
    }
    const Matrix2 &matrix() const;

    /// Composition: (a * b) applies b first, then a.
    LocalClifford operator*(LocalClifford rhs) const;
    LocalClifford inverse() const;

    /// C P C^dagger as a signed Pauli.
    SignedPauli conjugate(Pauli p) const;

    /// True iff the element maps Z to +-Z, i.e. it commutes with CZ.
    bool is_diagonal() const;
    bool is_pauli() const;

    /// Stable short name used in reports ("I", "X", "H", "S", "C13", ...).
    std::string name() const;

    friend bool operator==(LocalClifford, LocalClifford) = default;

  private:
    explicit constexpr LocalClifford(int index) : index_(index) {
    }

    int index_ = 0;
};

}  // namespace qnet
