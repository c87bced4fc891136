#include "qnet/clifford.hpp"

#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "qnet/common.hpp"

namespace qnet {

namespace {

using cd = std::complex<double>;
constexpr double kEps = 1e-9;

Matrix2 canonical_phase(Matrix2 m) {
    for (const auto &z : m) {
        if (std::abs(z) > kEps) {
            cd phase = std::conj(z) / std::abs(z);
            for (auto &w : m) {
                w *= phase;
            }
            break;
        }
    }
    return m;
}

bool same(const Matrix2 &a, const Matrix2 &b) {
    for (size_t k = 0; k < 4; ++k) {
        if (std::abs(a[k] - b[k]) > 1e-7) {
            return false;
        }
    }
    return true;
}

Matrix2 dagger(const Matrix2 &m) {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

struct Tables {
    std::vector<Matrix2> matrices;
    std::array<std::array<int, LocalClifford::kCount>, LocalClifford::kCount> product{};
    std::array<int, LocalClifford::kCount> inverse{};
    std::array<std::array<SignedPauli, 4>, LocalClifford::kCount> conj{};

    std::optional<int> find(const Matrix2 &m) const {
        Matrix2 c = canonical_phase(m);
        for (size_t k = 0; k < matrices.size(); ++k) {
            if (same(matrices[k], c)) {
                return static_cast<int>(k);
            }
        }
        return std::nullopt;
    }

    Tables() {
        const double r = 1.0 / std::sqrt(2.0);
        const Matrix2 h{r, r, r, -r};
        const Matrix2 s{1, 0, 0, cd(0, 1)};
        std::deque<Matrix2> queue{canonical_phase(pauli_matrix(Pauli::I))};
        matrices.push_back(queue.front());
        while (!queue.empty()) {
            Matrix2 cur = queue.front();
            queue.pop_front();
            for (const auto &g : {h, s}) {
                Matrix2 next = canonical_phase(multiply(g, cur));
                if (!find(next)) {
                    matrices.push_back(next);
                    queue.push_back(next);
                }
            }
        }
        if (matrices.size() != LocalClifford::kCount) {
            throw std::logic_error("single-qubit Clifford enumeration is broken");
        }
        for (int a = 0; a < LocalClifford::kCount; ++a) {
            for (int b = 0; b < LocalClifford::kCount; ++b) {
                product[a][b] = *find(multiply(matrices[a], matrices[b]));
            }
            inverse[a] = *find(dagger(matrices[a]));
            for (auto p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
                Matrix2 q = multiply(multiply(matrices[a], pauli_matrix(p)), dagger(matrices[a]));
                bool matched = false;
                for (auto t : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
                    Matrix2 pt = pauli_matrix(t);
                    Matrix2 neg = pt;
                    for (auto &z : neg) z = -z;
                    if (same(q, pt)) {
                        conj[a][static_cast<int>(p)] = {t, false};
                        matched = true;
                    } else if (same(q, neg)) {
                        conj[a][static_cast<int>(p)] = {t, true};
                        matched = true;
                    }
                }
                if (!matched) {
                    throw std::logic_error("Clifford conjugation table is broken");
                }
            }
        }
    }
};

const Tables &tables() {
    static const Tables t;
    return t;
}

}  // namespace

char to_char(Pauli p) {
    switch (p) {
        case Pauli::I: return 'I';
        case Pauli::X: return 'X';
        case Pauli::Y: return 'Y';
        case Pauli::Z: return 'Z';
    }
    return '?';
}

Matrix2 pauli_matrix(Pauli p) {
    switch (p) {
        case Pauli::I: return {1, 0, 0, 1};
        case Pauli::X: return {0, 1, 1, 0};
        case Pauli::Y: return {0, cd(0, -1), cd(0, 1), 0};
        case Pauli::Z: return {1, 0, 0, -1};
    }
    return {};
}

Matrix2 multiply(const Matrix2 &a, const Matrix2 &b) {
    return {
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    };
}

LocalClifford LocalClifford::pauli(Pauli p) {
    return from_matrix(pauli_matrix(p));
}

LocalClifford LocalClifford::h() {
    const double r = 1.0 / std::sqrt(2.0);
    return from_matrix({r, r, r, -r});
}

LocalClifford LocalClifford::s() {
    return from_matrix({1, 0, 0, cd(0, 1)});
}

LocalClifford LocalClifford::s_dag() {
    return from_matrix({1, 0, 0, cd(0, -1)});
}

namespace {

// exp(i * sign * pi/4 * P) = (I + i*sign*P)/sqrt(2)
LocalClifford quarter_rotation(Pauli p, int sign) {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix2 pm = pauli_matrix(p);
    Matrix2 m{};
    for (size_t k = 0; k < 4; ++k) {
        cd id = (k == 0 || k == 3) ? cd(1, 0) : cd(0, 0);
        m[k] = r * (id + cd(0, sign) * pm[k]);
    }
    return LocalClifford::from_matrix(m);
}

}  // namespace

LocalClifford LocalClifford::sqrt_minus_ix() {
    return quarter_rotation(Pauli::X, -1);
}

LocalClifford LocalClifford::sqrt_plus_iz() {
    return quarter_rotation(Pauli::Z, +1);
}

LocalClifford LocalClifford::sqrt_minus_iz() {
    return quarter_rotation(Pauli::Z, -1);
}

LocalClifford LocalClifford::sqrt_plus_iy() {
    return quarter_rotation(Pauli::Y, +1);
}

LocalClifford LocalClifford::sqrt_minus_iy() {
    return quarter_rotation(Pauli::Y, -1);
}

LocalClifford LocalClifford::from_matrix(const Matrix2 &m) {
    auto found = tables().find(m);
    if (!found) {
        throw Error(ErrorCode::invalid_argument, "matrix is not a single-qubit Clifford");
    }
    return LocalClifford(*found);
}

LocalClifford LocalClifford::from_index(int index) {
    if (index < 0 || index >= kCount) {
        throw Error(ErrorCode::invalid_argument, "Clifford index out of range");
    }
    return LocalClifford(index);
}

const Matrix2 &LocalClifford::matrix() const {
    return tables().matrices[index_];
}

LocalClifford LocalClifford::operator*(LocalClifford rhs) const {
    return LocalClifford(tables().product[index_][rhs.index_]);
}

LocalClifford LocalClifford::inverse() const {
    return LocalClifford(tables().inverse[index_]);
}

SignedPauli LocalClifford::conjugate(Pauli p) const {
    return tables().conj[index_][static_cast<int>(p)];
}

bool LocalClifford::is_diagonal() const {
    return conjugate(Pauli::Z).pauli == Pauli::Z;
}

bool LocalClifford::is_pauli() const {
    for (auto p : {Pauli::X, Pauli::Z}) {
        if (conjugate(p).pauli != p) {
            return false;
        }
    }
    return true;
}

std::string LocalClifford::name() const {
    struct Named {
        LocalClifford (*make)();
        const char *name;
    };
    static const Named named[] = {
        {&LocalClifford::identity, "I"},
        {[] { return LocalClifford::pauli(Pauli::X); }, "X"},
        {[] { return LocalClifford::pauli(Pauli::Y); }, "Y"},
        {[] { return LocalClifford::pauli(Pauli::Z); }, "Z"},
        {&LocalClifford::h, "H"},
        {&LocalClifford::s, "S"},
        {&LocalClifford::s_dag, "Sdg"},
        {&LocalClifford::sqrt_minus_ix, "SXdg"},
        {[] { return LocalClifford::sqrt_minus_ix().inverse(); }, "SX"},
        {&LocalClifford::sqrt_plus_iy, "SY"},
        {&LocalClifford::sqrt_minus_iy, "SYdg"},
    };
    for (const auto &n : named) {
        if (n.make() == *this) {
            return n.name;
        }
    }
    return "C" + std::to_string(index_);
}

}  // namespace qnet
