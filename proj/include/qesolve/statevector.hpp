#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace qesolve {

using Complex = std::complex<double>;
using Matrix2 = std::array<Complex, 4>;  // row-major 2x2
using Matrix4 = std::array<Complex, 16>; // row-major 4x4

inline constexpr std::size_t kMaxQubits = 26;

/// Real diagonal operator in the computational basis.
struct DiagonalOperator {
    std::size_t n_qubits = 0;
    std::vector<double> entries;

    DiagonalOperator() = default;
    DiagonalOperator(std::size_t q, std::vector<double> values)
        : n_qubits(q), entries(std::move(values)) {
        require(entries.size() == (std::size_t{1} << q),
                "diagonal operator needs 2^q entries");
        for (double e : entries) {
            require(std::isfinite(e), "diagonal operator entry is not finite");
        }
    }
};

/// Measurement record: basis index -> number of shots.
using Counts = std::map<std::uint64_t, std::uint64_t>;

/// Dense statevector over q qubits.
///
/// Qubit 0 is the most significant bit of the basis index. Rotation
/// conventions: Rx(t) = exp(-i t X/2), Rz(t) = exp(-i t Z/2),
/// RZZ(t) = exp(-i t ZZ/2), iSWAP = exp(i pi/4 (XX + YY)).
class Statevector {
  public:
    explicit Statevector(std::size_t n_qubits) : n_qubits_(n_qubits) {
        require(n_qubits >= 1 && n_qubits <= kMaxQubits,
                "qubit count must be in [1, " + std::to_string(kMaxQubits) +
                    "], got " + std::to_string(n_qubits));
        amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
        amps_[0] = 1.0;
    }

    static Statevector basis(std::size_t n_qubits, std::uint64_t index) {
        Statevector sv(n_qubits);
        require(index < sv.dim(), "basis index out of range");
        sv.amps_[0] = 0.0;
        sv.amps_[index] = 1.0;
        return sv;
    }

    static Statevector from_amplitudes(std::vector<Complex> amps) {
        std::size_t q = 0;
        while ((std::size_t{1} << q) < amps.size()) {
            ++q;
        }
        require(!amps.empty() && (std::size_t{1} << q) == amps.size(),
                "amplitude count must be a power of two");
        Statevector sv(q);
        sv.amps_ = std::move(amps);
        return sv;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept {
        return amps_;
    }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }
    [[nodiscard]] Complex operator[](std::size_t k) const { return amps_[k]; }

    [[nodiscard]] double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return s;
    }

    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> p(dim());
        for (std::size_t k = 0; k < dim(); ++k) {
            p[k] = std::norm(amps_[k]);
        }
        return p;
    }

    void apply_matrix(std::size_t qubit, const Matrix2 &m) {
        const std::size_t bit = mask(qubit);
        for (std::size_t i0 = 0; i0 < dim(); ++i0) {
            if ((i0 & bit) != 0U) {
                continue;
            }
            const std::size_t i1 = i0 | bit;
            const Complex a0 = amps_[i0];
            const Complex a1 = amps_[i1];
            amps_[i0] = m[0] * a0 + m[1] * a1;
            amps_[i1] = m[2] * a0 + m[3] * a1;
        }
    }

    /// Applies a 4x4 matrix whose basis order is |q1 q2> with q1 the more
    /// significant position of the local index.
    void apply_matrix(std::size_t q1, std::size_t q2, const Matrix4 &m) {
        require(q1 != q2, "two-qubit gate needs distinct qubits");
        const std::size_t b1 = mask(q1);
        const std::size_t b2 = mask(q2);
        for (std::size_t base = 0; base < dim(); ++base) {
            if ((base & (b1 | b2)) != 0U) {
                continue;
            }
            const std::array<std::size_t, 4> idx{base, base | b2, base | b1,
                                                 base | b1 | b2};
            std::array<Complex, 4> in{};
            for (std::size_t r = 0; r < 4; ++r) {
                in[r] = amps_[idx[r]];
            }
            for (std::size_t r = 0; r < 4; ++r) {
                Complex acc{0.0, 0.0};
                for (std::size_t c = 0; c < 4; ++c) {
                    acc += m[4 * r + c] * in[c];
                }
                amps_[idx[r]] = acc;
            }
        }
    }

    void apply_rx(std::size_t qubit, double theta) {
        apply_matrix(qubit, rx_matrix(theta));
    }

    void apply_rz(std::size_t qubit, double phi) {
        const std::size_t bit = mask(qubit);
        const Complex p0 = std::polar(1.0, -phi / 2.0);
        const Complex p1 = std::polar(1.0, phi / 2.0);
        for (std::size_t k = 0; k < dim(); ++k) {
            amps_[k] *= (k & bit) != 0U ? p1 : p0;
        }
    }

    void apply_x(std::size_t qubit) {
        const std::size_t bit = mask(qubit);
        for (std::size_t k = 0; k < dim(); ++k) {
            if ((k & bit) == 0U) {
                std::swap(amps_[k], amps_[k | bit]);
            }
        }
    }

    void apply_h(std::size_t qubit) {
        const double s = 1.0 / std::numbers::sqrt2;
        apply_matrix(qubit, Matrix2{s, s, s, -s});
    }

    void apply_iswap(std::size_t q1, std::size_t q2) {
        require(q1 != q2, "iSWAP needs distinct qubits");
        const std::size_t b1 = mask(q1);
        const std::size_t b2 = mask(q2);
        const Complex i{0.0, 1.0};
        for (std::size_t k = 0; k < dim(); ++k) {
            if ((k & b1) != 0U && (k & b2) == 0U) {
                const std::size_t j = (k & ~b1) | b2;
                const Complex a = amps_[k];
                amps_[k] = i * amps_[j];
                amps_[j] = i * a;
            }
        }
    }

    void apply_cnot(std::size_t control, std::size_t target) {
        require(control != target, "CNOT needs distinct qubits");
        const std::size_t bc = mask(control);
        const std::size_t bt = mask(target);
        for (std::size_t k = 0; k < dim(); ++k) {
            if ((k & bc) != 0U && (k & bt) == 0U) {
                std::swap(amps_[k], amps_[k | bt]);
            }
        }
    }

    void apply_toffoli(std::size_t c1, std::size_t c2, std::size_t target) {
        require(c1 != c2 && c1 != target && c2 != target,
                "Toffoli needs three distinct qubits");
        const std::size_t b1 = mask(c1);
        const std::size_t b2 = mask(c2);
        const std::size_t bt = mask(target);
        for (std::size_t k = 0; k < dim(); ++k) {
            if ((k & b1) != 0U && (k & b2) != 0U && (k & bt) == 0U) {
                std::swap(amps_[k], amps_[k | bt]);
            }
        }
    }

    void apply_rzz(std::size_t q1, std::size_t q2, double phi) {
        require(q1 != q2, "RZZ needs distinct qubits");
        const std::size_t b1 = mask(q1);
        const std::size_t b2 = mask(q2);
        const Complex same = std::polar(1.0, -phi / 2.0);
        const Complex diff = std::polar(1.0, phi / 2.0);
        for (std::size_t k = 0; k < dim(); ++k) {
            const bool parity = ((k & b1) != 0U) != ((k & b2) != 0U);
            amps_[k] *= parity ? diff : same;
        }
    }

    /// amp_k <- exp(i gamma entries_k) amp_k
    void apply_diagonal_phase(const DiagonalOperator &diag, double gamma) {
        require(diag.entries.size() == dim(),
                "diagonal operator dimension does not match the state");
        for (std::size_t k = 0; k < dim(); ++k) {
            amps_[k] *= std::polar(1.0, gamma * diag.entries[k]);
        }
    }

    /// exp(i beta sum_k X_k), realized as Rx(-2 beta) on every qubit.
    void apply_mixer(double beta) {
        const Matrix2 m = rx_matrix(-2.0 * beta);
        for (std::size_t q = 0; q < n_qubits_; ++q) {
            apply_matrix(q, m);
        }
    }

    static Matrix2 rx_matrix(double theta) {
        const double c = std::cos(theta / 2.0);
        const double s = std::sin(theta / 2.0);
        return Matrix2{Complex{c, 0.0}, Complex{0.0, -s}, Complex{0.0, -s},
                       Complex{c, 0.0}};
    }

  private:
    [[nodiscard]] std::size_t mask(std::size_t qubit) const {
        require(qubit < n_qubits_, "qubit index " + std::to_string(qubit) +
                                       " out of range for " +
                                       std::to_string(n_qubits_) + " qubits");
        return std::size_t{1} << (n_qubits_ - 1 - qubit);
    }

    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

/// Uniform superposition |+>^q.
inline Statevector init_plus(std::size_t q) {
    Statevector sv(q);
    const double a = 1.0 / std::sqrt(static_cast<double>(sv.dim()));
    for (auto &amp : sv.amplitudes()) {
        amp = a;
    }
    return sv;
}

inline double expectation_diagonal(const Statevector &state,
                                   const DiagonalOperator &diag) {
    require(diag.entries.size() == state.dim(),
            "diagonal operator dimension does not match the state");
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t k = 0; k < amps.size(); ++k) {
        acc += diag.entries[k] * std::norm(amps[k]);
    }
    return acc;
}

/// Draws n_shots computational-basis outcomes from |amp|^2.
inline Counts sample(const Statevector &state, std::uint64_t n_shots, Rng &rng) {
    require(n_shots >= 1, "sample needs at least one shot");
    const auto probs = state.probabilities();
    std::discrete_distribution<std::uint64_t> dist(probs.begin(), probs.end());
    std::vector<std::uint64_t> tally(probs.size(), 0);
    for (std::uint64_t s = 0; s < n_shots; ++s) {
        ++tally[dist(rng)];
    }
    Counts counts;
    for (std::size_t k = 0; k < tally.size(); ++k) {
        if (tally[k] != 0) {
            counts.emplace(k, tally[k]);
        }
    }
    return counts;
}

inline Counts sample(const Statevector &state, std::uint64_t n_shots,
                     std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return sample(state, n_shots, rng);
}

} // namespace qesolve
