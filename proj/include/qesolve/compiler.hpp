#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ansatz.hpp"
#include "common.hpp"
#include "encoding.hpp"
#include "estimator.hpp"
#include "statevector.hpp"

namespace qesolve {

// ---------------------------------------------------------------------------
// Logical IR: label-controlled diagonal rotations.
// ---------------------------------------------------------------------------

/// Controlled exp(i angle Z_a) or exp(i angle Z_a Z_b) on data qubits,
/// applied when the label register holds `label`.
struct IRTerm {
    std::size_t label = 0;
    std::size_t target_a = 0;
    int target_b = -1;
    double angle = 0.0;
};

struct LogicalIR {
    std::size_t n_label_qubits = 0;
    std::size_t n_data_qubits = 0;
    std::vector<IRTerm> terms;
};

inline LogicalIR lower_phase_separator(const EncodingScheme &scheme,
                                       const CostHamiltonian &H, double gamma) {
    require(H.n_groups == scheme.n_groups && H.group_size == scheme.group_size,
            "Hamiltonian was built for a different encoding");
    LogicalIR ir;
    ir.n_label_qubits = scheme.n_label_qubits;
    ir.n_data_qubits = scheme.group_size;
    if (gamma == 0.0) {
        return ir;
    }
    for (const auto &t : H.terms) {
        require(t.label < scheme.n_groups, "term label out of range");
        require(t.qubit_b != static_cast<int>(t.qubit_a), "term targets must differ");
        const double angle = gamma * t.coeff;
        require(std::isfinite(angle), "phase-separator angle is not finite");
        if (angle != 0.0) {
            ir.terms.push_back({t.label, t.qubit_a, t.qubit_b, angle});
        }
    }
    return ir;
}

// ---------------------------------------------------------------------------
// Gate-level circuits.
// ---------------------------------------------------------------------------

enum class GateKind { rx90, rz, iswap, x, h, rx, cnot, toffoli, rzz };

inline constexpr std::size_t arity(GateKind k) {
    switch (k) {
    case GateKind::iswap:
    case GateKind::cnot:
    case GateKind::rzz:
        return 2;
    case GateKind::toffoli:
        return 3;
    default:
        return 1;
    }
}

inline constexpr bool has_angle(GateKind k) {
    return k == GateKind::rz || k == GateKind::rx || k == GateKind::rzz;
}

inline constexpr bool is_native(GateKind k) {
    return k == GateKind::rx90 || k == GateKind::rz || k == GateKind::iswap;
}

inline std::string gate_name(GateKind k) {
    switch (k) {
    case GateKind::rx90: return "RX90";
    case GateKind::rz: return "RZ";
    case GateKind::iswap: return "ISWAP";
    case GateKind::x: return "X";
    case GateKind::h: return "H";
    case GateKind::rx: return "RX";
    case GateKind::cnot: return "CNOT";
    case GateKind::toffoli: return "CCX";
    case GateKind::rzz: return "RZZ";
    }
    return "?";
}

inline GateKind parse_gate_name(const std::string &name) {
    static const std::map<std::string, GateKind> table{
        {"RX90", GateKind::rx90}, {"RZ", GateKind::rz},     {"ISWAP", GateKind::iswap},
        {"X", GateKind::x},       {"H", GateKind::h},       {"RX", GateKind::rx},
        {"CNOT", GateKind::cnot}, {"CCX", GateKind::toffoli}, {"RZZ", GateKind::rzz}};
    const auto it = table.find(name);
    if (it == table.end()) {
        throw ValidationError("unknown gate kind '" + name + "'");
    }
    return it->second;
}

struct Gate {
    GateKind kind = GateKind::rz;
    std::array<std::size_t, 3> qubits{};
    double angle = 0.0;

    bool operator==(const Gate &) const = default;
};

/// Gate list over n_qubits encoding qubits followed by n_ancilla ancillas.
struct Circuit {
    std::size_t n_qubits = 0;
    std::size_t n_ancilla = 0;
    std::vector<Gate> gates;

    [[nodiscard]] std::size_t total_qubits() const { return n_qubits + n_ancilla; }

    void add(GateKind k, std::size_t a, double angle = 0.0) {
        push({k, {a, 0, 0}, angle});
    }
    void add(GateKind k, std::size_t a, std::size_t b, double angle = 0.0) {
        push({k, {a, b, 0}, angle});
    }
    void add(GateKind k, std::size_t a, std::size_t b, std::size_t c) {
        push({k, {a, b, c}, 0.0});
    }
    void append(const Circuit &other) {
        for (const auto &g : other.gates) {
            push(g);
        }
    }

    void push(const Gate &g) {
        const std::size_t n = arity(g.kind);
        for (std::size_t i = 0; i < n; ++i) {
            require(g.qubits[i] < total_qubits(), "gate qubit out of range");
            for (std::size_t j = 0; j < i; ++j) {
                require(g.qubits[i] != g.qubits[j], "gate qubits must be distinct");
            }
        }
        gates.push_back(g);
    }

    bool operator==(const Circuit &) const = default;
};

inline void apply_gate(Statevector &sv, const Gate &g) {
    const auto &q = g.qubits;
    switch (g.kind) {
    case GateKind::rx90: sv.apply_rx(q[0], std::numbers::pi / 2); break;
    case GateKind::rz: sv.apply_rz(q[0], g.angle); break;
    case GateKind::iswap: sv.apply_iswap(q[0], q[1]); break;
    case GateKind::x: sv.apply_x(q[0]); break;
    case GateKind::h: sv.apply_h(q[0]); break;
    case GateKind::rx: sv.apply_rx(q[0], g.angle); break;
    case GateKind::cnot: sv.apply_cnot(q[0], q[1]); break;
    case GateKind::toffoli: sv.apply_toffoli(q[0], q[1], q[2]); break;
    case GateKind::rzz: sv.apply_rzz(q[0], q[1], g.angle); break;
    }
}

inline void simulate(const Circuit &c, Statevector &sv) {
    require(sv.n_qubits() == c.total_qubits(), "state size does not match circuit");
    for (const auto &g : c.gates) {
        apply_gate(sv, g);
    }
}

// ---------------------------------------------------------------------------
// Control decomposition.
// ---------------------------------------------------------------------------

namespace detail {

/// exp(i angle P1(control) Z_target)
inline void controlled_z_phase(Circuit &c, std::size_t control, std::size_t target,
                               double angle) {
    c.add(GateKind::rz, target, -angle);
    c.add(GateKind::rzz, control, target, angle);
}

inline void term_core(Circuit &c, const IRTerm &t, std::size_t m,
                      std::optional<std::size_t> control) {
    const std::size_t a = m + t.target_a;
    if (!control) {
        if (t.target_b < 0) {
            c.add(GateKind::rz, a, -2.0 * t.angle);
        } else {
            c.add(GateKind::rzz, a, m + static_cast<std::size_t>(t.target_b),
                  -2.0 * t.angle);
        }
        return;
    }
    if (t.target_b < 0) {
        controlled_z_phase(c, *control, a, t.angle);
        return;
    }
    const std::size_t b = m + static_cast<std::size_t>(t.target_b);
    c.add(GateKind::cnot, a, b);
    controlled_z_phase(c, *control, b, t.angle);
    c.add(GateKind::cnot, a, b);
}

} // namespace detail

inline std::size_t ancillas_for(std::size_t m) { return m >= 2 ? m - 1 : 0; }

/// Expands label-controlled rotations into {X, CCX, CNOT, RZZ, Rz}.
///
/// Terms are grouped by label (ascending, stable within a label). For each
/// label the label qubits holding a 0 bit are X-conjugated, an AND chain of
/// Toffolis computes the label match into the last of m - 1 ancillas, the
/// singly-controlled cores are applied, and the chain is uncomputed. With
/// m = 1 the single label qubit controls directly; with m = 0 the cores are
/// uncontrolled.
inline Circuit decompose_controls(const LogicalIR &ir, std::size_t m,
                                  std::size_t ancilla_budget = SIZE_MAX) {
    require(m == ir.n_label_qubits, "control count does not match the IR");
    const std::size_t anc = ancillas_for(m);
    require(anc <= ancilla_budget, "ancilla budget insufficient: need " +
                                       std::to_string(anc));
    Circuit c;
    c.n_qubits = m + ir.n_data_qubits;
    c.n_ancilla = anc;

    std::vector<IRTerm> terms = ir.terms;
    std::stable_sort(terms.begin(), terms.end(),
                     [](const IRTerm &x, const IRTerm &y) { return x.label < y.label; });

    for (std::size_t lo = 0; lo < terms.size();) {
        std::size_t hi = lo;
        const std::size_t label = terms[lo].label;
        require(label < (std::size_t{1} << m), "IR label out of range");
        while (hi < terms.size() && terms[hi].label == label) {
            ++hi;
        }
        if (m == 0) {
            for (std::size_t k = lo; k < hi; ++k) {
                detail::term_core(c, terms[k], m, std::nullopt);
            }
            lo = hi;
            continue;
        }
        auto flip_zero_bits = [&] {
            for (std::size_t q = 0; q < m; ++q) {
                if (((label >> (m - 1 - q)) & 1U) == 0U) {
                    c.add(GateKind::x, q);
                }
            }
        };
        const std::size_t first_anc = c.n_qubits;
        auto and_chain = [&](bool forward) {
            std::vector<Gate> chain;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                const std::size_t left = k == 0 ? 0 : first_anc + k - 1;
                chain.push_back({GateKind::toffoli, {left, k + 1, first_anc + k}, 0.0});
            }
            if (!forward) {
                std::reverse(chain.begin(), chain.end());
            }
            for (const auto &g : chain) {
                c.push(g);
            }
        };
        flip_zero_bits();
        and_chain(true);
        const std::size_t control = m == 1 ? 0 : first_anc + m - 2;
        for (std::size_t k = lo; k < hi; ++k) {
            detail::term_core(c, terms[k], m, control);
        }
        and_chain(false);
        flip_zero_bits();
        lo = hi;
    }
    return c;
}

/// Full layer: phase separator, data-qubit bias, and mixer on all encoding qubits.
inline Circuit layer_circuit(const EncodingScheme &scheme, const CostHamiltonian &H,
                             const LayerParams &lp) {
    Circuit c = decompose_controls(lower_phase_separator(scheme, H, lp.gamma),
                                   scheme.n_label_qubits);
    if (lp.gamma_bias != 0.0) {
        for (std::size_t k = 0; k < scheme.group_size; ++k) {
            c.add(GateKind::rz, scheme.data_qubit_index(k), -2.0 * lp.gamma_bias);
        }
    }
    if (lp.beta != 0.0) {
        for (std::size_t q = 0; q < scheme.n_qubits; ++q) {
            c.add(GateKind::rx, q, -2.0 * lp.beta);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Native lowering to {Rx(pi/2), Rz, iSWAP}.
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kPi = std::numbers::pi;

inline void native_rx_minus90(Circuit &out, std::size_t q) {
    out.add(GateKind::rz, q, -kPi);
    out.add(GateKind::rx90, q);
    out.add(GateKind::rz, q, kPi);
}

// Rx(t) = Rz(-pi/2) Ry(t) Rz(pi/2) and Rz(a)Ry(b)Rz(c) ~ Rz(a+pi) Rx90 Rz(b+pi) Rx90 Rz(c).
inline void native_rx(Circuit &out, std::size_t q, double theta) {
    out.add(GateKind::rz, q, kPi / 2);
    out.add(GateKind::rx90, q);
    out.add(GateKind::rz, q, theta + kPi);
    out.add(GateKind::rx90, q);
    out.add(GateKind::rz, q, kPi / 2);
}

inline void native_h(Circuit &out, std::size_t q) {
    out.add(GateKind::rz, q, kPi / 2);
    out.add(GateKind::rx90, q);
    out.add(GateKind::rz, q, kPi / 2);
}

// Two-iSWAP CNOT, equal to CNOT(c, t) up to a global phase.
inline void native_cnot(Circuit &out, std::size_t c, std::size_t t) {
    out.add(GateKind::rz, c, kPi / 2);
    out.add(GateKind::rx90, c);
    out.add(GateKind::rz, t, kPi / 2);
    out.add(GateKind::rx90, t);
    out.add(GateKind::iswap, c, t);
    out.add(GateKind::rx90, t);
    out.add(GateKind::iswap, c, t);
    out.add(GateKind::rx90, c);
    out.add(GateKind::rz, t, -kPi / 2);
    out.add(GateKind::rx90, t);
    out.add(GateKind::rz, t, kPi / 2);
}

// Two-iSWAP RZZ(phi) = exp(-i phi ZZ/2) up to a global phase; phi enters a
// single Rz sandwiched between Rx(-pi/2) and Rx(pi/2).
inline void native_rzz(Circuit &out, std::size_t a, std::size_t b, double phi) {
    native_rx_minus90(out, b);
    out.add(GateKind::rz, b, kPi / 2);
    out.add(GateKind::iswap, a, b);
    native_rx_minus90(out, a);
    out.add(GateKind::rz, a, phi);
    out.add(GateKind::rx90, a);
    out.add(GateKind::rz, b, kPi);
    out.add(GateKind::iswap, a, b);
    out.add(GateKind::rz, b, kPi / 2);
    out.add(GateKind::rx90, b);
}

// Standard six-CNOT Toffoli with T = Rz(pi/4) up to phase.
inline void native_toffoli(Circuit &out, std::size_t c1, std::size_t c2,
                           std::size_t t) {
    const double T = kPi / 4;
    native_h(out, t);
    native_cnot(out, c2, t);
    out.add(GateKind::rz, t, -T);
    native_cnot(out, c1, t);
    out.add(GateKind::rz, t, T);
    native_cnot(out, c2, t);
    out.add(GateKind::rz, t, -T);
    native_cnot(out, c1, t);
    out.add(GateKind::rz, c2, T);
    out.add(GateKind::rz, t, T);
    native_h(out, t);
    native_cnot(out, c1, c2);
    out.add(GateKind::rz, c1, T);
    out.add(GateKind::rz, c2, -T);
    native_cnot(out, c1, c2);
}

inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi); // [-pi, pi]
    return a;
}

/// Merges runs of Rz on a qubit and drops Rz(0). Rz angles are reduced mod
/// 2 pi, which changes the circuit only by a global phase.
inline Circuit merge_rz(const Circuit &in) {
    Circuit out;
    out.n_qubits = in.n_qubits;
    out.n_ancilla = in.n_ancilla;
    std::vector<double> pending(in.total_qubits(), 0.0);
    std::vector<char> has(in.total_qubits(), 0);
    auto flush = [&](std::size_t q) {
        if (has[q] != 0) {
            const double a = wrap_angle(pending[q]);
            if (std::abs(a) > 1e-15) {
                out.add(GateKind::rz, q, a);
            }
            pending[q] = 0.0;
            has[q] = 0;
        }
    };
    for (const auto &g : in.gates) {
        if (g.kind == GateKind::rz) {
            pending[g.qubits[0]] += g.angle;
            has[g.qubits[0]] = 1;
            continue;
        }
        for (std::size_t i = 0; i < arity(g.kind); ++i) {
            flush(g.qubits[i]);
        }
        out.push(g);
    }
    for (std::size_t q = 0; q < in.total_qubits(); ++q) {
        flush(q);
    }
    return out;
}

} // namespace detail

/// Rewrites every gate into {Rx(pi/2), Rz, iSWAP}; equal to the input up to
/// a global phase.
inline Circuit to_native(const Circuit &in) {
    Circuit out;
    out.n_qubits = in.n_qubits;
    out.n_ancilla = in.n_ancilla;
    const double half_pi = std::numbers::pi / 2;
    for (const auto &g : in.gates) {
        const auto &q = g.qubits;
        switch (g.kind) {
        case GateKind::rx90:
        case GateKind::rz:
        case GateKind::iswap:
            out.push(g);
            break;
        case GateKind::x:
            out.add(GateKind::rx90, q[0]);
            out.add(GateKind::rx90, q[0]);
            break;
        case GateKind::h:
            detail::native_h(out, q[0]);
            break;
        case GateKind::rx:
            if (g.angle == half_pi) {
                out.add(GateKind::rx90, q[0]);
            } else if (g.angle == -half_pi) {
                detail::native_rx_minus90(out, q[0]);
            } else if (g.angle != 0.0) {
                detail::native_rx(out, q[0], g.angle);
            }
            break;
        case GateKind::cnot:
            detail::native_cnot(out, q[0], q[1]);
            break;
        case GateKind::rzz:
            detail::native_rzz(out, q[0], q[1], g.angle);
            break;
        case GateKind::toffoli:
            detail::native_toffoli(out, q[0], q[1], q[2]);
            break;
        }
    }
    return detail::merge_rz(out);
}

struct GateCounts {
    std::size_t iswap = 0;
    std::size_t rx90 = 0;
    std::size_t rz = 0;
    std::size_t other = 0;
    std::size_t total = 0;
    std::size_t depth = 0;           // all gates
    std::size_t two_qubit_depth = 0; // multi-qubit gates only
};

inline GateCounts count_gates(const Circuit &c) {
    GateCounts gc;
    std::vector<std::size_t> level(c.total_qubits(), 0);
    std::vector<std::size_t> level2(c.total_qubits(), 0);
    for (const auto &g : c.gates) {
        ++gc.total;
        switch (g.kind) {
        case GateKind::iswap: ++gc.iswap; break;
        case GateKind::rx90: ++gc.rx90; break;
        case GateKind::rz: ++gc.rz; break;
        default: ++gc.other; break;
        }
        const std::size_t n = arity(g.kind);
        std::size_t top = 0;
        std::size_t top2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            top = std::max(top, level[g.qubits[i]]);
            top2 = std::max(top2, level2[g.qubits[i]]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            level[g.qubits[i]] = top + 1;
            if (n > 1) {
                level2[g.qubits[i]] = top2 + 1;
            }
        }
    }
    for (std::size_t q = 0; q < c.total_qubits(); ++q) {
        gc.depth = std::max(gc.depth, level[q]);
        gc.two_qubit_depth = std::max(gc.two_qubit_depth, level2[q]);
    }
    return gc;
}

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

/// Square complex matrix, row-major.
struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<Complex> data;

    explicit DenseMatrix(std::size_t n = 0) : dim(n), data(n * n, Complex{}) {}
    Complex &at(std::size_t r, std::size_t c) { return data[r * dim + c]; }
    [[nodiscard]] Complex at(std::size_t r, std::size_t c) const {
        return data[r * dim + c];
    }
};

inline constexpr std::size_t kMaxVerifyQubits = 12;

/// Block of the circuit unitary on the encoding qubits with every ancilla
/// prepared and post-selected in |0>.
inline DenseMatrix circuit_unitary(const Circuit &c) {
    require(c.total_qubits() <= kMaxVerifyQubits,
            "dense verification limited to " + std::to_string(kMaxVerifyQubits) +
                " qubits");
    const std::size_t dim = std::size_t{1} << c.n_qubits;
    DenseMatrix U(dim);
    for (std::size_t col = 0; col < dim; ++col) {
        Statevector sv = Statevector::basis(c.total_qubits(), col << c.n_ancilla);
        simulate(c, sv);
        for (std::size_t row = 0; row < dim; ++row) {
            U.at(row, col) = sv[row << c.n_ancilla];
        }
    }
    return U;
}

/// Largest elementwise deviation after aligning the global phase on the
/// reference's largest entry.
inline double max_deviation_up_to_phase(const DenseMatrix &U, const DenseMatrix &ref) {
    require(U.dim == ref.dim, "matrix dimensions differ");
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < ref.data.size(); ++k) {
        if (std::abs(ref.data[k]) > std::abs(ref.data[pivot])) {
            pivot = k;
        }
    }
    Complex phase = U.data[pivot] / ref.data[pivot];
    const double mag = std::abs(phase);
    phase = mag > 0.0 ? phase / mag : Complex{1.0, 0.0};
    double dev = 0.0;
    for (std::size_t k = 0; k < ref.data.size(); ++k) {
        dev = std::max(dev, std::abs(U.data[k] - phase * ref.data[k]));
    }
    return dev;
}

inline double verify_unitary(const Circuit &c, const DenseMatrix &reference) {
    return max_deviation_up_to_phase(circuit_unitary(c), reference);
}

/// Against exp(i gamma H) for a diagonal H.
inline double verify_unitary(const Circuit &c, const DiagonalOperator &H, double gamma) {
    require(H.n_qubits == c.n_qubits, "reference size does not match circuit");
    DenseMatrix ref(std::size_t{1} << H.n_qubits);
    for (std::size_t k = 0; k < ref.dim; ++k) {
        ref.at(k, k) = std::polar(1.0, gamma * H.entries[k]);
    }
    return verify_unitary(c, ref);
}

/// Ideal unitary of one layer, column k = layer applied to basis state k.
inline DenseMatrix layer_unitary(const EncodingScheme &scheme, const DiagonalOperator &H,
                                 const LayerParams &lp) {
    require(scheme.n_qubits <= kMaxVerifyQubits, "dense layer unitary too large");
    DenseMatrix U(std::size_t{1} << scheme.n_qubits);
    for (std::size_t col = 0; col < U.dim; ++col) {
        Statevector sv = Statevector::basis(scheme.n_qubits, col);
        apply_layer(sv, scheme, H, lp);
        for (std::size_t row = 0; row < U.dim; ++row) {
            U.at(row, col) = sv[row];
        }
    }
    return U;
}

/// Largest probability, over random encoding-register inputs, of finding any
/// ancilla outside |0> after the circuit.
inline double ancilla_leakage(const Circuit &c, std::size_t n_states, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    const std::size_t dim = std::size_t{1} << c.n_qubits;
    for (std::size_t s = 0; s < n_states; ++s) {
        std::vector<Complex> amps(std::size_t{1} << c.total_qubits(), Complex{});
        double norm = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const Complex a{normal(rng), normal(rng)};
            amps[k << c.n_ancilla] = a;
            norm += std::norm(a);
        }
        for (auto &a : amps) {
            a /= std::sqrt(norm);
        }
        Statevector sv = Statevector::from_amplitudes(std::move(amps));
        simulate(c, sv);
        double kept = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            kept += std::norm(sv[k << c.n_ancilla]);
        }
        worst = std::max(worst, std::abs(1.0 - kept));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Text serialization: one gate per line, "NAME q[,q2[,q3]][,angle]".
// ---------------------------------------------------------------------------

inline std::string format_angle(double a) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", a);
    return buf;
}

inline std::string serialize(const Circuit &c) {
    std::ostringstream os;
    os << "# qubits " << c.n_qubits << " ancillas " << c.n_ancilla << '\n';
    for (const auto &g : c.gates) {
        os << gate_name(g.kind) << ' ';
        for (std::size_t i = 0; i < arity(g.kind); ++i) {
            os << (i == 0 ? "" : ",") << g.qubits[i];
        }
        if (has_angle(g.kind)) {
            os << ',' << format_angle(g.angle);
        }
        os << '\n';
    }
    return os.str();
}

inline Circuit parse_circuit(const std::string &text) {
    Circuit c;
    bool header = false;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string k1, k2;
            std::size_t q = 0, a = 0;
            if (hs >> k1 >> q >> k2 >> a && k1 == "qubits" && k2 == "ancillas") {
                c.n_qubits = q;
                c.n_ancilla = a;
                header = true;
            }
            continue;
        }
        const auto where = "line " + std::to_string(lineno) + ": ";
        require(header, where + "gate before the '# qubits N ancillas M' header");
        const auto space = line.find(' ');
        require(space != std::string::npos, where + "missing operands");
        const GateKind kind = parse_gate_name(line.substr(0, space));
        std::vector<std::string> fields;
        std::stringstream fs(line.substr(space + 1));
        std::string f;
        while (std::getline(fs, f, ',')) {
            fields.push_back(f);
        }
        const std::size_t want = arity(kind) + (has_angle(kind) ? 1 : 0);
        require(fields.size() == want, where + "expected " + std::to_string(want) +
                                           " operands");
        Gate g;
        g.kind = kind;
        try {
            for (std::size_t i = 0; i < arity(kind); ++i) {
                g.qubits[i] = std::stoul(fields[i]);
            }
            if (has_angle(kind)) {
                g.angle = std::stod(fields.back());
            }
        } catch (const std::logic_error &) {
            throw ValidationError(where + "malformed operand");
        }
        c.push(g);
    }
    return c;
}

} // namespace qesolve
