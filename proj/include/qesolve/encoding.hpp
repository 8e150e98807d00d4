#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "statevector.hpp"

namespace qesolve {

/// Length-N vector of +/-1 spins.
using SpinString = std::vector<int>;

inline void validate_spins(const SpinString &z, std::size_t n) {
    require(z.size() == n, "spin string has length " + std::to_string(z.size()) +
                               ", expected " + std::to_string(n));
    for (int s : z) {
        require(s == 1 || s == -1, "spin entries must be +1 or -1");
    }
}

/// Maps N spin variables onto d data qubits and log2(N/d) label qubits.
///
/// Variable i lives in group label_of(i) = i / d on data qubit i % d. The
/// label register occupies the most significant qubits of the basis index,
/// followed by the data register with data qubit 0 most significant. Spin
/// +1 is bit 0 and spin -1 is bit 1.
struct EncodingScheme {
    std::size_t n_vars = 0;        // after padding
    std::size_t original_vars = 0; // before padding
    std::size_t group_size = 0;
    std::size_t n_groups = 0;
    std::size_t n_label_qubits = 0;
    std::size_t n_qubits = 0;
    bool padded = false;

    [[nodiscard]] std::size_t label_of(std::size_t i) const {
        require(i < n_vars, "variable index out of range");
        return i / group_size;
    }

    [[nodiscard]] std::size_t data_qubit_of(std::size_t i) const {
        require(i < n_vars, "variable index out of range");
        return i % group_size;
    }

    [[nodiscard]] std::size_t variable_of(std::size_t label,
                                          std::size_t data_qubit) const {
        return label * group_size + data_qubit;
    }

    /// Global qubit index of data qubit k.
    [[nodiscard]] std::size_t data_qubit_index(std::size_t k) const {
        return n_label_qubits + k;
    }

    [[nodiscard]] std::uint64_t basis_index(std::size_t label,
                                            std::uint64_t data_bits) const {
        return (static_cast<std::uint64_t>(label) << group_size) | data_bits;
    }

    /// Spin read from data qubit k of a d-bit data pattern.
    [[nodiscard]] int spin_of(std::uint64_t data_bits, std::size_t k) const {
        return ((data_bits >> (group_size - 1 - k)) & 1U) != 0U ? -1 : 1;
    }

    [[nodiscard]] std::uint64_t data_mask() const {
        return (std::uint64_t{1} << group_size) - 1;
    }

    bool operator==(const EncodingScheme &) const = default;
};

inline EncodingScheme make_scheme(std::size_t n_vars, std::size_t group_size,
                                  bool allow_padding = false) {
    require(n_vars >= 2, "need at least two variables");
    require(group_size >= 1, "group size d must be at least 1");
    require(group_size <= n_vars, "group size d must not exceed N");

    EncodingScheme s;
    s.original_vars = n_vars;
    s.group_size = group_size;
    std::size_t groups = (n_vars + group_size - 1) / group_size;
    const bool exact = n_vars % group_size == 0 && std::has_single_bit(groups);
    if (!exact) {
        require(allow_padding,
                "N/d must be an integer power of two (N=" +
                    std::to_string(n_vars) + ", d=" +
                    std::to_string(group_size) + "); enable padding to round up");
        groups = std::bit_ceil(groups);
    }
    s.n_groups = groups;
    s.n_vars = groups * group_size;
    s.padded = s.n_vars != n_vars;
    s.n_label_qubits = static_cast<std::size_t>(std::countr_zero(groups));
    s.n_qubits = s.group_size + s.n_label_qubits;
    return s;
}

/// lambda_l of the target wave function; uniform when built by uniform_lambdas.
struct GroupAmplitudes {
    std::vector<Complex> lambdas;
};

inline GroupAmplitudes uniform_lambdas(const EncodingScheme &scheme) {
    const double a = 1.0 / std::sqrt(static_cast<double>(scheme.n_groups));
    return GroupAmplitudes{std::vector<Complex>(scheme.n_groups, Complex{a, 0.0})};
}

/// d-bit data pattern of group `label` in spin string z.
inline std::uint64_t group_pattern(const EncodingScheme &scheme,
                                   const SpinString &z, std::size_t label) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < scheme.group_size; ++k) {
        bits = (bits << 1U) |
               (z[scheme.variable_of(label, k)] == -1 ? 1U : 0U);
    }
    return bits;
}

/// sum_l lambda_l |l>_label (x) |z_l>_data
inline Statevector encode_target(const EncodingScheme &scheme,
                                 const SpinString &z,
                                 const GroupAmplitudes &amps) {
    validate_spins(z, scheme.n_vars);
    require(amps.lambdas.size() == scheme.n_groups,
            "need one lambda per group");
    double norm = 0.0;
    for (const auto &l : amps.lambdas) {
        norm += std::norm(l);
    }
    require(std::abs(norm - 1.0) <= 1e-12, "group amplitudes are not normalized");

    std::vector<Complex> out(std::size_t{1} << scheme.n_qubits, Complex{});
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        out[scheme.basis_index(l, group_pattern(scheme, z, l))] = amps.lambdas[l];
    }
    return Statevector::from_amplitudes(std::move(out));
}

struct DecodedShot {
    std::size_t label = 0;
    std::vector<int> spins; // spins of variables label*d .. label*d + d - 1
};

inline DecodedShot decode_shot(const EncodingScheme &scheme,
                               std::uint64_t basis_index) {
    require(basis_index < (std::uint64_t{1} << scheme.n_qubits),
            "basis index out of range");
    DecodedShot shot;
    shot.label = static_cast<std::size_t>(basis_index >> scheme.group_size);
    const std::uint64_t bits = basis_index & scheme.data_mask();
    shot.spins.resize(scheme.group_size);
    for (std::size_t k = 0; k < scheme.group_size; ++k) {
        shot.spins[k] = scheme.spin_of(bits, k);
    }
    return shot;
}

/// Drops padded variables from a spin string.
inline SpinString strip_padding(const EncodingScheme &scheme, SpinString z) {
    z.resize(scheme.original_vars);
    return z;
}

} // namespace qesolve
