#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "encoding.hpp"
#include "problem.hpp"
#include "statevector.hpp"

namespace qesolve {

enum class StatsSource { exact, shots };

/// Conditional measurement summary of a state under an encoding.
///
/// For every label l: p_label[l] = <P_l>. For every variable i:
/// zbar[i] = <P_l Z_{d_i}> / <P_l>. For data qubits a < b of the same
/// label: pair(l, a, b) = <P_l Z_a Z_b> / <P_l>. Labels whose probability
/// falls below the observation threshold have zbar and pair values of 0.
struct GroupStats {
    std::size_t n_groups = 0;
    std::size_t group_size = 0;
    std::vector<double> p_label;
    std::vector<double> zbar;
    std::vector<double> pair_corr; // n_groups * d * d, symmetric per label
    std::vector<char> observed;
    StatsSource source = StatsSource::exact;
    std::uint64_t n_shots = 0;

    [[nodiscard]] double pair(std::size_t label, std::size_t a,
                              std::size_t b) const {
        return pair_corr[(label * group_size + a) * group_size + b];
    }

    /// Correlation of variables i, j of the same group.
    [[nodiscard]] double pair_of(const EncodingScheme &s, std::size_t i,
                                 std::size_t j) const {
        return pair(s.label_of(i), s.data_qubit_of(i), s.data_qubit_of(j));
    }

    [[nodiscard]] std::size_t unobserved_count() const {
        std::size_t n = 0;
        for (char o : observed) {
            n += o == 0 ? 1 : 0;
        }
        return n;
    }
};

inline constexpr double kObservedEpsilon = 1e-12;

namespace detail {

/// Shared accumulation over (basis index, weight) samples; weights are
/// probabilities (exact) or shot frequencies.
class StatsAccumulator {
  public:
    explicit StatsAccumulator(const EncodingScheme &s)
        : s_(s), mass_(s.n_groups, 0.0), z_(s.n_vars, 0.0),
          zz_(s.n_groups * s.group_size * s.group_size, 0.0) {}

    void add(std::uint64_t index, double weight) {
        const auto label = static_cast<std::size_t>(index >> s_.group_size);
        const std::uint64_t bits = index & s_.data_mask();
        const std::size_t d = s_.group_size;
        mass_[label] += weight;
        spins_.resize(d);
        for (std::size_t a = 0; a < d; ++a) {
            spins_[a] = s_.spin_of(bits, a);
            z_[label * d + a] += weight * spins_[a];
        }
        double *zz = &zz_[label * d * d];
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a + 1; b < d; ++b) {
                zz[a * d + b] += weight * spins_[a] * spins_[b];
            }
        }
    }

    GroupStats finish(double threshold, StatsSource source,
                      std::uint64_t n_shots) const {
        const std::size_t d = s_.group_size;
        GroupStats st;
        st.n_groups = s_.n_groups;
        st.group_size = d;
        st.p_label = mass_;
        st.zbar.assign(s_.n_vars, 0.0);
        st.pair_corr.assign(zz_.size(), 0.0);
        st.observed.assign(s_.n_groups, 0);
        st.source = source;
        st.n_shots = n_shots;
        for (std::size_t l = 0; l < s_.n_groups; ++l) {
            if (mass_[l] < threshold) {
                continue;
            }
            st.observed[l] = 1;
            const double inv = 1.0 / mass_[l];
            for (std::size_t a = 0; a < d; ++a) {
                st.zbar[l * d + a] = z_[l * d + a] * inv;
                for (std::size_t b = a + 1; b < d; ++b) {
                    const double v = zz_[(l * d + a) * d + b] * inv;
                    st.pair_corr[(l * d + a) * d + b] = v;
                    st.pair_corr[(l * d + b) * d + a] = v;
                }
            }
        }
        return st;
    }

  private:
    const EncodingScheme &s_;
    std::vector<double> mass_;
    std::vector<double> z_;
    std::vector<double> zz_;
    std::vector<int> spins_;
};

} // namespace detail

inline GroupStats exact_group_stats(const EncodingScheme &scheme,
                                    const Statevector &state,
                                    double epsilon = kObservedEpsilon) {
    require(state.n_qubits() == scheme.n_qubits,
            "state has " + std::to_string(state.n_qubits()) +
                " qubits, scheme needs " + std::to_string(scheme.n_qubits));
    detail::StatsAccumulator acc(scheme);
    const auto amps = state.amplitudes();
    for (std::size_t k = 0; k < amps.size(); ++k) {
        const double p = std::norm(amps[k]);
        if (p != 0.0) {
            acc.add(k, p);
        }
    }
    return acc.finish(epsilon, StatsSource::exact, 0);
}

/// Frequency estimates from measurement counts: shots are post-selected by
/// label and spin products averaged inside each label's subset.
inline GroupStats shot_group_stats(const EncodingScheme &scheme,
                                   const Counts &counts, std::uint64_t n_shots) {
    require(n_shots > 0, "shot statistics need at least one shot");
    std::uint64_t total = 0;
    detail::StatsAccumulator acc(scheme);
    const std::uint64_t dim = std::uint64_t{1} << scheme.n_qubits;
    for (const auto &[index, c] : counts) {
        require(index < dim, "count index out of range for the scheme");
        total += c;
        acc.add(index, static_cast<double>(c) / static_cast<double>(n_shots));
    }
    require(total == n_shots, "counts do not sum to n_shots");
    // a label is observed once it has at least one shot
    const double threshold = 0.5 / static_cast<double>(n_shots);
    return acc.finish(threshold, StatsSource::shots, n_shots);
}

struct CostBreakdown {
    double intra = 0.0;
    double inter = 0.0;
    double total = 0.0;
};

inline void check_sizes(const SKInstance &inst, const EncodingScheme &scheme) {
    require(inst.n_vars() == scheme.n_vars,
            "instance has " + std::to_string(inst.n_vars()) +
                " variables but the scheme encodes " +
                std::to_string(scheme.n_vars));
}

/// Same-label pairs use the post-selected correlation; cross-label pairs use
/// the product of conditional means.
inline CostBreakdown estimate_cost(const SKInstance &inst,
                                   const EncodingScheme &scheme,
                                   const GroupStats &stats) {
    check_sizes(inst, scheme);
    const std::size_t n = scheme.n_vars;
    const std::size_t d = scheme.group_size;
    CostBreakdown out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t li = i / d;
        const double *w = inst.row(i);
        double cross = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j / d == li) {
                if (stats.observed[li] != 0) {
                    out.intra += w[j] * stats.pair(li, i % d, j % d);
                }
            } else {
                cross += w[j] * stats.zbar[j];
            }
        }
        out.inter += stats.zbar[i] * cross;
    }
    out.total = out.intra + out.inter;
    return out;
}

/// One term of the state-dependent cost Hamiltonian:
/// coeff * P_label Z_a (Z_b), with coeff already divided by <P_label>.
struct HamiltonianTerm {
    std::size_t label = 0;
    std::size_t qubit_a = 0; // data qubit index
    int qubit_b = -1;        // -1 for one-body terms
    double coeff = 0.0;
};

struct CostHamiltonian {
    std::size_t n_groups = 0;
    std::size_t group_size = 0;
    std::vector<HamiltonianTerm> terms;
    std::size_t dropped_labels = 0;
};

/// h_i = 1/2 sum_{j in another group} w_ij zbar_j
inline std::vector<double> one_body_fields(const SKInstance &inst,
                                           const EncodingScheme &scheme,
                                           const GroupStats &stats) {
    const std::size_t n = scheme.n_vars;
    const std::size_t d = scheme.group_size;
    std::vector<double> h(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double *w = inst.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j / d != i / d) {
                acc += w[j] * stats.zbar[j];
            }
        }
        h[i] = 0.5 * acc;
    }
    return h;
}

/// Symbolic form of the cost Hamiltonian built from `stats`. Terms owned by
/// unobserved labels are dropped and counted.
inline CostHamiltonian cost_hamiltonian_terms(const SKInstance &inst,
                                              const EncodingScheme &scheme,
                                              const GroupStats &stats) {
    check_sizes(inst, scheme);
    const std::size_t d = scheme.group_size;
    const auto h = one_body_fields(inst, scheme, stats);
    CostHamiltonian H;
    H.n_groups = scheme.n_groups;
    H.group_size = d;
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        if (stats.observed[l] == 0) {
            ++H.dropped_labels;
            continue;
        }
        const double inv = 1.0 / stats.p_label[l];
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a + 1; b < d; ++b) {
                const double w =
                    inst.weight(scheme.variable_of(l, a), scheme.variable_of(l, b));
                if (w != 0.0) {
                    H.terms.push_back({l, a, static_cast<int>(b), w * inv});
                }
            }
        }
        for (std::size_t a = 0; a < d; ++a) {
            const double hi = h[scheme.variable_of(l, a)];
            if (hi != 0.0) {
                H.terms.push_back({l, a, -1, hi * inv});
            }
        }
    }
    return H;
}

/// Dense diagonal of a symbolic cost Hamiltonian.
inline DiagonalOperator to_diagonal(const EncodingScheme &scheme,
                                    const CostHamiltonian &H) {
    std::vector<double> entries(std::size_t{1} << scheme.n_qubits, 0.0);
    const std::uint64_t patterns = std::uint64_t{1} << scheme.group_size;
    for (const auto &t : H.terms) {
        const std::uint64_t base = scheme.basis_index(t.label, 0);
        for (std::uint64_t b = 0; b < patterns; ++b) {
            double s = scheme.spin_of(b, t.qubit_a);
            if (t.qubit_b >= 0) {
                s *= scheme.spin_of(b, static_cast<std::size_t>(t.qubit_b));
            }
            entries[base + b] += t.coeff * s;
        }
    }
    return DiagonalOperator(scheme.n_qubits, std::move(entries));
}

/// Dense diagonal of the state-dependent cost Hamiltonian, entry per basis
/// state (l, b):
///   sum_{i<j in l} w_ij s_i(b) s_j(b) / <P_l> + sum_{i in l} h_i s_i(b) / <P_l>.
inline DiagonalOperator build_cost_hamiltonian(const SKInstance &inst,
                                               const EncodingScheme &scheme,
                                               const GroupStats &stats) {
    check_sizes(inst, scheme);
    const std::size_t d = scheme.group_size;
    const auto h = one_body_fields(inst, scheme, stats);
    std::vector<double> entries(std::size_t{1} << scheme.n_qubits, 0.0);
    const std::uint64_t patterns = std::uint64_t{1} << d;
    std::vector<int> s(d);
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        if (stats.observed[l] == 0) {
            continue;
        }
        const double inv = 1.0 / stats.p_label[l];
        const std::size_t first = l * d;
        for (std::uint64_t b = 0; b < patterns; ++b) {
            for (std::size_t a = 0; a < d; ++a) {
                s[a] = scheme.spin_of(b, a);
            }
            double e = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                const double *w = inst.row(first + a);
                double pair = 0.0;
                for (std::size_t c = a + 1; c < d; ++c) {
                    pair += w[first + c] * s[c];
                }
                e += s[a] * (pair + h[first + a]);
            }
            entries[scheme.basis_index(l, b)] = e * inv;
        }
    }
    return DiagonalOperator(scheme.n_qubits, std::move(entries));
}

} // namespace qesolve
