#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "encoding.hpp"
#include "estimator.hpp"
#include "problem.hpp"
#include "statevector.hpp"

namespace qesolve {

/// Angles of one layer: exp(i beta Hx) exp(i gamma_bias Hz) exp(i gamma H[psi]).
struct LayerParams {
    double beta = 0.0;
    double gamma = 0.0;
    double gamma_bias = 0.0;

    bool operator==(const LayerParams &) const = default;
};

struct RunMode {
    enum class Kind { exact, shots };
    Kind kind = Kind::exact;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    static RunMode exact() { return {}; }
    static RunMode with_shots(std::uint64_t n, std::uint64_t seed) {
        require(n >= 1, "shot mode needs at least one shot");
        return {Kind::shots, n, seed};
    }
    [[nodiscard]] bool is_exact() const { return kind == Kind::exact; }
};

/// Per-layer record of an ansatz run. Index k of stats/costs describes
/// psi_k (k = 0 is the initial |+> state); hamiltonians[k] is the frozen
/// operator used to build layer k + 1.
struct AnsatzTrace {
    RunMode mode;
    std::vector<GroupStats> stats;
    std::vector<CostBreakdown> costs;
    std::vector<CostHamiltonian> hamiltonians;
    std::vector<LayerParams> params;
    Statevector final_state{1};
    Counts final_counts;

    [[nodiscard]] double final_cost() const { return costs.back().total; }
    [[nodiscard]] std::size_t depth() const { return params.size(); }
};

/// exp(i gamma_bias sum_{data} Z) as Rz(-2 gamma_bias) on data qubits.
inline void apply_bias(Statevector &state, const EncodingScheme &scheme,
                       double gamma_bias) {
    if (gamma_bias == 0.0) {
        return;
    }
    for (std::size_t k = 0; k < scheme.group_size; ++k) {
        state.apply_rz(scheme.data_qubit_index(k), -2.0 * gamma_bias);
    }
}

/// Applies one full layer with a frozen cost operator.
inline void apply_layer(Statevector &state, const EncodingScheme &scheme,
                        const DiagonalOperator &cost_op, const LayerParams &lp) {
    state.apply_diagonal_phase(cost_op, lp.gamma);
    apply_bias(state, scheme, lp.gamma_bias);
    state.apply_mixer(lp.beta);
}

inline AnsatzTrace run_ansatz(const SKInstance &inst,
                              const EncodingScheme &scheme,
                              const std::vector<LayerParams> &params,
                              const RunMode &mode = RunMode::exact()) {
    require(!params.empty(), "ansatz needs at least one layer");
    check_sizes(inst, scheme);

    AnsatzTrace trace;
    trace.mode = mode;
    trace.params = params;
    Statevector state = init_plus(scheme.n_qubits);

    auto measure = [&](std::size_t layer) {
        if (mode.is_exact()) {
            return exact_group_stats(scheme, state);
        }
        Rng rng = make_rng(mode.seed, layer);
        Counts counts = sample(state, mode.shots, rng);
        GroupStats st = shot_group_stats(scheme, counts, mode.shots);
        if (layer == params.size()) {
            trace.final_counts = std::move(counts);
        }
        return st;
    };

    for (std::size_t layer = 0; layer <= params.size(); ++layer) {
        GroupStats st = measure(layer);
        trace.costs.push_back(estimate_cost(inst, scheme, st));
        if (layer < params.size()) {
            CostHamiltonian H = cost_hamiltonian_terms(inst, scheme, st);
            apply_layer(state, scheme, build_cost_hamiltonian(inst, scheme, st),
                        params[layer]);
            trace.hamiltonians.push_back(std::move(H));
        }
        trace.stats.push_back(std::move(st));
    }
    trace.final_state = std::move(state);
    return trace;
}

/// Exact-mode final cost without keeping a trace; the optimizer's objective.
inline double ansatz_cost(const SKInstance &inst, const EncodingScheme &scheme,
                          const std::vector<LayerParams> &params) {
    check_sizes(inst, scheme);
    Statevector state = init_plus(scheme.n_qubits);
    for (const auto &lp : params) {
        const GroupStats st = exact_group_stats(scheme, state);
        apply_layer(state, scheme, build_cost_hamiltonian(inst, scheme, st), lp);
    }
    return estimate_cost(inst, scheme, exact_group_stats(scheme, state)).total;
}

/// Exact-mode final state, used where the optimizer's result is inspected.
inline Statevector ansatz_state(const SKInstance &inst,
                                const EncodingScheme &scheme,
                                const std::vector<LayerParams> &params) {
    check_sizes(inst, scheme);
    Statevector state = init_plus(scheme.n_qubits);
    for (const auto &lp : params) {
        const GroupStats st = exact_group_stats(scheme, state);
        apply_layer(state, scheme, build_cost_hamiltonian(inst, scheme, st), lp);
    }
    return state;
}

/// p = 1 cost on a beta x gamma grid; rows follow betas, columns gammas.
inline std::vector<std::vector<double>>
landscape(const SKInstance &inst, const EncodingScheme &scheme,
          const std::vector<double> &betas, const std::vector<double> &gammas,
          double gamma_bias, const RunMode &mode = RunMode::exact(),
          std::size_t jobs = 1) {
    require(!betas.empty() && !gammas.empty(), "landscape grids must be nonempty");
    std::vector<std::vector<double>> out(betas.size(),
                                         std::vector<double>(gammas.size()));
    parallel_for(betas.size() * gammas.size(), jobs, [&](std::size_t k) {
        const std::size_t r = k / gammas.size();
        const std::size_t c = k % gammas.size();
        const std::vector<LayerParams> p{{betas[r], gammas[c], gamma_bias}};
        if (mode.is_exact()) {
            out[r][c] = ansatz_cost(inst, scheme, p);
        } else {
            const RunMode point = RunMode::with_shots(mode.shots, derive_seed(mode.seed, k));
            out[r][c] = run_ansatz(inst, scheme, p, point).final_cost();
        }
    });
    return out;
}

inline constexpr double kTieTolerance = 1e-12;

struct Solution {
    SpinString z;
    double cost = 0.0;
    enum class Source { sign_of_mean, modal_pattern } source = Source::sign_of_mean;
};

/// Rounds a trace to a classical string.
///
/// Candidate A takes sign(zbar_i), ties broken by a seeded coin. Candidate B
/// takes, per label, the most likely data pattern (largest conditional
/// probability in exact mode, most frequent shot pattern in shot mode);
/// unobserved labels fall back to candidate A's spins. The candidate with
/// the lower classical cost is returned, padded variables stripped.
inline Solution extract_solution(const AnsatzTrace &trace,
                                 const EncodingScheme &scheme,
                                 const SKInstance &inst, std::uint64_t seed = 0) {
    check_sizes(inst, scheme);
    const GroupStats &st = trace.stats.back();
    const std::size_t d = scheme.group_size;
    Rng rng = make_rng(seed, 0x5E1EC7ULL);

    SpinString a(scheme.n_vars, 1);
    for (std::size_t i = 0; i < scheme.n_vars; ++i) {
        const double m = st.zbar[i];
        if (m > kTieTolerance) {
            a[i] = 1;
        } else if (m < -kTieTolerance) {
            a[i] = -1;
        } else {
            a[i] = (rng() >> 63U) != 0U ? 1 : -1;
        }
    }

    std::vector<double> best_weight(scheme.n_groups, 0.0);
    std::vector<std::uint64_t> best_pattern(scheme.n_groups, 0);
    std::vector<char> seen(scheme.n_groups, 0);
    auto consider = [&](std::uint64_t index, double w) {
        const auto l = static_cast<std::size_t>(index >> d);
        if (w > best_weight[l]) {
            best_weight[l] = w;
            best_pattern[l] = index & scheme.data_mask();
            seen[l] = 1;
        }
    };
    if (trace.mode.is_exact()) {
        const auto amps = trace.final_state.amplitudes();
        for (std::size_t k = 0; k < amps.size(); ++k) {
            consider(k, std::norm(amps[k]));
        }
    } else {
        for (const auto &[index, c] : trace.final_counts) {
            consider(index, static_cast<double>(c));
        }
    }
    SpinString b = a;
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        if (seen[l] == 0) {
            continue;
        }
        for (std::size_t k = 0; k < d; ++k) {
            b[scheme.variable_of(l, k)] = scheme.spin_of(best_pattern[l], k);
        }
    }

    const double ca = cost(inst, a);
    const double cb = cost(inst, b);
    Solution sol;
    if (cb < ca) {
        sol = {strip_padding(scheme, b), cb, Solution::Source::modal_pattern};
    } else {
        sol = {strip_padding(scheme, a), ca, Solution::Source::sign_of_mean};
    }
    return sol;
}

} // namespace qesolve
