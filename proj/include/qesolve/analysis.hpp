#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ansatz.hpp"
#include "common.hpp"
#include "encoding.hpp"
#include "estimator.hpp"
#include "problem.hpp"
#include "statevector.hpp"

namespace qesolve {

// ---------------------------------------------------------------------------
// Data-register entanglement entropy of an encoded string.
// ---------------------------------------------------------------------------

namespace detail {

struct WordsHash {
    std::size_t operator()(const std::vector<std::uint64_t> &w) const noexcept {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
        for (std::uint64_t x : w) {
            h = splitmix64(h ^ x);
        }
        return static_cast<std::size_t>(h);
    }
};

/// Packs the d spins of group `label` into 64-bit words.
inline std::vector<std::uint64_t> pack_group(const EncodingScheme &s, const SpinString &z,
                                             std::size_t label) {
    std::vector<std::uint64_t> words((s.group_size + 63) / 64, 0);
    for (std::size_t k = 0; k < s.group_size; ++k) {
        if (z[s.variable_of(label, k)] == -1) {
            words[k / 64] |= std::uint64_t{1} << (k % 64);
        }
    }
    return words;
}

} // namespace detail

/// Entropy upper bound min(d, log2(N/d)) of the data register.
inline double schmidt_bound(const EncodingScheme &s) {
    return std::min(static_cast<double>(s.group_size),
                    static_cast<double>(s.n_label_qubits));
}

/// Von Neumann entropy (bits) of the data register of encode_target(z, lambdas).
///
/// The reduced state is diagonal in the pattern basis: equal group patterns
/// pool their |lambda|^2. Works without building a statevector and so for any
/// group size.
inline double data_entropy(const EncodingScheme &scheme, const SpinString &z,
                           const std::vector<double> &label_probs) {
    validate_spins(z, scheme.n_vars);
    require(label_probs.size() == scheme.n_groups, "need one probability per group");
    double total = 0.0;
    for (double p : label_probs) {
        require(p >= 0.0 && std::isfinite(p), "label probabilities must be >= 0");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "label probabilities must sum to 1");

    double s = 0.0;
    if (scheme.group_size <= 64) {
        std::unordered_map<std::uint64_t, double> pooled;
        pooled.reserve(scheme.n_groups);
        for (std::size_t l = 0; l < scheme.n_groups; ++l) {
            pooled[detail::pack_group(scheme, z, l)[0]] += label_probs[l];
        }
        for (const auto &[key, q] : pooled) {
            s -= q > 0.0 ? q * std::log2(q) : 0.0;
        }
    } else {
        std::unordered_map<std::vector<std::uint64_t>, double, detail::WordsHash> pooled;
        for (std::size_t l = 0; l < scheme.n_groups; ++l) {
            pooled[detail::pack_group(scheme, z, l)] += label_probs[l];
        }
        for (const auto &[key, q] : pooled) {
            s -= q > 0.0 ? q * std::log2(q) : 0.0;
        }
    }
    s = std::max(s, 0.0);
    if (s > schmidt_bound(scheme) + 1e-9) {
        throw RuntimeError("data entropy " + std::to_string(s) +
                           " exceeds the Schmidt bound");
    }
    return s;
}

inline double data_entropy(const EncodingScheme &scheme, const SpinString &z,
                           const GroupAmplitudes &amps) {
    require(amps.lambdas.size() == scheme.n_groups, "need one lambda per group");
    std::vector<double> p;
    p.reserve(amps.lambdas.size());
    for (const auto &l : amps.lambdas) {
        p.push_back(std::norm(l));
    }
    return data_entropy(scheme, z, p);
}

struct EntropyProfile {
    std::size_t n_vars = 0;
    std::size_t n_samples = 0;
    std::vector<std::size_t> group_sizes;
    std::vector<double> mean_entropy;
    std::vector<double> stderr_entropy;
    std::vector<double> bound;
};

/// Mean data entropy over uniformly random strings with uniform lambdas.
/// Sample k of group size index g draws from RNG stream (g, k).
inline EntropyProfile entropy_profile(std::size_t n_vars,
                                      const std::vector<std::size_t> &group_sizes,
                                      std::size_t n_samples, std::uint64_t seed,
                                      std::size_t jobs = 1) {
    require(n_samples >= 1, "need at least one sample");
    require(!group_sizes.empty(), "need at least one group size");
    EntropyProfile prof;
    prof.n_vars = n_vars;
    prof.n_samples = n_samples;
    prof.group_sizes = group_sizes;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        const EncodingScheme scheme = make_scheme(n_vars, group_sizes[g]);
        const std::vector<double> probs(scheme.n_groups,
                                        1.0 / static_cast<double>(scheme.n_groups));
        std::vector<double> values(n_samples);
        parallel_for(n_samples, jobs, [&](std::size_t k) {
            Rng rng = make_rng(derive_seed(seed, g), k);
            SpinString z(n_vars);
            for (auto &v : z) {
                v = (rng() >> 63U) != 0U ? 1 : -1;
            }
            values[k] = data_entropy(scheme, z, probs);
        });
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                            static_cast<double>(n_samples);
        double ss = 0.0;
        for (double v : values) {
            ss += (v - mean) * (v - mean);
        }
        const double se =
            n_samples > 1 ? std::sqrt(ss / static_cast<double>(n_samples - 1) /
                                      static_cast<double>(n_samples))
                          : 0.0;
        prof.mean_entropy.push_back(mean);
        prof.stderr_entropy.push_back(se);
        prof.bound.push_back(schmidt_bound(scheme));
    }
    return prof;
}

/// Entropy from an explicit data-register reduced density matrix; used to
/// cross-check the pattern-pooling route on small encodings.
inline double reduced_data_entropy(const EncodingScheme &scheme, const Statevector &psi) {
    require(psi.n_qubits() == scheme.n_qubits, "state does not match the scheme");
    const std::size_t dd = std::size_t{1} << scheme.group_size;
    require(dd <= 256, "explicit reduced density matrix limited to d <= 8");
    // rho[a][b] = sum_l psi(l,a) conj(psi(l,b)); Hermitian eigenvalues by Jacobi
    std::vector<Complex> rho(dd * dd, Complex{});
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        for (std::size_t a = 0; a < dd; ++a) {
            const Complex x = psi[scheme.basis_index(l, a)];
            if (x == Complex{}) {
                continue;
            }
            for (std::size_t b = 0; b < dd; ++b) {
                rho[a * dd + b] += x * std::conj(psi[scheme.basis_index(l, b)]);
            }
        }
    }
    // real symmetric embedding [[Re, -Im], [Im, Re]] doubles every eigenvalue
    const std::size_t n = 2 * dd;
    std::vector<double> A(n * n);
    for (std::size_t a = 0; a < dd; ++a) {
        for (std::size_t b = 0; b < dd; ++b) {
            const Complex v = rho[a * dd + b];
            A[a * n + b] = v.real();
            A[(a + dd) * n + (b + dd)] = v.real();
            A[a * n + (b + dd)] = -v.imag();
            A[(a + dd) * n + b] = v.imag();
        }
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += A[p * n + q] * A[p * n + q];
            }
        }
        if (off < 1e-30) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A[p * n + q];
                if (std::abs(apq) < 1e-300) {
                    continue;
                }
                const double theta = (A[q * n + q] - A[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A[k * n + p];
                    const double akq = A[k * n + q];
                    A[k * n + p] = c * akp - s * akq;
                    A[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A[p * n + k];
                    const double aqk = A[q * n + k];
                    A[p * n + k] = c * apk - s * aqk;
                    A[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ev = A[k * n + k];
        if (ev > 1e-15) {
            s -= 0.5 * ev * std::log2(ev); // each eigenvalue appears twice
        }
    }
    return std::max(s, 0.0);
}

// ---------------------------------------------------------------------------
// Decomposition baseline.
// ---------------------------------------------------------------------------

/// r*(p) constants at d = N, supplied by the caller, and the Parisi constant.
struct BaselineTable {
    std::map<std::size_t, double> r_star;
    double parisi = 0.7632;

    void validate() const {
        require(parisi > 0.0, "Parisi constant must be positive");
        for (const auto &[p, r] : r_star) {
            require(r > 0.0 && r <= 1.0, "r*(p) values must lie in (0, 1]");
        }
    }
};

/// r*(p) * sqrt(d / N)
inline double baseline_ratio(std::size_t p, std::size_t n_vars, std::size_t group_size,
                             const BaselineTable &table) {
    table.validate();
    const auto it = table.r_star.find(p);
    require(it != table.r_star.end(), "no r*(p) entry for p=" + std::to_string(p));
    require(group_size >= 1 && group_size <= n_vars, "need 1 <= d <= N");
    return it->second *
           std::sqrt(static_cast<double>(group_size) / static_cast<double>(n_vars));
}

/// Parisi estimate of the SK ground-state cost for +/-1 or unit-variance weights.
inline double parisi_ground_state(std::size_t n_vars, const BaselineTable &table) {
    return -table.parisi * std::pow(static_cast<double>(n_vars), 1.5);
}

/// Sum of the exact optima of the independent intra-group subproblems.
inline double decomposed_baseline_exact(const SKInstance &inst, const EncodingScheme &scheme) {
    check_sizes(inst, scheme);
    const std::size_t d = scheme.group_size;
    require(d <= kBruteForceCap,
            "decomposed baseline needs d <= " + std::to_string(kBruteForceCap));
    if (d == 1) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t l = 0; l < scheme.n_groups; ++l) {
        SKInstance sub(d, inst.weight_kind(), inst.seed());
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a + 1; b < d; ++b) {
                sub.set_weight(a, b,
                               inst.weight(scheme.variable_of(l, a), scheme.variable_of(l, b)));
            }
        }
        total += brute_force_optimum(sub).best_cost;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Shot-noise study.
// ---------------------------------------------------------------------------

struct ShotNoisePoint {
    std::uint64_t shots = 0;
    double mean_abs_error = 0.0;
    double stderr_abs_error = 0.0;
    double mean_rel_error = 0.0;
};

struct ShotNoiseStudy {
    double exact_cost = 0.0;
    std::vector<ShotNoisePoint> points;
};

/// Samples the exact final state of the ansatz `replicas` times per shot
/// budget and measures |C_shots - C_exact|. Replica r of budget index k uses
/// RNG stream (k, r).
inline ShotNoiseStudy shot_noise_study(const SKInstance &inst, const EncodingScheme &scheme,
                                       const std::vector<LayerParams> &params,
                                       const std::vector<std::uint64_t> &shot_counts,
                                       std::size_t replicas, std::uint64_t seed,
                                       std::size_t jobs = 1) {
    require(replicas >= 1, "need at least one replica");
    require(!shot_counts.empty(), "need at least one shot count");
    const Statevector psi = ansatz_state(inst, scheme, params);
    ShotNoiseStudy out;
    out.exact_cost = estimate_cost(inst, scheme, exact_group_stats(scheme, psi)).total;
    const double denom = std::max(std::abs(out.exact_cost), 1e-300);
    for (std::size_t k = 0; k < shot_counts.size(); ++k) {
        const std::uint64_t n = shot_counts[k];
        require(n >= 1, "shot counts must be positive");
        std::vector<double> err(replicas);
        parallel_for(replicas, jobs, [&](std::size_t r) {
            Rng rng = make_rng(derive_seed(seed, k), r);
            const Counts counts = sample(psi, n, rng);
            const double c =
                estimate_cost(inst, scheme, shot_group_stats(scheme, counts, n)).total;
            err[r] = std::abs(c - out.exact_cost);
        });
        ShotNoisePoint pt;
        pt.shots = n;
        pt.mean_abs_error =
            std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(replicas);
        double ss = 0.0;
        for (double e : err) {
            ss += (e - pt.mean_abs_error) * (e - pt.mean_abs_error);
        }
        pt.stderr_abs_error =
            replicas > 1 ? std::sqrt(ss / static_cast<double>(replicas - 1) /
                                     static_cast<double>(replicas))
                         : 0.0;
        pt.mean_rel_error = pt.mean_abs_error / denom;
        out.points.push_back(pt);
    }
    return out;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double> &xs, const std::vector<double> &ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, "need at least two points");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        require(xs[k] > 0 && ys[k] > 0, "log-log fit needs positive values");
        lx.push_back(std::log(xs[k]));
        ly.push_back(std::log(ys[k]));
    }
    const auto n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    require(sxx > 0.0, "log-log fit needs distinct x values");
    return sxy / sxx;
}

} // namespace qesolve
