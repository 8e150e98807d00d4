#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "encoding.hpp"

namespace qesolve {

enum class WeightKind { pm1, gaussian };

inline std::string to_string(WeightKind k) {
    return k == WeightKind::pm1 ? "pm1" : "gaussian";
}

inline WeightKind parse_weight_kind(const std::string &s) {
    if (s == "pm1") {
        return WeightKind::pm1;
    }
    if (s == "gaussian") {
        return WeightKind::gaussian;
    }
    throw ValidationError("unknown weight kind '" + s + "' (pm1|gaussian)");
}

/// Fully connected quadratic spin problem C(z) = sum_{i<j} w_ij z_i z_j.
///
/// Weights are kept in a dense symmetric N x N buffer with a zero diagonal;
/// only the i < j half is meaningful.
class SKInstance {
  public:
    SKInstance() = default;
    SKInstance(std::size_t n_vars, WeightKind kind, std::uint64_t seed)
        : n_(n_vars), kind_(kind), seed_(seed), w_(n_vars * n_vars, 0.0) {
        require(n_vars >= 2, "an instance needs at least two variables");
    }

    [[nodiscard]] std::size_t n_vars() const noexcept { return n_; }
    [[nodiscard]] WeightKind weight_kind() const noexcept { return kind_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    [[nodiscard]] double weight(std::size_t i, std::size_t j) const {
        return w_[i * n_ + j];
    }

    void set_weight(std::size_t i, std::size_t j, double w) {
        require(i < n_ && j < n_ && i != j, "invalid weight index");
        w_[i * n_ + j] = w;
        w_[j * n_ + i] = w;
    }

    /// Row i of the symmetric weight matrix.
    [[nodiscard]] const double *row(std::size_t i) const { return &w_[i * n_]; }

    [[nodiscard]] std::size_t n_weights() const noexcept {
        return n_ * (n_ - 1) / 2;
    }

    bool operator==(const SKInstance &) const = default;

  private:
    std::size_t n_ = 0;
    WeightKind kind_ = WeightKind::pm1;
    std::uint64_t seed_ = 0;
    std::vector<double> w_;
};

inline SKInstance generate_sk(std::size_t n_vars, WeightKind kind,
                              std::uint64_t seed) {
    require(n_vars >= 2, "an instance needs at least two variables");
    SKInstance inst(n_vars, kind, seed);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n_vars; ++i) {
        for (std::size_t j = i + 1; j < n_vars; ++j) {
            double w = 0.0;
            if (kind == WeightKind::pm1) {
                w = (rng() >> 63U) != 0U ? 1.0 : -1.0;
            } else {
                w = normal(rng);
            }
            inst.set_weight(i, j, w);
        }
    }
    return inst;
}

/// The four-variable example with optimum -4 at (1,-1,1,-1).
inline SKInstance fixture_n4() {
    SKInstance inst(4, WeightKind::pm1, 0);
    inst.set_weight(0, 1, 1.0);
    inst.set_weight(0, 2, -1.0);
    inst.set_weight(0, 3, 1.0);
    inst.set_weight(1, 2, -1.0);
    inst.set_weight(1, 3, -1.0);
    inst.set_weight(2, 3, 1.0);
    return inst;
}

/// Copy of `inst` extended with zero-weight variables up to n_vars.
inline SKInstance pad_instance(const SKInstance &inst, std::size_t n_vars) {
    require(n_vars >= inst.n_vars(), "padding cannot shrink an instance");
    SKInstance out(n_vars, inst.weight_kind(), inst.seed());
    for (std::size_t i = 0; i < inst.n_vars(); ++i) {
        for (std::size_t j = i + 1; j < inst.n_vars(); ++j) {
            out.set_weight(i, j, inst.weight(i, j));
        }
    }
    return out;
}

inline double cost(const SKInstance &inst, const SpinString &z) {
    validate_spins(z, inst.n_vars());
    double c = 0.0;
    for (std::size_t i = 0; i < inst.n_vars(); ++i) {
        const double *w = inst.row(i);
        double acc = 0.0;
        for (std::size_t j = i + 1; j < inst.n_vars(); ++j) {
            acc += w[j] * z[j];
        }
        c += z[i] * acc;
    }
    return c;
}

enum class OptimumMethod { brute_force, local_search };

struct OptimumRecord {
    double best_cost = 0.0;
    std::vector<SpinString> minimizers;
    OptimumMethod method = OptimumMethod::brute_force;
};

inline std::string to_string(OptimumMethod m) {
    return m == OptimumMethod::brute_force ? "brute_force" : "local_search";
}

inline constexpr std::size_t kBruteForceCap = 24;

/// Exact optimum by Gray-code enumeration of the 2^(N-1) strings with
/// z_{N-1} = +1; the flipped half follows from z -> -z.
inline OptimumRecord brute_force_optimum(const SKInstance &inst,
                                         std::size_t cap = kBruteForceCap) {
    const std::size_t n = inst.n_vars();
    require(n <= cap, "brute force limited to N <= " + std::to_string(cap));

    SpinString z(n, 1);
    std::vector<double> field(n, 0.0); // field_i = sum_j w_ij z_j
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            field[i] += inst.weight(i, j);
        }
    }
    double current = cost(inst, z);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            scale += std::abs(inst.weight(i, j));
        }
    }
    const double tol = 1e-9 * scale;

    double best = current;
    std::vector<std::uint64_t> candidates{0};
    std::uint64_t gray = 0;
    const std::uint64_t total = std::uint64_t{1} << (n - 1);
    for (std::uint64_t step = 1; step < total; ++step) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(step));
        gray ^= std::uint64_t{1} << bit;
        // flipping z_bit changes the cost by -2 z_bit field_bit
        current -= 2.0 * z[bit] * field[bit];
        const double *w = inst.row(bit);
        const double delta = -2.0 * z[bit];
        for (std::size_t j = 0; j < n; ++j) {
            field[j] += delta * w[j];
        }
        z[bit] = -z[bit];
        if (current < best - tol) {
            best = current;
            candidates.assign(1, gray);
        } else if (current <= best + tol) {
            candidates.push_back(gray);
        }
    }

    OptimumRecord rec;
    rec.method = OptimumMethod::brute_force;
    std::vector<std::pair<double, SpinString>> exact;
    for (std::uint64_t g : candidates) {
        SpinString s(n, 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (((g >> i) & 1U) != 0U) {
                s[i] = -1;
            }
        }
        exact.emplace_back(cost(inst, s), std::move(s));
    }
    double exact_best = std::numeric_limits<double>::infinity();
    for (const auto &[c, s] : exact) {
        exact_best = std::min(exact_best, c);
    }
    std::set<SpinString> found;
    for (auto &[c, s] : exact) {
        if (c <= exact_best + tol) {
            SpinString flipped = s;
            for (int &v : flipped) {
                v = -v;
            }
            found.insert(s);
            found.insert(flipped);
        }
    }
    rec.best_cost = exact_best;
    rec.minimizers.assign(found.begin(), found.end());
    return rec;
}

struct LocalSearchConfig {
    std::size_t n_restarts = 0; // 0 -> 32 N
    std::size_t max_sweeps = 10;
    std::size_t tabu_tenure = 8;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

namespace detail {

struct TabuOutcome {
    double cost = 0.0;
    SpinString z;
};

inline TabuOutcome tabu_restart(const SKInstance &inst, std::size_t max_moves,
                                std::size_t tenure, Rng &rng) {
    const std::size_t n = inst.n_vars();
    SpinString z(n);
    for (auto &s : z) {
        s = (rng() >> 63U) != 0U ? 1 : -1;
    }
    std::vector<double> field(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double *w = inst.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            field[i] += w[j] * z[j];
        }
    }
    double current = cost(inst, z);
    TabuOutcome best{current, z};
    std::vector<std::size_t> tabu_until(n, 0);
    tenure = std::min(tenure, n - 1);

    for (std::size_t move = 1; move <= max_moves; ++move) {
        std::size_t pick = n;
        double pick_delta = std::numeric_limits<double>::infinity();
        std::size_t fallback = 0;
        double fallback_delta = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = -2.0 * z[i] * field[i];
            if (delta < fallback_delta) {
                fallback_delta = delta;
                fallback = i;
            }
            const bool allowed = tabu_until[i] < move ||
                                 current + delta < best.cost - 1e-12;
            if (allowed && delta < pick_delta) {
                pick_delta = delta;
                pick = i;
            }
        }
        if (pick == n) {
            pick = fallback;
            pick_delta = fallback_delta;
        }
        current += pick_delta;
        const double *w = inst.row(pick);
        const double step = -2.0 * z[pick];
        for (std::size_t j = 0; j < n; ++j) {
            field[j] += step * w[j];
        }
        z[pick] = -z[pick];
        tabu_until[pick] = move + tenure;
        if (current < best.cost - 1e-12) {
            best.cost = current;
            best.z = z;
        }
    }
    best.cost = cost(inst, best.z);
    return best;
}

} // namespace detail

/// Multi-start tabu search over single-spin flips.
///
/// Each restart starts from a random string drawn from its own RNG stream and
/// performs max_sweeps * N moves, always taking the best non-tabu flip (a
/// tabu flip is allowed when it improves on the restart's best). The lowest
/// cost over restarts wins; ties go to the lowest restart index.
inline OptimumRecord local_search_optimum(const SKInstance &inst,
                                          const LocalSearchConfig &config = {}) {
    const std::size_t n = inst.n_vars();
    const std::size_t restarts =
        config.n_restarts == 0 ? 32 * n : config.n_restarts;
    require(config.tabu_tenure >= 1, "tabu tenure must be positive");

    std::vector<detail::TabuOutcome> outcomes(restarts);
    parallel_for(restarts, config.jobs, [&](std::size_t r) {
        Rng rng = make_rng(config.seed, r);
        outcomes[r] = detail::tabu_restart(inst, config.max_sweeps * n,
                                           config.tabu_tenure, rng);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r) {
        if (outcomes[r].cost < outcomes[best].cost) {
            best = r;
        }
    }
    OptimumRecord rec;
    rec.method = OptimumMethod::local_search;
    rec.best_cost = outcomes[best].cost;
    rec.minimizers.push_back(outcomes[best].z);
    return rec;
}

/// Brute force up to the cap, tabu search beyond.
inline OptimumRecord reference_optimum(const SKInstance &inst,
                                       const LocalSearchConfig &config = {}) {
    if (inst.n_vars() <= kBruteForceCap) {
        return brute_force_optimum(inst);
    }
    return local_search_optimum(inst, config);
}

inline double approximation_ratio(double c, double c_star) {
    require(c_star < 0.0, "approximation ratio needs a negative optimum");
    return c / c_star;
}

} // namespace qesolve
