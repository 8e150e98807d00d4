#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "ansatz.hpp"
#include "common.hpp"
#include "encoding.hpp"
#include "problem.hpp"

namespace qesolve {

enum class LocalMethod { nelder_mead, coordinate_descent };

inline std::string to_string(LocalMethod m) {
    return m == LocalMethod::nelder_mead ? "nelder_mead" : "coordinate_descent";
}

inline LocalMethod parse_local_method(const std::string &s) {
    if (s == "nelder_mead") {
        return LocalMethod::nelder_mead;
    }
    if (s == "coordinate_descent") {
        return LocalMethod::coordinate_descent;
    }
    throw ValidationError("unknown local method '" + s +
                          "' (nelder_mead|coordinate_descent)");
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double width() const { return hi - lo; }
};

/// gamma is searched in units of d / N^1.5 ("theta"), which makes its
/// useful range roughly independent of the problem size.
inline double gamma_unit(std::size_t n_vars, std::size_t group_size) {
    return static_cast<double>(group_size) /
           std::pow(static_cast<double>(n_vars), 1.5);
}

struct OptimizerConfig {
    std::size_t n_hops = 20;
    double hop_scale = 0.15; // fraction of each parameter's range
    LocalMethod local_method = LocalMethod::nelder_mead;
    double local_tol = 1e-8;
    std::size_t max_local_evals = 200;
    Interval beta_bounds{0.0, std::numbers::pi};
    Interval theta_bounds{-8.0, 8.0};
    Interval bias_bounds{-std::numbers::pi / 2, std::numbers::pi / 2};
    bool freeze_gamma_bias = false;
    std::uint64_t seed = 0;
    /// Starting point; missing layers are filled with default_layer.
    std::vector<LayerParams> initial;

    void validate() const {
        require(hop_scale >= 0.0 && std::isfinite(hop_scale), "hop_scale must be >= 0");
        require(local_tol > 0.0, "local_tol must be positive");
        require(beta_bounds.width() > 0 && theta_bounds.width() > 0 &&
                    bias_bounds.width() > 0,
                "parameter bounds must be nonempty");
    }
};

/// Basin-hopping output. history holds the cost after the initial local
/// refinement followed by the cost of every accepted hop.
struct OptimResult {
    std::vector<LayerParams> best_params;
    double best_cost = 0.0;
    double initial_cost = 0.0;
    double ratio = 0.0;
    std::size_t eval_count = 0;
    std::vector<double> history;
};

namespace detail {

inline double wrap_into(double x, const Interval &b) {
    const double w = b.width();
    double y = std::fmod(x - b.lo, w);
    if (y < 0) {
        y += w;
    }
    return b.lo + y;
}

/// Minimizes f from x0 with a budget of `budget` evaluations. Returns the
/// best point; `fx` receives its value.
inline std::vector<double>
nelder_mead(const std::function<double(const std::vector<double> &)> &f,
            std::vector<double> x0, double fx0, const std::vector<double> &steps,
            double tol, std::size_t budget, std::size_t &used, double &fx) {
    const std::size_t n = x0.size();
    used = 0;
    fx = fx0;
    if (n == 0 || budget == 0) {
        return x0;
    }
    std::vector<std::vector<double>> simplex{x0};
    std::vector<double> values{fx0};
    for (std::size_t k = 0; k < n && used < budget; ++k) {
        auto v = x0;
        v[k] += steps[k];
        simplex.push_back(v);
        values.push_back(f(v));
        ++used;
    }
    if (simplex.size() < n + 1) {
        const auto best = std::min_element(values.begin(), values.end()) - values.begin();
        fx = values[static_cast<std::size_t>(best)];
        return simplex[static_cast<std::size_t>(best)];
    }

    std::vector<std::size_t> order(n + 1);
    auto eval = [&](const std::vector<double> &x) {
        ++used;
        return f(x);
    };
    while (used < budget) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double spread = values[worst] - values[best];
        double size = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            for (std::size_t j = 0; j < n; ++j) {
                size = std::max(size, std::abs(simplex[k][j] - simplex[best][j]));
            }
        }
        if (spread <= tol && size <= tol) {
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                centroid[j] += simplex[k][j] / static_cast<double>(n);
            }
        }
        auto along = [&](double t) {
            std::vector<double> v(n);
            for (std::size_t j = 0; j < n; ++j) {
                v[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
            }
            return v;
        };

        auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < values[best]) {
            if (used >= budget) {
                simplex[worst] = xr;
                values[worst] = fr;
                break;
            }
            auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        if (used >= budget) {
            break;
        }
        const bool outside = fr < values[worst];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        // shrink towards the best vertex
        for (std::size_t k = 0; k <= n && used < budget; ++k) {
            if (k == best) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
            }
            values[k] = eval(simplex[k]);
        }
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    fx = values[best];
    return simplex[best];
}

inline std::vector<double>
coordinate_descent(const std::function<double(const std::vector<double> &)> &f,
                   std::vector<double> x, double fx0, std::vector<double> steps,
                   double tol, std::size_t budget, std::size_t &used, double &fx) {
    used = 0;
    fx = fx0;
    bool any_large = true;
    while (used < budget && any_large) {
        any_large = false;
        for (std::size_t j = 0; j < x.size() && used < budget; ++j) {
            if (steps[j] <= tol) {
                continue;
            }
            any_large = true;
            bool moved = false;
            for (double sign : {1.0, -1.0}) {
                if (used >= budget) {
                    break;
                }
                auto y = x;
                y[j] += sign * steps[j];
                const double fy = f(y);
                ++used;
                if (fy < fx) {
                    x = std::move(y);
                    fx = fy;
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                steps[j] *= 0.5;
            }
        }
    }
    return x;
}

} // namespace detail

/// Flat optimizer coordinates <-> layer parameters.
class ParamCodec {
  public:
    ParamCodec(std::size_t p, const EncodingScheme &scheme, const OptimizerConfig &cfg)
        : p_(p), unit_(gamma_unit(scheme.n_vars, scheme.group_size)),
          frozen_(cfg.freeze_gamma_bias), cfg_(cfg) {}

    [[nodiscard]] std::size_t per_layer() const { return frozen_ ? 2 : 3; }
    [[nodiscard]] std::size_t size() const { return p_ * per_layer(); }

    [[nodiscard]] std::vector<double> encode(const std::vector<LayerParams> &lp) const {
        std::vector<double> x;
        for (const auto &l : lp) {
            x.push_back(l.beta);
            x.push_back(l.gamma / unit_);
            if (!frozen_) {
                x.push_back(l.gamma_bias);
            }
        }
        return x;
    }

    /// Wraps each coordinate into its range. Frozen biases keep `fixed_bias`.
    [[nodiscard]] std::vector<LayerParams> decode(const std::vector<double> &x,
                                                  const std::vector<double> &fixed_bias) const {
        std::vector<LayerParams> lp(p_);
        for (std::size_t k = 0; k < p_; ++k) {
            const double *v = &x[k * per_layer()];
            lp[k].beta = detail::wrap_into(v[0], cfg_.beta_bounds);
            lp[k].gamma = detail::wrap_into(v[1], cfg_.theta_bounds) * unit_;
            lp[k].gamma_bias =
                frozen_ ? fixed_bias[k] : detail::wrap_into(v[2], cfg_.bias_bounds);
        }
        return lp;
    }

    [[nodiscard]] std::vector<double> wrap(std::vector<double> x) const {
        for (std::size_t k = 0; k < p_; ++k) {
            double *v = &x[k * per_layer()];
            v[0] = detail::wrap_into(v[0], cfg_.beta_bounds);
            v[1] = detail::wrap_into(v[1], cfg_.theta_bounds);
            if (!frozen_) {
                v[2] = detail::wrap_into(v[2], cfg_.bias_bounds);
            }
        }
        return x;
    }

    /// Range width per coordinate.
    [[nodiscard]] std::vector<double> widths() const {
        std::vector<double> w;
        for (std::size_t k = 0; k < p_; ++k) {
            w.push_back(cfg_.beta_bounds.width());
            w.push_back(cfg_.theta_bounds.width());
            if (!frozen_) {
                w.push_back(cfg_.bias_bounds.width());
            }
        }
        return w;
    }

  private:
    std::size_t p_;
    double unit_;
    bool frozen_;
    const OptimizerConfig &cfg_;
};

inline LayerParams default_layer(const EncodingScheme &scheme) {
    // small positive angles; theta = 1 in gamma units
    return {0.3, gamma_unit(scheme.n_vars, scheme.group_size), 0.0};
}

/// Basin hopping with derivative-free local refinement on the exact-mode
/// cost. Hops perturb the current best by Gaussian noise of width
/// hop_scale * range and are accepted only when they improve it.
inline OptimResult optimize(const SKInstance &inst, const EncodingScheme &scheme,
                            std::size_t p, const OptimizerConfig &cfg, double c_star) {
    require(p >= 1, "depth p must be at least 1");
    cfg.validate();
    check_sizes(inst, scheme);

    std::vector<LayerParams> start = cfg.initial;
    require(start.size() <= p, "initial guess has more layers than p");
    while (start.size() < p) {
        start.push_back(default_layer(scheme));
    }
    std::vector<double> fixed_bias(p);
    for (std::size_t k = 0; k < p; ++k) {
        fixed_bias[k] = start[k].gamma_bias;
    }

    const ParamCodec codec(p, scheme, cfg);
    std::size_t evals = 0;
    auto f = [&](const std::vector<double> &x) {
        return ansatz_cost(inst, scheme, codec.decode(x, fixed_bias));
    };

    OptimResult res;
    std::vector<double> best = codec.encode(start);
    double best_f = f(best);
    ++evals;
    res.initial_cost = best_f;

    const auto widths = codec.widths();
    auto refine = [&](std::vector<double> x, double fx, std::vector<double> &out,
                      double &fout) {
        std::vector<double> steps(widths.size());
        for (std::size_t j = 0; j < steps.size(); ++j) {
            steps[j] = 0.05 * widths[j];
        }
        std::size_t used = 0;
        if (cfg.local_method == LocalMethod::nelder_mead) {
            out = detail::nelder_mead(f, std::move(x), fx, steps, cfg.local_tol,
                                      cfg.max_local_evals, used, fout);
        } else {
            out = detail::coordinate_descent(f, std::move(x), fx, steps, cfg.local_tol,
                                             cfg.max_local_evals, used, fout);
        }
        evals += used;
        out = codec.wrap(std::move(out));
    };

    {
        std::vector<double> x;
        double fx = 0.0;
        refine(best, best_f, x, fx);
        if (fx < best_f) {
            best = std::move(x);
            best_f = fx;
        }
    }
    res.history.push_back(best_f);

    Rng rng = make_rng(cfg.seed, 0xB4511ULL);
    std::normal_distribution<double> normal;
    for (std::size_t hop = 0; hop < cfg.n_hops; ++hop) {
        auto y = best;
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] += cfg.hop_scale * widths[j] * normal(rng);
        }
        y = codec.wrap(std::move(y));
        const double fy = f(y);
        ++evals;
        std::vector<double> x;
        double fx = 0.0;
        refine(y, fy, x, fx);
        if (fx < best_f) {
            best = std::move(x);
            best_f = fx;
            res.history.push_back(best_f);
        }
    }

    res.best_params = codec.decode(best, fixed_bias);
    res.best_cost = best_f;
    res.eval_count = evals;
    res.ratio = c_star < 0.0 ? best_f / c_star : 0.0;
    return res;
}

/// Optimizes p = 1..p_max, each depth starting from the previous optimum
/// with an identity layer appended.
inline std::vector<OptimResult> optimize_warm(const SKInstance &inst,
                                              const EncodingScheme &scheme,
                                              std::size_t p_max, OptimizerConfig cfg,
                                              double c_star) {
    require(p_max >= 1, "depth p must be at least 1");
    std::vector<OptimResult> out;
    for (std::size_t p = 1; p <= p_max; ++p) {
        if (!out.empty()) {
            cfg.initial = out.back().best_params;
            cfg.initial.push_back({0.0, 0.0, 0.0});
        }
        out.push_back(optimize(inst, scheme, p, cfg, c_star));
        cfg.seed = derive_seed(cfg.seed, p);
    }
    return out;
}

/// gamma *= (d1/d0) (N0/N1)^1.5; beta and gamma_bias unchanged.
inline std::vector<LayerParams> transfer_params(std::vector<LayerParams> params,
                                                std::size_t n0, std::size_t d0,
                                                std::size_t n1, std::size_t d1) {
    require(n0 > 0 && d0 > 0 && n1 > 0 && d1 > 0, "sizes must be positive");
    const double factor = gamma_unit(n1, d1) / gamma_unit(n0, d0);
    for (auto &lp : params) {
        lp.gamma *= factor;
    }
    return params;
}

struct EnsembleRatios {
    std::vector<double> costs;
    std::vector<double> optima;
    std::vector<double> ratios;
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline EnsembleRatios summarize_ratios(std::vector<double> costs,
                                       std::vector<double> optima) {
    EnsembleRatios out;
    out.costs = std::move(costs);
    out.optima = std::move(optima);
    const std::size_t n = out.costs.size();
    for (std::size_t k = 0; k < n; ++k) {
        out.ratios.push_back(approximation_ratio(out.costs[k], out.optima[k]));
    }
    if (n == 0) {
        return out;
    }
    out.mean = std::accumulate(out.ratios.begin(), out.ratios.end(), 0.0) /
               static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double r : out.ratios) {
            ss += (r - out.mean) * (r - out.mean);
        }
        out.stderr_ = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return out;
}

/// Frozen parameters evaluated on every instance of an ensemble. When
/// `optima` is empty each instance's C* comes from reference_optimum.
inline EnsembleRatios concentration_experiment(const std::vector<SKInstance> &instances,
                                               const EncodingScheme &scheme,
                                               const std::vector<LayerParams> &params,
                                               std::vector<double> optima = {},
                                               std::size_t jobs = 1,
                                               const LocalSearchConfig &ls = {}) {
    require(!instances.empty(), "ensemble is empty");
    for (const auto &inst : instances) {
        require(inst.n_vars() == instances.front().n_vars(),
                "ensemble instances must share N");
    }
    require(optima.empty() || optima.size() == instances.size(),
            "need one optimum per instance");
    std::vector<double> costs(instances.size());
    const bool need_opt = optima.empty();
    if (need_opt) {
        optima.resize(instances.size());
    }
    parallel_for(instances.size(), jobs, [&](std::size_t k) {
        costs[k] = ansatz_cost(instances[k], scheme, params);
        if (need_opt) {
            optima[k] = reference_optimum(instances[k], ls).best_cost;
        }
    });
    return summarize_ratios(std::move(costs), std::move(optima));
}

struct ScalingPoint {
    std::size_t n_vars = 0;
    std::size_t group_size = 0;
    double theta = 0.0;
};

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0; // log theta at log x = 0
    double prefactor = 0.0; // exp(intercept)
    std::vector<double> residuals;
    bool low_confidence = false;
};

/// Least-squares line through (log(d / N^1.5), log theta).
inline ScalingFit fit_gamma_scaling(const std::vector<ScalingPoint> &pts) {
    std::vector<double> xs, ys;
    for (const auto &p : pts) {
        require(p.theta > 0.0 && std::isfinite(p.theta), "theta values must be positive");
        xs.push_back(std::log(gamma_unit(p.n_vars, p.group_size)));
        ys.push_back(std::log(p.theta));
    }
    const auto n = static_cast<double>(xs.size());
    require(xs.size() >= 2, "scaling fit needs at least two points");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    require(sxx > 1e-24, "scaling fit needs at least two distinct d/N^1.5 values");
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.prefactor = std::exp(fit.intercept);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        fit.residuals.push_back(ys[k] - (fit.intercept + fit.slope * xs[k]));
    }
    fit.low_confidence = pts.size() < 4;
    return fit;
}

struct ThetaSearch {
    double lo = 1e-4; // bounds on the common gamma scale
    double hi = 2.0;
    std::size_t grid = 48;
    std::size_t refine_iters = 40;
};

/// 1-D search over a common gamma scale s: layer k uses gamma = s * shape[k]
/// with beta and gamma_bias taken from `frozen`. Minimizes the mean cost over
/// `instances` by a log-spaced scan followed by golden-section refinement in
/// log s. Returns s.
inline double optimize_gamma_scale(const std::vector<SKInstance> &instances,
                                   const EncodingScheme &scheme,
                                   const std::vector<LayerParams> &frozen,
                                   const std::vector<double> &shape,
                                   const ThetaSearch &search = {}, std::size_t jobs = 1) {
    require(!instances.empty(), "need at least one instance");
    require(frozen.size() == shape.size() && !frozen.empty(),
            "shape must have one entry per layer");
    require(search.lo > 0.0 && search.hi > search.lo && search.grid >= 3,
            "invalid gamma-scale search range");
    auto mean_cost = [&](double log_s) {
        auto lp = frozen;
        for (std::size_t k = 0; k < lp.size(); ++k) {
            lp[k].gamma = std::exp(log_s) * shape[k];
        }
        std::vector<double> c(instances.size());
        parallel_for(instances.size(), jobs,
                     [&](std::size_t i) { c[i] = ansatz_cost(instances[i], scheme, lp); });
        return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    };
    const double a = std::log(search.lo);
    const double b = std::log(search.hi);
    const double step = (b - a) / static_cast<double>(search.grid - 1);
    std::size_t best = 0;
    double best_f = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < search.grid; ++k) {
        const double v = mean_cost(a + step * static_cast<double>(k));
        if (v < best_f) {
            best_f = v;
            best = k;
        }
    }
    double lo = a + step * (static_cast<double>(best) - 1.0);
    double hi = a + step * (static_cast<double>(best) + 1.0);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = mean_cost(x1);
    double f2 = mean_cost(x2);
    for (std::size_t it = 0; it < search.refine_iters; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = mean_cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = mean_cost(x2);
        }
    }
    const double x = f1 < f2 ? x1 : x2;
    return std::min(f1, f2) <= best_f ? std::exp(x)
                                      : std::exp(a + step * static_cast<double>(best));
}

} // namespace qesolve
