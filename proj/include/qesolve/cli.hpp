#pragma once

// Command implementations behind the qesolve executable. Kept in a header
// so tests can drive commands in-process.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "analysis.hpp"
#include "ansatz.hpp"
#include "common.hpp"
#include "compiler.hpp"
#include "encoding.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "problem.hpp"

#ifndef QESOLVE_VERSION
#define QESOLVE_VERSION "0.0.0"
#endif

namespace qesolve::cli {

namespace fs = std::filesystem;
using io::CsvRow;
using io::fmt17;
using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char *kOutDirEnv = "QESOLVE_OUT_DIR";

/// Collects every argument problem before reporting.
class Problems {
  public:
    void check(bool ok, const std::string &msg) {
        if (!ok) {
            list_.push_back(msg);
        }
    }
    void add(const std::string &msg) { list_.push_back(msg); }
    void raise_if_any() const {
        if (list_.empty()) {
            return;
        }
        std::string msg = "invalid arguments:";
        for (const auto &m : list_) {
            msg += "\n  - " + m;
        }
        throw ValidationError(msg);
    }

  private:
    std::vector<std::string> list_;
};

struct Common {
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out;
};

inline fs::path resolve_out(const std::string &out, const std::string &default_name) {
    if (!out.empty()) {
        return out;
    }
    const char *dir = std::getenv(kOutDirEnv);
    return fs::path(dir != nullptr && *dir != '\0' ? dir : ".") / default_name;
}

struct RunContext {
    std::vector<std::string> argv;
    std::string command;
    std::ostream &out;
    std::string started;
};

inline void finish_manifest(const RunContext &ctx, const fs::path &output, json config,
                            std::vector<std::string> inputs,
                            std::vector<std::string> outputs, std::uint64_t seed) {
    io::Manifest m;
    m.command = ctx.command;
    m.argv = ctx.argv;
    m.config = std::move(config);
    m.seeds = json{{"seed", seed}};
    m.version = QESOLVE_VERSION;
    m.started = ctx.started;
    m.finished = io::utc_timestamp();
    m.inputs = std::move(inputs);
    m.outputs = std::move(outputs);
    io::write_manifest(output, m);
}

inline std::vector<double> grid(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return v;
}

inline std::string stem_of(const std::string &path) { return fs::path(path).stem().string(); }

/// Loads the instance and scheme shared by several commands.
struct Problem {
    SKInstance original;
    SKInstance padded;
    EncodingScheme scheme;
    std::string id;
};

inline Problem load_problem(const std::string &path, bool fixture, std::size_t d, bool pad) {
    Problem pr;
    pr.original = fixture ? fixture_n4() : io::load_instance(path);
    pr.id = fixture ? "fixture_n4" : stem_of(path);
    pr.scheme = make_scheme(pr.original.n_vars(), d, pad);
    pr.padded = pr.scheme.padded ? pad_instance(pr.original, pr.scheme.n_vars) : pr.original;
    return pr;
}

inline void check_instance_paths(Problems &pb, const std::vector<std::string> &paths) {
    for (const auto &p : paths) {
        pb.check(fs::is_regular_file(p), "instance file '" + p + "' not found");
    }
}

struct OptimizerFlags {
    std::size_t hops = 20;
    std::size_t local_evals = 200;
    double hop_scale = 0.15;
    std::string local_method = "nelder_mead";
    bool freeze_bias = false;

    void add_to(CLI::App *sc) {
        sc->add_option("--hops", hops, "basin-hopping hops")->capture_default_str();
        sc->add_option("--local-evals", local_evals, "evaluation budget per local search")
            ->capture_default_str();
        sc->add_option("--hop-scale", hop_scale, "hop width as a fraction of each range")
            ->capture_default_str();
        sc->add_option("--local-method", local_method, "nelder_mead | coordinate_descent")
            ->capture_default_str();
        sc->add_flag("--freeze-bias", freeze_bias, "keep gamma' at 0");
    }
    void validate(Problems &pb) const {
        pb.check(hop_scale >= 0.0 && std::isfinite(hop_scale), "--hop-scale must be >= 0");
        pb.check(local_method == "nelder_mead" || local_method == "coordinate_descent",
                 "--local-method must be nelder_mead or coordinate_descent");
    }
    [[nodiscard]] OptimizerConfig config(std::uint64_t seed) const {
        OptimizerConfig c;
        c.n_hops = hops;
        c.max_local_evals = local_evals;
        c.hop_scale = hop_scale;
        c.local_method = parse_local_method(local_method);
        c.freeze_gamma_bias = freeze_bias;
        c.seed = seed;
        return c;
    }
    [[nodiscard]] json to_json() const {
        return json{{"hops", hops},
                    {"local_evals", local_evals},
                    {"hop_scale", hop_scale},
                    {"local_method", local_method},
                    {"freeze_bias", freeze_bias}};
    }
};

inline void add_common(CLI::App *sc, Common &c, const std::string &out_help) {
    sc->add_option("--seed", c.seed, "master RNG seed")->capture_default_str();
    sc->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
    sc->add_option("--out", c.out, out_help + " (default: $" + kOutDirEnv + "/...)");
}

inline void validate_common(Problems &pb, const Common &c) {
    pb.check(c.jobs >= 1, "--jobs must be at least 1");
}

inline void validate_mode(Problems &pb, const std::string &mode, std::uint64_t shots) {
    pb.check(mode == "exact" || mode == "shots", "--mode must be exact or shots");
    pb.check(mode != "shots" || shots >= 1, "--shots must be at least 1 in shot mode");
}

inline LocalSearchConfig cstar_config(std::uint64_t seed, std::size_t restarts,
                                      std::size_t jobs) {
    LocalSearchConfig ls;
    ls.seed = derive_seed(seed, 0xC5ULL);
    ls.n_restarts = restarts;
    ls.jobs = jobs;
    return ls;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    Common common;
    std::size_t n = 0;
    std::string kind = "pm1";
    std::size_t count = 1;
    bool fixture = false;
};

inline int cmd_generate(const RunContext &ctx, const GenerateArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    if (!a.fixture) {
        pb.check(a.n >= 2, "--n must be at least 2 (or pass --fixture)");
        pb.check(a.kind == "pm1" || a.kind == "gaussian", "--kind must be pm1 or gaussian");
        pb.check(a.count >= 1, "--count must be at least 1");
    }
    pb.raise_if_any();

    const fs::path dir = resolve_out(a.common.out, "instances");
    std::vector<std::string> outputs;
    if (a.fixture) {
        const fs::path p = dir / "fixture_n4.json";
        io::write_file(p, io::instance_to_json(fixture_n4()));
        outputs.push_back(p.string());
    } else {
        const WeightKind kind = parse_weight_kind(a.kind);
        for (std::size_t k = 0; k < a.count; ++k) {
            char name[96];
            std::snprintf(name, sizeof name, "sk_n%zu_%s_%03zu.json", a.n, a.kind.c_str(), k);
            const SKInstance inst = generate_sk(a.n, kind, derive_seed(a.common.seed, k));
            io::write_file(dir / name, io::instance_to_json(inst));
            outputs.push_back((dir / name).string());
        }
    }
    for (const auto &o : outputs) {
        ctx.out << "wrote " << o << "\n";
    }
    finish_manifest(ctx, dir / "generate",
                    json{{"n", a.n}, {"kind", a.kind}, {"count", a.count}, {"fixture", a.fixture}},
                    {}, outputs, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    Common common;
    std::vector<std::string> instances;
    std::size_t d = 0;
    std::size_t p = 1;
    std::string mode = "exact";
    std::uint64_t shots = 1000;
    bool pad = false;
    std::size_t ls_restarts = 0;
    OptimizerFlags opt;
};

inline int cmd_solve(const RunContext &ctx, const SolveArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(!a.instances.empty(), "--instance is required");
    check_instance_paths(pb, a.instances);
    pb.check(a.d >= 1, "--d is required and must be at least 1");
    pb.check(a.p >= 1, "--p must be at least 1");
    validate_mode(pb, a.mode, a.shots);
    a.opt.validate(pb);
    pb.raise_if_any();

    std::vector<Problem> problems;
    for (const auto &path : a.instances) {
        problems.push_back(load_problem(path, false, a.d, a.pad));
    }
    const bool shots = a.mode == "shots";

    std::vector<std::vector<CsvRow>> rows(problems.size());
    parallel_for(problems.size(), a.common.jobs, [&](std::size_t k) {
        const Problem &pr = problems[k];
        const std::uint64_t seed = derive_seed(a.common.seed, k);
        const OptimumRecord opt =
            reference_optimum(pr.original, cstar_config(seed, a.ls_restarts, 1));
        const auto results =
            optimize_warm(pr.padded, pr.scheme, a.p, a.opt.config(seed), opt.best_cost);
        for (const auto &r : results) {
            const std::size_t depth = r.best_params.size();
            const RunMode rm = shots ? RunMode::with_shots(a.shots, derive_seed(seed, 100 + depth))
                                     : RunMode::exact();
            const AnsatzTrace tr = run_ansatz(pr.padded, pr.scheme, r.best_params, rm);
            const Solution sol = extract_solution(tr, pr.scheme, pr.padded, seed);
            rows[k].push_back({pr.id, std::to_string(pr.original.n_vars()),
                               std::to_string(a.d), std::to_string(depth), a.mode,
                               shots ? std::to_string(a.shots) : "", fmt17(r.best_cost),
                               shots ? fmt17(tr.final_cost()) : "", fmt17(opt.best_cost),
                               to_string(opt.method), fmt17(r.ratio),
                               std::to_string(r.eval_count), fmt17(sol.cost),
                               io::spins_to_string(sol.z),
                               io::params_to_string(r.best_params)});
        }
    });

    const fs::path out = resolve_out(a.common.out, "solve.csv");
    std::vector<CsvRow> flat;
    for (auto &rs : rows) {
        for (auto &r : rs) {
            ctx.out << r[0] << " p=" << r[3] << " cost=" << r[6] << " c_star=" << r[8]
                    << " r=" << r[10] << " rounded=" << r[12] << "\n";
            flat.push_back(std::move(r));
        }
    }
    io::append_csv(out,
                   {"instance", "n_vars", "d", "p", "mode", "shots", "cost", "shot_cost",
                    "c_star", "c_star_method", "ratio", "evals", "rounded_cost",
                    "rounded_solution", "params"},
                   flat);
    json cfg{{"d", a.d}, {"p", a.p}, {"mode", a.mode}, {"shots", a.shots}, {"pad", a.pad},
             {"ls_restarts", a.ls_restarts}, {"optimizer", a.opt.to_json()}};
    finish_manifest(ctx, out, cfg, a.instances, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct LandscapeArgs {
    Common common;
    std::string instance;
    bool fixture = false;
    std::size_t d = 0;
    std::size_t beta_points = 33;
    std::size_t gamma_points = 33;
    double beta_min = 0.0;
    double beta_max = std::numbers::pi / 2;
    double gamma_min = 0.0;
    double gamma_max = std::numbers::pi / 2;
    double bias = 0.0;
    std::string mode = "exact";
    std::uint64_t shots = 1000;
};

inline int cmd_landscape(const RunContext &ctx, const LandscapeArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(a.fixture != !a.instance.empty(), "pass exactly one of --instance, --fixture");
    if (!a.instance.empty()) {
        check_instance_paths(pb, {a.instance});
        pb.check(a.d >= 1, "--d is required with --instance");
    }
    pb.check(a.beta_points >= 1 && a.gamma_points >= 1, "grid sizes must be at least 1");
    pb.check(std::isfinite(a.beta_min + a.beta_max + a.gamma_min + a.gamma_max + a.bias),
             "grid bounds must be finite");
    validate_mode(pb, a.mode, a.shots);
    pb.raise_if_any();

    const Problem pr = load_problem(a.instance, a.fixture, a.d == 0 ? 2 : a.d, false);
    const auto betas = grid(a.beta_min, a.beta_max, a.beta_points);
    const auto gammas = grid(a.gamma_min, a.gamma_max, a.gamma_points);
    const RunMode rm =
        a.mode == "shots" ? RunMode::with_shots(a.shots, a.common.seed) : RunMode::exact();
    const auto L = landscape(pr.padded, pr.scheme, betas, gammas, a.bias, rm, a.common.jobs);

    std::vector<CsvRow> rows;
    for (std::size_t r = 0; r < betas.size(); ++r) {
        for (std::size_t c = 0; c < gammas.size(); ++c) {
            rows.push_back({fmt17(betas[r]), fmt17(gammas[c]), fmt17(L[r][c])});
        }
    }
    const fs::path out = resolve_out(a.common.out, "landscape.csv");
    io::append_csv(out, {"beta", "gamma", "cost"}, rows);
    ctx.out << "wrote " << rows.size() << " grid points to " << out.string() << "\n";
    json cfg{{"instance", pr.id},          {"d", pr.scheme.group_size},
             {"beta_points", a.beta_points}, {"gamma_points", a.gamma_points},
             {"beta_min", a.beta_min},     {"beta_max", a.beta_max},
             {"gamma_min", a.gamma_min},   {"gamma_max", a.gamma_max},
             {"bias", a.bias},             {"mode", a.mode},
             {"shots", a.shots}};
    finish_manifest(ctx, out, cfg, a.fixture ? std::vector<std::string>{} : std::vector{a.instance},
                    {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EntropyArgs {
    Common common;
    std::size_t n = 65536;
    std::vector<std::size_t> d_list;
    std::size_t samples = 100;
};

inline int cmd_entropy(const RunContext &ctx, EntropyArgs a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(a.n >= 2, "--n must be at least 2");
    pb.check(a.samples >= 1, "--samples must be at least 1");
    if (a.d_list.empty() && a.n >= 2) {
        for (std::size_t d = 1; d <= a.n; d *= 2) {
            if (a.n % d == 0 && std::has_single_bit(a.n / d)) {
                a.d_list.push_back(d);
            }
        }
    }
    for (std::size_t d : a.d_list) {
        pb.check(d >= 1 && d <= a.n && a.n % d == 0 && std::has_single_bit(a.n / d),
                 "d=" + std::to_string(d) + " does not give a power-of-two number of groups");
    }
    pb.check(!a.d_list.empty(), "no valid group size for --n");
    pb.raise_if_any();

    const EntropyProfile prof =
        entropy_profile(a.n, a.d_list, a.samples, a.common.seed, a.common.jobs);
    std::vector<CsvRow> rows;
    for (std::size_t k = 0; k < prof.group_sizes.size(); ++k) {
        rows.push_back({std::to_string(a.n), std::to_string(prof.group_sizes[k]),
                        std::to_string(a.samples), fmt17(prof.mean_entropy[k]),
                        fmt17(prof.stderr_entropy[k]), fmt17(prof.bound[k])});
        ctx.out << "d=" << prof.group_sizes[k] << " S=" << prof.mean_entropy[k]
                << " bound=" << prof.bound[k] << "\n";
    }
    const fs::path out = resolve_out(a.common.out, "entropy.csv");
    io::append_csv(out, {"n_vars", "d", "samples", "mean_entropy", "stderr", "bound"}, rows);
    finish_manifest(ctx, out, json{{"n", a.n}, {"d_list", a.d_list}, {"samples", a.samples}},
                    {}, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BaselineArgs {
    Common common;
    std::vector<std::string> instances;
    std::size_t d = 0;
    std::vector<std::string> r_star;
    double parisi = 0.7632;
    std::size_t ls_restarts = 0;
};

inline BaselineTable parse_r_star(Problems &pb, const std::vector<std::string> &entries,
                                  double parisi) {
    BaselineTable t;
    t.parisi = parisi;
    pb.check(parisi > 0.0, "--parisi must be positive");
    for (const auto &e : entries) {
        const auto colon = e.find(':');
        try {
            if (colon == std::string::npos) {
                throw std::invalid_argument("missing colon");
            }
            const auto p = std::stoul(e.substr(0, colon));
            const double r = std::stod(e.substr(colon + 1));
            pb.check(p >= 1, "--r-star depth must be at least 1 in '" + e + "'");
            pb.check(r > 0.0 && r <= 1.0, "--r-star value must be in (0, 1] in '" + e + "'");
            t.r_star[p] = r;
        } catch (const std::exception &) {
            pb.add("--r-star entries look like p:r, got '" + e + "'");
        }
    }
    return t;
}

inline int cmd_baseline(const RunContext &ctx, const BaselineArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(!a.instances.empty(), "--instance is required");
    check_instance_paths(pb, a.instances);
    pb.check(a.d >= 1, "--d is required and must be at least 1");
    pb.check(a.d <= kBruteForceCap, "--d must be at most " + std::to_string(kBruteForceCap));
    const BaselineTable table = parse_r_star(pb, a.r_star, a.parisi);
    pb.raise_if_any();

    std::vector<Problem> problems;
    for (const auto &path : a.instances) {
        problems.push_back(load_problem(path, false, a.d, false));
    }
    CsvRow header{"instance", "n_vars", "d", "c_star", "c_star_method",
                  "decomposed_cost", "decomposed_ratio", "parisi_cost"};
    for (const auto &[p, r] : table.r_star) {
        header.push_back("bound_p" + std::to_string(p));
    }
    std::vector<CsvRow> rows(problems.size());
    parallel_for(problems.size(), a.common.jobs, [&](std::size_t k) {
        const Problem &pr = problems[k];
        const OptimumRecord opt = reference_optimum(
            pr.original, cstar_config(derive_seed(a.common.seed, k), a.ls_restarts, 1));
        const double dec = decomposed_baseline_exact(pr.original, pr.scheme);
        CsvRow row{pr.id,
                   std::to_string(pr.original.n_vars()),
                   std::to_string(a.d),
                   fmt17(opt.best_cost),
                   to_string(opt.method),
                   fmt17(dec),
                   fmt17(opt.best_cost < 0 ? dec / opt.best_cost : 0.0),
                   fmt17(parisi_ground_state(pr.original.n_vars(), table))};
        for (const auto &[p, r] : table.r_star) {
            row.push_back(fmt17(baseline_ratio(p, pr.original.n_vars(), a.d, table)));
        }
        rows[k] = std::move(row);
    });
    for (const auto &r : rows) {
        ctx.out << r[0] << " decomposed_ratio=" << r[6] << "\n";
    }
    const fs::path out = resolve_out(a.common.out, "baseline.csv");
    io::append_csv(out, header, rows);
    json rs = json::object();
    for (const auto &[p, r] : table.r_star) {
        rs[std::to_string(p)] = r;
    }
    finish_manifest(ctx, out,
                    json{{"d", a.d}, {"r_star", rs}, {"parisi", a.parisi},
                         {"ls_restarts", a.ls_restarts}},
                    a.instances, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ShotsArgs {
    Common common;
    std::string instance;
    std::size_t d = 0;
    std::string params;
    std::size_t p = 1;
    std::vector<std::uint64_t> shot_list{100, 1000, 10000, 100000};
    std::size_t replicas = 20;
    OptimizerFlags opt;
};

inline int cmd_shots(const RunContext &ctx, const ShotsArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(!a.instance.empty(), "--instance is required");
    if (!a.instance.empty()) {
        check_instance_paths(pb, {a.instance});
    }
    pb.check(a.d >= 1, "--d is required and must be at least 1");
    pb.check(a.p >= 1, "--p must be at least 1");
    pb.check(a.replicas >= 1, "--replicas must be at least 1");
    pb.check(!a.shot_list.empty(), "--shot-list must not be empty");
    for (auto s : a.shot_list) {
        pb.check(s >= 1, "--shot-list entries must be positive");
    }
    std::vector<LayerParams> params;
    if (!a.params.empty()) {
        try {
            params = io::params_from_string(a.params);
        } catch (const ValidationError &e) {
            pb.add(std::string("--params: ") + e.what());
        }
    }
    a.opt.validate(pb);
    pb.raise_if_any();

    const Problem pr = load_problem(a.instance, false, a.d, false);
    if (params.empty()) {
        const double c = reference_optimum(pr.original, cstar_config(a.common.seed, 0, a.common.jobs))
                             .best_cost;
        params = optimize_warm(pr.padded, pr.scheme, a.p, a.opt.config(a.common.seed), c)
                     .back()
                     .best_params;
    }
    const ShotNoiseStudy study = shot_noise_study(pr.padded, pr.scheme, params, a.shot_list,
                                                  a.replicas, a.common.seed, a.common.jobs);
    std::vector<CsvRow> rows;
    std::vector<double> xs, ys;
    for (const auto &pt : study.points) {
        rows.push_back({std::to_string(pt.shots), std::to_string(a.replicas),
                        fmt17(study.exact_cost), fmt17(pt.mean_abs_error),
                        fmt17(pt.stderr_abs_error), fmt17(pt.mean_rel_error)});
        ctx.out << "shots=" << pt.shots << " mean_abs_error=" << pt.mean_abs_error
                << " rel=" << pt.mean_rel_error << "\n";
        if (pt.mean_abs_error > 0) {
            xs.push_back(static_cast<double>(pt.shots));
            ys.push_back(pt.mean_abs_error);
        }
    }
    if (xs.size() >= 2) {
        ctx.out << "log-log slope " << loglog_slope(xs, ys) << "\n";
    }
    const fs::path out = resolve_out(a.common.out, "shots.csv");
    io::append_csv(out,
                   {"shots", "replicas", "exact_cost", "mean_abs_error", "stderr",
                    "mean_rel_error"},
                   rows);
    finish_manifest(ctx, out,
                    json{{"d", a.d}, {"params", io::params_to_string(params)},
                         {"shot_list", a.shot_list}, {"replicas", a.replicas}},
                    {a.instance}, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct TransferArgs {
    Common common;
    std::string instance;
    std::size_t d = 0;
    std::size_t p = 3;
    std::size_t to_n = 0;
    std::size_t to_d = 0;
    std::size_t count = 10;
    std::string kind = "pm1";
    bool direct = false;
    OptimizerFlags opt;
};

inline int cmd_transfer(const RunContext &ctx, const TransferArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(!a.instance.empty(), "--instance (donor) is required");
    if (!a.instance.empty()) {
        check_instance_paths(pb, {a.instance});
    }
    pb.check(a.d >= 1, "--d is required and must be at least 1");
    pb.check(a.p >= 1, "--p must be at least 1");
    pb.check(a.to_n >= 2, "--to-n is required and must be at least 2");
    pb.check(a.count >= 1, "--count must be at least 1");
    pb.check(a.kind == "pm1" || a.kind == "gaussian", "--kind must be pm1 or gaussian");
    const std::size_t to_d = a.to_d == 0 ? a.d : a.to_d;
    if (a.to_n >= 2 && to_d >= 1) {
        try {
            (void)make_scheme(a.to_n, to_d);
        } catch (const ValidationError &e) {
            pb.add(std::string("target encoding: ") + e.what());
        }
    }
    a.opt.validate(pb);
    pb.raise_if_any();

    const Problem donor = load_problem(a.instance, false, a.d, false);
    const double c0 =
        reference_optimum(donor.original, cstar_config(a.common.seed, 0, a.common.jobs)).best_cost;
    const auto donor_runs =
        optimize_warm(donor.padded, donor.scheme, a.p, a.opt.config(a.common.seed), c0);
    const EncodingScheme target = make_scheme(a.to_n, to_d);
    const WeightKind kind = parse_weight_kind(a.kind);

    struct Row {
        std::vector<double> cost, ratio, direct;
        double c_star = 0.0;
        std::uint64_t seed = 0;
    };
    std::vector<Row> res(a.count);
    parallel_for(a.count, a.common.jobs, [&](std::size_t k) {
        Row &row = res[k];
        row.seed = derive_seed(a.common.seed, 1000 + k);
        const SKInstance inst = generate_sk(a.to_n, kind, row.seed);
        row.c_star = reference_optimum(inst, cstar_config(row.seed, 0, 1)).best_cost;
        for (const auto &dr : donor_runs) {
            const auto tp = transfer_params(dr.best_params, donor.scheme.n_vars, a.d, a.to_n, to_d);
            const double c = ansatz_cost(inst, target, tp);
            row.cost.push_back(c);
            row.ratio.push_back(approximation_ratio(c, row.c_star));
        }
        if (a.direct) {
            for (const auto &r :
                 optimize_warm(inst, target, a.p, a.opt.config(row.seed), row.c_star)) {
                row.direct.push_back(r.ratio);
            }
        }
    });

    std::vector<CsvRow> rows;
    for (std::size_t depth = 1; depth <= a.p; ++depth) {
        double mt = 0.0, md = 0.0;
        for (std::size_t k = 0; k < a.count; ++k) {
            const Row &row = res[k];
            rows.push_back({std::to_string(depth), std::to_string(k), std::to_string(row.seed),
                            fmt17(row.c_star), fmt17(row.cost[depth - 1]),
                            fmt17(row.ratio[depth - 1]),
                            a.direct ? fmt17(row.direct[depth - 1]) : "",
                            io::params_to_string(transfer_params(
                                donor_runs[depth - 1].best_params, donor.scheme.n_vars, a.d,
                                a.to_n, to_d))});
            mt += row.ratio[depth - 1];
            md += a.direct ? row.direct[depth - 1] : 0.0;
        }
        ctx.out << "p=" << depth << " donor_r=" << donor_runs[depth - 1].ratio
                << " transferred_mean_r=" << mt / static_cast<double>(a.count);
        if (a.direct) {
            ctx.out << " direct_mean_r=" << md / static_cast<double>(a.count);
        }
        ctx.out << "\n";
    }
    const fs::path out = resolve_out(a.common.out, "transfer.csv");
    io::append_csv(out,
                   {"p", "target", "target_seed", "c_star", "transferred_cost",
                    "transferred_ratio", "direct_ratio", "params"},
                   rows);
    finish_manifest(ctx, out,
                    json{{"d", a.d}, {"p", a.p}, {"to_n", a.to_n}, {"to_d", to_d},
                         {"count", a.count}, {"kind", a.kind}, {"direct", a.direct},
                         {"optimizer", a.opt.to_json()}},
                    {a.instance}, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ScalingArgs {
    Common common;
    std::string instance;
    std::size_t d = 0;
    std::size_t p = 3;
    std::vector<std::size_t> n_list{16, 32, 64};
    std::vector<std::size_t> d_list{2, 4};
    std::size_t ensemble = 5;
    double theta_min = 0.01;
    double theta_max = 20.0;
    OptimizerFlags opt;
};

inline int cmd_scaling(const RunContext &ctx, const ScalingArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(!a.instance.empty(), "--instance (donor) is required");
    if (!a.instance.empty()) {
        check_instance_paths(pb, {a.instance});
    }
    pb.check(a.d >= 1, "--d is required and must be at least 1");
    pb.check(a.p >= 1, "--p must be at least 1");
    pb.check(a.ensemble >= 1, "--ensemble must be at least 1");
    pb.check(a.theta_min > 0 && a.theta_max > a.theta_min,
             "need 0 < --theta-min < --theta-max");
    for (auto n : a.n_list) {
        for (auto d : a.d_list) {
            try {
                (void)make_scheme(n, d);
            } catch (const ValidationError &e) {
                pb.add("grid point N=" + std::to_string(n) + " d=" + std::to_string(d) + ": " +
                       e.what());
            }
        }
    }
    a.opt.validate(pb);
    pb.raise_if_any();

    const Problem donor = load_problem(a.instance, false, a.d, false);
    const double c0 =
        reference_optimum(donor.original, cstar_config(a.common.seed, 0, a.common.jobs)).best_cost;
    const auto frozen =
        optimize_warm(donor.padded, donor.scheme, a.p, a.opt.config(a.common.seed), c0)
            .back()
            .best_params;
    std::vector<double> shape;
    for (const auto &lp : frozen) {
        shape.push_back(lp.gamma);
    }
    std::vector<ScalingPoint> pts;
    std::vector<CsvRow> rows;
    std::uint64_t point = 0;
    for (auto n : a.n_list) {
        for (auto d : a.d_list) {
            std::vector<SKInstance> ens;
            for (std::size_t k = 0; k < a.ensemble; ++k) {
                ens.push_back(generate_sk(n, WeightKind::pm1,
                                          derive_seed(derive_seed(a.common.seed, 7000 + point), k)));
            }
            ThetaSearch ts;
            ts.lo = a.theta_min;
            ts.hi = a.theta_max;
            const double theta =
                optimize_gamma_scale(ens, make_scheme(n, d), frozen, shape, ts, a.common.jobs);
            pts.push_back({n, d, theta});
            rows.push_back({std::to_string(n), std::to_string(d), std::to_string(a.p),
                            fmt17(gamma_unit(n, d)), fmt17(theta)});
            ++point;
        }
    }
    const fs::path out = resolve_out(a.common.out, "scaling.csv");
    io::append_csv(out, {"n_vars", "d", "p", "d_over_n15", "theta"}, rows);
    if (pts.size() >= 2) {
        const ScalingFit fit = fit_gamma_scaling(pts);
        ctx.out << "slope=" << fit.slope << " prefactor=" << fit.prefactor
                << (fit.low_confidence ? " (low confidence: fewer than 4 points)" : "")
                << "\n";
    }
    finish_manifest(ctx, out,
                    json{{"d", a.d}, {"p", a.p}, {"n_list", a.n_list}, {"d_list", a.d_list},
                         {"ensemble", a.ensemble}, {"theta_min", a.theta_min},
                         {"theta_max", a.theta_max}, {"optimizer", a.opt.to_json()}},
                    {a.instance}, {out.string()}, a.common.seed);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CompileArgs {
    Common common;
    std::string instance;
    bool fixture = false;
    std::size_t d = 0;
    double beta = 0.4;
    double gamma = 0.3;
    double bias = 0.2;
    std::string emit;
};

inline constexpr double kCompileTolerance = 1e-9;

inline int cmd_compile_check(const RunContext &ctx, const CompileArgs &a) {
    Problems pb;
    validate_common(pb, a.common);
    pb.check(a.fixture != !a.instance.empty(), "pass exactly one of --instance, --fixture");
    if (!a.instance.empty()) {
        check_instance_paths(pb, {a.instance});
        pb.check(a.d >= 1, "--d is required with --instance");
    }
    pb.check(std::isfinite(a.beta + a.gamma + a.bias), "angles must be finite");
    pb.raise_if_any();

    const Problem pr = load_problem(a.instance, a.fixture, a.d == 0 ? 2 : a.d, false);
    const EncodingScheme &s = pr.scheme;
    require(s.n_qubits + ancillas_for(s.n_label_qubits) <= kMaxVerifyQubits,
            "compile-check verifies at most " + std::to_string(kMaxVerifyQubits) + " qubits");
    // compile the second layer so that one-body terms are present
    const LayerParams lp{a.beta, a.gamma, a.bias};
    const Statevector psi1 = ansatz_state(pr.padded, s, {lp});
    const GroupStats st = exact_group_stats(s, psi1);
    const CostHamiltonian H = cost_hamiltonian_terms(pr.padded, s, st);
    const Circuit logical = layer_circuit(s, H, lp);
    const Circuit native = to_native(logical);
    const DenseMatrix ref = layer_unitary(s, to_diagonal(s, H), lp);
    const double dev = verify_unitary(logical, ref);
    const double dev_native = verify_unitary(native, ref);
    const double leak = ancilla_leakage(native, 8, a.common.seed);
    const GateCounts gc = count_gates(native);

    const bool ok = dev < kCompileTolerance && dev_native < kCompileTolerance;
    ctx.out << (ok ? "max_deviation < 1e-9" : "max_deviation >= 1e-9") << " (logical "
            << dev << ", native " << dev_native << ", ancilla leakage " << leak << ")\n"
            << "native gates: iswap=" << gc.iswap << " rx90=" << gc.rx90 << " rz=" << gc.rz
            << " depth=" << gc.depth << "\n";
    if (!a.emit.empty()) {
        io::write_file(a.emit, serialize(native));
    }
    const fs::path out = resolve_out(a.common.out, "compile_check.csv");
    io::append_csv(out,
                   {"instance", "n_vars", "d", "qubits", "ancillas", "terms", "iswap", "rx90",
                    "rz", "depth", "two_qubit_depth", "max_deviation", "native_max_deviation",
                    "ancilla_leakage"},
                   {{pr.id, std::to_string(s.n_vars), std::to_string(s.group_size),
                     std::to_string(s.n_qubits), std::to_string(native.n_ancilla),
                     std::to_string(H.terms.size()), std::to_string(gc.iswap),
                     std::to_string(gc.rx90), std::to_string(gc.rz), std::to_string(gc.depth),
                     std::to_string(gc.two_qubit_depth), fmt17(dev), fmt17(dev_native),
                     fmt17(leak)}});
    std::vector<std::string> outs{out.string()};
    if (!a.emit.empty()) {
        outs.push_back(a.emit);
    }
    finish_manifest(ctx, out,
                    json{{"instance", pr.id}, {"d", s.group_size}, {"beta", a.beta},
                         {"gamma", a.gamma}, {"bias", a.bias}, {"emit", a.emit}},
                    a.fixture ? std::vector<std::string>{} : std::vector{a.instance}, outs,
                    a.common.seed);
    return ok ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------

/// argv of a manifest with its --out value replaced.
inline std::vector<std::string> replay_argv(const io::Manifest &m, const std::string &out) {
    std::vector<std::string> argv;
    bool replaced = false;
    for (std::size_t k = 0; k < m.argv.size(); ++k) {
        const std::string &a = m.argv[k];
        if (a == "--out" && k + 1 < m.argv.size()) {
            argv.push_back("--out");
            argv.push_back(out);
            ++k;
            replaced = true;
        } else if (a.rfind("--out=", 0) == 0) {
            argv.push_back("--out=" + out);
            replaced = true;
        } else {
            argv.push_back(a);
        }
    }
    if (!replaced) {
        argv.push_back("--out");
        argv.push_back(out);
    }
    return argv;
}

inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"qesolve: qubit-efficient variational solver for fully connected Ising "
                 "problems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", QESOLVE_VERSION);

    GenerateArgs gen;
    auto *g = app.add_subcommand("generate", "write random or fixture instance files");
    g->add_option("--n", gen.n, "number of variables");
    g->add_option("--kind", gen.kind, "pm1 | gaussian")->capture_default_str();
    g->add_option("--count", gen.count, "number of instances")->capture_default_str();
    g->add_flag("--fixture", gen.fixture, "write the four-variable reference instance");
    add_common(g, gen.common, "output directory");

    SolveArgs sol;
    auto *s = app.add_subcommand("solve", "optimize the ansatz; CSV columns: instance,n_vars,"
                                          "d,p,mode,shots,cost,shot_cost,c_star,c_star_method,"
                                          "ratio,evals,rounded_cost,rounded_solution,params");
    s->add_option("--instance", sol.instances, "instance file(s)");
    s->add_option("--d", sol.d, "group size");
    s->add_option("--p", sol.p, "maximum depth (rows for 1..p)")->capture_default_str();
    s->add_option("--mode", sol.mode, "exact | shots (final evaluation)")->capture_default_str();
    s->add_option("--shots", sol.shots, "shots in shot mode")->capture_default_str();
    s->add_flag("--pad", sol.pad, "pad N up to d * 2^k with zero-weight variables");
    s->add_option("--ls-restarts", sol.ls_restarts, "tabu restarts for C* (0 = 32 N)")
        ->capture_default_str();
    sol.opt.add_to(s);
    add_common(s, sol.common, "results CSV (appended)");

    LandscapeArgs land;
    auto *l = app.add_subcommand("landscape", "p=1 cost grid; CSV columns: beta,gamma,cost");
    l->add_option("--instance", land.instance, "instance file");
    l->add_flag("--fixture", land.fixture, "use the four-variable reference instance");
    l->add_option("--d", land.d, "group size (default 2 with --fixture)");
    l->add_option("--beta-points", land.beta_points)->capture_default_str();
    l->add_option("--gamma-points", land.gamma_points)->capture_default_str();
    l->add_option("--beta-min", land.beta_min)->capture_default_str();
    l->add_option("--beta-max", land.beta_max)->capture_default_str();
    l->add_option("--gamma-min", land.gamma_min)->capture_default_str();
    l->add_option("--gamma-max", land.gamma_max)->capture_default_str();
    l->add_option("--bias", land.bias, "gamma' of the layer")->capture_default_str();
    l->add_option("--mode", land.mode, "exact | shots")->capture_default_str();
    l->add_option("--shots", land.shots)->capture_default_str();
    add_common(l, land.common, "CSV path");

    EntropyArgs ent;
    auto *e = app.add_subcommand("entropy", "data-register entropy of encoded random strings; "
                                            "CSV columns: n_vars,d,samples,mean_entropy,stderr,"
                                            "bound");
    e->add_option("--n", ent.n, "number of variables")->capture_default_str();
    e->add_option("--d-list", ent.d_list, "group sizes (default: every valid power of two)");
    e->add_option("--samples", ent.samples)->capture_default_str();
    add_common(e, ent.common, "CSV path");

    BaselineArgs base;
    auto *b = app.add_subcommand("baseline", "decomposition baseline; CSV columns: instance,"
                                             "n_vars,d,c_star,c_star_method,decomposed_cost,"
                                             "decomposed_ratio,parisi_cost,bound_p<p>...");
    b->add_option("--instance", base.instances, "instance file(s)");
    b->add_option("--d", base.d, "group size");
    b->add_option("--r-star", base.r_star, "d=N ratios as p:r (user supplied)");
    b->add_option("--parisi", base.parisi)->capture_default_str();
    b->add_option("--ls-restarts", base.ls_restarts)->capture_default_str();
    add_common(b, base.common, "CSV path");

    ShotsArgs sh;
    auto *h = app.add_subcommand("shots", "shot-noise convergence; CSV columns: shots,replicas,"
                                          "exact_cost,mean_abs_error,stderr,mean_rel_error");
    h->add_option("--instance", sh.instance, "instance file");
    h->add_option("--d", sh.d, "group size");
    h->add_option("--params", sh.params, "beta:gamma:bias per layer joined by ';' "
                                         "(default: optimize to --p)");
    h->add_option("--p", sh.p)->capture_default_str();
    h->add_option("--shot-list", sh.shot_list)->capture_default_str();
    h->add_option("--replicas", sh.replicas)->capture_default_str();
    sh.opt.add_to(h);
    add_common(h, sh.common, "CSV path");

    TransferArgs tr;
    auto *t = app.add_subcommand("transfer", "reuse donor parameters at another size; CSV "
                                             "columns: p,target,target_seed,c_star,"
                                             "transferred_cost,transferred_ratio,direct_ratio,"
                                             "params");
    t->add_option("--instance", tr.instance, "donor instance file");
    t->add_option("--d", tr.d, "donor group size");
    t->add_option("--p", tr.p)->capture_default_str();
    t->add_option("--to-n", tr.to_n, "target N");
    t->add_option("--to-d", tr.to_d, "target d (default: donor d)");
    t->add_option("--count", tr.count, "target instances")->capture_default_str();
    t->add_option("--kind", tr.kind)->capture_default_str();
    t->add_flag("--direct", tr.direct, "also optimize each target directly");
    tr.opt.add_to(t);
    add_common(t, tr.common, "CSV path");

    ScalingArgs sc;
    auto *c = app.add_subcommand("scaling", "1-D gamma-scale optima over an (N, d) grid; CSV "
                                            "columns: n_vars,d,p,d_over_n15,theta");
    c->add_option("--instance", sc.instance, "donor instance file");
    c->add_option("--d", sc.d, "donor group size");
    c->add_option("--p", sc.p)->capture_default_str();
    c->add_option("--n-list", sc.n_list)->capture_default_str();
    c->add_option("--d-list", sc.d_list)->capture_default_str();
    c->add_option("--ensemble", sc.ensemble)->capture_default_str();
    c->add_option("--theta-min", sc.theta_min)->capture_default_str();
    c->add_option("--theta-max", sc.theta_max)->capture_default_str();
    sc.opt.add_to(c);
    add_common(c, sc.common, "CSV path");

    CompileArgs cc;
    auto *k = app.add_subcommand("compile-check", "compile one layer and verify it; CSV "
                                                  "columns: instance,n_vars,d,qubits,ancillas,"
                                                  "terms,iswap,rx90,rz,depth,two_qubit_depth,"
                                                  "max_deviation,native_max_deviation,"
                                                  "ancilla_leakage");
    k->add_option("--instance", cc.instance, "instance file");
    k->add_flag("--fixture", cc.fixture, "use the four-variable reference instance");
    k->add_option("--d", cc.d, "group size (default 2 with --fixture)");
    k->add_option("--beta", cc.beta)->capture_default_str();
    k->add_option("--gamma", cc.gamma)->capture_default_str();
    k->add_option("--bias", cc.bias)->capture_default_str();
    k->add_option("--emit", cc.emit, "write the native circuit here");
    add_common(k, cc.common, "CSV path");

    std::string manifest, replay_out;
    auto *r = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    r->add_option("--manifest", manifest, "manifest file")->required();
    r->add_option("--out", replay_out, "output path for the rerun")->required();

    std::vector<const char *> cargv{"qesolve"};
    for (const auto &a : args) {
        cargv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp &ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp &ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForVersion &ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError &ex) {
        app.exit(ex, out, err);
        return kExitValidation;
    }

    const auto *sub = app.get_subcommands().front();
    RunContext ctx{args, sub->get_name(), out, io::utc_timestamp()};
    try {
        if (sub == g) return cmd_generate(ctx, gen);
        if (sub == s) return cmd_solve(ctx, sol);
        if (sub == l) return cmd_landscape(ctx, land);
        if (sub == e) return cmd_entropy(ctx, ent);
        if (sub == b) return cmd_baseline(ctx, base);
        if (sub == h) return cmd_shots(ctx, sh);
        if (sub == t) return cmd_transfer(ctx, tr);
        if (sub == c) return cmd_scaling(ctx, sc);
        if (sub == k) return cmd_compile_check(ctx, cc);
        if (sub == r) {
            const io::Manifest m = io::load_manifest(manifest);
            require(!m.argv.empty() && m.argv.front() != "replay",
                    "manifest does not record a replayable command");
            return run(replay_argv(m, replay_out), out, err);
        }
    } catch (const ValidationError &ex) {
        err << "error: " << ex.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &ex) {
        err << "error: " << ex.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}

} // namespace qesolve::cli
