#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qesolve/encoding.hpp"
#include "qesolve/problem.hpp"
#include "qesolve/statevector.hpp"

using namespace qesolve;
using Catch::Matchers::WithinAbs;

namespace {

oracle::Vec to_vec(const Statevector &sv) {
    return {sv.amplitudes().begin(), sv.amplitudes().end()};
}

double max_diff(const oracle::Vec &a, const oracle::Vec &b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d = std::max(d, std::abs(a[k] - b[k]));
    }
    return d;
}

Statevector random_sv(std::size_t q, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Statevector::from_amplitudes(oracle::random_state(std::size_t{1} << q, rng));
}

} // namespace

TEST_CASE("single-qubit gates match Kronecker-embedded matrices", "[statevector]") {
    const std::size_t n = 4;
    for (std::size_t q = 0; q < n; ++q) {
        const Statevector base = random_sv(n, 10 + q);
        const double t = 0.37 + 0.5 * static_cast<double>(q);

        Statevector a = base;
        a.apply_rx(q, t);
        CHECK(max_diff(to_vec(a), oracle::apply(oracle::embed1(oracle::rx(t), q, n), to_vec(base))) <
              1e-13);

        Statevector b = base;
        b.apply_rz(q, t);
        CHECK(max_diff(to_vec(b), oracle::apply(oracle::embed1(oracle::rz(t), q, n), to_vec(base))) <
              1e-13);

        Statevector c = base;
        c.apply_h(q);
        CHECK(max_diff(to_vec(c),
                       oracle::apply(oracle::embed1(oracle::hadamard(), q, n), to_vec(base))) < 1e-13);

        Statevector x = base;
        x.apply_x(q);
        CHECK(max_diff(to_vec(x),
                       oracle::apply(oracle::embed1(oracle::pauli_x(), q, n), to_vec(base))) < 1e-13);
    }
}

TEST_CASE("two-qubit gates match their 4x4 definitions", "[statevector]") {
    const std::size_t n = 4;
    const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 0}, {0, 3}, {3, 1}, {2, 3}};
    for (auto [qa, qb] : pairs) {
        const Statevector base = random_sv(n, 100 + qa * 7 + qb);
        Statevector s1 = base;
        s1.apply_iswap(qa, qb);
        CHECK(max_diff(to_vec(s1), oracle::apply(oracle::embed2(oracle::iswap4(), qa, qb, n),
                                                 to_vec(base))) < 1e-13);
        Statevector s2 = base;
        s2.apply_cnot(qa, qb);
        CHECK(max_diff(to_vec(s2), oracle::apply(oracle::embed2(oracle::cnot4(), qa, qb, n),
                                                 to_vec(base))) < 1e-13);
        Statevector s3 = base;
        s3.apply_rzz(qa, qb, 0.83);
        CHECK(max_diff(to_vec(s3), oracle::apply(oracle::embed2(oracle::rzz4(0.83), qa, qb, n),
                                                 to_vec(base))) < 1e-13);
    }
}

TEST_CASE("Toffoli flips the target only when both controls are set", "[statevector]") {
    for (std::uint64_t k = 0; k < 8; ++k) {
        Statevector sv = Statevector::basis(3, k);
        sv.apply_toffoli(0, 1, 2);
        const std::uint64_t expect = (k & 6U) == 6U ? k ^ 1U : k;
        CHECK(std::abs(sv[expect] - Complex{1.0, 0.0}) < 1e-15);
    }
}

TEST_CASE("mixer equals a Walsh-Hadamard conjugated phase", "[statevector]") {
    const std::size_t n = 5;
    const Statevector base = random_sv(n, 5);
    Statevector sv = base;
    sv.apply_mixer(0.61);
    oracle::Vec ref = to_vec(base);
    oracle::mixer_wht(ref, n, 0.61);
    CHECK(max_diff(to_vec(sv), ref) < 1e-12);
}

TEST_CASE("gates preserve the norm", "[statevector][property]") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3, 3);
    Statevector sv = random_sv(6, 3);
    for (int step = 0; step < 200; ++step) {
        const std::size_t a = rng() % 6, b = (a + 1 + rng() % 5) % 6;
        switch (rng() % 5) {
        case 0: sv.apply_rx(a, u(rng)); break;
        case 1: sv.apply_rz(a, u(rng)); break;
        case 2: sv.apply_iswap(a, b); break;
        case 3: sv.apply_rzz(a, b, u(rng)); break;
        default: sv.apply_mixer(u(rng)); break;
        }
    }
    CHECK_THAT(sv.norm_squared(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("statevector rejects invalid sizes and indices", "[statevector]") {
    CHECK_THROWS_AS(Statevector(0), ValidationError);
    CHECK_THROWS_AS(Statevector(kMaxQubits + 1), ValidationError);
    CHECK_THROWS_AS(Statevector::basis(2, 4), ValidationError);
    CHECK_THROWS_AS(Statevector::from_amplitudes(std::vector<Complex>(3)), ValidationError);
}

TEST_CASE("sampling is reproducible and tracks probabilities", "[statevector]") {
    Statevector sv = init_plus(2);
    sv.apply_rx(0, 1.1);
    const Counts a = sample(sv, 20000, 9);
    const Counts b = sample(sv, 20000, 9);
    CHECK(a == b);
    const auto p = sv.probabilities();
    for (const auto &[k, c] : a) {
        const double sd = std::sqrt(p[k] * (1 - p[k]) / 20000.0);
        CHECK(std::abs(static_cast<double>(c) / 20000.0 - p[k]) < 5 * sd + 1e-12);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("encoding layout of groups, labels and qubits", "[encoding]") {
    const EncodingScheme s = make_scheme(16, 4);
    CHECK(s.n_groups == 4);
    CHECK(s.n_label_qubits == 2);
    CHECK(s.n_qubits == 6);
    CHECK(s.label_of(9) == 2);
    CHECK(s.data_qubit_of(9) == 1);
    CHECK(s.data_qubit_index(1) == 3);
    CHECK(s.basis_index(2, 0b0110) == ((2U << 4U) | 0b0110U));
    CHECK(s.spin_of(0b1000, 0) == -1);
    CHECK(s.spin_of(0b1000, 1) == 1);

    const EncodingScheme full = make_scheme(8, 8);
    CHECK(full.n_label_qubits == 0);
    CHECK(full.n_qubits == 8);
    CHECK(make_scheme(8, 1).n_qubits == 4);
}

TEST_CASE("encoding rejects non power-of-two group counts unless padded", "[encoding]") {
    CHECK_THROWS_AS(make_scheme(12, 4), ValidationError);
    CHECK_THROWS_AS(make_scheme(10, 4), ValidationError);
    CHECK_THROWS_AS(make_scheme(4, 0), ValidationError);
    CHECK_THROWS_AS(make_scheme(4, 5), ValidationError);
    const EncodingScheme p = make_scheme(10, 4, true);
    CHECK(p.n_vars == 16);
    CHECK(p.original_vars == 10);
    CHECK(p.padded);
    CHECK(make_scheme(12, 4, true).n_vars == 16);
}

TEST_CASE("encode_target decodes back to the string", "[encoding][property]") {
    std::mt19937_64 rng(4);
    for (std::size_t d : {1U, 2U, 4U}) {
        const EncodingScheme s = make_scheme(16, d);
        SpinString z(16);
        for (auto &v : z) {
            v = (rng() & 1U) != 0U ? 1 : -1;
        }
        const Statevector psi = encode_target(s, z, uniform_lambdas(s));
        CHECK_THAT(psi.norm_squared(), WithinAbs(1.0, 1e-12));
        for (std::size_t k = 0; k < psi.dim(); ++k) {
            if (std::norm(psi[k]) < 1e-20) {
                continue;
            }
            const DecodedShot shot = decode_shot(s, k);
            for (std::size_t a = 0; a < d; ++a) {
                CHECK(shot.spins[a] == z[s.variable_of(shot.label, a)]);
            }
        }
    }
    const EncodingScheme s = make_scheme(4, 2);
    CHECK_THROWS_AS(encode_target(s, {1, 1, 1}, uniform_lambdas(s)), ValidationError);
    CHECK_THROWS_AS(encode_target(s, {1, 1, 1, 2}, uniform_lambdas(s)), ValidationError);
    GroupAmplitudes bad{{Complex{1, 0}, Complex{1, 0}}};
    CHECK_THROWS_AS(encode_target(s, {1, 1, 1, 1}, bad), ValidationError);
}

// ---------------------------------------------------------------------------

TEST_CASE("reference instance has optimum -4 at two strings", "[problem]") {
    const OptimumRecord r = brute_force_optimum(fixture_n4());
    CHECK(r.best_cost == -4.0);
    REQUIRE(r.minimizers.size() == 2);
    CHECK(r.minimizers[0] == SpinString{-1, 1, -1, 1});
    CHECK(r.minimizers[1] == SpinString{1, -1, 1, -1});
}

TEST_CASE("Gray-code brute force agrees with plain enumeration", "[problem][property]") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto kind = seed % 2 == 0 ? WeightKind::pm1 : WeightKind::gaussian;
        const SKInstance inst = generate_sk(3 + seed % 9, kind, seed);
        const OptimumRecord r = brute_force_optimum(inst);
        CHECK_THAT(r.best_cost, WithinAbs(oracle::naive_optimum(inst), 1e-9));
        for (const auto &z : r.minimizers) {
            CHECK_THAT(cost(inst, z), WithinAbs(r.best_cost, 1e-9));
        }
        CHECK(r.minimizers.size() % 2 == 0);
    }
}

TEST_CASE("generated instances are deterministic and well formed", "[problem]") {
    const SKInstance a = generate_sk(64, WeightKind::pm1, 3);
    CHECK(a == generate_sk(64, WeightKind::pm1, 3));
    CHECK_FALSE(a == generate_sk(64, WeightKind::pm1, 4));
    CHECK(a.n_weights() == 2016);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(a.weight(i, i) == 0.0);
        for (std::size_t j = i + 1; j < 64; ++j) {
            CHECK(std::abs(a.weight(i, j)) == 1.0);
            CHECK(a.weight(i, j) == a.weight(j, i));
        }
    }
    const SKInstance g = generate_sk(200, WeightKind::gaussian, 1);
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        for (std::size_t j = i + 1; j < 200; ++j) {
            m += g.weight(i, j);
            v += g.weight(i, j) * g.weight(i, j);
        }
    }
    m /= static_cast<double>(g.n_weights());
    v /= static_cast<double>(g.n_weights());
    CHECK(std::abs(m) < 0.05);
    CHECK(std::abs(v - 1.0) < 0.05);
    CHECK_THROWS_AS(generate_sk(1, WeightKind::pm1, 0), ValidationError);
}

TEST_CASE("cost is symmetric under a global flip", "[problem][property]") {
    std::mt19937_64 rng(8);
    const SKInstance inst = generate_sk(20, WeightKind::gaussian, 5);
    for (int t = 0; t < 20; ++t) {
        SpinString z(20), f(20);
        for (std::size_t i = 0; i < 20; ++i) {
            z[i] = (rng() & 1U) != 0U ? 1 : -1;
            f[i] = -z[i];
        }
        CHECK_THAT(cost(inst, z), WithinAbs(cost(inst, f), 1e-12));
    }
    CHECK_THROWS_AS(cost(inst, SpinString(19, 1)), ValidationError);
}

TEST_CASE("tabu search finds the exact optimum on small instances", "[problem]") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const SKInstance inst = generate_sk(18, WeightKind::pm1, 40 + seed);
        LocalSearchConfig cfg;
        cfg.seed = seed;
        const OptimumRecord ls = local_search_optimum(inst, cfg);
        CHECK(ls.method == OptimumMethod::local_search);
        CHECK_THAT(ls.best_cost, WithinAbs(brute_force_optimum(inst).best_cost, 1e-9));
        CHECK_THAT(cost(inst, ls.minimizers.front()), WithinAbs(ls.best_cost, 1e-9));
    }
}

TEST_CASE("tabu search is deterministic and independent of job count", "[problem]") {
    const SKInstance inst = generate_sk(40, WeightKind::gaussian, 2);
    LocalSearchConfig a;
    a.seed = 11;
    a.n_restarts = 40;
    LocalSearchConfig b = a;
    b.jobs = 3;
    const auto ra = local_search_optimum(inst, a);
    const auto rb = local_search_optimum(inst, b);
    CHECK(ra.best_cost == rb.best_cost);
    CHECK(ra.minimizers == rb.minimizers);
}

TEST_CASE("reference optimum switches method at the brute-force cap", "[problem]") {
    CHECK(reference_optimum(generate_sk(10, WeightKind::pm1, 1)).method ==
          OptimumMethod::brute_force);
    LocalSearchConfig cfg;
    cfg.n_restarts = 8;
    CHECK(reference_optimum(generate_sk(30, WeightKind::pm1, 1), cfg).method ==
          OptimumMethod::local_search);
    CHECK_THROWS_AS(brute_force_optimum(generate_sk(30, WeightKind::pm1, 1)), ValidationError);
}

TEST_CASE("padding adds zero-weight variables", "[problem]") {
    const SKInstance inst = generate_sk(6, WeightKind::pm1, 2);
    const SKInstance p = pad_instance(inst, 8);
    CHECK(p.n_vars() == 8);
    CHECK(p.weight(0, 7) == 0.0);
    CHECK(p.weight(1, 4) == inst.weight(1, 4));
    CHECK(brute_force_optimum(p).best_cost == brute_force_optimum(inst).best_cost);
    CHECK_THROWS_AS(approximation_ratio(-1.0, 0.0), ValidationError);
    CHECK(approximation_ratio(-2.0, -4.0) == 0.5);
}
