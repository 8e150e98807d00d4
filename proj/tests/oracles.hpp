#pragma once

// Reference implementations used only by the tests. They share no code with
// the library beyond plain types, and favour obviously-correct constructions
// (Kronecker products, Walsh-Hadamard transforms, direct enumeration) over
// speed.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qesolve/problem.hpp"

namespace oracle {

using C = std::complex<double>;
using Vec = std::vector<C>;

/// Dense row-major matrix.
struct Mat {
    std::size_t n = 0;
    std::vector<C> a;
    explicit Mat(std::size_t dim = 0) : n(dim), a(dim * dim) {}
    C &operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
    C operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }

    static Mat identity(std::size_t dim) {
        Mat m(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            m(k, k) = 1.0;
        }
        return m;
    }
};

inline Mat kron(const Mat &x, const Mat &y) {
    Mat out(x.n * y.n);
    for (std::size_t i = 0; i < x.n; ++i) {
        for (std::size_t j = 0; j < x.n; ++j) {
            for (std::size_t k = 0; k < y.n; ++k) {
                for (std::size_t l = 0; l < y.n; ++l) {
                    out(i * y.n + k, j * y.n + l) = x(i, j) * y(k, l);
                }
            }
        }
    }
    return out;
}

inline Mat mul(const Mat &x, const Mat &y) {
    Mat out(x.n);
    for (std::size_t i = 0; i < x.n; ++i) {
        for (std::size_t k = 0; k < x.n; ++k) {
            const C v = x(i, k);
            if (v == C{}) {
                continue;
            }
            for (std::size_t j = 0; j < x.n; ++j) {
                out(i, j) += v * y(k, j);
            }
        }
    }
    return out;
}

inline Vec apply(const Mat &m, const Vec &v) {
    Vec out(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
        for (std::size_t j = 0; j < m.n; ++j) {
            out[i] += m(i, j) * v[j];
        }
    }
    return out;
}

inline Mat m2(C a, C b, C c, C d) {
    Mat m(2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

inline Mat rx(double t) {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return m2(c, C(0, -s), C(0, -s), c);
}
inline Mat rz(double t) { return m2(std::polar(1.0, -t / 2), 0, 0, std::polar(1.0, t / 2)); }
inline Mat pauli_x() { return m2(0, 1, 1, 0); }
inline Mat hadamard() {
    const double r = 1 / std::sqrt(2.0);
    return m2(r, r, r, -r);
}

/// Single-qubit operator on qubit q of n (qubit 0 is the leftmost factor).
inline Mat embed1(const Mat &g, std::size_t q, std::size_t n) {
    Mat out = Mat::identity(1);
    for (std::size_t k = 0; k < n; ++k) {
        out = kron(out, k == q ? g : Mat::identity(2));
    }
    return out;
}

/// Two-qubit operator given by its action on |bit_a bit_b>.
inline Mat embed2(const Mat &g4, std::size_t qa, std::size_t qb, std::size_t n) {
    const std::size_t dim = std::size_t{1} << n;
    Mat out(dim);
    auto bit = [&](std::size_t idx, std::size_t q) { return (idx >> (n - 1 - q)) & 1U; };
    for (std::size_t col = 0; col < dim; ++col) {
        const std::size_t in = bit(col, qa) * 2 + bit(col, qb);
        for (std::size_t o = 0; o < 4; ++o) {
            const C v = g4(o, in);
            if (v == C{}) {
                continue;
            }
            std::size_t row = col;
            const std::size_t ma = std::size_t{1} << (n - 1 - qa);
            const std::size_t mb = std::size_t{1} << (n - 1 - qb);
            row = (o >> 1U) != 0U ? (row | ma) : (row & ~ma);
            row = (o & 1U) != 0U ? (row | mb) : (row & ~mb);
            out(row, col) += v;
        }
    }
    return out;
}

inline Mat iswap4() {
    Mat m(4);
    m(0, 0) = 1;
    m(1, 2) = C(0, 1);
    m(2, 1) = C(0, 1);
    m(3, 3) = 1;
    return m;
}

inline Mat cnot4() {
    Mat m(4);
    m(0, 0) = 1;
    m(1, 1) = 1;
    m(2, 3) = 1;
    m(3, 2) = 1;
    return m;
}

inline Mat rzz4(double phi) {
    Mat m(4);
    m(0, 0) = std::polar(1.0, -phi / 2);
    m(1, 1) = std::polar(1.0, phi / 2);
    m(2, 2) = std::polar(1.0, phi / 2);
    m(3, 3) = std::polar(1.0, -phi / 2);
    return m;
}

inline Mat diag_phase(const std::vector<double> &h, double gamma) {
    Mat m(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        m(k, k) = std::polar(1.0, gamma * h[k]);
    }
    return m;
}

/// In-place unnormalized Walsh-Hadamard transform.
inline void fwht(Vec &v) {
    for (std::size_t h = 1; h < v.size(); h *= 2) {
        for (std::size_t i = 0; i < v.size(); i += 2 * h) {
            for (std::size_t j = i; j < i + h; ++j) {
                const C x = v[j], y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
    }
}

/// exp(i beta sum_k X_k) via H^n exp(i beta sum_k Z_k) H^n.
inline void mixer_wht(Vec &v, std::size_t n, double beta) {
    fwht(v);
    const double norm = 1.0 / static_cast<double>(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double sum_z =
            static_cast<double>(n) - 2.0 * static_cast<double>(std::popcount(k));
        v[k] *= std::polar(norm, beta * sum_z);
    }
    fwht(v);
}

/// Classical cost of basis index k with qubit i carrying variable i.
inline double classical_cost_of_index(const qesolve::SKInstance &inst, std::uint64_t k) {
    const std::size_t n = inst.n_vars();
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const int si = ((k >> (n - 1 - i)) & 1U) != 0U ? -1 : 1;
            const int sj = ((k >> (n - 1 - j)) & 1U) != 0U ? -1 : 1;
            c += inst.weight(i, j) * si * sj;
        }
    }
    return c;
}

/// Standard QAOA: per-layer expectation of C for exp(i b X) exp(i g C) layers
/// from |+>^N. Entry 0 is the initial expectation.
inline std::vector<double> plain_qaoa_costs(const qesolve::SKInstance &inst,
                                            const std::vector<double> &betas,
                                            const std::vector<double> &gammas) {
    const std::size_t n = inst.n_vars();
    const std::size_t dim = std::size_t{1} << n;
    std::vector<double> diag(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        diag[k] = classical_cost_of_index(inst, k);
    }
    Vec v(dim, C(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
    auto expect = [&] {
        double e = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            e += std::norm(v[k]) * diag[k];
        }
        return e;
    };
    std::vector<double> out{expect()};
    for (std::size_t l = 0; l < betas.size(); ++l) {
        for (std::size_t k = 0; k < dim; ++k) {
            v[k] *= std::polar(1.0, gammas[l] * diag[k]);
        }
        mixer_wht(v, n, betas[l]);
        out.push_back(expect());
    }
    return out;
}

/// Minimum of C over all 2^N strings by plain enumeration.
inline double naive_optimum(const qesolve::SKInstance &inst) {
    double best = INFINITY;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << inst.n_vars()); ++k) {
        best = std::min(best, classical_cost_of_index(inst, k));
    }
    return best;
}

/// Cost formula evaluated from its definition: projector weights, post-
/// selected means and correlations accumulated straight from |amp|^2.
inline double cost_by_definition(const qesolve::SKInstance &inst, std::size_t d,
                                 const Vec &psi) {
    const std::size_t n = inst.n_vars();
    const std::size_t groups = n / d;
    std::vector<double> pl(groups, 0.0);
    std::vector<double> zsum(n, 0.0);
    std::vector<double> zz(n * n, 0.0);
    for (std::size_t k = 0; k < psi.size(); ++k) {
        const double p = std::norm(psi[k]);
        const std::size_t label = k >> d;
        pl[label] += p;
        for (std::size_t a = 0; a < d; ++a) {
            const int sa = ((k >> (d - 1 - a)) & 1U) != 0U ? -1 : 1;
            zsum[label * d + a] += p * sa;
            for (std::size_t b = 0; b < d; ++b) {
                const int sb = ((k >> (d - 1 - b)) & 1U) != 0U ? -1 : 1;
                zz[(label * d + a) * n + label * d + b] += p * sa * sb;
            }
        }
    }
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t li = i / d, lj = j / d;
            if (li == lj) {
                if (pl[li] >= 1e-12) {
                    c += inst.weight(i, j) * zz[i * n + j] / pl[li];
                }
            } else {
                const double zi = pl[li] >= 1e-12 ? zsum[i] / pl[li] : 0.0;
                const double zj = pl[lj] >= 1e-12 ? zsum[j] / pl[lj] : 0.0;
                c += inst.weight(i, j) * zi * zj;
            }
        }
    }
    return c;
}

inline Vec random_state(std::size_t dim, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Vec v(dim);
    double norm = 0.0;
    for (auto &x : v) {
        x = C(g(rng), g(rng));
        norm += std::norm(x);
    }
    for (auto &x : v) {
        x /= std::sqrt(norm);
    }
    return v;
}

/// max |a - phase * b| with the phase fixed on b's largest entry.
inline double deviation_up_to_phase(const Mat &a, const Mat &b) {
    std::size_t piv = 0;
    for (std::size_t k = 0; k < b.a.size(); ++k) {
        if (std::abs(b.a[k]) > std::abs(b.a[piv])) {
            piv = k;
        }
    }
    C ph = a.a[piv] / b.a[piv];
    ph /= std::abs(ph);
    double dev = 0.0;
    for (std::size_t k = 0; k < a.a.size(); ++k) {
        dev = std::max(dev, std::abs(a.a[k] - ph * b.a[k]));
    }
    return dev;
}

} // namespace oracle
