#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace swe::quad {

/// Adaptive Gauss-Kronrod (61 point) on a finite interval.
template <class F>
double gk(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 20) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth,
                                                                         rel_tol);
}

/// tanh-sinh for integrands with integrable endpoint singularities.
template <class F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-12) {
    if (a == b) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, a, b, rel_tol);
}

/// Sum of adaptive GK integrals over panels of (at most) `width` covering [a, b].
template <class F>
double panels(F&& f, double a, double b, double width, double rel_tol = 1e-12) {
    if (b <= a) return 0.0;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / width)));
    const double w = (b - a) / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += gk(f, a + i * w, a + (i + 1) * w, rel_tol, 10);
    return total;
}

/// Fixed N-point Gauss-Legendre nodes/weights mapped to [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b, int points) {
    namespace bq = boost::math::quadrature;
    switch (points) {
    case 2: return bq::gauss<double, 2>::integrate(f, a, b);
    case 4: return bq::gauss<double, 4>::integrate(f, a, b);
    case 8: return bq::gauss<double, 8>::integrate(f, a, b);
    case 16: return bq::gauss<double, 16>::integrate(f, a, b);
    default: return bq::gauss<double, 30>::integrate(f, a, b);
    }
}

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {
template <unsigned N>
Rule legendre_rule() {
    static_assert(N % 2 == 0, "even point counts only");
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    Rule r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.nodes.push_back(-a[i]);
        r.weights.push_back(w[i]);
        r.nodes.push_back(a[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}
} // namespace detail

/// Gauss-Legendre rule on [-1, 1]; points is rounded to one of 2, 4, 8, 16.
inline const Rule& legendre(int points) {
    static const Rule r2 = detail::legendre_rule<2>();
    static const Rule r4 = detail::legendre_rule<4>();
    static const Rule r8 = detail::legendre_rule<8>();
    static const Rule r16 = detail::legendre_rule<16>();
    if (points <= 2) return r2;
    if (points <= 4) return r4;
    if (points <= 8) return r8;
    return r16;
}

} // namespace swe::quad
