#pragma once

// Wigner 3j and 6j symbols via the Racah formulas. All arguments are passed
// as twice the angular momentum so half-integers stay exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace rydberg::wigner {

namespace detail {

inline constexpr int max_factorial = 300;

inline const std::array<long double, max_factorial + 1>& factorials() {
    static const auto table = [] {
        std::array<long double, max_factorial + 1> f{};
        f[0] = 1.0L;
        for (int i = 1; i <= max_factorial; ++i) f[i] = f[i - 1] * i;
        return f;
    }();
    return table;
}

inline long double fact(int n) { return factorials()[static_cast<std::size_t>(n)]; }

inline bool is_triangle(int a2, int b2, int c2) {
    if ((a2 + b2 + c2) % 2 != 0) return false;
    return c2 >= std::abs(a2 - b2) && c2 <= a2 + b2;
}

// sqrt of the triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!
inline long double triangle_coeff(int a2, int b2, int c2) {
    return std::sqrt(fact((a2 + b2 - c2) / 2) * fact((a2 - b2 + c2) / 2) *
                     fact((-a2 + b2 + c2) / 2) / fact((a2 + b2 + c2) / 2 + 1));
}

}  // namespace detail

/// (j1 j2 j3; m1 m2 m3) with every argument doubled.
inline double three_j(int j1, int j2, int j3, int m1, int m2, int m3) {
    using detail::fact;
    if (m1 + m2 + m3 != 0) return 0.0;
    if (!detail::is_triangle(j1, j2, j3)) return 0.0;
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
    if ((j1 + m1) % 2 || (j2 + m2) % 2 || (j3 + m3) % 2) return 0.0;

    const int kmin = std::max({0, (j2 - j3 - m1) / 2, (j1 - j3 + m2) / 2});
    const int kmax = std::min({(j1 + j2 - j3) / 2, (j1 - m1) / 2, (j2 + m2) / 2});
    if (kmin > kmax) return 0.0;

    long double sum = 0.0L;
    for (int k = kmin; k <= kmax; ++k) {
        const long double denom = fact(k) * fact((j3 - j2 + m1) / 2 + k) *
                                  fact((j3 - j1 - m2) / 2 + k) * fact((j1 + j2 - j3) / 2 - k) *
                                  fact((j1 - m1) / 2 - k) * fact((j2 + m2) / 2 - k);
        sum += (k % 2 ? -1.0L : 1.0L) / denom;
    }
    const long double pref =
        detail::triangle_coeff(j1, j2, j3) *
        std::sqrt(fact((j1 + m1) / 2) * fact((j1 - m1) / 2) * fact((j2 + m2) / 2) *
                  fact((j2 - m2) / 2) * fact((j3 + m3) / 2) * fact((j3 - m3) / 2));
    const int phase = (j1 - j2 - m3) / 2;
    return static_cast<double>((phase % 2 ? -1.0L : 1.0L) * pref * sum);
}

/// {j1 j2 j3; j4 j5 j6} with every argument doubled.
inline double six_j(int j1, int j2, int j3, int j4, int j5, int j6) {
    using detail::fact;
    using detail::is_triangle;
    if (!is_triangle(j1, j2, j3) || !is_triangle(j1, j5, j6) || !is_triangle(j4, j2, j6) ||
        !is_triangle(j4, j5, j3))
        return 0.0;

    const int a = (j1 + j2 + j3) / 2;
    const int b = (j1 + j5 + j6) / 2;
    const int c = (j4 + j2 + j6) / 2;
    const int d = (j4 + j5 + j3) / 2;
    const int e = (j1 + j2 + j4 + j5) / 2;
    const int f = (j2 + j3 + j5 + j6) / 2;
    const int g = (j3 + j1 + j6 + j4) / 2;

    const int kmin = std::max({a, b, c, d});
    const int kmax = std::min({e, f, g});
    long double sum = 0.0L;
    for (int k = kmin; k <= kmax; ++k) {
        const long double denom = fact(k - a) * fact(k - b) * fact(k - c) * fact(k - d) *
                                  fact(e - k) * fact(f - k) * fact(g - k);
        sum += (k % 2 ? -1.0L : 1.0L) * fact(k + 1) / denom;
    }
    const long double pref = detail::triangle_coeff(j1, j2, j3) * detail::triangle_coeff(j1, j5, j6) *
                             detail::triangle_coeff(j4, j2, j6) * detail::triangle_coeff(j4, j5, j3);
    return static_cast<double>(pref * sum);
}

}  // namespace rydberg::wigner
