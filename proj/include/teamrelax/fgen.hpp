#pragma once

#include <functional>
#include <limits>
#include <string>

namespace teamrelax {

/// Generator of an f-divergence: a convex f on (0, inf) with f(1) = 0,
/// together with the boundary data needed for zero cells.
///
/// D_f(P||Q) = sum_x Q(x) f(P(x)/Q(x)) with the conventions
///   Q(x) = 0, P(x) > 0  ->  P(x) * slope at infinity (limitAtZero below),
///   Q(x) > 0, P(x) = 0  ->  Q(x) * f(0+),
///   Q(x) = 0, P(x) = 0  ->  0.
struct FGenerator {
    enum class Kind { negLog, totalVariation, squaredHellinger, chiSquareLike, affine, custom };

    Kind kind = Kind::custom;
    std::string name = "custom";
    std::function<double(double)> eval;   // f(t), t > 0
    std::function<double(double)> deriv;  // f'(t) (subgradient at kinks)
    double valueAtZero = 0.0;             // f(0+), may be +inf
    double limitAtZero = 0.0;             // lim_{t->0+} t f(1/t) = lim f(u)/u, may be +inf
    bool saddleCertified = false;

    static FGenerator neg_log();
    static FGenerator total_variation();
    static FGenerator squared_hellinger();
    static FGenerator chi_square_like();
    static FGenerator affine(double c, double d);
    static FGenerator custom(std::string name, std::function<double(double)> eval,
                             std::function<double(double)> deriv, double valueAtZero,
                             double limitAtZero);

    /// Lookup by CLI name ("neg-log", "total-variation", "squared-hellinger",
    /// "chi-square", "affine"). Throws std::invalid_argument on unknown names.
    static FGenerator by_name(const std::string& name);
};

inline double pos_inf() { return std::numeric_limits<double>::infinity(); }

} // namespace teamrelax
