#include "teamrelax/fgen.hpp"

#include <cmath>
#include <stdexcept>

namespace teamrelax {

FGenerator FGenerator::neg_log() {
    FGenerator f;
    f.kind = Kind::negLog;
    f.name = "neg-log";
    f.eval = [](double t) { return -std::log(t); };
    f.deriv = [](double t) { return -1.0 / t; };
    f.valueAtZero = pos_inf();
    f.limitAtZero = 0.0;  // -log(t)/t -> 0
    f.saddleCertified = true;
    return f;
}

FGenerator FGenerator::total_variation() {
    FGenerator f;
    f.kind = Kind::totalVariation;
    f.name = "total-variation";
    f.eval = [](double t) { return 0.5 * std::abs(t - 1.0); };
    // subgradient 0 at the kink t = 1
    f.deriv = [](double t) { return t > 1.0 ? 0.5 : (t < 1.0 ? -0.5 : 0.0); };
    f.valueAtZero = 0.5;
    f.limitAtZero = 0.5;
    f.saddleCertified = false;
    return f;
}

FGenerator FGenerator::squared_hellinger() {
    FGenerator f;
    f.kind = Kind::squaredHellinger;
    f.name = "squared-hellinger";
    f.eval = [](double t) {
        double r = std::sqrt(t) - 1.0;
        return r * r;
    };
    f.deriv = [](double t) { return 1.0 - 1.0 / std::sqrt(t); };
    f.valueAtZero = 1.0;
    f.limitAtZero = 1.0;
    f.saddleCertified = false;
    return f;
}

FGenerator FGenerator::chi_square_like() {
    FGenerator f;
    f.kind = Kind::chiSquareLike;
    f.name = "chi-square";
    f.eval = [](double t) { return 1.0 / t - 1.0; };
    f.deriv = [](double t) { return -1.0 / (t * t); };
    f.valueAtZero = pos_inf();
    f.limitAtZero = 0.0;
    f.saddleCertified = false;
    return f;
}

FGenerator FGenerator::affine(double c, double d) {
    if (std::abs(c - d) > 1e-12)
        throw std::invalid_argument("affine generator requires c = d so that f(1) = 0");
    FGenerator f;
    f.kind = Kind::affine;
    f.name = "affine";
    f.eval = [c, d](double t) { return c - d * t; };
    f.deriv = [d](double) { return -d; };
    f.valueAtZero = c;
    f.limitAtZero = -d;
    f.saddleCertified = true;
    return f;
}

FGenerator FGenerator::custom(std::string name, std::function<double(double)> eval,
                              std::function<double(double)> deriv, double valueAtZero,
                              double limitAtZero) {
    FGenerator f;
    f.kind = Kind::custom;
    f.name = std::move(name);
    f.eval = std::move(eval);
    f.deriv = std::move(deriv);
    f.valueAtZero = valueAtZero;
    f.limitAtZero = limitAtZero;
    f.saddleCertified = false;
    return f;
}

FGenerator FGenerator::by_name(const std::string& name) {
    if (name == "neg-log" || name == "negLog" || name == "kl") return neg_log();
    if (name == "total-variation" || name == "totalVariation" || name == "tv")
        return total_variation();
    if (name == "squared-hellinger" || name == "squaredHellinger" || name == "hellinger")
        return squared_hellinger();
    if (name == "chi-square" || name == "chiSquareLike" || name == "chi2")
        return chi_square_like();
    if (name == "affine") return affine(1.0, 1.0);
    throw std::invalid_argument("unknown f generator: " + name);
}

} // namespace teamrelax
