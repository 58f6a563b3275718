#include "qdet/model.hpp"

#include <cmath>
#include <stdexcept>

#include "qdet/errors.hpp"
#include "qdet/special.hpp"

namespace qdet {

void ModelParams::validate(bool require_mu) const {
    if (!(lambda > 0.0)) throw ConfigError("model: lambda must be > 0");
    if (!(c > 0.0)) throw ConfigError("model: c must be > 0");
    if (!(alpha != 0.0) || !std::isfinite(alpha)) throw ConfigError("model: alpha must be nonzero");
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("model: p must lie in [0, 1)");
    if (require_mu && !(mu > 0.0)) throw ConfigError("model: mu must be > 0");
}

double drift_flow(const ModelParams& m, double t, double phi) {
    double out = std::exp(m.lambda * t) * (phi + 1.0) - 1.0;
    if (t < 0.0 && out < -1e-12 * (1.0 + phi)) {
        throw std::domain_error("drift_flow: inverse flow leaves the feasible region");
    }
    return out < 0.0 ? 0.0 : out;
}

bool feasible_state(const ModelParams& m, double y, double phi, double slack) {
    if (y < 0.0 || phi < 0.0) return false;
    return phi >= std::expm1(m.lambda * y) - slack * (1.0 + phi);
}

double jump_scale(const ModelParams& m, double dt, double z) {
    if (!(dt > 0.0)) throw std::domain_error("jump_scale: dt must be > 0");
    return std::exp(m.alpha * z * std::sqrt(dt) + (m.lambda - 0.5 * m.alpha * m.alpha) * dt);
}

double jump_mass(const ModelParams& m, double dt, double z) {
    if (!(dt > 0.0)) throw std::domain_error("jump_mass: dt must be > 0");
    const double lam = m.lambda, a = std::fabs(m.alpha);
    const double sdt = std::sqrt(dt);
    const double beta = lam + m.alpha * z / sdt;
    const double gam = 0.5 * a * a / dt;
    const double width = a * std::sqrt(0.5 * dt);  // sqrt(gam) * dt

    // Quadratic coefficient underflow or a too-narrow erf difference: fall
    // back to adaptive quadrature of the peak-scaled integrand.
    if (gam < 1e-12 || width < 0.5) {
        double upk = beta / (2.0 * gam);
        double uc = (gam < 1e-300) ? (beta > 0.0 ? dt : 0.0) : std::fmin(std::fmax(upk, 0.0), dt);
        double emax = beta * uc - gam * uc * uc;
        auto g = [&](double u) { return std::exp(beta * u - gam * u * u - emax); };
        double integral = adaptive_simpson(g, 0.0, dt, 1e-13, 0.0, 60);
        return lam * std::exp(emax) * integral;
    }

    const double s = std::sqrt(gam);
    const double mpk = beta / (2.0 * gam);
    const double x0 = s * mpk;
    const double x1 = s * (dt - mpk);
    const double sqrt_pi = 1.7724538509055160273;
    const double pref = lam * sqrt_pi / (2.0 * s);
    const double e_end = beta * dt - gam * dt * dt;  // exponent at u = dt

    if (mpk >= 0.0 && mpk <= dt) {
        // Peak inside the interval: plain erf sum, no cancellation.
        return pref * std::exp(x0 * x0) * (std::erf(x1) + std::erf(x0));
    }
    if (mpk < 0.0) {
        // Decreasing integrand; scaled complementary form.
        return pref * (erfcx(-x0) - std::exp(e_end) * erfcx(x1));
    }
    // Increasing integrand (peak beyond dt).
    return pref * (std::exp(e_end) * erfcx(-x1) - erfcx(x0));
}

double jump_update(const ModelParams& m, double dt, double phi, double z) {
    if (!(dt > 0.0)) throw std::domain_error("jump_update: dt must be > 0");
    if (phi < 0.0) throw std::domain_error("jump_update: phi must be >= 0");
    return jump_scale(m, dt, z) * phi + jump_mass(m, dt, z);
}

double odds_from_prior(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("odds_from_prior: p must lie in [0, 1)");
    return p / (1.0 - p);
}

double bayes_risk_from_value(const ModelParams& m, double p, double v) {
    if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("bayes_risk_from_value: p must lie in [0, 1)");
    return 1.0 - p + (1.0 - p) * m.c * v;
}

}  // namespace qdet
