#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/measure.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/space.hpp"

namespace bmolab::weights {

/// Constants of an exponential distribution bound
/// mu_f(t, G) <= prefactor * exp(-c2 t / ||f||).
struct JnParams {
    double c1 = 1.0;
    double c2 = 1.0;
    double alpha = 0.5;
    std::optional<double> c_f;  ///< f-dependent prefactor (weak property); replaces c1 when set

    double prefactor() const { return c_f.value_or(c1); }
};

namespace detail {

/// log of avg_G exp(scale * |f - f_G|).
inline double log_exp_oscillation(const Space& space, const CellFn& f, const CellSet& cells, double scale) {
    const double m = mean(space, f, cells);
    std::vector<double> x, w;
    x.reserve(cells.size());
    w.reserve(cells.size());
    CompensatedSum mass;
    for (Index c : cells) {
        x.push_back(scale * std::abs(f[c] - m));
        w.push_back(space.weight(c));
        mass += space.weight(c);
    }
    return log_weighted_exp_sum(x, w) - std::log(mass.value());
}

/// log of avg_G exp(s * log_w) for s real.
inline double log_power_mean(const Space& space, std::span<const double> log_w, const CellSet& cells, double s) {
    std::vector<double> x, w;
    CompensatedSum mass;
    for (Index c : cells) {
        x.push_back(s * log_w[c]);
        w.push_back(space.weight(c));
        mass += space.weight(c);
    }
    return log_weighted_exp_sum(x, w) - std::log(mass.value());
}

inline double positive_seminorm(const Space& space, const CellFn& f, const Family& family) {
    const double norm = bmo_seminorm(space, f, family).value;
    require(norm > 0.0, ErrorCode::ZeroSeminorm, "function has zero BMO seminorm");
    return norm;
}

} // namespace detail

inline std::vector<StepDist> all_distributions(const Space& space, const CellFn& f, const Family& family) {
    check_aligned(space, f);
    return parallel_map(family.size(), [&](std::size_t g) { return distribution(space, f, family.cells(static_cast<Index>(g))); });
}

struct Bracket {
    double value = 1.0;
    double log_value = 0.0;
    Index argmax = 0;
};

/// sup_G avg_G exp(scale |f - f_G|), evaluated in the log domain.
inline Bracket exp_bracket(const Space& space, const CellFn& f, const Family& family, double scale) {
    check_aligned(space, f);
    require(!family.empty(), ErrorCode::EmptyGenerator, "family has no generators");
    auto logs = per_generator(family, [&](Index g) { return detail::log_exp_oscillation(space, f, family.cells(g), scale); });
    auto sup = sup_of(logs);
    return {std::exp(sup.value), sup.value, sup.argmax};
}

/// [f]_* = sup_G avg_G exp|f - f_G|.
inline Bracket bracket_star(const Space& space, const CellFn& f, const Family& family) {
    return exp_bracket(space, f, family, 1.0);
}

/// [f]_alpha = sup_G avg_G exp(alpha |f - f_G| / ||f||).
inline Bracket bracket_alpha(const Space& space, const CellFn& f, const Family& family, double alpha) {
    require(alpha > 0.0, ErrorCode::InvalidParams, "alpha must be positive");
    const double norm = detail::positive_seminorm(space, f, family);
    return exp_bracket(space, f, family, alpha / norm);
}

/// log [w]_{A_p} from log w.
inline double log_ap_constant(const Space& space, std::span<const double> log_w, const Family& family, double p) {
    require(p > 1.0 && std::isfinite(p), ErrorCode::InvalidExponent, "A_p needs 1 < p < inf");
    auto logs = per_generator(family, [&](Index g) {
        const auto& cells = family.cells(g);
        return detail::log_power_mean(space, log_w, cells, 1.0) +
               (p - 1.0) * detail::log_power_mean(space, log_w, cells, -1.0 / (p - 1.0));
    });
    return std::max(0.0, sup_of(logs).value);
}

/// [w]_{A_p} = sup_G (avg_G w)(avg_G w^(-1/(p-1)))^(p-1); at least 1.
inline double ap_constant(const Space& space, const CellFn& w, const Family& family, double p) {
    check_aligned(space, w);
    require(w.positive(), ErrorCode::NonpositiveWeight, "weights must be strictly positive");
    const CellFn log_w = w.map([](double v) { return std::log(v); });
    return std::exp(log_ap_constant(space, log_w.values(), family, p));
}

struct A2Chain {
    bool ok = false;
    double a2 = 1.0;            ///< [e^f]_{A_2}
    double star = 1.0;          ///< [f]_*
    double lower_margin = 0.0;  ///< log [f]_* - (1/2) log [e^f]_{A_2}
    double upper_margin = 0.0;  ///< log 2 + log [e^f]_{A_2} - log [f]_*
};

/// ([e^f]_{A_2})^(1/2) <= [f]_* <= 2 [e^f]_{A_2}, compared in the log domain
/// with relative slack 1e-9.
inline A2Chain a2_bracket_check(const Space& space, const CellFn& f, const Family& family) {
    constexpr double slack = 1e-9;
    A2Chain r;
    const double log_a2 = log_ap_constant(space, f.values(), family, 2.0);
    const auto star = bracket_star(space, f, family);
    r.a2 = std::exp(log_a2);
    r.star = star.value;
    r.lower_margin = star.log_value - 0.5 * log_a2;
    r.upper_margin = std::log(2.0) + log_a2 - star.log_value;
    r.ok = r.lower_margin >= -slack && r.upper_margin >= -slack;
    return r;
}

struct EnvelopeRow {
    Index gen = 0;
    double t = 0.0;
    double mu = 0.0;  ///< left limit of mu_f at t
    double envelope = 0.0;
    double margin() const { return envelope - mu; }
};

struct EnvelopeCheck {
    bool ok = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    Index worst_gen = 0;
    double worst_t = 0.0;
    std::size_t points = 0;
    std::vector<EnvelopeRow> rows;  ///< filled when requested
};

/// Checks mu_f(t, G) <= prefactor * exp(-rate * t) at every breakpoint t > 0
/// of every generator. The distribution is a right-continuous step function
/// and the envelope is decreasing, so the left limits at breakpoints are the
/// binding values.
inline EnvelopeCheck check_envelope(const std::vector<StepDist>& dists, double prefactor, double rate,
                                    bool keep_rows = false, bool include_zero = false) {
    EnvelopeCheck r;
    for (std::size_t g = 0; g < dists.size(); ++g) {
        for (const auto& b : dists[g].breakpoints()) {
            if (b.t <= 0.0 && !include_zero) continue;
            const double env = prefactor * std::exp(-rate * b.t);
            // At t = 0 the value itself is checked, not the left limit.
            const double mu = b.t <= 0.0 ? b.above : b.at_or_above;
            const double margin = env - mu;
            ++r.points;
            const bool pass = approx_le(mu, env);
            if (!pass) r.ok = false;
            if (margin < r.worst_margin) {
                r.worst_margin = margin;
                r.worst_gen = static_cast<Index>(g);
                r.worst_t = b.t;
            }
            if (keep_rows) r.rows.push_back({static_cast<Index>(g), b.t, mu, env});
        }
    }
    return r;
}

/// Chebyshev: mu_f(t, G) <= [f]_alpha exp(-alpha t / ||f||), checked at
/// t = 0 and at every breakpoint.
inline EnvelopeCheck chebyshev_jn_from_hs(const Space& space, const CellFn& f, const Family& family, double alpha,
                                         bool keep_rows = false) {
    const double norm = detail::positive_seminorm(space, f, family);
    const auto bracket = exp_bracket(space, f, family, alpha / norm);
    const auto dists = all_distributions(space, f, family);
    auto r = check_envelope(dists, bracket.value, alpha / norm, keep_rows, true);
    // t = 0 for generators on which f has no zero deviation.
    for (const auto& d : dists)
        if (!d.empty() && d.breakpoints().front().t > 0.0) {
            ++r.points;
            if (!approx_le(1.0, bracket.value)) r.ok = false;
        }
    return r;
}

struct HsResult {
    bool holds = false;
    double bracket = 1.0;  ///< [f]_alpha
    double bound = 1.0;    ///< 1 + C / ((c2 / alpha) - 1)
    EnvelopeCheck jn;
};

/// From an exponential distribution bound to a bracket bound:
/// [f]_alpha <= 1 + C / ((c2 / alpha) - 1) for alpha < c2, where C is the
/// prefactor of the assumed bound (c1, or C_f for the weak form).
inline HsResult hs_from_jn(const Space& space, const CellFn& f, const Family& family, const JnParams& params) {
    require(params.alpha > 0.0 && params.c2 > 0.0 && params.prefactor() > 0.0, ErrorCode::InvalidParams,
            "c1, c2 and alpha must be positive");
    require(params.alpha < params.c2, ErrorCode::AlphaTooLarge, "alpha must be smaller than c2");
    const double norm = detail::positive_seminorm(space, f, family);
    HsResult r;
    r.jn = check_envelope(all_distributions(space, f, family), params.prefactor(), params.c2 / norm);
    require(r.jn.ok, ErrorCode::JnNotVerified, "assumed John-Nirenberg bound does not hold for this f");
    r.bracket = exp_bracket(space, f, family, params.alpha / norm).value;
    r.bound = 1.0 + params.prefactor() / ((params.c2 / params.alpha) - 1.0);
    r.holds = approx_le(r.bracket, r.bound);
    return r;
}

struct JnFit {
    double c2 = std::numeric_limits<double>::infinity();
    Index gen = 0;
    double t = 0.0;
    double norm = 0.0;
};

/// Largest c2 with mu_f(t, G) <= c1 exp(-c2 t / ||f||) for every generator and
/// every t > 0.
inline JnFit jn_empirical_fit(const Space& space, const CellFn& f, const Family& family, double c1) {
    require(c1 > 0.0, ErrorCode::InvalidParams, "c1 must be positive");
    JnFit fit;
    fit.norm = detail::positive_seminorm(space, f, family);
    const auto dists = all_distributions(space, f, family);
    for (std::size_t g = 0; g < dists.size(); ++g) {
        const auto& pts = dists[g].breakpoints();
        if (pts.empty()) continue;
        const double near_zero = pts.front().t > 0.0 ? 1.0 : pts.front().above;
        require(c1 >= near_zero, ErrorCode::InvalidParams,
                "c1 below mu_f(0+, G) for generator '" + family.id(static_cast<Index>(g)) + "'");
        for (const auto& b : pts) {
            if (b.t <= 0.0 || b.at_or_above <= 0.0) continue;
            const double c2 = (fit.norm / b.t) * std::log(c1 / b.at_or_above);
            if (c2 < fit.c2) {
                fit.c2 = c2;
                fit.gen = static_cast<Index>(g);
                fit.t = b.t;
            }
        }
    }
    return fit;
}

struct NormEquivalence {
    bool holds = false;
    double bmo1 = 0.0;
    double bmop = 0.0;
    double k_p = 0.0;  ///< (c1 p Gamma(p))^(1/p) / c2
};

inline double comparability_constant(double c1, double c2, double p) {
    return std::pow(c1 * p * std::tgamma(p), 1.0 / p) / c2;
}

/// ||f||_BMO1 <= ||f||_BMOp <= K(p) ||f||_BMO1 under a verified distribution
/// bound with constants (c1, c2).
inline NormEquivalence norm_equivalence_check(const Space& space, const CellFn& f, const Family& family, double p,
                                              const JnParams& params) {
    check_exponent(p);
    const double norm = detail::positive_seminorm(space, f, family);
    const auto jn = check_envelope(all_distributions(space, f, family), params.c1, params.c2 / norm);
    require(jn.ok, ErrorCode::JnNotVerified, "John-Nirenberg bound with the given constants fails");
    NormEquivalence r;
    r.bmo1 = norm;
    r.bmop = bmo_seminorm(space, f, family, p).value;
    r.k_p = comparability_constant(params.c1, params.c2, p);
    r.holds = approx_le(r.bmo1, r.bmop) && approx_le(r.bmop, r.k_p * r.bmo1);
    return r;
}

/// n logarithmically spaced points in (0, c2), from c2/1000 up to
/// c2 * 10^(-3/n).
inline std::vector<double> alpha_grid(double c2, std::size_t n = 8) {
    std::vector<double> grid;
    for (std::size_t k = 0; k < n; ++k)
        grid.push_back(c2 * std::pow(10.0, -3.0 + 3.0 * static_cast<double>(k) / static_cast<double>(n)));
    return grid;
}

} // namespace bmolab::weights
