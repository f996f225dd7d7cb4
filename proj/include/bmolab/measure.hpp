#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/index_set.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/space.hpp"

namespace bmolab {

inline void check_aligned(const Space& space, const CellFn& f) {
    require(f.size() == space.size(), ErrorCode::LoadError,
            "function has " + std::to_string(f.size()) + " values for " + std::to_string(space.size()) + " cells");
}

inline void check_exponent(double p) {
    require(p >= 1.0 && std::isfinite(p), ErrorCode::InvalidExponent, "exponent must be a finite real >= 1");
}

/// Exact weight sum of a cell set; 0 for the empty set.
inline double measure(const Space& space, const CellSet& cells) {
    space.check_cells(cells);
    CompensatedSum m;
    for (Index c : cells) m += space.weight(c);
    return m.value();
}

/// Weighted mean of f over a nonempty cell set. The result always lies in
/// [min f, max f] over the set and is exact when f is constant there.
inline double mean(const Space& space, const CellFn& f, const CellSet& cells) {
    check_aligned(space, f);
    require(!cells.empty(), ErrorCode::EmptyGenerator, "mean over an empty set");
    space.check_cells(cells);
    CompensatedSum num, den;
    double lo = f[cells.front()], hi = lo;
    for (Index c : cells) {
        const double w = space.weight(c);
        num += w * f[c];
        den += w;
        lo = std::min(lo, f[c]);
        hi = std::max(hi, f[c]);
    }
    if (lo == hi) return lo;
    return std::clamp(num.value() / den.value(), lo, hi);
}

inline double power_abs(double x, double p) {
    x = std::abs(x);
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    if (p == 3.0) return x * x * x;
    return std::pow(x, p);
}

/// (avg_G |f - f_G|^p)^(1/p).
inline double oscillation_p(const Space& space, const CellFn& f, const CellSet& cells, double p) {
    check_exponent(p);
    const double m = mean(space, f, cells);
    CompensatedSum num, den;
    for (Index c : cells) {
        const double w = space.weight(c);
        num += w * power_abs(f[c] - m, p);
        den += w;
    }
    const double avg = num.value() / den.value();
    return p == 1.0 ? avg : std::pow(avg, 1.0 / p);
}

struct SupResult {
    double value = 0.0;
    Index argmax = 0;
};

/// Maximum of per-generator values, lowest index on ties.
inline SupResult sup_of(std::span<const double> values) {
    SupResult r{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t g = 0; g < values.size(); ++g)
        if (values[g] > r.value) r = {values[g], static_cast<Index>(g)};
    return r;
}

/// Evaluates fn(generator index) for every generator, in parallel.
template <class Fn>
std::vector<double> per_generator(const Family& family, Fn&& fn) {
    return parallel_map(family.size(), [&](std::size_t g) { return static_cast<double>(fn(static_cast<Index>(g))); });
}

struct Seminorm {
    double value = 0.0;
    Index argmax = 0;
    std::string argmax_id;
};

/// sup over generators of the p-oscillation.
inline Seminorm bmo_seminorm(const Space& space, const CellFn& f, const Family& family, double p = 1.0) {
    check_exponent(p);
    check_aligned(space, f);
    require(!family.empty(), ErrorCode::EmptyGenerator, "family has no generators");
    auto osc = per_generator(family, [&](Index g) { return oscillation_p(space, f, family.cells(g), p); });
    auto sup = sup_of(osc);
    return {sup.value, sup.argmax, family.id(sup.argmax)};
}

/// Per-generator integral of |f|^p.
inline std::vector<double> local_integral_report(const Space& space, const CellFn& f, const Family& family,
                                                 double p = 1.0) {
    check_exponent(p);
    check_aligned(space, f);
    return per_generator(family, [&](Index g) {
        CompensatedSum s;
        for (Index c : family.cells(g)) s += space.weight(c) * power_abs(f[c], p);
        return s.value();
    });
}

/// Mean relative distribution t -> mu({x in E : |f - f_E| > t}) / mu(E) as an
/// exact right-continuous step function.
class StepDist {
public:
    struct Breakpoint {
        double t;            ///< a deviation value attained on E
        double above;        ///< fraction with deviation > t (value at t)
        double at_or_above;  ///< fraction with deviation >= t (left limit at t)
    };

    StepDist() = default;
    explicit StepDist(std::vector<Breakpoint> points) : points_(std::move(points)) {}

    const std::vector<Breakpoint>& breakpoints() const noexcept { return points_; }
    bool empty() const noexcept { return points_.empty(); }
    double max_deviation() const noexcept { return points_.empty() ? 0.0 : points_.back().t; }

    /// Fraction of mass with deviation strictly greater than t.
    double operator()(double t) const {
        if (points_.empty()) return 0.0;
        auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const Breakpoint& b) { return v < b.t; });
        if (it == points_.begin()) return t < 0.0 ? 1.0 : points_.front().at_or_above;
        return std::prev(it)->above;
    }

    /// Fraction with deviation >= t, i.e. the left limit at t.
    double left_limit(double t) const {
        if (points_.empty()) return t <= 0.0 ? 1.0 : 0.0;
        auto it = std::lower_bound(points_.begin(), points_.end(), t,
                                   [](const Breakpoint& b, double v) { return b.t < v; });
        if (it == points_.end()) return 0.0;
        return it->at_or_above;
    }

private:
    std::vector<Breakpoint> points_;
};

inline StepDist distribution(const Space& space, const CellFn& f, const CellSet& cells) {
    const double m = mean(space, f, cells);
    std::vector<std::pair<double, double>> dev;  // (|f - m|, weight)
    dev.reserve(cells.size());
    CompensatedSum total;
    for (Index c : cells) {
        dev.emplace_back(std::abs(f[c] - m), space.weight(c));
        total += space.weight(c);
    }
    std::sort(dev.begin(), dev.end());
    const double mass = total.value();

    // Walk from the largest deviation down, accumulating mass >= t.
    std::vector<StepDist::Breakpoint> pts;
    CompensatedSum above;
    std::size_t i = dev.size();
    while (i > 0) {
        std::size_t j = i;
        CompensatedSum level;
        while (j > 0 && dev[j - 1].first == dev[i - 1].first) level += dev[--j].second;
        const double frac_above = above.value() / mass;
        above += level.value();
        const double frac_at = (j == 0) ? 1.0 : std::min(1.0, above.value() / mass);
        pts.push_back({dev[i - 1].first, frac_above, frac_at});
        i = j;
    }
    std::reverse(pts.begin(), pts.end());
    return StepDist(std::move(pts));
}

/// p * integral_0^inf t^(p-1) d(t) dt, in closed form for a step function.
inline double moment_from_distribution(const StepDist& d, double p) {
    check_exponent(p);
    CompensatedSum s;
    double prev = 0.0;
    for (const auto& b : d.breakpoints()) {
        if (b.t <= 0.0) continue;
        // On [prev, b.t) the value is the left limit at b.t.
        s += b.at_or_above * (power_abs(b.t, p) - power_abs(prev, p));
        prev = b.t;
    }
    return s.value();
}

} // namespace bmolab
