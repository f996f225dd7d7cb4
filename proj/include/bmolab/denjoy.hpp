#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/measure.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/space.hpp"
#include "bmolab/structure.hpp"
#include "bmolab/weights.hpp"

namespace bmolab::denjoy {

struct DenjoyParams {
    double a = 2.0;
    double b = 6.0;
    std::optional<double> eps_shrink;  ///< resolution for the shrinking check; default: smallest generator
    std::size_t j_max = 64;            ///< cap on fattening iterations and double-chain hops

    DenjoyParams() = default;
    DenjoyParams(double a_, double b_) : a(a_), b(b_) {}

    void validate() const {
        require(std::isfinite(a) && std::isfinite(b) && a > 1.0 && a <= b, ErrorCode::InvalidParams,
                "need 1 < a <= b");
        require(j_max >= 1, ErrorCode::InvalidParams, "j_max must be positive");
        require(!eps_shrink || *eps_shrink > 0.0, ErrorCode::InvalidParams, "eps_shrink must be positive");
    }
};

/// Optional restriction of a family to a subfamily (mask[g] != 0).
using Mask = std::vector<char>;

inline bool allowed(const Mask* mask, Index g) { return !mask || (*mask)[g]; }

// ---------------------------------------------------------------------------
// Fattening and doubles

/// Omega_a on atom sets: the union of all (allowed) generators meeting A
/// whose measure is at most a * mu(A).
inline IndexSet omega_atoms(const Family& family, const IndexSet& atoms, double a, const Mask* mask = nullptr) {
    require(!atoms.empty(), ErrorCode::EmptySet, "fattening of the empty set");
    const double limit = a * family.atom_measure(atoms);
    std::vector<char> gen_seen(family.size(), 0);
    std::vector<char> atom_in(family.atom_count(), 0);
    for (Index atom : atoms) {
        for (Index g : family.atom_generators(atom)) {
            if (gen_seen[g]) continue;
            gen_seen[g] = 1;
            if (!allowed(mask, g) || !approx_le(family.measure(g), limit)) continue;
            for (Index x : family.atoms(g)) atom_in[x] = 1;
        }
    }
    std::vector<Index> out;
    for (Index x = 0; x < atom_in.size(); ++x)
        if (atom_in[x]) out.push_back(x);
    return IndexSet::from_sorted(std::move(out));
}

inline CellSet omega_a(const Space& space, const Family& family, const CellSet& cells, double a) {
    require(!cells.empty(), ErrorCode::EmptySet, "fattening of the empty set");
    space.check_cells(cells);
    // A partially covered atom still meets the same generators; measure of A
    // is taken on the cells themselves.
    const double limit = a * measure(space, cells);
    std::vector<char> gen_seen(family.size(), 0);
    std::vector<Index> out;
    for (Index c : cells)
        for (Index g : family.containing(c)) {
            if (gen_seen[g]) continue;
            gen_seen[g] = 1;
            if (approx_le(family.measure(g), limit)) out.insert(out.end(), family.cells(g).begin(), family.cells(g).end());
        }
    return CellSet(std::move(out));
}

struct DoubleInfo {
    std::optional<Index> dbl;                                   ///< chosen (a, b)-double
    double best_ratio = std::numeric_limits<double>::infinity();  ///< min mu(G')/mu(G) over G' containing Omega_a(G)
};

/// Minimal-measure generator G' (lowest index on ties) with
/// Omega_a(G) inside G' and mu(G') <= b mu(G).
inline DoubleInfo find_double_info(const Family& family, Index g, double a, double b, const Mask* mask = nullptr) {
    const IndexSet omega = omega_atoms(family, family.atoms(g), a, mask);
    // Candidates must contain the rarest atom of Omega.
    Index rare = omega.front();
    for (Index atom : omega)
        if (family.atom_generators(atom).size() < family.atom_generators(rare).size()) rare = atom;
    DoubleInfo info;
    const double mg = family.measure(g);
    double best = std::numeric_limits<double>::infinity();
    for (Index h : family.atom_generators(rare)) {
        if (!allowed(mask, h)) continue;
        if (!omega.is_subset_of(family.atoms(h))) continue;
        const double ratio = family.measure(h) / mg;
        info.best_ratio = std::min(info.best_ratio, ratio);
        if (!approx_le(family.measure(h), b * mg)) continue;
        if (family.measure(h) < best) {
            best = family.measure(h);
            info.dbl = h;
        }
    }
    return info;
}

inline std::optional<Index> find_double(const Family& family, Index g, const DenjoyParams& params) {
    params.validate();
    require(g < family.size(), ErrorCode::UnknownGenerator, "generator index out of range");
    return find_double_info(family, g, params.a, params.b).dbl;
}

inline std::optional<std::string> find_double(const Family& family, const std::string& id, const DenjoyParams& params) {
    auto d = find_double(family, family.index_of(id), params);
    if (!d) return std::nullopt;
    return family.id(*d);
}

/// Memoised doubles for one (family, a, b, mask).
class DoubleCache {
public:
    DoubleCache(const Family& family, const DenjoyParams& params, const Mask* mask = nullptr)
        : family_(&family), a_(params.a), b_(params.b), mask_(mask), cache_(family.size()), known_(family.size(), 0) {}

    std::optional<Index> operator()(Index g) {
        if (!known_[g]) {
            cache_[g] = find_double_info(*family_, g, a_, b_, mask_).dbl;
            known_[g] = 1;
        }
        return cache_[g];
    }

    Index require_double(Index g) {
        auto d = (*this)(g);
        require(d.has_value(), ErrorCode::MissingDouble, "generator '" + family_->id(g) + "' has no double");
        return *d;
    }

private:
    const Family* family_;
    double a_, b_;
    const Mask* mask_;
    std::vector<std::optional<Index>> cache_;
    std::vector<char> known_;
};

// ---------------------------------------------------------------------------
// Audits

struct DenjoyAudit {
    double eps_used = 0.0;

    bool shrinking_ok = true;
    CellSet shrinking_failures;

    bool doubling_ok = true;
    std::vector<std::optional<Index>> doubles;  ///< per generator (audited ones only)
    std::vector<Index> doubling_failures;
    double effective_b = 1.0;  ///< largest min-ratio needed over audited generators

    bool growth_ok = true;
    std::vector<Index> growth_failures;
    std::size_t max_iterations = 0;

    bool weak_diff_checked = false;
    bool weak_diff_ok = true;
    CellSet weak_diff_failures;

    // Local audits only.
    bool engulfing_ok = true;
    std::size_t engulfing_samples = 0;
    bool degenerate = false;
    std::size_t subfamily_size = 0;

    bool overall = false;
};

namespace detail {

/// Iterates Omega_a from `start` until the measure reaches `threshold`.
/// Returns the iteration count, or nothing on a fixed point or cap hit.
inline std::optional<std::size_t> growth_steps(const Family& family, const IndexSet& start, double a, double threshold,
                                               std::size_t j_max, const Mask* mask) {
    IndexSet current = start;
    for (std::size_t j = 1; j <= j_max; ++j) {
        IndexSet next = omega_atoms(family, current, a, mask);
        if (approx_le(threshold, family.atom_measure(next))) return j;
        if (next == current) return std::nullopt;
        current = std::move(next);
    }
    return std::nullopt;
}

inline std::vector<double> mean_abs_per_generator(const Space& space, const CellFn& f, const Family& family) {
    const CellFn abs_f = f.map([](double v) { return std::abs(v); });
    return per_generator(family, [&](Index g) { return mean(space, abs_f, family.cells(g)); });
}

} // namespace detail

/// Checks the four Denjoy-family properties at a fixed resolution.
///
/// Shrinking: every cell lies in a generator of measure <= eps.
/// Doubling: every generator has an (a, b)-double.
/// Growth: for every intersecting pair (G0, G), some iterate of Omega_a
/// starting at G reaches measure (a/b) mu(G0); the largest G0 meeting G is
/// the binding one.
/// Weak differentiation (surrogate, needs a probe): |f(x)| is at most the
/// largest average of |f| over generators of measure <= eps containing x.
inline DenjoyAudit denjoy_audit(const Space& space, const Family& family, const DenjoyParams& params,
                                const CellFn* probe = nullptr) {
    params.validate();
    DenjoyAudit r;
    r.eps_used = params.eps_shrink.value_or(family.min_measure());
    r.subfamily_size = family.size();

    // Shrinking, per atom.
    std::vector<char> atom_small(family.atom_count(), 0);
    for (Index atom = 0; atom < family.atom_count(); ++atom)
        for (Index g : family.atom_generators(atom))
            if (approx_le(family.measure(g), r.eps_used)) {
                atom_small[atom] = 1;
                break;
            }
    {
        std::vector<Index> failing;
        for (Index c = 0; c < space.size(); ++c)
            if (!atom_small[family.atom_of(c)]) failing.push_back(c);
        r.shrinking_failures = IndexSet::from_sorted(std::move(failing));
        r.shrinking_ok = r.shrinking_failures.empty();
    }

    // Doubling.
    auto infos = parallel_map(family.size(), [&](std::size_t g) {
        return find_double_info(family, static_cast<Index>(g), params.a, params.b);
    });
    r.doubles.resize(family.size());
    for (Index g = 0; g < family.size(); ++g) {
        r.doubles[g] = infos[g].dbl;
        r.effective_b = std::max(r.effective_b, infos[g].best_ratio);
        if (!infos[g].dbl) r.doubling_failures.push_back(g);
    }
    r.doubling_ok = r.doubling_failures.empty();

    // Growth.
    std::vector<double> atom_max(family.atom_count(), 0.0);
    for (Index atom = 0; atom < family.atom_count(); ++atom)
        for (Index g : family.atom_generators(atom)) atom_max[atom] = std::max(atom_max[atom], family.measure(g));
    auto steps = parallel_map(family.size(), [&](std::size_t gi) -> std::optional<std::size_t> {
        const auto g = static_cast<Index>(gi);
        double biggest = 0.0;
        for (Index atom : family.atoms(g)) biggest = std::max(biggest, atom_max[atom]);
        return detail::growth_steps(family, family.atoms(g), params.a, (params.a / params.b) * biggest, params.j_max,
                                    nullptr);
    });
    for (Index g = 0; g < family.size(); ++g) {
        if (steps[g])
            r.max_iterations = std::max(r.max_iterations, *steps[g]);
        else
            r.growth_failures.push_back(g);
    }
    r.growth_ok = r.growth_failures.empty();

    // Weak differentiation surrogate.
    if (probe) {
        check_aligned(space, *probe);
        r.weak_diff_checked = true;
        const auto avg = detail::mean_abs_per_generator(space, *probe, family);
        std::vector<Index> failing;
        for (Index c = 0; c < space.size(); ++c) {
            double best = -1.0;
            for (Index g : family.containing(c))
                if (approx_le(family.measure(g), r.eps_used)) best = std::max(best, avg[g]);
            if (best < 0.0) continue;  // reported by the shrinking check
            if (!approx_le(std::abs((*probe)[c]), best)) failing.push_back(c);
        }
        r.weak_diff_failures = IndexSet::from_sorted(std::move(failing));
        r.weak_diff_ok = r.weak_diff_failures.empty();
    }

    r.overall = r.shrinking_ok && r.doubling_ok && r.growth_ok && r.weak_diff_ok;
    return r;
}

/// Whether some generator of measure <= limit contains the atom set.
inline bool engulfed(const Family& family, const IndexSet& atoms, double limit) {
    Index rare = atoms.front();
    for (Index atom : atoms)
        if (family.atom_generators(atom).size() < family.atom_generators(rare).size()) rare = atom;
    for (Index h : family.atom_generators(rare))
        if (approx_le(family.measure(h), limit) && atoms.is_subset_of(family.atoms(h))) return true;
    return false;
}

/// Audit of the local family {G : G meets G0, mu(G) <= a mu(G0)}, including
/// the engulfing property on all pairs plus `random_triples` sampled triples.
inline DenjoyAudit local_denjoy_audit(const Space& space, const Family& family, Index g0, const DenjoyParams& params,
                                      const CellFn* probe = nullptr, std::uint64_t seed = 1,
                                      std::size_t random_triples = 100) {
    params.validate();
    require(g0 < family.size(), ErrorCode::UnknownGenerator, "generator index out of range");
    const double m0 = family.measure(g0);
    const IndexSet& base = family.atoms(g0);

    Mask mask(family.size(), 0);
    std::vector<Index> members;
    for (Index g = 0; g < family.size(); ++g)
        if (approx_le(family.measure(g), params.a * m0) && family.atoms(g).intersects(base)) {
            mask[g] = 1;
            members.push_back(g);
        }

    DenjoyAudit r;
    r.subfamily_size = members.size();
    double min_member = std::numeric_limits<double>::infinity();
    for (Index g : members) min_member = std::min(min_member, family.measure(g));
    r.eps_used = params.eps_shrink.value_or(min_member);
    const double small = (params.a / params.b) * m0;
    r.degenerate = std::none_of(members.begin(), members.end(), [&](Index g) { return family.measure(g) < small; });

    // Shrinking on the cells of G0.
    {
        std::vector<Index> failing;
        for (Index c : family.cells(g0)) {
            bool ok = false;
            for (Index g : family.containing(c))
                if (mask[g] && approx_le(family.measure(g), r.eps_used)) {
                    ok = true;
                    break;
                }
            if (!ok) failing.push_back(c);
        }
        r.shrinking_failures = IndexSet::from_sorted(std::move(failing));
        r.shrinking_ok = r.shrinking_failures.empty();
    }

    // Doubling within the subfamily, for members smaller than (a/b) mu(G0).
    r.doubles.assign(family.size(), std::nullopt);
    for (Index g : members) {
        if (!(family.measure(g) < small)) continue;
        const auto info = find_double_info(family, g, params.a, params.b, &mask);
        r.doubles[g] = info.dbl;
        r.effective_b = std::max(r.effective_b, info.best_ratio);
        if (!info.dbl) r.doubling_failures.push_back(g);
    }
    r.doubling_ok = r.doubling_failures.empty();

    // Growth within the subfamily.
    for (Index g : members) {
        auto steps = detail::growth_steps(family, family.atoms(g), params.a, small, params.j_max, &mask);
        if (steps)
            r.max_iterations = std::max(r.max_iterations, *steps);
        else
            r.growth_failures.push_back(g);
    }
    r.growth_ok = r.growth_failures.empty();

    if (probe) {
        check_aligned(space, *probe);
        r.weak_diff_checked = true;
        const auto avg = detail::mean_abs_per_generator(space, *probe, family);
        std::vector<Index> failing;
        for (Index c : family.cells(g0)) {
            double best = -1.0;
            for (Index g : family.containing(c))
                if (mask[g] && approx_le(family.measure(g), r.eps_used)) best = std::max(best, avg[g]);
            if (best >= 0.0 && !approx_le(std::abs((*probe)[c]), best)) failing.push_back(c);
        }
        r.weak_diff_failures = IndexSet::from_sorted(std::move(failing));
        r.weak_diff_ok = r.weak_diff_failures.empty();
    }

    // Engulfing. One generator swallowing G0 and every member settles all
    // subcollections at once.
    const double limit = params.b * m0;
    IndexSet everything = base;
    for (Index g : members) everything = everything.united(family.atoms(g));
    if (engulfed(family, everything, limit)) {
        r.engulfing_samples = members.size() * (members.size() + 1) / 2 + random_triples;
    } else {
        for (std::size_t i = 0; i < members.size() && r.engulfing_ok; ++i)
            for (std::size_t j = i; j < members.size(); ++j) {
                ++r.engulfing_samples;
                const IndexSet u = base.united(family.atoms(members[i])).united(family.atoms(members[j]));
                if (!engulfed(family, u, limit)) {
                    r.engulfing_ok = false;
                    break;
                }
            }
        Rng rng(seed);
        for (std::size_t s = 0; s < random_triples && r.engulfing_ok && !members.empty(); ++s) {
            ++r.engulfing_samples;
            IndexSet u = base;
            for (int k = 0; k < 3; ++k) u = u.united(family.atoms(members[rng.below(members.size())]));
            if (!engulfed(family, u, limit)) r.engulfing_ok = false;
        }
    }

    r.overall = r.shrinking_ok && r.doubling_ok && r.growth_ok && r.weak_diff_ok && r.engulfing_ok;
    return r;
}

// ---------------------------------------------------------------------------
// Calderon-Zygmund-type decomposition

/// Picks G in `active` with d < a mu(G) whose double lies outside `active`,
/// following the chain of doubles from the largest member. `in_active` is
/// the membership mask of `active`.
inline Index maximal_pick(const Family& family, std::span<const Index> active, const std::vector<char>& in_active,
                          std::optional<double> bound_d, const DenjoyParams& params, DoubleCache& doubles) {
    require(!active.empty(), ErrorCode::EmptySet, "maximal pick over an empty collection");
    double d = 0.0;
    for (Index g : active) d = std::max(d, family.measure(g));
    if (bound_d) d = *bound_d;
    std::optional<Index> start;
    for (Index g : active) {
        if (!(d < params.a * family.measure(g))) continue;
        if (!start || family.measure(g) > family.measure(*start) ||
            (family.measure(g) == family.measure(*start) && g < *start))
            start = g;
    }
    require(start.has_value(), ErrorCode::NoMaximalPick, "no member with d < a mu(G)");
    Index current = *start;
    for (std::size_t hop = 0; hop < params.j_max; ++hop) {
        const Index dbl = doubles.require_double(current);
        if (!in_active[dbl]) return current;
        current = dbl;
    }
    fail(ErrorCode::NoMaximalPick, "double chain stayed inside the collection for " + std::to_string(params.j_max) +
                                       " hops (growth property violated)");
}

inline Index maximal_pick(const Family& family, std::span<const Index> active, std::optional<double> bound_d,
                          const DenjoyParams& params) {
    params.validate();
    std::vector<char> in_active(family.size(), 0);
    for (Index g : active) in_active[g] = 1;
    DoubleCache doubles(family, params);
    return maximal_pick(family, active, in_active, bound_d, params, doubles);
}

struct JnConstants {
    double k = 0.0;
    double K = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

/// k = b^2/a + b, K = b^2 (b+1), c1 = sqrt(e), c2 = 1 / (2 k K e).
inline JnConstants jn_constants(const DenjoyParams& params) {
    params.validate();
    const double a = params.a, b = params.b;
    JnConstants c;
    c.k = b * b / a + b;
    c.K = b * b * (b + 1.0);
    c.c1 = std::sqrt(std::numbers::e);
    c.c2 = 1.0 / (2.0 * c.k * c.K * std::numbers::e);
    return c;
}

struct SelectedSet {
    Index gen;
    Index dbl;
};

struct CzResult {
    std::vector<SelectedSet> selected;  ///< {G_j} with doubles G_j' outside A_1
    std::vector<SelectedSet> picked;    ///< every G_n of the greedy sweep
    double alpha = 0.0;
    double k = 0.0;
    double K = 0.0;
    std::size_t a0_size = 0;
    std::size_t a1_size = 0;

    bool disjoint_ok = false;
    bool covers_level_set = false;  ///< every member of A_1 lies in some G_j'

    bool bound_i_ok = false;
    double margin_i = 0.0;  ///< k alpha - max |f - f_G0| off the doubles
    bool bound_ii_ok = false;
    double margin_ii = 0.0;  ///< k alpha - max_j |f_{G_j'} - f_G0|
    bool bound_iii_ok = false;
    double margin_iii = 0.0;  ///< (K / alpha) mu(G0) - sum_j mu(G_j')

    CellSet uncovered_good_set;  ///< G0 minus the union of the G_j'

    bool ok() const { return disjoint_ok && bound_i_ok && bound_ii_ok && bound_iii_ok; }
};

struct CzOptions {
    std::optional<double> k_override;  ///< replaces k in the verified bounds (fault injection)
    double norm_tolerance = 1e-9;
};

/// Greedy decomposition of G0 for f with ||f||_BMO = 1 at height alpha > 1.
///
/// With h = |f - f_G0|:
///   A_0 = {G meeting G0 with mu(G) < (a/b) mu(G0)},
///   A_1 = {G in A_0 : avg_G h > alpha}.
/// While the active collection A_n is nonempty, G_n is a maximal pick in A_n
/// (d_n < a mu(G_n), double outside A_n) and every member meeting G_n is
/// retired. The G_n whose doubles leave A_1 form the output. Bounds (i)-(iii)
/// are then measured directly.
inline CzResult cz_decompose(const Space& space, const CellFn& f, Index g0, const Family& family,
                             const DenjoyParams& params, double alpha, const CzOptions& options = {}) {
    params.validate();
    check_aligned(space, f);
    require(g0 < family.size(), ErrorCode::UnknownGenerator, "generator index out of range");
    require(alpha > 1.0, ErrorCode::AlphaTooSmall, "alpha must exceed 1");
    const double norm = bmo_seminorm(space, f, family).value;
    require(std::abs(norm - 1.0) <= options.norm_tolerance, ErrorCode::NotNormalized,
            "f must have BMO seminorm 1 (got " + format_double(norm) + ")");

    const auto consts = jn_constants(params);
    CzResult r;
    r.alpha = alpha;
    r.k = options.k_override.value_or(consts.k);
    r.K = consts.K;

    const CellSet& base = family.cells(g0);
    const double m0 = family.measure(g0);
    const double f0 = mean(space, f, base);
    const CellFn h = f.map([f0](double v) { return std::abs(v - f0); });

    std::vector<Index> a0;
    for (Index g = 0; g < family.size(); ++g)
        if (family.measure(g) < (params.a / params.b) * m0 && family.atoms(g).intersects(family.atoms(g0)))
            a0.push_back(g);
    r.a0_size = a0.size();

    DoubleCache doubles(family, params);
    for (Index g : a0) doubles.require_double(g);

    std::vector<char> in_a1(family.size(), 0);
    std::vector<Index> a1;
    for (Index g : a0)
        if (mean(space, h, family.cells(g)) > alpha) {
            in_a1[g] = 1;
            a1.push_back(g);
        }
    r.a1_size = a1.size();

    // Greedy sweep.
    std::vector<char> active = in_a1;
    std::vector<Index> current = a1;
    while (!current.empty()) {
        const Index pick = maximal_pick(family, current, active, std::nullopt, params, doubles);
        r.picked.push_back({pick, doubles.require_double(pick)});
        for (Index atom : family.atoms(pick))
            for (Index g : family.atom_generators(atom)) active[g] = 0;
        std::erase_if(current, [&](Index g) { return !active[g]; });
    }
    for (const auto& s : r.picked)
        if (!in_a1[s.dbl]) r.selected.push_back(s);

    // Pairwise disjointness of the selected G_j.
    r.disjoint_ok = true;
    {
        std::vector<char> atom_used(family.atom_count(), 0);
        for (const auto& s : r.selected)
            for (Index atom : family.atoms(s.gen)) {
                if (atom_used[atom]) r.disjoint_ok = false;
                atom_used[atom] = 1;
            }
    }

    IndexSet union_doubles;
    for (const auto& s : r.selected) union_doubles = union_doubles.united(family.atoms(s.dbl));
    r.covers_level_set = std::all_of(a1.begin(), a1.end(), [&](Index g) { return family.atoms(g).is_subset_of(union_doubles); });

    const double k_alpha = r.k * alpha;
    // (i)
    {
        const CellSet covered = family.cells_of_atoms(union_doubles);
        r.uncovered_good_set = base.minus(covered);
        double worst = 0.0;
        for (Index c : r.uncovered_good_set) worst = std::max(worst, h[c]);
        r.margin_i = k_alpha - worst;
        r.bound_i_ok = approx_le(worst, k_alpha);
    }
    // (ii)
    {
        double worst = 0.0;
        for (const auto& s : r.selected) worst = std::max(worst, std::abs(mean(space, f, family.cells(s.dbl)) - f0));
        r.margin_ii = k_alpha - worst;
        r.bound_ii_ok = approx_le(worst, k_alpha);
    }
    // (iii)
    {
        CompensatedSum sum;
        for (const auto& s : r.selected) sum += family.measure(s.dbl);
        const double bound = (r.K / alpha) * m0;
        r.margin_iii = bound - sum.value();
        r.bound_iii_ok = approx_le(sum.value(), bound);
    }
    return r;
}

struct IteratedLevel {
    std::size_t n = 0;
    double level_measure = 0.0;  ///< mu(E_{n k alpha})
    double bound = 0.0;          ///< (K / alpha)^n mu(G0)
    bool ok = false;
    // Constructive route: the level-n collection obtained by re-decomposing
    // every member of level n-1.
    bool constructed = false;
    std::size_t collection_size = 0;
    double collection_measure = 0.0;
    bool collection_covers = false;  ///< E_{n k alpha} lies inside the collection
};

struct IteratedReport {
    std::vector<IteratedLevel> levels;
    bool ok() const {
        return std::all_of(levels.begin(), levels.end(), [](const IteratedLevel& l) { return l.ok; });
    }
};

/// mu({x in G0 : |f - f_G0| > n k alpha}) <= (K/alpha)^n mu(G0) for
/// n = 1..n_max, measured directly. The constructive collections are built by
/// reapplying cz_decompose to each double, up to `max_collection` sets.
inline IteratedReport iterated_cz_check(const Space& space, const CellFn& f, Index g0, const Family& family,
                                        const DenjoyParams& params, double alpha, std::size_t n_max,
                                        std::size_t max_collection = 4096) {
    const auto consts = jn_constants(params);
    require(alpha > consts.K, ErrorCode::AlphaTooSmall, "alpha must exceed K for decay");
    const auto first = cz_decompose(space, f, g0, family, params, alpha);

    const CellSet& base = family.cells(g0);
    const double m0 = family.measure(g0);
    const double f0 = mean(space, f, base);

    std::vector<Index> collection;
    for (const auto& s : first.selected) collection.push_back(s.dbl);
    bool constructive = true;

    IteratedReport report;
    for (std::size_t n = 1; n <= n_max; ++n) {
        IteratedLevel lvl;
        lvl.n = n;
        const double height = static_cast<double>(n) * consts.k * alpha;
        std::vector<Index> level_cells;
        for (Index c : base)
            if (std::abs(f[c] - f0) > height) level_cells.push_back(c);
        const CellSet level = IndexSet::from_sorted(std::move(level_cells));
        lvl.level_measure = measure(space, level);
        lvl.bound = std::pow(consts.K / alpha, static_cast<double>(n)) * m0;
        lvl.ok = approx_le(lvl.level_measure, lvl.bound);

        if (n > 1 && constructive) {
            std::vector<Index> next;
            for (Index s : collection) {
                const auto sub = cz_decompose(space, f, s, family, params, alpha);
                for (const auto& sel : sub.selected) next.push_back(sel.dbl);
                if (next.size() > max_collection) {
                    constructive = false;
                    break;
                }
            }
            collection = std::move(next);
        }
        if (constructive) {
            lvl.constructed = true;
            lvl.collection_size = collection.size();
            CompensatedSum total;
            CellSet covered;
            for (Index s : collection) {
                total += family.measure(s);
                covered = covered.united(family.cells(s));
            }
            lvl.collection_measure = total.value();
            lvl.collection_covers = level.is_subset_of(covered);
        }
        report.levels.push_back(lvl);
    }
    return report;
}

// ---------------------------------------------------------------------------
// John-Nirenberg verification and necessary conditions

struct JnVerify {
    bool ok = false;
    JnConstants constants;
    double norm = 0.0;
    weights::EnvelopeCheck check;
};

/// mu_f(t, G) <= c1 exp(-c2 t / ||f||) at every breakpoint of every generator
/// with the constants of jn_constants(params).
inline JnVerify jn_verify(const Space& space, const CellFn& f, const Family& family, const DenjoyParams& params,
                          bool keep_rows = false) {
    JnVerify r;
    r.constants = jn_constants(params);
    r.norm = bmo_seminorm(space, f, family).value;
    require(r.norm > 0.0, ErrorCode::ZeroSeminorm, "function has zero BMO seminorm");
    r.check = weights::check_envelope(weights::all_distributions(space, f, family), r.constants.c1,
                                      r.constants.c2 / r.norm, keep_rows);
    r.ok = r.check.ok;
    return r;
}

/// Essential cover of `target` by generators of measure < eps.
inline structure::CoverCheck fine_cover_check(const Space& space, const Family& family, double eps,
                                              const CellSet& target) {
    Mask mask(family.size(), 0);
    for (Index g = 0; g < family.size(); ++g) mask[g] = family.measure(g) < eps ? 1 : 0;
    return structure::essential_subcover_check(space, family, target, &mask);
}

/// M f(x) = max over generators containing x of avg |f|; 0 off the cover.
inline CellFn maximal_function(const Space& space, const CellFn& f, const Family& family) {
    check_aligned(space, f);
    const auto avg = detail::mean_abs_per_generator(space, f, family);
    std::vector<double> out(space.size(), 0.0);
    for (Index c = 0; c < space.size(); ++c)
        for (Index g : family.containing(c)) out[c] = std::max(out[c], avg[g]);
    return CellFn(std::move(out));
}

struct WeakL1Row {
    double alpha;
    double level_measure;  ///< mu({M f > alpha})
    double bound;          ///< (b / alpha) ||f||_1
};

struct WeakL1Report {
    bool ok = true;
    std::vector<WeakL1Row> rows;
};

inline WeakL1Report weak_l1_check(const Space& space, const CellFn& f, const Family& family, double b,
                                  std::span<const double> alpha_grid) {
    const CellFn mf = maximal_function(space, f, family);
    CompensatedSum l1;
    for (Index c = 0; c < space.size(); ++c) l1 += space.weight(c) * std::abs(f[c]);
    WeakL1Report r;
    for (double alpha : alpha_grid) {
        require(alpha > 0.0, ErrorCode::InvalidParams, "alpha must be positive");
        CompensatedSum level;
        for (Index c = 0; c < space.size(); ++c)
            if (mf[c] > alpha) level += space.weight(c);
        WeakL1Row row{alpha, level.value(), (b / alpha) * l1.value()};
        if (!approx_le(row.level_measure, row.bound)) r.ok = false;
        r.rows.push_back(row);
    }
    return r;
}

} // namespace bmolab::denjoy
