#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmolab/denjoy.hpp"
#include "bmolab/measure.hpp"
#include "bmolab/models.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/structure.hpp"
#include "bmolab/weights.hpp"

namespace bmolab::suite {

using nlohmann::json;

struct Options {
    std::uint64_t seed = 20240601;
    std::optional<double> tamper_k;  ///< replaces k in the decomposition checks
};

struct Criterion {
    std::string id;
    std::string title;
    bool passed = false;
    double margin = 0.0;  ///< worst slack; negative on failure
    json details = json::object();
};

struct Report {
    std::uint64_t seed = 0;
    std::vector<Criterion> criteria;

    std::size_t failed() const {
        return static_cast<std::size_t>(
            std::count_if(criteria.begin(), criteria.end(), [](const Criterion& c) { return !c.passed; }));
    }
    bool passed() const { return failed() == 0; }
};

// ---------------------------------------------------------------------------
// Random inputs

struct RandomModel {
    Space space;
    Family family;
};

/// A random weighted space with `cells` cells and a family of `gens` random
/// nonempty subsets. Cover is not enforced.
inline RandomModel random_model(Rng& rng, std::size_t cells, std::size_t gens, double density = 0.35) {
    std::vector<double> w(cells);
    for (auto& x : w) x = rng.uniform(0.05, 2.0);
    RandomModel m{Space::with_weights(std::move(w)), {}};
    std::vector<Generator> family;
    for (std::size_t g = 0; g < gens; ++g) {
        std::vector<Index> members;
        for (Index c = 0; c < cells; ++c)
            if (rng.coin(density)) members.push_back(c);
        if (members.empty()) members.push_back(static_cast<Index>(rng.below(cells)));
        family.push_back({"g" + std::to_string(g), IndexSet::from_sorted(std::move(members))});
    }
    m.family = Family(m.space, std::move(family));
    return m;
}

inline CellFn random_function(Rng& rng, std::size_t cells, double scale = 3.0) {
    std::vector<double> v(cells);
    const bool few_levels = rng.coin(0.3);
    for (auto& x : v) x = few_levels ? std::floor(rng.uniform(0.0, 3.0)) : rng.uniform(-scale, scale);
    return CellFn(std::move(v));
}

namespace detail {

/// Pairwise-intersection union-find, independent of the atom machinery.
inline std::size_t union_find_components(const Family& family) {
    std::vector<std::size_t> parent(family.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = root(parent[x]);
    };
    for (Index i = 0; i < family.size(); ++i)
        for (Index j = i + 1; j < family.size(); ++j) {
            const auto& a = family.cells(i).vec();
            const auto& b = family.cells(j).vec();
            std::vector<Index> common;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
            if (!common.empty()) parent[root(i)] = root(j);
        }
    std::size_t count = 0;
    for (std::size_t i = 0; i < parent.size(); ++i) count += root(i) == i;
    return count;
}

inline double rel_err(double x, double y) { return std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)}); }

inline Criterion make(std::string id, std::string title) {
    Criterion c;
    c.id = std::move(id);
    c.title = std::move(title);
    return c;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Criteria

inline Criterion strips_exactness() {
    auto c = detail::make("STRIP-1", "strip means of sqrt_sing equal 2");
    double worst = 0.0;
    for (int n : {16, 64, 256}) {
        const auto m = models::vertical_strips(n);
        const auto& f = m.function("sqrt_sing");
        const CellFn abs_f = f.map([](double v) { return std::abs(v); });
        double err = 0.0;
        for (Index g = 0; g < m.family.size(); ++g) err = std::max(err, std::abs(mean(m.space, abs_f, m.family.cells(g)) - 2.0));
        c.details["max_error_N" + std::to_string(n)] = err;
        worst = std::max(worst, err);
    }
    c.margin = 1e-12 - worst;
    c.passed = c.margin >= 0.0;
    return c;
}

inline Criterion jnp_refutation() {
    auto c = detail::make("REFUTE-1", "strips: BMO bounded, BMO^2 and c2_emp degrade with N");
    const double c1 = std::sqrt(std::numbers::e);
    std::vector<double> semi, osc2, c2;
    const std::vector<int> sizes{16, 64, 256, 1024};
    for (int n : sizes) {
        const auto m = models::vertical_strips(n);
        const auto& f = m.function("sqrt_sing");
        semi.push_back(bmo_seminorm(m.space, f, m.family).value);
        osc2.push_back(oscillation_p(m.space, f, m.space.all_cells(), 2.0));
        c2.push_back(weights::jn_empirical_fit(m.space, f, m.family, c1).c2);
    }
    double margin = std::numeric_limits<double>::infinity();
    for (double s : semi) margin = std::min(margin, 4.0 - s);
    for (std::size_t i = 1; i < osc2.size(); ++i) margin = std::min(margin, osc2[i] - osc2[i - 1]);
    margin = std::min(margin, c2.front() / 2.0 - c2.back());
    c.details["N"] = sizes;
    c.details["seminorm"] = semi;
    c.details["osc2_full_square"] = osc2;
    c.details["c2_emp"] = c2;
    c.margin = margin;
    c.passed = margin > 0.0;
    return c;
}

namespace detail {

struct LogModel {
    Model model;
    CellFn f;  ///< log_sing divided by its seminorm
};

inline LogModel normalized_log(int depth) {
    auto m = models::log_singularity(depth);
    const CellFn& raw = m.function("log_sing");
    const double norm = bmo_seminorm(m.space, raw, m.family).value;
    CellFn f = raw.scaled(1.0 / norm);
    return {std::move(m), std::move(f)};
}

} // namespace detail

inline Criterion cz_postconditions(const Options& opt) {
    auto c = detail::make("CZ-1", "decomposition bounds (i)-(iii) on dyadic depth 10");
    const auto lm = detail::normalized_log(10);
    const denjoy::DenjoyParams params{2.0, 6.0};
    const auto consts = denjoy::jn_constants(params);
    const double strict_k = opt.tamper_k.value_or(8.0);
    denjoy::CzOptions cz_opt;
    cz_opt.k_override = opt.tamper_k;
    const Index root = lm.model.family.index_of("I0.0");
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    json rows = json::array();
    for (double alpha : {2.0, 4.0, 8.0, consts.K * std::numbers::e}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = denjoy::cz_decompose(lm.model.space, lm.f, root, lm.model.family, params, alpha, cz_opt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // The same sets checked against the smaller constant k = 8.
        const double dev_i = r.k * alpha - r.margin_i, dev_ii = r.k * alpha - r.margin_ii;
        const double strict_i = strict_k * alpha - dev_i, strict_ii = strict_k * alpha - dev_ii;
        const double m = std::min({r.margin_i, r.margin_ii, r.margin_iii, strict_i, strict_ii});
        const bool row_ok = r.ok() && strict_i >= 0.0 && strict_ii >= 0.0 && secs < 5.0;
        ok = ok && row_ok;
        margin = std::min(margin, m);
        rows.push_back({{"alpha", alpha},
                        {"selected", r.selected.size()},
                        {"disjoint", r.disjoint_ok},
                        {"margin_i", r.margin_i},
                        {"margin_ii", r.margin_ii},
                        {"margin_iii", r.margin_iii},
                        {"margin_i_k8", strict_i},
                        {"margin_ii_k8", strict_ii},
                        {"under_5s", secs < 5.0}});
    }
    c.details["k"] = opt.tamper_k.value_or(consts.k);
    c.details["K"] = consts.K;
    c.details["rows"] = rows;
    c.margin = margin;
    c.passed = ok;
    return c;
}

inline Criterion iterated_bound() {
    auto c = detail::make("CZ-2", "iterated level-set bound at alpha = Ke");
    const auto lm = detail::normalized_log(10);
    const denjoy::DenjoyParams params{2.0, 6.0};
    const auto consts = denjoy::jn_constants(params);
    const auto rep = denjoy::iterated_cz_check(lm.model.space, lm.f, lm.model.family.index_of("I0.0"), lm.model.family,
                                               params, consts.K * std::numbers::e, 3);
    double margin = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (const auto& l : rep.levels) {
        margin = std::min(margin, l.bound - l.level_measure);
        rows.push_back({{"N", l.n}, {"measure", l.level_measure}, {"bound", l.bound}});
    }
    c.details["levels"] = rows;
    c.margin = margin;
    c.passed = rep.ok();
    return c;
}

inline Criterion jn_with_constants() {
    auto c = detail::make("JN-1", "John-Nirenberg bound with c1 = sqrt(e), c2 = 1/(2kKe)");
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    json rows = json::array();
    for (int depth = 6; depth <= 10; ++depth) {
        const auto m = models::log_singularity(depth);
        const auto r = denjoy::jn_verify(m.space, m.function("log_sing"), m.family, {2.0, 6.0});
        ok = ok && r.ok;
        margin = std::min(margin, r.check.worst_margin);
        rows.push_back({{"depth", depth}, {"ok", r.ok}, {"worst_margin", r.check.worst_margin}});
    }
    c.details["depths"] = rows;
    c.margin = margin;
    c.passed = ok;
    return c;
}

inline Criterion a2_chain(std::uint64_t seed) {
    auto c = detail::make("A2-1", "bracket chain [e^f]_A2^(1/2) <= [f]_* <= 2 [e^f]_A2");
    Rng rng(seed ^ 0xa2a2a2a2ULL);
    double margin = std::numeric_limits<double>::infinity();
    std::size_t failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = random_model(rng, 2 + rng.below(11), 1 + rng.below(8));
        const auto f = random_function(rng, m.space.size(), rng.uniform(0.1, 4.0));
        const auto r = weights::a2_bracket_check(m.space, f, m.family);
        margin = std::min({margin, r.lower_margin, r.upper_margin});
        if (!r.ok) ++failures;
    }
    c.details["trials"] = 1000;
    c.details["failures"] = failures;
    c.margin = margin;
    c.passed = failures == 0;
    return c;
}

inline Criterion fcp_oracle(std::uint64_t seed) {
    auto c = detail::make("FCP-1", "FCP verdict matches union-find; witnesses are sound");
    Rng rng(seed ^ 0xfcfcfcfcULL);
    std::size_t mismatches = 0, bad_witness = 0, not_norm = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = random_model(rng, 2 + rng.below(14), 1 + rng.below(9), rng.uniform(0.05, 0.4));
        const auto fcp = structure::has_fcp(m.family);
        if (fcp.fcp != (detail::union_find_components(m.family) == 1)) ++mismatches;
        const auto v = structure::banach_verdict(m.space, m.family);
        if (v.verdict != structure::Verdict::NotNorm) continue;
        ++not_norm;
        bool sound = v.witness.has_value();
        if (sound) {
            const auto& w = v.witness->values();
            const bool two_values = std::any_of(w.begin(), w.end(), [&](double x) { return x != w.front(); });
            sound = two_values && v.witness_seminorm < 1e-12;
            margin = std::min(margin, 1e-12 - v.witness_seminorm);
        }
        if (!sound) ++bad_witness;
    }
    c.details["trials"] = 1000;
    c.details["verdict_mismatches"] = mismatches;
    c.details["not_norm_cases"] = not_norm;
    c.details["unsound_witnesses"] = bad_witness;
    c.margin = std::isfinite(margin) ? margin : 0.0;
    c.passed = mismatches == 0 && bad_witness == 0;
    return c;
}

inline Criterion layer_cake(std::uint64_t seed) {
    auto c = detail::make("LAYER-1", "layer-cake moment equals oscillation^p");
    Rng rng(seed ^ 0x1a7e4ULL);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = random_model(rng, 1 + rng.below(30), 1, rng.uniform(0.3, 1.0));
        const auto f = random_function(rng, m.space.size());
        const auto& cells = m.family.cells(0);
        const auto d = distribution(m.space, f, cells);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const double lhs = moment_from_distribution(d, p);
            const double rhs = std::pow(oscillation_p(m.space, f, cells, p), p);
            const double err = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
            worst = std::max(worst, rhs == 0.0 ? std::abs(lhs) : err);
        }
    }
    c.details["max_relative_error"] = worst;
    c.margin = 1e-10 - worst;
    c.passed = c.margin > 0.0;
    return c;
}

inline Criterion norm_comparability() {
    auto c = detail::make("NORM-1", "BMO^1 <= BMO^p <= K(p) BMO^1 on log_sing, depth 8");
    const auto m = models::log_singularity(8);
    const auto consts = denjoy::jn_constants({2.0, 6.0});
    weights::JnParams jp;
    jp.c1 = consts.c1;
    jp.c2 = consts.c2;
    jp.alpha = consts.c2 / 2.0;
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    json rows = json::array();
    for (double p : {1.5, 2.0, 3.0}) {
        const auto r = weights::norm_equivalence_check(m.space, m.function("log_sing"), m.family, p, jp);
        ok = ok && r.holds;
        margin = std::min({margin, r.bmop - r.bmo1, r.k_p * r.bmo1 - r.bmop});
        rows.push_back({{"p", p}, {"bmo1", r.bmo1}, {"bmop", r.bmop}, {"K_p", r.k_p}});
    }
    c.details["rows"] = rows;
    c.margin = margin;
    c.passed = ok;
    return c;
}

inline Criterion notjnp_truncations() {
    auto c = detail::make("NOTJNP-1", "spike_sum: L2 mass on G0 and BMO bound 2M");
    double margin = std::numeric_limits<double>::infinity();
    bool ok = true;
    json rows = json::array();
    for (int n = 1; n <= 5; ++n) {
        const auto m = models::notjnp_instance(n);
        const auto& f = m.function("spike_sum");
        const Index g0 = m.family.index_of("G0");
        const double l2 = local_integral_report(m.space, f, m.family, 2.0)[g0];
        double expected = 0.0;
        for (int k = 1; k <= n; ++k) expected += std::ldexp(1.0, (k - 1) * (k - 1));
        const auto spikes = models::notjnp_spikes(m);
        double alpha = std::numeric_limits<double>::infinity();
        for (Index g = 0; g < m.family.size(); ++g)
            if (m.family.cells(g).intersects(spikes)) alpha = std::min(alpha, m.family.measure(g));
        const double bound = 2.0 / alpha;
        const double semi = bmo_seminorm(m.space, f, m.family).value;
        const bool row_ok = l2 == expected && semi <= bound;
        ok = ok && row_ok;
        margin = std::min(margin, bound - semi);
        rows.push_back({{"N", n}, {"l2_on_G0", l2}, {"expected", expected}, {"seminorm", semi}, {"bound_2M", bound}});
    }
    c.details["rows"] = rows;
    c.margin = margin;
    c.passed = ok;
    return c;
}

inline Criterion audit_concordance() {
    auto c = detail::make("AUDIT-1", "Denjoy audit: dyadic passes, strips fail weak differentiation only");
    const auto dy = models::log_singularity(10);
    const auto a1 = denjoy::denjoy_audit(dy.space, dy.family, {2.0, 6.0}, &dy.function("log_sing"));
    const auto st = models::vertical_strips(64);
    const auto& f = st.function("sqrt_sing");
    const auto a2 = denjoy::denjoy_audit(st.space, st.family, {2.0, 5.0}, &f);
    // Failing cells must be exactly those in rows lying below y = 1/4.
    const int rows = 64;
    std::size_t misplaced = 0;
    for (Index cell = 0; cell < st.space.size(); ++cell) {
        const int r = static_cast<int>(cell % rows);
        const bool low = (r + 1) * 4 <= rows;
        if (low != a2.weak_diff_failures.contains(cell)) ++misplaced;
    }
    c.details["dyadic"] = {{"shrinking", a1.shrinking_ok}, {"doubling", a1.doubling_ok}, {"growth", a1.growth_ok},
                           {"weak_differentiation", a1.weak_diff_ok}};
    c.details["strips"] = {{"shrinking", a2.shrinking_ok},
                           {"doubling", a2.doubling_ok},
                           {"growth", a2.growth_ok},
                           {"weak_differentiation", a2.weak_diff_ok},
                           {"failing_cells", a2.weak_diff_failures.size()},
                           {"misplaced_cells", misplaced},
                           {"effective_b", a2.effective_b}};
    c.passed = a1.overall && a2.shrinking_ok && a2.doubling_ok && a2.growth_ok && !a2.weak_diff_ok && misplaced == 0;
    c.margin = c.passed ? 0.0 : -1.0;
    return c;
}

inline Criterion invariance_fuzz(std::uint64_t seed) {
    auto c = detail::make("FUZZ-1", "seminorm homogeneity, translation invariance, c2_emp scale invariance");
    Rng rng(seed ^ 0xf022ULL);
    const double c1 = std::sqrt(std::numbers::e);
    double worst_h = 0.0, worst_t = 0.0, worst_c2 = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto m = random_model(rng, 2 + rng.below(20), 1 + rng.below(6));
        const auto f = random_function(rng, m.space.size());
        const double lambda = rng.uniform(-8.0, 8.0), shift = rng.uniform(-5.0, 5.0);
        const double base = bmo_seminorm(m.space, f, m.family).value;
        worst_h = std::max(worst_h, detail::rel_err(bmo_seminorm(m.space, f.scaled(lambda), m.family).value,
                                                    std::abs(lambda) * base));
        worst_t = std::max(worst_t, detail::rel_err(bmo_seminorm(m.space, f.shifted(shift), m.family).value, base));
        if (base > 1e-9 && std::abs(lambda) > 1e-3) {
            const double c2a = weights::jn_empirical_fit(m.space, f, m.family, c1).c2;
            const double c2b = weights::jn_empirical_fit(m.space, f.scaled(lambda), m.family, c1).c2;
            if (std::isfinite(c2a) || std::isfinite(c2b)) worst_c2 = std::max(worst_c2, detail::rel_err(c2a, c2b));
        }
    }
    c.details["homogeneity_rel_error"] = worst_h;
    c.details["translation_rel_error"] = worst_t;
    c.details["c2_emp_rel_error"] = worst_c2;
    c.margin = 1e-12 - std::max({worst_h, worst_t, worst_c2});
    c.passed = c.margin >= 0.0;
    return c;
}

/// Runs every criterion. Exceptions are reported as failures.
inline Report run(const Options& opt = {}) {
    Report rep;
    rep.seed = opt.seed;
    const std::vector<std::pair<std::string, std::function<Criterion()>>> battery{
        {"STRIP-1", [] { return strips_exactness(); }},
        {"REFUTE-1", [] { return jnp_refutation(); }},
        {"CZ-1", [&] { return cz_postconditions(opt); }},
        {"CZ-2", [] { return iterated_bound(); }},
        {"JN-1", [] { return jn_with_constants(); }},
        {"A2-1", [&] { return a2_chain(opt.seed); }},
        {"FCP-1", [&] { return fcp_oracle(opt.seed); }},
        {"LAYER-1", [&] { return layer_cake(opt.seed); }},
        {"NORM-1", [] { return norm_comparability(); }},
        {"NOTJNP-1", [] { return notjnp_truncations(); }},
        {"AUDIT-1", [] { return audit_concordance(); }},
        {"FUZZ-1", [&] { return invariance_fuzz(opt.seed); }},
    };
    for (const auto& [id, fn] : battery) {
        try {
            rep.criteria.push_back(fn());
        } catch (const Error& e) {
            auto c = detail::make(id, "raised an error");
            c.margin = -1.0;
            c.details["error"] = std::string(to_string(e.code()));
            c.details["message"] = e.what();
            rep.criteria.push_back(std::move(c));
        }
    }
    return rep;
}

inline json to_json(const Report& rep) {
    json out;
    out["seed"] = rep.seed;
    out["passed"] = rep.passed();
    out["failed_count"] = rep.failed();
    json items = json::array();
    for (const auto& c : rep.criteria)
        items.push_back(
            {{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"margin", c.margin}, {"details", c.details}});
    out["criteria"] = std::move(items);
    return out;
}

} // namespace bmolab::suite
