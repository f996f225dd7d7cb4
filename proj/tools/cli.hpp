#pragma once

#include <algorithm>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmolab/bmolab.hpp"

namespace bmolab::cli {

using nlohmann::json;

enum Exit : int { Ok = 0, Usage = 1, Violation = 2 };

namespace detail {

/// Input problems exit 1; a model or function that fails a property exits 2.
inline int exit_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingDouble:
    case ErrorCode::NoMaximalPick:
    case ErrorCode::JnNotVerified:
        return Violation;
    default:
        return Usage;
    }
}

inline void emit(std::ostream& out, const json& doc) { out << doc.dump(2) << "\n"; }

inline json ids(const Family& family, const std::vector<Index>& gens) {
    json out = json::array();
    for (Index g : gens) out.push_back(family.id(g));
    return out;
}

inline json cell_ids(const Space& space, const CellSet& cells, std::size_t limit = 64) {
    json out = json::array();
    for (Index c : cells) {
        if (out.size() == limit) break;
        out.push_back(space.id(c));
    }
    return out;
}

inline const CellFn& function_arg(const Model& m, const std::string& name) {
    if (name.empty()) {
        require(m.functions.size() == 1, ErrorCode::LoadError, "model has several functions; pick one with --fn");
        return m.functions.front().second;
    }
    return m.function(name);
}

struct Csv {
    std::ostringstream text;
    explicit Csv(const std::string& header) { text << header << "\n"; }
    void row(std::initializer_list<std::string> fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) text << ",";
            text << f;
            first = false;
        }
        text << "\n";
    }
};

} // namespace detail

struct Config {
    // shared
    std::string model_path;
    std::string fn;
    std::string output;
    std::string csv;
    double a = 2.0;
    double b = 6.0;

    // gen
    std::string kind;
    int n = 1, depth = 4, grid = 16, max_level = -1, rays = 4, cells_per_ray = 8, truncation = 3, background = 16;
    std::optional<int> columns, aspect;
    std::string variant = "ex62";
    bool no_pair_unions = false;

    // analysis
    std::string witness_out;
    double p = 2.0;
    int alpha_grid = 8;
    std::optional<double> eps, alpha;
    std::string probe, g0, local;
    std::string target_gen;
    std::uint64_t seed = 20240601;
    std::optional<double> tamper_k;
};

inline int cmd_gen(const Config& c, std::ostream& out) {
    Model m;
    if (c.kind == "dyadic_cubes") {
        m = models::dyadic_cubes(c.n, c.depth);
    } else if (c.kind == "log_singularity") {
        m = models::log_singularity(c.depth);
    } else if (c.kind == "axis_rectangles") {
        int top = 0;
        while ((1 << top) < c.grid) ++top;
        m = models::axis_rectangles(2, c.grid, c.max_level < 0 ? top : c.max_level, c.aspect);
    } else if (c.kind == "vertical_strips") {
        m = models::vertical_strips(c.grid, c.columns);
    } else if (c.kind == "hedgehog") {
        require(c.variant == "ex62" || c.variant == "ex63", ErrorCode::InvalidParams, "variant must be ex62 or ex63");
        m = models::hedgehog(c.rays, c.cells_per_ray,
                             c.variant == "ex62" ? models::HedgehogVariant::Ex62 : models::HedgehogVariant::Ex63,
                             !c.no_pair_unions);
    } else if (c.kind == "notjnp_instance") {
        m = models::notjnp_instance(c.truncation, c.background);
    } else {
        fail(ErrorCode::InvalidParams, "unknown model kind '" + c.kind + "'");
    }
    if (c.output.empty() || c.output == "-")
        out << io::dump_model(m);
    else
        io::save_model(m, c.output);
    return Ok;
}

inline int cmd_banach(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    const auto v = structure::banach_verdict(m.space, m.family, m.partition());
    json doc{{"verdict", std::string(structure::to_string(v.verdict))},
             {"fcp", v.fcp},
             {"sigma_decomposable", v.sigma_decomposable},
             {"components", v.components},
             {"uncovered_mass", v.uncovered_mass}};
    doc["chain_diameter"] = v.chain_diameter ? json(*v.chain_diameter) : json(nullptr);
    if (v.witness) {
        doc["witness_seminorm"] = v.witness_seminorm;
        std::vector<Index> support;
        for (Index cell = 0; cell < m.space.size(); ++cell)
            if ((*v.witness)[cell] != 0.0) support.push_back(cell);
        doc["witness_support"] = detail::cell_ids(m.space, IndexSet::from_sorted(std::move(support)));
        if (!c.witness_out.empty())
            io::write_text(c.witness_out,
                           json{{"function", v.witness->values()}, {"seminorm", v.witness_seminorm}}.dump() + "\n");
    }
    if (v.verdict == structure::Verdict::NotNorm) {
        json why = json::array();
        if (!v.fcp) why.push_back("finite chain property fails: " + std::to_string(v.components) + " components");
        if (!v.sigma_decomposable) why.push_back("not sigma-decomposable: uncovered mass " + format_double(v.uncovered_mass));
        doc["violations"] = why;
    }
    detail::emit(out, doc);
    return v.verdict == structure::Verdict::Banach ? Ok : Violation;
}

inline int cmd_weights(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    const CellFn& f = detail::function_arg(m, c.fn);
    require(c.alpha_grid >= 1, ErrorCode::InvalidParams, "--alpha-grid must be positive");
    const double c1 = std::sqrt(std::numbers::e);
    json doc;
    json violations = json::array();

    const auto chain = weights::a2_bracket_check(m.space, f, m.family);
    doc["a2_of_exp_f"] = chain.a2;
    doc["bracket_star"] = chain.star;
    doc["a2_chain"] = {{"ok", chain.ok}, {"lower_margin", chain.lower_margin}, {"upper_margin", chain.upper_margin}};
    if (!chain.ok) violations.push_back("A2 bracket chain fails");
    if (c.p > 1.0) doc["ap_of_exp_f"] = std::exp(weights::log_ap_constant(m.space, f.values(), m.family, c.p));

    const auto fit = weights::jn_empirical_fit(m.space, f, m.family, c1);
    doc["seminorm"] = fit.norm;
    doc["c1"] = c1;
    doc["c2_emp"] = std::isfinite(fit.c2) ? json(fit.c2) : json(nullptr);
    if (std::isfinite(fit.c2) && fit.c2 > 0.0) {
        doc["c2_emp_at"] = {{"gen", m.family.id(fit.gen)}, {"t", fit.t}};
        json grid = json::array();
        for (double alpha : weights::alpha_grid(fit.c2, static_cast<std::size_t>(c.alpha_grid))) {
            weights::JnParams jp;
            jp.c1 = c1;
            jp.c2 = fit.c2;
            jp.alpha = alpha;
            const auto hs = weights::hs_from_jn(m.space, f, m.family, jp);
            if (!hs.holds) violations.push_back("bracket bound fails at alpha " + format_double(alpha));
            grid.push_back({{"alpha", alpha}, {"bracket_alpha", hs.bracket}, {"bound", hs.bound}, {"ok", hs.holds}});
        }
        doc["alpha_grid"] = grid;
    }
    if (!c.csv.empty()) {
        const double rate = std::isfinite(fit.c2) ? fit.c2 / fit.norm : 0.0;
        const auto env = weights::check_envelope(weights::all_distributions(m.space, f, m.family), c1, rate, true);
        detail::Csv csv("gen_id,t,mu_f,envelope");
        for (const auto& r : env.rows)
            csv.row({m.family.id(r.gen), format_csv(r.t), format_csv(r.mu), format_csv(r.envelope)});
        io::write_text(c.csv, csv.text.str());
    }
    if (!violations.empty()) doc["violations"] = violations;
    detail::emit(out, doc);
    return violations.empty() ? Ok : Violation;
}

inline json audit_json(const Model& m, const denjoy::DenjoyAudit& a, bool local) {
    json doc{{"eps_shrink", a.eps_used},
             {"shrinking", {{"ok", a.shrinking_ok}, {"failing_cells", a.shrinking_failures.size()},
                            {"examples", detail::cell_ids(m.space, a.shrinking_failures, 16)}}},
             {"doubling", {{"ok", a.doubling_ok}, {"failures", a.doubling_failures.size()},
                           {"examples", detail::ids(m.family, std::vector<Index>(a.doubling_failures.begin(),
                                                                                  a.doubling_failures.begin() +
                                                                                      std::min<std::size_t>(16, a.doubling_failures.size())))},
                           {"effective_b", std::isfinite(a.effective_b) ? json(a.effective_b) : json(nullptr)}}},
             {"growth", {{"ok", a.growth_ok}, {"failures", a.growth_failures.size()}, {"max_iterations", a.max_iterations}}},
             {"weak_differentiation", {{"checked", a.weak_diff_checked}, {"ok", a.weak_diff_ok},
                                       {"failing_cells", a.weak_diff_failures.size()},
                                       {"examples", detail::cell_ids(m.space, a.weak_diff_failures, 16)}}},
             {"overall", a.overall}};
    if (local) {
        doc["engulfing"] = {{"ok", a.engulfing_ok}, {"samples", a.engulfing_samples}};
        doc["subfamily_size"] = a.subfamily_size;
        doc["degenerate"] = a.degenerate;
    }
    return doc;
}

inline int cmd_denjoy_audit(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    denjoy::DenjoyParams params(c.a, c.b);
    params.eps_shrink = c.eps;
    const CellFn* probe = c.probe.empty() ? nullptr : &m.function(c.probe);
    denjoy::DenjoyAudit a;
    if (c.local.empty())
        a = denjoy::denjoy_audit(m.space, m.family, params, probe);
    else
        a = denjoy::local_denjoy_audit(m.space, m.family, m.family.index_of(c.local), params, probe, c.seed);
    json doc = audit_json(m, a, !c.local.empty());
    doc["a"] = c.a;
    doc["b"] = c.b;
    if (!a.overall) {
        json why = json::array();
        if (!a.shrinking_ok) why.push_back("shrinking");
        if (!a.doubling_ok) why.push_back("doubling");
        if (!a.growth_ok) why.push_back("growth");
        if (!a.weak_diff_ok) why.push_back("weak differentiation");
        if (!a.engulfing_ok) why.push_back("engulfing");
        doc["violations"] = why;
    }
    detail::emit(out, doc);
    return a.overall ? Ok : Violation;
}

inline int cmd_cz(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    const CellFn& raw = detail::function_arg(m, c.fn);
    require(!c.g0.empty(), ErrorCode::InvalidParams, "--g0 is required");
    const denjoy::DenjoyParams params(c.a, c.b);
    const auto consts = denjoy::jn_constants(params);
    const double norm = bmo_seminorm(m.space, raw, m.family).value;
    require(norm > 0.0, ErrorCode::ZeroSeminorm, "function has zero BMO seminorm");
    const CellFn f = raw.scaled(1.0 / norm);
    const double alpha = c.alpha.value_or(consts.K * std::numbers::e);
    const auto r = denjoy::cz_decompose(m.space, f, m.family.index_of(c.g0), m.family, params, alpha);
    json selected = json::array();
    for (const auto& s : r.selected) selected.push_back({{"gen", m.family.id(s.gen)}, {"double", m.family.id(s.dbl)}});
    json doc{{"g0", c.g0},
             {"alpha", alpha},
             {"k", r.k},
             {"K", r.K},
             {"normalized_by", norm},
             {"a0_size", r.a0_size},
             {"a1_size", r.a1_size},
             {"picked", r.picked.size()},
             {"selected", selected},
             {"disjoint", r.disjoint_ok},
             {"bound_i", {{"ok", r.bound_i_ok}, {"margin", r.margin_i}}},
             {"bound_ii", {{"ok", r.bound_ii_ok}, {"margin", r.margin_ii}}},
             {"bound_iii", {{"ok", r.bound_iii_ok}, {"margin", r.margin_iii}}},
             {"uncovered_good_set_measure", measure(m.space, r.uncovered_good_set)}};
    if (!r.ok()) doc["violations"] = json::array({"decomposition bounds fail"});
    detail::emit(out, doc);
    return r.ok() ? Ok : Violation;
}

inline int cmd_jn(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    const CellFn& f = detail::function_arg(m, c.fn);
    const denjoy::DenjoyParams params(c.a, c.b);
    const auto r = denjoy::jn_verify(m.space, f, m.family, params, !c.csv.empty());
    const auto fit = weights::jn_empirical_fit(m.space, f, m.family, r.constants.c1);
    json doc{{"k", r.constants.k},        {"K", r.constants.K},   {"c1", r.constants.c1},
             {"c2", r.constants.c2},      {"seminorm", r.norm},   {"ok", r.ok},
             {"points", r.check.points},  {"worst_margin", r.check.worst_margin}};
    doc["c2_emp"] = std::isfinite(fit.c2) ? json(fit.c2) : json(nullptr);
    if (r.check.points > 0) doc["worst_at"] = {{"gen", m.family.id(r.check.worst_gen)}, {"t", r.check.worst_t}};
    if (!c.csv.empty()) {
        detail::Csv csv("gen_id,t,mu_f,envelope,margin");
        for (const auto& row : r.check.rows)
            csv.row({m.family.id(row.gen), format_csv(row.t), format_csv(row.mu), format_csv(row.envelope),
                     format_csv(row.margin())});
        io::write_text(c.csv, csv.text.str());
    }
    if (!r.ok) doc["violations"] = json::array({"distribution exceeds c1 exp(-c2 t / ||f||)"});
    detail::emit(out, doc);
    return r.ok ? Ok : Violation;
}

inline int cmd_fine_cover(const Config& c, std::ostream& out) {
    const Model m = io::load_model(c.model_path);
    require(c.eps && *c.eps > 0.0, ErrorCode::InvalidParams, "--eps must be positive");
    const CellSet target = c.target_gen.empty() ? m.space.all_cells() : m.family.cells(m.family.index_of(c.target_gen));
    const auto r = denjoy::fine_cover_check(m.space, m.family, *c.eps, target);
    json doc{{"eps", *c.eps},
             {"covered", r.covered},
             {"uncovered_mass", r.uncovered_mass},
             {"uncovered", detail::cell_ids(m.space, r.uncovered)},
             {"subcover_size", r.subcover.size()}};
    if (!r.covered) doc["violations"] = json::array({"generators of measure < eps do not cover the target"});
    detail::emit(out, doc);
    return r.covered ? Ok : Violation;
}

inline int cmd_suite(const Config& c, std::ostream& out) {
    suite::Options opt;
    opt.seed = c.seed;
    opt.tamper_k = c.tamper_k;
    const auto rep = suite::run(opt);
    const json doc = suite::to_json(rep);
    if (c.output.empty() || c.output == "-")
        detail::emit(out, doc);
    else
        io::write_text(c.output, doc.dump(2) + "\n");
    for (const auto& cr : rep.criteria)
        if (!c.output.empty() && c.output != "-")
            out << (cr.passed ? "PASS " : "FAIL ") << cr.id << "  margin=" << format_double(cr.margin) << "\n";
    return rep.passed() ? Ok : Violation;
}

/// Runs the command line `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bounded mean oscillation on finite weighted measure spaces", "bmolab"};
    app.require_subcommand(1);
    Config c;

    auto* gen = app.add_subcommand("gen", "build a model and write it as JSON");
    gen->add_option("kind", c.kind, "dyadic_cubes | axis_rectangles | vertical_strips | hedgehog | notjnp_instance | log_singularity")
        ->required();
    gen->add_option("--n", c.n, "dimension (dyadic_cubes)");
    gen->add_option("--depth", c.depth, "depth (dyadic_cubes, log_singularity)");
    gen->add_option("--N", c.grid, "grid size / row count (axis_rectangles, vertical_strips)");
    gen->add_option("--columns", c.columns, "column count (vertical_strips)");
    gen->add_option("--max-level", c.max_level, "largest side exponent (axis_rectangles)");
    gen->add_option("--aspect", c.aspect, "keep width = 2^aspect * height only (axis_rectangles)");
    gen->add_option("--rays", c.rays, "ray count (hedgehog)");
    gen->add_option("--cells-per-ray", c.cells_per_ray, "cells per ray (hedgehog)");
    gen->add_option("--variant", c.variant, "ex62 | ex63 (hedgehog)");
    gen->add_flag("--no-pair-unions", c.no_pair_unions, "drop the cross-ray generators (hedgehog ex63)");
    gen->add_option("--trunc", c.truncation, "number of spikes (notjnp_instance)");
    gen->add_option("--background", c.background, "filler cells (notjnp_instance)");
    gen->add_option("-o,--output", c.output, "output file (default stdout)");

    auto* banach = app.add_subcommand("banach", "decide whether the seminorm is a Banach norm modulo constants");
    banach->add_option("model", c.model_path)->required();
    banach->add_option("--witness-out", c.witness_out, "write the zero-seminorm witness here");

    auto* wts = app.add_subcommand("weights", "A_p constants, brackets and the JN/HS round trip");
    wts->add_option("model", c.model_path)->required();
    wts->add_option("--fn", c.fn, "function name");
    wts->add_option("--p", c.p, "exponent for the A_p constant of e^f");
    wts->add_option("--alpha-grid", c.alpha_grid, "number of alpha values in (0, c2_emp)");
    wts->add_option("--csv", c.csv, "distribution rows: gen_id,t,mu_f,envelope");

    auto* audit = app.add_subcommand("denjoy-audit", "check the Denjoy family properties");
    audit->add_option("model", c.model_path)->required();
    audit->add_option("--a", c.a);
    audit->add_option("--b", c.b);
    audit->add_option("--eps", c.eps, "shrinking resolution (default: smallest generator)");
    audit->add_option("--probe", c.probe, "function for the weak differentiation check");
    audit->add_option("--local", c.local, "audit the local family of this generator instead");
    audit->add_option("--seed", c.seed, "seed for sampled engulfing triples");

    auto* cz = app.add_subcommand("cz", "Calderon-Zygmund-type decomposition of a generator");
    cz->add_option("model", c.model_path)->required();
    cz->add_option("--fn", c.fn, "function name (divided by its seminorm)");
    cz->add_option("--g0", c.g0, "generator to decompose")->required();
    cz->add_option("--alpha", c.alpha, "height (default K e)");
    cz->add_option("--a", c.a);
    cz->add_option("--b", c.b);

    auto* jn = app.add_subcommand("jn", "John-Nirenberg check with the Denjoy constants");
    jn->add_option("model", c.model_path)->required();
    jn->add_option("--fn", c.fn, "function name");
    jn->add_option("--a", c.a);
    jn->add_option("--b", c.b);
    jn->add_option("--csv", c.csv, "rows: gen_id,t,mu_f,envelope,margin");

    auto* fine = app.add_subcommand("fine-cover", "essential cover by generators of measure < eps");
    fine->add_option("model", c.model_path)->required();
    fine->add_option("--eps", c.eps)->required();
    fine->add_option("--target-gen", c.target_gen, "cover the cells of this generator (default: all cells)");

    auto* st = app.add_subcommand("suite", "run the acceptance battery");
    st->add_option("--seed", c.seed);
    st->add_option("-o,--output", c.output, "report file (default stdout)");
    st->add_option("--tamper-k", c.tamper_k, "replace k in the decomposition checks");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*gen) return cmd_gen(c, out);
        if (*banach) return cmd_banach(c, out);
        if (*wts) return cmd_weights(c, out);
        if (*audit) return cmd_denjoy_audit(c, out);
        if (*cz) return cmd_cz(c, out);
        if (*jn) return cmd_jn(c, out);
        if (*fine) return cmd_fine_cover(c, out);
        if (*st) return cmd_suite(c, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        const int code = detail::exit_for(e.code());
        if (code == Violation) detail::emit(out, json{{"violations", json::array({e.what()})}, {"error", to_string(e.code())}});
        return code;
    }
    return Usage;
}

} // namespace bmolab::cli
