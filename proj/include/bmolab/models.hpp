#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/model.hpp"
#include "bmolab/space.hpp"

namespace bmolab::models {

namespace detail {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline std::size_t log2_exact(std::size_t n) {
    std::size_t k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

inline Model assemble(std::vector<std::string> cell_ids, std::vector<double> weights, std::vector<Generator> gens,
                      std::string kind, std::vector<std::pair<std::string, double>> params) {
    Model m;
    m.space = Space(std::move(cell_ids), std::move(weights));
    m.family = Family(m.space, std::move(gens));
    m.kind = std::move(kind);
    m.params = std::move(params);
    m.validate();
    return m;
}

} // namespace detail

/// All dyadic cubes of levels 0..depth in [0,1]^n; the cells are the cubes of
/// the finest level.
inline Model dyadic_cubes(int n, int depth) {
    require(n == 1 || n == 2, ErrorCode::InvalidParams, "dyadic_cubes supports n = 1 or 2");
    require(depth >= 0, ErrorCode::InvalidParams, "depth must be nonnegative");
    require(depth <= (n == 1 ? 12 : 6), ErrorCode::SizeLimit, "depth too large for dyadic_cubes");
    const std::size_t side = std::size_t{1} << depth;
    std::vector<std::string> ids;
    std::vector<Generator> gens;
    if (n == 1) {
        for (std::size_t i = 0; i < side; ++i) ids.push_back("x" + std::to_string(i));
        for (int level = 0; level <= depth; ++level) {
            const std::size_t count = std::size_t{1} << level, len = side / count;
            for (std::size_t i = 0; i < count; ++i)
                gens.push_back({"I" + std::to_string(level) + "." + std::to_string(i),
                                IndexSet::range(static_cast<Index>(i * len), static_cast<Index>((i + 1) * len))});
        }
    } else {
        for (std::size_t y = 0; y < side; ++y)
            for (std::size_t x = 0; x < side; ++x) ids.push_back("x" + std::to_string(x) + "." + std::to_string(y));
        for (int level = 0; level <= depth; ++level) {
            const std::size_t count = std::size_t{1} << level, len = side / count;
            for (std::size_t j = 0; j < count; ++j)
                for (std::size_t i = 0; i < count; ++i) {
                    std::vector<Index> cells;
                    for (std::size_t y = j * len; y < (j + 1) * len; ++y)
                        for (std::size_t x = i * len; x < (i + 1) * len; ++x)
                            cells.push_back(static_cast<Index>(y * side + x));
                    gens.push_back({"Q" + std::to_string(level) + "." + std::to_string(i) + "." + std::to_string(j),
                                    IndexSet::from_sorted(std::move(cells))});
                }
        }
    }
    const std::size_t cells = ids.size();
    return detail::assemble(std::move(ids), std::vector<double>(cells, 1.0 / static_cast<double>(cells)),
                            std::move(gens), "dyadic_cubes",
                            {{"n", static_cast<double>(n)}, {"depth", static_cast<double>(depth)}});
}

/// Average of ln(1/x) over [x0, x0 + h].
inline double log_average(double x0, double h) {
    const double x1 = x0 + h;
    if (x0 == 0.0) return 1.0 - std::log(h);
    // (F(x1) - F(x0)) / h with F(x) = x - x ln x, rearranged to avoid
    // cancellation.
    return 1.0 - std::log(x1) - (x0 / h) * std::log1p(h / x0);
}

/// dyadic_cubes(1, depth) with "log_sing", the cell averages of ln(1/x).
inline Model log_singularity(int depth) {
    require(depth >= 0, ErrorCode::InvalidParams, "depth must be nonnegative");
    require(depth <= 12, ErrorCode::SizeLimit, "depth too large for log_singularity");
    Model m = dyadic_cubes(1, depth);
    const std::size_t side = m.space.size();
    const double h = 1.0 / static_cast<double>(side);
    std::vector<double> v(side);
    for (std::size_t i = 0; i < side; ++i) v[i] = log_average(static_cast<double>(i) * h, h);
    m.add_function("log_sing", CellFn(std::move(v)));
    m.kind = "log_singularity";
    return m;
}

/// Grid rectangles on an N x N grid with power-of-two side lengths up to
/// 2^max_level, at every integer position. With `aspect` = r only the shape
/// class width = 2^r * height is kept.
inline Model axis_rectangles(int n, int grid, int max_level, std::optional<int> aspect = std::nullopt) {
    require(n == 2, ErrorCode::InvalidParams, "axis_rectangles supports n = 2 only");
    require(grid >= 1 && detail::is_pow2(static_cast<std::size_t>(grid)), ErrorCode::InvalidParams,
            "grid size must be a power of two");
    require(grid <= 32, ErrorCode::SizeLimit, "grid too large for axis_rectangles");
    const auto top = static_cast<int>(detail::log2_exact(static_cast<std::size_t>(grid)));
    require(max_level >= 0 && max_level <= top, ErrorCode::InvalidParams, "max_level out of range");
    const auto side = static_cast<std::size_t>(grid);
    std::vector<std::string> ids;
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) ids.push_back("x" + std::to_string(x) + "." + std::to_string(y));
    std::vector<Generator> gens;
    for (int li = 0; li <= max_level; ++li)
        for (int lj = 0; lj <= max_level; ++lj) {
            if (aspect && li - lj != *aspect) continue;
            const std::size_t w = std::size_t{1} << li, h = std::size_t{1} << lj;
            for (std::size_t y0 = 0; y0 + h <= side; ++y0)
                for (std::size_t x0 = 0; x0 + w <= side; ++x0) {
                    std::vector<Index> cells;
                    cells.reserve(w * h);
                    for (std::size_t y = y0; y < y0 + h; ++y)
                        for (std::size_t x = x0; x < x0 + w; ++x) cells.push_back(static_cast<Index>(y * side + x));
                    gens.push_back({"R" + std::to_string(x0) + "." + std::to_string(y0) + "." + std::to_string(w) +
                                        "x" + std::to_string(h),
                                    IndexSet::from_sorted(std::move(cells))});
                }
        }
    require(!gens.empty(), ErrorCode::InvalidParams, "no rectangle of the requested shape fits the grid");
    const std::size_t cells = ids.size();
    std::vector<std::pair<std::string, double>> params{
        {"n", 2.0}, {"N", static_cast<double>(grid)}, {"max_level", static_cast<double>(max_level)}};
    if (aspect) params.emplace_back("aspect", static_cast<double>(*aspect));
    return detail::assemble(std::move(ids), std::vector<double>(cells, 1.0 / static_cast<double>(cells)),
                            std::move(gens), "axis_rectangles", std::move(params));
}

/// Average of y^(-1/2) over [y0, y0 + h]: 2 / (sqrt(y0 + h) + sqrt(y0)).
inline double sqrt_sing_average(double y0, double h) { return 2.0 / (std::sqrt(y0 + h) + std::sqrt(y0)); }

/// Unions of whole grid columns over an N-row grid of the unit square, with
/// "sqrt_sing" holding the cell averages of y^(-1/2). The values depend on
/// the row only, so `columns` sets the horizontal resolution independently
/// (default min(N, 32)).
inline Model vertical_strips(int rows, std::optional<int> columns = std::nullopt) {
    require(rows >= 1 && detail::is_pow2(static_cast<std::size_t>(rows)), ErrorCode::InvalidParams,
            "N must be a power of two");
    require(rows <= 1024, ErrorCode::SizeLimit, "N too large for vertical_strips");
    const int cols = columns.value_or(std::min(rows, 32));
    require(cols >= 1, ErrorCode::InvalidParams, "column count must be positive");
    require(cols <= 64, ErrorCode::SizeLimit, "too many columns for vertical_strips");
    const auto nr = static_cast<std::size_t>(rows), nc = static_cast<std::size_t>(cols);

    // Cells column-major, so every strip is one contiguous index range.
    std::vector<std::string> ids;
    ids.reserve(nr * nc);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t r = 0; r < nr; ++r) ids.push_back("s" + std::to_string(c) + "." + std::to_string(r));
    std::vector<Generator> gens;
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t d = c; d < nc; ++d)
            gens.push_back({"R" + std::to_string(c) + "." + std::to_string(d),
                            IndexSet::range(static_cast<Index>(c * nr), static_cast<Index>((d + 1) * nr))});
    Model m = detail::assemble(std::move(ids), std::vector<double>(nr * nc, 1.0 / static_cast<double>(nr * nc)),
                               std::move(gens), "vertical_strips",
                               {{"N", static_cast<double>(rows)}, {"columns", static_cast<double>(cols)}});
    const double h = 1.0 / static_cast<double>(nr);
    std::vector<double> v(nr * nc);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t r = 0; r < nr; ++r) v[c * nr + r] = sqrt_sing_average(static_cast<double>(r) * h, h);
    m.add_function("sqrt_sing", CellFn(std::move(v)));
    return m;
}

enum class HedgehogVariant { Ex62, Ex63 };

/// Finitely many rays, each discretised into `cells_per_ray` equal cells, with
/// every contiguous run of cells on a ray as a generator. Ex62 adds the hubs
/// (head of ray 0) u (head of ray t); Ex63 adds the unions of the first cells
/// of every pair of rays (omitted when `pair_unions` is false). The origin
/// carries no mass and is not a cell.
inline Model hedgehog(int rays, int cells_per_ray, HedgehogVariant variant, bool pair_unions = true) {
    require(rays >= 1 && cells_per_ray >= 1, ErrorCode::InvalidParams, "rays and cells per ray must be positive");
    require(rays <= 64 && cells_per_ray <= 64, ErrorCode::SizeLimit, "hedgehog is limited to 64 x 64 cells");
    const auto nr = static_cast<std::size_t>(rays), m = static_cast<std::size_t>(cells_per_ray);
    auto cell = [m](std::size_t ray, std::size_t i) { return static_cast<Index>(ray * m + i); };
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t i = 0; i < m; ++i) ids.push_back("r" + std::to_string(r) + "." + std::to_string(i));
    std::vector<Generator> gens;
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j)
                gens.push_back({"G" + std::to_string(r) + "[" + std::to_string(i) + "," + std::to_string(j) + "]",
                                IndexSet::range(cell(r, i), cell(r, j) + 1)});
    const std::size_t head = (m + 1) / 2;
    if (variant == HedgehogVariant::Ex62) {
        for (std::size_t r = 1; r < nr; ++r) {
            std::vector<Index> cells;
            for (std::size_t i = 0; i < head; ++i) cells.push_back(cell(0, i));
            for (std::size_t i = 0; i < head; ++i) cells.push_back(cell(r, i));
            gens.push_back({"H" + std::to_string(r), IndexSet(std::move(cells))});
        }
    } else if (pair_unions) {
        for (std::size_t r1 = 0; r1 < nr; ++r1)
            for (std::size_t r2 = r1 + 1; r2 < nr; ++r2)
                gens.push_back({"P" + std::to_string(r1) + "." + std::to_string(r2), IndexSet{cell(r1, 0), cell(r2, 0)}});
    }
    const std::size_t cells = ids.size();
    return detail::assemble(std::move(ids), std::vector<double>(cells, 1.0 / static_cast<double>(cells)),
                            std::move(gens), variant == HedgehogVariant::Ex62 ? "hedgehog_ex62" : "hedgehog_ex63",
                            {{"rays", static_cast<double>(rays)},
                             {"cells_per_ray", static_cast<double>(cells_per_ray)},
                             {"pair_unions", pair_unions ? 1.0 : 0.0}});
}

/// Spike cells E_1..E_N of weight 2^-(n^2+1) followed by `background` filler
/// cells sharing the remaining mass. Generators: "G0" (everything), "H" (the
/// spikes and the first half of the filler) and every contiguous run of
/// filler cells. Each generator meeting the spikes has measure at least
/// mu(H). "spike_sum" is sum 2^-n / mu(E_n) on E_n, zero elsewhere.
inline Model notjnp_instance(int truncation, int background = 16) {
    require(truncation >= 1 && background >= 2, ErrorCode::InvalidParams,
            "need at least one spike and two filler cells");
    require(truncation <= 5, ErrorCode::SizeLimit, "truncation limited to 5 (weights down to 2^-26)");
    require(background <= 1024, ErrorCode::SizeLimit, "too many filler cells");
    const auto ns = static_cast<std::size_t>(truncation), nb = static_cast<std::size_t>(background);
    std::vector<std::string> ids;
    std::vector<double> w;
    double spikes = 0.0;
    for (std::size_t n = 1; n <= ns; ++n) {
        ids.push_back("E" + std::to_string(n));
        w.push_back(std::ldexp(1.0, -static_cast<int>(n * n + 1)));
        spikes += w.back();
    }
    for (std::size_t i = 0; i < nb; ++i) {
        ids.push_back("b" + std::to_string(i));
        w.push_back((1.0 - spikes) / static_cast<double>(nb));
    }
    std::vector<Generator> gens;
    gens.push_back({"G0", IndexSet::range(0, static_cast<Index>(ns + nb))});
    gens.push_back({"H", IndexSet::range(0, static_cast<Index>(ns + nb / 2))});
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = i; j < nb; ++j)
            gens.push_back({"B[" + std::to_string(i) + "," + std::to_string(j) + "]",
                            IndexSet::range(static_cast<Index>(ns + i), static_cast<Index>(ns + j + 1))});
    Model m = detail::assemble(std::move(ids), std::move(w), std::move(gens), "notjnp_instance",
                               {{"N_trunc", static_cast<double>(truncation)},
                                {"background", static_cast<double>(background)}});
    std::vector<double> v(ns + nb, 0.0);
    for (std::size_t n = 1; n <= ns; ++n)
        v[n - 1] = std::ldexp(1.0, static_cast<int>(n * n + 1 - n));  // 2^-n / 2^-(n^2+1)
    m.add_function("spike_sum", CellFn(std::move(v)));
    return m;
}

/// Cells of the spikes in a notjnp_instance.
inline CellSet notjnp_spikes(const Model& m) {
    std::vector<Index> out;
    for (Index c = 0; c < m.space.size(); ++c)
        if (m.space.id(c).front() == 'E') out.push_back(c);
    return IndexSet::from_sorted(std::move(out));
}

} // namespace bmolab::models
