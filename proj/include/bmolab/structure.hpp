#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/measure.hpp"
#include "bmolab/space.hpp"

namespace bmolab::structure {

/// Generators are adjacent iff they share a cell (equivalently, an atom).
/// Adjacency lists are computed on demand from the atom incidence, so the
/// graph is usable on families whose edge count is far larger than the
/// family itself.
class IntersectionGraph {
public:
    explicit IntersectionGraph(const Family& family) : family_(&family) { label_components(); }

    std::size_t node_count() const noexcept { return family_->size(); }

    /// Sorted neighbours of g, excluding g itself.
    std::vector<Index> neighbors(Index g) const {
        std::vector<char> seen(family_->size(), 0);
        std::vector<Index> out;
        seen[g] = 1;
        for (Index atom : family_->atoms(g))
            for (Index h : family_->atom_generators(atom))
                if (!seen[h]) {
                    seen[h] = 1;
                    out.push_back(h);
                }
        std::sort(out.begin(), out.end());
        return out;
    }

    bool adjacent(Index g, Index h) const { return family_->atoms(g).intersects(family_->atoms(h)); }

    std::size_t edge_count() const {
        std::size_t twice = 0;
        for (Index g = 0; g < family_->size(); ++g) twice += neighbors(g).size();
        return twice / 2;
    }

    Index component(Index g) const { return label_[g]; }
    std::size_t component_count() const noexcept { return components_.size(); }
    /// Generator indices of each component, ascending; components ordered by
    /// their lowest member.
    const std::vector<std::vector<Index>>& components() const noexcept { return components_; }

private:
    void label_components() {
        const auto n = family_->size();
        constexpr Index unset = std::numeric_limits<Index>::max();
        label_.assign(n, unset);
        std::vector<char> atom_seen(family_->atom_count(), 0);
        for (Index start = 0; start < n; ++start) {
            if (label_[start] != unset) continue;
            const auto comp = static_cast<Index>(components_.size());
            components_.emplace_back();
            std::deque<Index> queue{start};
            label_[start] = comp;
            while (!queue.empty()) {
                const Index g = queue.front();
                queue.pop_front();
                components_.back().push_back(g);
                for (Index atom : family_->atoms(g)) {
                    if (atom_seen[atom]) continue;
                    atom_seen[atom] = 1;
                    for (Index h : family_->atom_generators(atom))
                        if (label_[h] == unset) {
                            label_[h] = comp;
                            queue.push_back(h);
                        }
                }
            }
            std::sort(components_.back().begin(), components_.back().end());
        }
    }

    const Family* family_;
    std::vector<Index> label_;
    std::vector<std::vector<Index>> components_;
};

inline IntersectionGraph build_graph(const Family& family) { return IntersectionGraph(family); }

struct FcpResult {
    bool fcp = false;
    std::vector<std::vector<Index>> components;
};

/// The finite chain property holds iff the intersection graph is connected.
inline FcpResult has_fcp(const Family& family) {
    IntersectionGraph graph(family);
    return {graph.component_count() <= 1, graph.components()};
}

/// Shortest chain of generators from `from` to `to` with consecutive members
/// sharing a cell. BFS over sorted adjacency, so the result is deterministic.
inline std::optional<std::vector<Index>> finite_chain(const Family& family, Index from, Index to) {
    require(from < family.size() && to < family.size(), ErrorCode::UnknownGenerator, "chain endpoint out of range");
    if (from == to) return std::vector<Index>{from};
    IntersectionGraph graph(family);
    if (graph.component(from) != graph.component(to)) return std::nullopt;
    constexpr Index unset = std::numeric_limits<Index>::max();
    std::vector<Index> parent(family.size(), unset);
    parent[from] = from;
    std::deque<Index> queue{from};
    while (!queue.empty()) {
        const Index g = queue.front();
        queue.pop_front();
        for (Index h : graph.neighbors(g)) {
            if (parent[h] != unset) continue;
            parent[h] = g;
            if (h == to) {
                std::vector<Index> chain{to};
                for (Index v = to; v != from; v = parent[v]) chain.push_back(parent[v]);
                std::reverse(chain.begin(), chain.end());
                return chain;
            }
            queue.push_back(h);
        }
    }
    return std::nullopt;
}

inline std::optional<std::vector<std::string>> finite_chain(const Family& family, const std::string& from,
                                                            const std::string& to) {
    auto chain = finite_chain(family, family.index_of(from), family.index_of(to));
    if (!chain) return std::nullopt;
    std::vector<std::string> ids;
    for (Index g : *chain) ids.push_back(family.id(g));
    return ids;
}

/// Longest shortest chain (in links) over connected pairs. Skipped above
/// `max_generators` since it costs one BFS per generator.
inline std::optional<std::size_t> chain_diameter(const Family& family, std::size_t max_generators = 512) {
    if (family.size() > max_generators) return std::nullopt;
    IntersectionGraph graph(family);
    std::vector<std::vector<Index>> adj(family.size());
    for (Index g = 0; g < family.size(); ++g) adj[g] = graph.neighbors(g);
    std::size_t diameter = 0;
    std::vector<std::size_t> dist(family.size());
    constexpr auto unset = std::numeric_limits<std::size_t>::max();
    for (Index s = 0; s < family.size(); ++s) {
        std::fill(dist.begin(), dist.end(), unset);
        dist[s] = 0;
        std::deque<Index> queue{s};
        while (!queue.empty()) {
            const Index g = queue.front();
            queue.pop_front();
            diameter = std::max(diameter, dist[g]);
            for (Index h : adj[g])
                if (dist[h] == unset) {
                    dist[h] = dist[g] + 1;
                    queue.push_back(h);
                }
        }
    }
    return diameter;
}

struct CoverCheck {
    bool covered = false;
    double uncovered_mass = 0.0;
    CellSet uncovered;
    std::vector<Index> subcover;  ///< generators meeting the target
};

/// Whether the generators meeting `target` cover it up to a null set. When
/// `allowed` is given only generators with allowed[g] != 0 take part.
inline CoverCheck essential_subcover_check(const Space& space, const Family& family, const CellSet& target,
                                           const std::vector<char>* allowed = nullptr) {
    require(!target.empty(), ErrorCode::EmptyTarget, "empty target set");
    space.check_cells(target);
    CoverCheck out;
    std::vector<char> in_sub(family.size(), 0);
    std::vector<Index> missing;
    for (Index c : target) {
        bool hit = false;
        for (Index g : family.containing(c)) {
            if (allowed && !(*allowed)[g]) continue;
            hit = true;
            if (!in_sub[g]) {
                in_sub[g] = 1;
                out.subcover.push_back(g);
            }
        }
        if (!hit) missing.push_back(c);
    }
    std::sort(out.subcover.begin(), out.subcover.end());
    out.uncovered = IndexSet::from_sorted(std::move(missing));
    out.uncovered_mass = measure(space, out.uncovered);
    out.covered = out.uncovered.empty();
    return out;
}

struct SigmaReport {
    bool sigma_decomposable = false;
    std::vector<CoverCheck> parts;
    std::vector<std::size_t> failing_parts;
};

inline SigmaReport sigma_decomposability(const Space& space, const Family& family, const Partition& partition) {
    SigmaReport r;
    for (std::size_t i = 0; i < partition.size(); ++i) {
        r.parts.push_back(essential_subcover_check(space, family, partition[i]));
        if (!r.parts.back().covered) r.failing_parts.push_back(i);
    }
    r.sigma_decomposable = r.failing_parts.empty();
    return r;
}

/// A nonconstant indicator with zero seminorm, or nothing when none of the
/// two obstructions is present: the indicator of the uncovered cells, else
/// the indicator of all cells touched by the first component of the
/// intersection graph.
inline std::optional<CellFn> kernel_witness(const Space& space, const Family& family) {
    const auto uncovered = family.uncovered_cells();
    if (!uncovered.empty()) return indicator(space.size(), uncovered);
    IntersectionGraph graph(family);
    if (graph.component_count() <= 1) return std::nullopt;
    CellSet touched;
    for (Index g : graph.components().front()) touched = touched.united(family.cells(g));
    return indicator(space.size(), touched);
}

enum class Verdict { Banach, NotNorm };

inline std::string_view to_string(Verdict v) { return v == Verdict::Banach ? "Banach" : "NotNorm"; }

struct BanachVerdict {
    bool fcp = false;
    bool sigma_decomposable = false;
    Verdict verdict = Verdict::NotNorm;
    std::size_t components = 0;
    double uncovered_mass = 0.0;
    std::optional<CellFn> witness;
    double witness_seminorm = 0.0;
    std::optional<std::size_t> chain_diameter;
};

inline BanachVerdict banach_verdict(const Space& space, const Family& family, const Partition& partition) {
    BanachVerdict v;
    const auto fcp = has_fcp(family);
    v.fcp = fcp.fcp;
    v.components = fcp.components.size();
    const auto sigma = sigma_decomposability(space, family, partition);
    v.sigma_decomposable = sigma.sigma_decomposable;
    for (const auto& part : sigma.parts) v.uncovered_mass += part.uncovered_mass;
    v.verdict = (v.fcp && v.sigma_decomposable) ? Verdict::Banach : Verdict::NotNorm;
    if (v.verdict == Verdict::NotNorm) {
        v.witness = kernel_witness(space, family);
        if (v.witness) v.witness_seminorm = bmo_seminorm(space, *v.witness, family).value;
    }
    v.chain_diameter = chain_diameter(family);
    return v;
}

inline BanachVerdict banach_verdict(const Space& space, const Family& family) {
    return banach_verdict(space, family, Partition::whole(space));
}

} // namespace bmolab::structure
