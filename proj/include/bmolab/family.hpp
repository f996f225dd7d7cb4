#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/index_set.hpp"
#include "bmolab/numeric.hpp"
#include "bmolab/space.hpp"

namespace bmolab {

struct Generator {
    std::string id;
    CellSet cells;
};

/// An indexed collection of generators over a Space.
///
/// Besides the generators themselves the family keeps the cell incidence
/// (which generators contain each cell) and an atom decomposition: cells with
/// identical incidence are merged into one atom. Every generator is a union
/// of atoms, so all purely set-theoretic questions (intersections, unions,
/// containment, fattening) can be answered on atoms. Cells contained in no
/// generator form the uncovered atom, if any.
class Family {
public:
    Family() = default;

    Family(const Space& space, std::vector<Generator> generators) : gens_(std::move(generators)) {
        n_cells_ = space.size();
        measures_.reserve(gens_.size());
        for (std::size_t g = 0; g < gens_.size(); ++g) {
            const auto& gen = gens_[g];
            require(!gen.cells.empty(), ErrorCode::EmptyGenerator, "generator '" + gen.id + "' is empty");
            require(gen.cells.back() < n_cells_, ErrorCode::LoadError,
                    "generator '" + gen.id + "' references unknown cell " + std::to_string(gen.cells.back()));
            require(by_id_.emplace(gen.id, static_cast<Index>(g)).second, ErrorCode::LoadError,
                    "duplicate generator id '" + gen.id + "'");
            CompensatedSum m;
            for (Index c : gen.cells) m += space.weight(c);
            measures_.push_back(m.value());
        }
        build_incidence();
        build_atoms(space);
    }

    std::size_t size() const noexcept { return gens_.size(); }
    bool empty() const noexcept { return gens_.empty(); }
    std::size_t cell_count() const noexcept { return n_cells_; }
    const Generator& operator[](Index g) const { return gens_[g]; }
    const CellSet& cells(Index g) const { return gens_[g].cells; }
    const std::string& id(Index g) const { return gens_[g].id; }
    double measure(Index g) const { return measures_[g]; }
    const std::vector<Generator>& generators() const noexcept { return gens_; }

    std::optional<Index> find(const std::string& id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) return std::nullopt;
        return it->second;
    }
    Index index_of(const std::string& id) const {
        auto g = find(id);
        require(g.has_value(), ErrorCode::UnknownGenerator, "no generator named '" + id + "'");
        return *g;
    }

    /// Generators containing a cell, ascending.
    std::span<const Index> containing(Index cell) const {
        return {inc_gens_.data() + inc_offset_[cell], inc_offset_[cell + 1] - inc_offset_[cell]};
    }

    // Atom view.
    std::size_t atom_count() const noexcept { return atom_cells_.size(); }
    Index atom_of(Index cell) const { return atom_of_cell_[cell]; }
    const CellSet& atom_cells(Index atom) const { return atom_cells_[atom]; }
    double atom_weight(Index atom) const { return atom_weight_[atom]; }
    const IndexSet& atoms(Index g) const { return gen_atoms_[g]; }
    /// Generators containing an atom, ascending (empty for the uncovered atom).
    std::span<const Index> atom_generators(Index atom) const { return containing(atom_cells_[atom].front()); }

    double atom_measure(const IndexSet& atoms) const {
        CompensatedSum m;
        for (Index a : atoms) m += atom_weight_[a];
        return m.value();
    }
    CellSet cells_of_atoms(const IndexSet& atoms) const {
        std::vector<Index> out;
        for (Index a : atoms) out.insert(out.end(), atom_cells_[a].begin(), atom_cells_[a].end());
        return CellSet(std::move(out));
    }
    IndexSet atoms_of_cells(const CellSet& cells) const {
        std::vector<Index> out;
        out.reserve(cells.size());
        for (Index c : cells) out.push_back(atom_of_cell_[c]);
        return IndexSet(std::move(out));
    }

    /// Cells lying in no generator, ascending.
    CellSet uncovered_cells() const {
        std::vector<Index> out;
        for (Index c = 0; c < n_cells_; ++c)
            if (inc_offset_[c] == inc_offset_[c + 1]) out.push_back(c);
        return IndexSet::from_sorted(std::move(out));
    }
    bool covers_all() const { return uncovered_cells().empty(); }

    double min_measure() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : measures_) m = std::min(m, v);
        return m;
    }
    double max_measure() const {
        double m = 0.0;
        for (double v : measures_) m = std::max(m, v);
        return m;
    }

private:
    void build_incidence() {
        inc_offset_.assign(n_cells_ + 1, 0);
        for (const auto& gen : gens_)
            for (Index c : gen.cells) ++inc_offset_[c + 1];
        for (std::size_t c = 0; c < n_cells_; ++c) inc_offset_[c + 1] += inc_offset_[c];
        inc_gens_.resize(inc_offset_[n_cells_]);
        std::vector<std::size_t> cursor(inc_offset_.begin(), inc_offset_.end() - 1);
        for (std::size_t g = 0; g < gens_.size(); ++g)
            for (Index c : gens_[g].cells) inc_gens_[cursor[c]++] = static_cast<Index>(g);
    }

    void build_atoms(const Space& space) {
        // Bucket cells by a hash of their incidence list, then split buckets
        // by exact comparison.
        std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
        atom_of_cell_.assign(n_cells_, 0);
        std::vector<std::vector<Index>> members;
        for (Index c = 0; c < n_cells_; ++c) {
            auto sig = containing(c);
            std::uint64_t h = 1469598103934665603ULL ^ sig.size();
            for (Index g : sig) h = (h ^ g) * 1099511628211ULL;
            auto& candidates = buckets[h];
            bool placed = false;
            for (Index atom : candidates) {
                auto other = containing(members[atom].front());
                if (std::equal(sig.begin(), sig.end(), other.begin(), other.end())) {
                    members[atom].push_back(c);
                    atom_of_cell_[c] = atom;
                    placed = true;
                    break;
                }
            }
            if (!placed) {
                const auto atom = static_cast<Index>(members.size());
                members.push_back({c});
                candidates.push_back(atom);
                atom_of_cell_[c] = atom;
            }
        }
        atom_cells_.reserve(members.size());
        atom_weight_.reserve(members.size());
        for (auto& m : members) {
            CompensatedSum w;
            for (Index c : m) w += space.weight(c);
            atom_weight_.push_back(w.value());
            atom_cells_.push_back(IndexSet::from_sorted(std::move(m)));
        }
        gen_atoms_.reserve(gens_.size());
        for (const auto& gen : gens_) gen_atoms_.push_back(atoms_of_cells(gen.cells));
    }

    std::vector<Generator> gens_;
    std::vector<double> measures_;
    std::unordered_map<std::string, Index> by_id_;
    std::size_t n_cells_ = 0;

    std::vector<std::size_t> inc_offset_;
    std::vector<Index> inc_gens_;

    std::vector<Index> atom_of_cell_;
    std::vector<CellSet> atom_cells_;
    std::vector<double> atom_weight_;
    std::vector<IndexSet> gen_atoms_;
};

} // namespace bmolab
