#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/index_set.hpp"
#include "bmolab/numeric.hpp"

namespace bmolab {

/// A finite measure space: an ordered list of atoms ("cells") of positive mass.
/// Every subset of cells is measurable.
class Space {
public:
    Space() = default;

    Space(std::vector<std::string> ids, std::vector<double> weights)
        : ids_(std::move(ids)), weights_(std::move(weights)) {
        require(ids_.size() == weights_.size(), ErrorCode::LoadError, "cell ids and weights differ in length");
        require(!ids_.empty(), ErrorCode::LoadError, "space has no cells");
        std::unordered_set<std::string> seen;
        CompensatedSum total;
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            const double w = weights_[i];
            require(std::isfinite(w) && w > 0.0, ErrorCode::LoadError,
                    "cell '" + ids_[i] + "' has nonpositive or nonfinite weight");
            require(seen.insert(ids_[i]).second, ErrorCode::LoadError, "duplicate cell id '" + ids_[i] + "'");
            total += w;
        }
        total_ = total.value();
        require(std::isfinite(total_) && total_ > 0.0, ErrorCode::LoadError, "total mass not finite");
    }

    /// Cells named c0, c1, ... with the given weights.
    static Space with_weights(std::vector<double> weights) {
        std::vector<std::string> ids;
        ids.reserve(weights.size());
        for (std::size_t i = 0; i < weights.size(); ++i) ids.push_back("c" + std::to_string(i));
        return Space(std::move(ids), std::move(weights));
    }

    static Space uniform(std::size_t n) { return with_weights(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

    std::size_t size() const noexcept { return weights_.size(); }
    double total() const noexcept { return total_; }
    double weight(Index cell) const { return weights_[cell]; }
    const std::string& id(Index cell) const { return ids_[cell]; }
    std::span<const double> weights() const noexcept { return weights_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    void check_cells(const CellSet& cells) const {
        require(cells.empty() || cells.back() < size(), ErrorCode::LoadError,
                "cell index " + std::to_string(cells.empty() ? 0 : cells.back()) + " out of range");
    }

    CellSet all_cells() const { return IndexSet::range(0, static_cast<Index>(size())); }

private:
    std::vector<std::string> ids_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

/// A cell-constant real function aligned to Space order.
class CellFn {
public:
    CellFn() = default;
    explicit CellFn(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_) require(std::isfinite(v), ErrorCode::LoadError, "function value not finite");
    }
    static CellFn constant(std::size_t n, double value) { return CellFn(std::vector<double>(n, value)); }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](Index i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    bool nonnegative() const {
        for (double v : values_)
            if (v < 0.0) return false;
        return true;
    }
    bool positive() const {
        for (double v : values_)
            if (!(v > 0.0)) return false;
        return true;
    }

    template <class Op>
    CellFn map(Op op) const {
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(values_[i]);
        return CellFn(std::move(out));
    }

    CellFn scaled(double lambda) const { return map([lambda](double v) { return lambda * v; }); }
    CellFn shifted(double k) const { return map([k](double v) { return v + k; }); }

    friend bool operator==(const CellFn&, const CellFn&) = default;

private:
    std::vector<double> values_;
};

/// Indicator of a cell set.
inline CellFn indicator(std::size_t n_cells, const CellSet& set) {
    std::vector<double> v(n_cells, 0.0);
    for (Index c : set) v[c] = 1.0;
    return CellFn(std::move(v));
}

/// A labelled disjoint cover of the cells (a decomposition of the space).
class Partition {
public:
    Partition() = default;
    Partition(const Space& space, std::vector<CellSet> parts) : parts_(std::move(parts)) {
        std::vector<char> seen(space.size(), 0);
        std::size_t count = 0;
        for (const auto& part : parts_) {
            require(!part.empty(), ErrorCode::InvalidPartition, "empty part");
            require(part.back() < space.size(), ErrorCode::InvalidPartition, "part references unknown cell");
            for (Index c : part) {
                require(!seen[c], ErrorCode::InvalidPartition, "cell " + std::to_string(c) + " in two parts");
                seen[c] = 1;
                ++count;
            }
        }
        require(count == space.size(), ErrorCode::InvalidPartition, "parts do not cover every cell");
    }

    static Partition whole(const Space& space) { return Partition(space, {space.all_cells()}); }
    static Partition singletons(const Space& space) {
        std::vector<CellSet> parts;
        for (Index c = 0; c < space.size(); ++c) parts.push_back(CellSet{c});
        return Partition(space, std::move(parts));
    }

    std::size_t size() const noexcept { return parts_.size(); }
    const CellSet& operator[](std::size_t i) const { return parts_[i]; }
    const std::vector<CellSet>& parts() const noexcept { return parts_; }

private:
    std::vector<CellSet> parts_;
};

} // namespace bmolab
