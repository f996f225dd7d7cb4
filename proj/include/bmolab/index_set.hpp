#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <span>
#include <vector>

namespace bmolab {

using Index = std::uint32_t;

/// Sorted, duplicate-free set of indices (cells, atoms or generators).
class IndexSet {
public:
    IndexSet() = default;
    IndexSet(std::initializer_list<Index> init) : IndexSet(std::vector<Index>(init)) {}
    explicit IndexSet(std::vector<Index> items) : items_(std::move(items)) {
        std::sort(items_.begin(), items_.end());
        items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
    }

    /// Wraps a vector the caller guarantees is strictly increasing.
    static IndexSet from_sorted(std::vector<Index> items) {
        IndexSet s;
        s.items_ = std::move(items);
        return s;
    }

    static IndexSet range(Index lo, Index hi) {
        std::vector<Index> v;
        v.reserve(hi > lo ? hi - lo : 0);
        for (Index i = lo; i < hi; ++i) v.push_back(i);
        return from_sorted(std::move(v));
    }

    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    auto begin() const noexcept { return items_.begin(); }
    auto end() const noexcept { return items_.end(); }
    Index operator[](std::size_t i) const noexcept { return items_[i]; }
    Index front() const noexcept { return items_.front(); }
    Index back() const noexcept { return items_.back(); }
    std::span<const Index> span() const noexcept { return items_; }
    const std::vector<Index>& vec() const noexcept { return items_; }

    bool contains(Index i) const { return std::binary_search(items_.begin(), items_.end(), i); }

    bool intersects(const IndexSet& other) const {
        auto a = items_.begin();
        auto b = other.items_.begin();
        while (a != items_.end() && b != other.items_.end()) {
            if (*a == *b) return true;
            if (*a < *b)
                ++a;
            else
                ++b;
        }
        return false;
    }

    bool is_subset_of(const IndexSet& other) const {
        if (size() > other.size()) return false;
        return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
    }

    IndexSet united(const IndexSet& other) const {
        std::vector<Index> out;
        out.reserve(size() + other.size());
        std::set_union(items_.begin(), items_.end(), other.items_.begin(), other.items_.end(),
                       std::back_inserter(out));
        return from_sorted(std::move(out));
    }

    IndexSet intersected(const IndexSet& other) const {
        std::vector<Index> out;
        std::set_intersection(items_.begin(), items_.end(), other.items_.begin(), other.items_.end(),
                              std::back_inserter(out));
        return from_sorted(std::move(out));
    }

    IndexSet minus(const IndexSet& other) const {
        std::vector<Index> out;
        std::set_difference(items_.begin(), items_.end(), other.items_.begin(), other.items_.end(),
                            std::back_inserter(out));
        return from_sorted(std::move(out));
    }

    friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
    std::vector<Index> items_;
};

using CellSet = IndexSet;

} // namespace bmolab
