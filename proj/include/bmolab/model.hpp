#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bmolab/error.hpp"
#include "bmolab/family.hpp"
#include "bmolab/space.hpp"

namespace bmolab {

/// A space, its generators, named cell functions and an optional
/// decomposition: everything a model file holds.
struct Model {
    Space space;
    Family family;
    std::vector<std::pair<std::string, CellFn>> functions;
    std::optional<std::vector<CellSet>> decomposition;
    bool essential_cover_only = false;

    // Informational; written to and read from the "meta" block.
    std::string kind;
    std::vector<std::pair<std::string, double>> params;

    bool has_function(const std::string& name) const {
        for (const auto& [n, f] : functions)
            if (n == name) return true;
        return false;
    }

    const CellFn& function(const std::string& name) const {
        for (const auto& [n, f] : functions)
            if (n == name) return f;
        fail(ErrorCode::LoadError, "model has no function named '" + name + "'");
    }

    void add_function(std::string name, CellFn f) {
        require(f.size() == space.size(), ErrorCode::LoadError, "function '" + name + "' is not aligned to the cells");
        require(!has_function(name), ErrorCode::LoadError, "duplicate function '" + name + "'");
        functions.emplace_back(std::move(name), std::move(f));
    }

    Partition partition() const { return decomposition ? Partition(space, *decomposition) : Partition::whole(space); }

    /// Full cover unless the model is flagged essential_cover_only.
    void validate() const {
        require(!family.empty(), ErrorCode::LoadError, "model has no generators");
        if (!essential_cover_only) {
            const auto missing = family.uncovered_cells();
            require(missing.empty(), ErrorCode::LoadError,
                    "cell '" + (missing.empty() ? std::string() : space.id(missing.front())) +
                        "' lies in no generator (set essential_cover_only to allow this)");
        }
        if (decomposition) (void)partition();
    }
};

} // namespace bmolab
