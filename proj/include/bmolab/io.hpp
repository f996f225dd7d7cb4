#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmolab/error.hpp"
#include "bmolab/model.hpp"

namespace bmolab::io {

using nlohmann::json;

namespace detail {

inline std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
    require(obj.is_object(), ErrorCode::LoadError, where + " must be an object");
    auto it = obj.find(key);
    require(it != obj.end(), ErrorCode::LoadError, where + " is missing \"" + key + "\"");
    return *it;
}

inline double number(const json& v, const std::string& where) {
    require(v.is_number(), ErrorCode::LoadError, where + " must be a number");
    const double x = v.get<double>();
    require(std::isfinite(x), ErrorCode::LoadError, where + " must be finite");
    return x;
}

inline CellSet cell_list(const json& v, std::size_t n_cells, const std::string& where) {
    require(v.is_array(), ErrorCode::LoadError, where + " must be an array of cell indices");
    std::vector<Index> cells;
    cells.reserve(v.size());
    for (const auto& c : v) {
        require(c.is_number_integer() && c.get<long long>() >= 0, ErrorCode::LoadError,
                where + " holds a non-index entry");
        const auto idx = c.get<unsigned long long>();
        require(idx < n_cells, ErrorCode::LoadError, where + " references unknown cell " + std::to_string(idx));
        cells.push_back(static_cast<Index>(idx));
    }
    return CellSet(std::move(cells));
}

} // namespace detail

inline Model from_json(const json& doc) {
    require(doc.is_object(), ErrorCode::LoadError, "model document must be a JSON object");
    const auto& cells = detail::field(doc, "cells", "model");
    require(cells.is_array(), ErrorCode::LoadError, "\"cells\" must be an array");
    std::vector<std::string> ids;
    std::vector<double> weights;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::string where = "cells[" + std::to_string(i) + "]";
        const auto& id = detail::field(cells[i], "id", where);
        require(id.is_string(), ErrorCode::LoadError, where + ".id must be a string");
        ids.push_back(id.get<std::string>());
        weights.push_back(detail::number(detail::field(cells[i], "w", where), where + ".w"));
    }

    Model m;
    m.space = Space(std::move(ids), std::move(weights));
    const auto n = m.space.size();

    const auto& gens = detail::field(doc, "generators", "model");
    require(gens.is_array(), ErrorCode::LoadError, "\"generators\" must be an array");
    std::vector<Generator> family;
    family.reserve(gens.size());
    for (std::size_t g = 0; g < gens.size(); ++g) {
        const std::string where = "generators[" + std::to_string(g) + "]";
        const auto& id = detail::field(gens[g], "id", where);
        require(id.is_string(), ErrorCode::LoadError, where + ".id must be a string");
        family.push_back({id.get<std::string>(), detail::cell_list(detail::field(gens[g], "cells", where), n, where)});
    }
    m.family = Family(m.space, std::move(family));

    if (auto it = doc.find("functions"); it != doc.end()) {
        require(it->is_object(), ErrorCode::LoadError, "\"functions\" must be an object");
        for (const auto& [name, values] : it->items()) {
            const std::string where = "functions." + name;
            require(values.is_array() && values.size() == n, ErrorCode::LoadError,
                    where + " must hold one number per cell");
            std::vector<double> v;
            v.reserve(n);
            for (std::size_t i = 0; i < n; ++i)
                v.push_back(detail::number(values[i], where + "[" + std::to_string(i) + "]"));
            m.add_function(name, CellFn(std::move(v)));
        }
    }
    if (auto it = doc.find("decomposition"); it != doc.end() && !it->is_null()) {
        require(it->is_array(), ErrorCode::LoadError, "\"decomposition\" must be an array of cell lists");
        std::vector<CellSet> parts;
        for (std::size_t i = 0; i < it->size(); ++i)
            parts.push_back(detail::cell_list((*it)[i], n, "decomposition[" + std::to_string(i) + "]"));
        m.decomposition = std::move(parts);
    }
    if (auto it = doc.find("essential_cover_only"); it != doc.end()) {
        require(it->is_boolean(), ErrorCode::LoadError, "\"essential_cover_only\" must be a boolean");
        m.essential_cover_only = it->get<bool>();
    }
    if (auto it = doc.find("meta"); it != doc.end() && it->is_object()) {
        if (auto k = it->find("kind"); k != it->end() && k->is_string()) m.kind = k->get<std::string>();
        if (auto p = it->find("params"); p != it->end() && p->is_object())
            for (const auto& [key, value] : p->items())
                if (value.is_number()) m.params.emplace_back(key, value.get<double>());
    }
    m.validate();
    return m;
}

/// Parses a model; syntax errors report line and column.
inline Model parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        if (auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
        fail(ErrorCode::LoadError,
             "JSON parse error at " + detail::location(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + what);
    }
    return from_json(doc);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::LoadError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Model load_model(const std::string& path) { return parse_model(read_file(path)); }

inline json to_json(const Model& m) {
    json doc;
    json cells = json::array();
    for (Index c = 0; c < m.space.size(); ++c) cells.push_back({{"id", m.space.id(c)}, {"w", m.space.weight(c)}});
    doc["cells"] = std::move(cells);
    json gens = json::array();
    for (Index g = 0; g < m.family.size(); ++g) gens.push_back({{"id", m.family.id(g)}, {"cells", m.family.cells(g).vec()}});
    doc["generators"] = std::move(gens);
    json fns = json::object();
    for (const auto& [name, f] : m.functions) fns[name] = f.values();
    doc["functions"] = std::move(fns);
    if (m.decomposition) {
        json parts = json::array();
        for (const auto& p : *m.decomposition) parts.push_back(p.vec());
        doc["decomposition"] = std::move(parts);
    }
    doc["essential_cover_only"] = m.essential_cover_only;
    if (!m.kind.empty() || !m.params.empty()) {
        json params = json::object();
        for (const auto& [k, v] : m.params) params[k] = v;
        doc["meta"] = {{"kind", m.kind}, {"params", params}};
    }
    return doc;
}

/// Compact serialisation. Doubles are written in shortest round-trip form,
/// so reading the text back reproduces every weight and value bit for bit.
inline std::string dump_model(const Model& m) { return to_json(m).dump() + "\n"; }

inline void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::LoadError, "cannot write '" + path + "'");
    out << dump_model(m);
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::LoadError, "cannot write '" + path + "'");
    out << text;
}

} // namespace bmolab::io
