#include "causalkit/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace causalkit::io {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in '" + path + "': " + e.what());
    }
}

std::string format_probability(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

LoadedModel load_model(const std::string& path) {
    const json doc = read_json(path);
    try {
        std::vector<Variable> variables;
        std::vector<std::string> names;
        for (const auto& v : doc.at("variables")) {
            Variable var{v.at("name").get<std::string>(),
                         v.at("states").get<std::vector<std::string>>()};
            check_variable(var);
            names.push_back(var.name);
            variables.push_back(std::move(var));
        }
        std::vector<std::pair<std::string, std::string>> edges;
        if (doc.contains("edges")) {
            for (const auto& e : doc.at("edges")) {
                if (!e.is_array() || e.size() != 2) {
                    throw ValidationError("each edge must be a [parent, child] pair");
                }
                edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
            }
        }
        Dag dag(names, std::move(edges));

        auto variable_named = [&](const std::string& n) -> const Variable& {
            for (const auto& v : variables) {
                if (v.name == n) return v;
            }
            throw ValidationError("CPT references unknown variable '" + n + "'");
        };

        std::map<std::string, Table> cpts;
        if (doc.contains("cpts")) {
            for (const auto& [node, spec] : doc.at("cpts").items()) {
                const Variable& var = variable_named(node);
                std::vector<Variable> parents;
                for (const auto& p : spec.at("parents")) {
                    parents.push_back(variable_named(p.get<std::string>()));
                }
                const auto rows = spec.at("rows").get<std::vector<std::vector<double>>>();
                const std::size_t expected_rows = cell_count(parents);
                if (rows.size() != expected_rows) {
                    throw ValidationError("CPT for '" + node + "' needs " +
                                          std::to_string(expected_rows) + " rows, found " +
                                          std::to_string(rows.size()));
                }
                std::vector<double> values;
                values.reserve(expected_rows * var.cardinality());
                for (const auto& row : rows) {
                    if (row.size() != var.cardinality()) {
                        throw ValidationError("CPT row for '" + node + "' has wrong width");
                    }
                    values.insert(values.end(), row.begin(), row.end());
                }
                cpts.emplace(node, Table({var}, std::move(parents), std::move(values)));
            }
        }

        CausalModel model(std::move(variables), std::move(dag), std::move(cpts));
        LoadedModel out{std::move(model), std::nullopt, std::nullopt};
        if (doc.contains("seed")) out.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("background")) {
            std::set<std::string> background;
            for (const auto& b : doc.at("background")) background.insert(b.get<std::string>());
            out.fcm = FunctionalModel(out.model, std::move(background));
        }
        return out;
    } catch (const json::exception& e) {
        throw ValidationError("malformed model file '" + path + "': " + e.what());
    }
}

void save_model(const CausalModel& m, const std::string& path,
                const std::optional<std::set<std::string>>& background,
                std::optional<std::uint64_t> seed) {
    json doc;
    doc["variables"] = json::array();
    for (const auto& v : m.variables()) {
        doc["variables"].push_back({{"name", v.name}, {"states", v.states}});
    }
    doc["edges"] = json::array();
    for (const auto& [p, c] : m.dag().edges()) doc["edges"].push_back({p, c});
    doc["cpts"] = json::object();
    for (const auto& [node, cpt] : m.cpts()) {
        json spec;
        spec["parents"] = json::array();
        for (const auto& g : cpt.given()) spec["parents"].push_back(g.name);
        spec["rows"] = json::array();
        for (std::size_t g = 0; g < cpt.given_cells(); ++g) {
            const auto row = cpt.row(g);
            spec["rows"].push_back(std::vector<double>(row.begin(), row.end()));
        }
        doc["cpts"][node] = std::move(spec);
    }
    if (background) doc["background"] = *background;
    if (seed) doc["seed"] = *seed;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << "\n";
}

Dataset load_dataset(const std::string& path, const std::vector<Variable>& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");

    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);

    Dataset d;
    for (const auto& name : header) {
        bool found = false;
        for (const auto& v : schema) {
            if (v.name == name) {
                d.columns.push_back(v);
                found = true;
                break;
            }
        }
        if (!found) throw ValidationError("dataset column '" + name + "' is not in the schema");
    }

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != d.columns.size()) {
            throw ValidationError("dataset row with " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(d.columns.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& states = d.columns[c].states;
            std::size_t idx = states.size();
            for (std::size_t s = 0; s < states.size(); ++s) {
                if (states[s] == cells[c]) {
                    idx = s;
                    break;
                }
            }
            if (idx == states.size()) {
                throw ValidationError("unknown state '" + cells[c] + "' for variable '" +
                                      d.columns[c].name + "'");
            }
            d.values.push_back(idx);
        }
        ++d.rows;
    }

    const std::string meta_path = path + ".meta.json";
    if (std::ifstream probe(meta_path, std::ios::binary); probe) {
        const json meta = read_json(meta_path);
        try {
            const auto kind = meta.at("provenance").get<std::string>();
            if (kind == "interventional") {
                d.provenance.kind = Provenance::Kind::interventional;
                for (const auto& v : meta.at("intervened")) {
                    const auto name = v.get<std::string>();
                    if (!d.column_index(name)) {
                        throw ValidationError("intervened variable '" + name +
                                              "' is not a dataset column");
                    }
                    d.provenance.intervened.insert(name);
                }
            } else if (kind != "observational") {
                throw ValidationError("unknown provenance '" + kind + "'");
            }
            if (meta.contains("seed")) d.seed = meta.at("seed").get<std::uint64_t>();
        } catch (const json::exception& e) {
            throw ValidationError("malformed dataset sidecar '" + meta_path + "': " + e.what());
        }
    }
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
        out << (c ? "," : "") << d.columns[c].name;
    }
    out << "\n";
    for (std::size_t r = 0; r < d.rows; ++r) {
        for (std::size_t c = 0; c < d.columns.size(); ++c) {
            out << (c ? "," : "") << d.columns[c].states[d.at(r, c)];
        }
        out << "\n";
    }

    json meta;
    meta["provenance"] =
        d.provenance.kind == Provenance::Kind::interventional ? "interventional" : "observational";
    if (d.provenance.kind == Provenance::Kind::interventional) {
        meta["intervened"] = d.provenance.intervened;
    }
    meta["seed"] = d.seed;
    std::ofstream meta_out(path + ".meta.json", std::ios::binary);
    if (!meta_out) throw ValidationError("cannot open '" + path + ".meta.json' for writing");
    meta_out << meta.dump(2) << "\n";
}

void write_table_csv(const Table& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    bool first = true;
    for (const auto& v : t.given()) {
        out << (first ? "" : ",") << v.name;
        first = false;
    }
    for (const auto& v : t.scope()) {
        out << (first ? "" : ",") << v.name;
        first = false;
    }
    out << ",p\n";
    std::vector<std::size_t> gstates(t.given().size(), 0);
    for (std::size_t g = 0; g < t.given_cells(); ++g) {
        decode_index(t.given(), g, gstates);
        std::vector<std::size_t> sstates(t.scope().size(), 0);
        for (std::size_t s = 0; s < t.scope_cells(); ++s) {
            decode_index(t.scope(), s, sstates);
            bool lead = true;
            for (std::size_t k = 0; k < t.given().size(); ++k) {
                out << (lead ? "" : ",") << t.given()[k].states[gstates[k]];
                lead = false;
            }
            for (std::size_t k = 0; k < t.scope().size(); ++k) {
                out << (lead ? "" : ",") << t.scope()[k].states[sstates[k]];
                lead = false;
            }
            out << "," << format_probability(t.at(g, s)) << "\n";
        }
    }
}

std::string table_to_string(const Table& t) {
    std::ostringstream out;
    bool first = true;
    for (const auto& v : t.given()) {
        out << (first ? "" : "  ") << v.name;
        first = false;
    }
    for (const auto& v : t.scope()) {
        out << (first ? "" : "  ") << v.name;
        first = false;
    }
    out << "  p\n";
    std::vector<std::size_t> gstates(t.given().size(), 0);
    char buf[64];
    for (std::size_t g = 0; g < t.given_cells(); ++g) {
        decode_index(t.given(), g, gstates);
        std::vector<std::size_t> sstates(t.scope().size(), 0);
        for (std::size_t s = 0; s < t.scope_cells(); ++s) {
            decode_index(t.scope(), s, sstates);
            bool lead = true;
            for (std::size_t k = 0; k < t.given().size(); ++k) {
                out << (lead ? "" : "  ") << t.given()[k].states[gstates[k]];
                lead = false;
            }
            for (std::size_t k = 0; k < t.scope().size(); ++k) {
                out << (lead ? "" : "  ") << t.scope()[k].states[sstates[k]];
                lead = false;
            }
            std::snprintf(buf, sizeof(buf), "%.6g", t.at(g, s));
            out << "  " << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace causalkit::io
