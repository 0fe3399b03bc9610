#pragma once

#include <optional>
#include <string>

#include "causalkit/models.hpp"

namespace causalkit::io {

// A parsed model file. The background block, when present, additionally
// yields the functional view.
struct LoadedModel {
    CausalModel model;
    std::optional<FunctionalModel> fcm;
    std::optional<std::uint64_t> seed;
};

// Model files are JSON documents with `variables` (name, states), `edges`
// (parent, child pairs), `cpts` (per node: parent order plus row-major
// probability rows, one row per parent configuration with the last parent
// varying fastest), an optional `background` list marking FCM background
// roots, and an optional recorded `seed`. Nodes may omit their CPT while a
// model is being assembled.
LoadedModel load_model(const std::string& path);

void save_model(const CausalModel& m, const std::string& path,
                const std::optional<std::set<std::string>>& background = std::nullopt,
                std::optional<std::uint64_t> seed = std::nullopt);

// Dataset files are CSV with a header row of variable names and one state
// label per cell; a sidecar `<path>.meta.json` records provenance and seed.
// A missing sidecar is read as observational data with seed 0.
Dataset load_dataset(const std::string& path, const std::vector<Variable>& schema);

void save_dataset(const Dataset& d, const std::string& path);

// Tables render to CSV as one line per (given, scope) cell: given labels,
// scope labels, then the probability.
void write_table_csv(const Table& t, const std::string& path);

std::string table_to_string(const Table& t);

}  // namespace causalkit::io
