#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "backchain/theory.hpp"

namespace backchain {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kDatasetSchemaVersion = "example/1";

ordered_json to_json(const Atom& atom);
ordered_json to_json(const Rule& rule);
ordered_json to_json(const Example& example);

/// Strict decoders: unknown fields, wrong types and invariant violations all
/// raise SchemaError with the JSON path of the offending value.
Atom atom_from_json(const nlohmann::json& j, const std::string& path, bool require_ground);
Rule rule_from_json(const nlohmann::json& j, const std::string& path);
Example example_from_json(const nlohmann::json& j);

/// Canonical single-line encoding (no trailing newline).
std::string dump_example(const Example& example);
Example parse_example(std::string_view text);

Example load_example(const std::filesystem::path& path);
void save_example(const Example& example, const std::filesystem::path& path);

/// JSON-Lines datasets: one canonical example per line.
std::vector<Example> read_dataset(std::istream& in);
std::vector<Example> load_dataset(const std::filesystem::path& path);
void write_dataset(const std::vector<Example>& dataset, std::ostream& out);
void save_dataset(const std::vector<Example>& dataset, const std::filesystem::path& path);

}  // namespace backchain
