#pragma once

// JSON exchange for kernels and environment specs, and the CSV / JSONL
// record writer shared by the command-line tool.

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kprod/environment.hpp"
#include "kprod/operator.hpp"

namespace kprod {

using json = nlohmann::json;

/// {"p": int, "storage": "dense"|"leslie",
///  "entries": row-major array | {"f": array, "s": array}}
Kernel kernel_from_json(const json& j);
json to_json(const Kernel& k);

/// Variant-tagged on "kind": iid, constant, markov, periodic, scripted.
/// Unknown fields are rejected with InvalidInput.
EnvironmentSpec environment_from_json(const json& j);
json to_json(const EnvironmentSpec& spec);

/// Reads and parses a JSON file; InvalidInput on IO or syntax errors.
json read_json_file(const std::string& path);

/// Throws InvalidInput naming the first key of `j` outside `allowed`.
void reject_unknown_fields(const json& j, const std::vector<std::string>& allowed,
                           const std::string& where);

/// %.17g, with inf / -inf / nan spelled out.
std::string format_double(double v);

enum class OutputFormat { csv, jsonl };

OutputFormat parse_format(const std::string& s);

/// A json cell is written verbatim in JSONL and as its compact dump in CSV.
using Cell = std::variant<double, std::int64_t, std::uint64_t, bool, std::string, json>;

/// One table written either as CSV with a header line or as JSON lines
/// keyed by column name.
class RecordWriter {
 public:
  RecordWriter(const std::string& path, OutputFormat format, std::vector<std::string> columns);

  void row(const std::vector<Cell>& cells);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  OutputFormat format_;
  std::vector<std::string> columns_;
  std::ofstream out_;
};

/// Pretty JSON document with a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace kprod
