#include "kprod/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kprod/errors.hpp"

namespace kprod {

namespace {

std::vector<double> doubles(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidInput(what + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidInput(what + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<Kernel> kernels(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(what + ": expected a nonempty kernel array");
  std::vector<Kernel> out;
  out.reserve(j.size());
  for (const auto& k : j) out.push_back(kernel_from_json(k));
  return out;
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(where + ": missing field \"" + key + "\"");
  return *it;
}

std::uint64_t seed_of(const json& j) {
  auto it = j.find("seed");
  if (it == j.end()) return 0;
  if (!it->is_number_unsigned()) throw InvalidInput("environment: seed must be a nonnegative integer");
  return it->get<std::uint64_t>();
}

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (std::isfinite(v)) return v;
          return format_double(v);
        } else {
          return v;
        }
      },
      c);
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, json>) {
          return v.dump();
        } else {
          return std::to_string(v);
        }
      },
      c);
}

}  // namespace

void reject_unknown_fields(const json& j, const std::vector<std::string>& allowed,
                           const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidInput(where + ": unknown field \"" + key + "\"");
    }
  }
}

Kernel kernel_from_json(const json& j) {
  reject_unknown_fields(j, {"p", "storage", "entries"}, "kernel");
  const json& pj = field(j, "p", "kernel");
  if (!pj.is_number_unsigned() || pj.get<std::size_t>() == 0) {
    throw InvalidInput("kernel: p must be a positive integer");
  }
  const auto p = pj.get<std::size_t>();
  const json& st = field(j, "storage", "kernel");
  if (!st.is_string()) throw InvalidInput("kernel: storage must be a string");
  const json& e = field(j, "entries", "kernel");
  const std::string storage = st.get<std::string>();
  if (storage == "dense") {
    auto a = doubles(e, "kernel entries");
    if (a.size() != p * p) throw InvalidInput("kernel: dense entries must have p*p values");
    return Kernel::dense(p, std::move(a));
  }
  if (storage == "leslie") {
    reject_unknown_fields(e, {"f", "s"}, "leslie entries");
    auto f = doubles(field(e, "f", "leslie entries"), "leslie f");
    auto s = doubles(field(e, "s", "leslie entries"), "leslie s");
    if (f.size() != p || s.size() != p) throw InvalidInput("kernel: f and s must have p values");
    return Kernel::leslie(std::move(f), std::move(s));
  }
  throw InvalidInput("kernel: unknown storage \"" + storage + "\"");
}

json to_json(const Kernel& k) {
  json j;
  j["p"] = k.size();
  if (k.is_leslie()) {
    j["storage"] = "leslie";
    j["entries"] = {{"f", k.fertility()}, {"s", k.survival()}};
  } else {
    j["storage"] = "dense";
    j["entries"] = k.entries();
  }
  return j;
}

EnvironmentSpec environment_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("environment: expected a JSON object");
  const json& kj = field(j, "kind", "environment");
  if (!kj.is_string()) throw InvalidInput("environment: kind must be a string");
  const std::string kind = kj.get<std::string>();
  const std::uint64_t seed = seed_of(j);
  if (kind == "iid") {
    reject_unknown_fields(j, {"kind", "seed", "family", "weights"}, "iid environment");
    auto family = kernels(field(j, "family", "iid environment"), "family");
    std::vector<double> w;
    if (j.contains("weights")) {
      w = doubles(j["weights"], "weights");
    } else {
      w.assign(family.size(), 1.0 / static_cast<double>(family.size()));
    }
    return EnvironmentSpec::iid(std::move(family), std::move(w), seed);
  }
  if (kind == "constant") {
    reject_unknown_fields(j, {"kind", "seed", "kernel"}, "constant environment");
    return EnvironmentSpec::constant(kernel_from_json(field(j, "kernel", "constant environment")),
                                     seed);
  }
  if (kind == "markov") {
    reject_unknown_fields(j, {"kind", "seed", "family", "transition"}, "markov environment");
    auto family = kernels(field(j, "family", "markov environment"), "family");
    const json& tj = field(j, "transition", "markov environment");
    if (!tj.is_array()) throw InvalidInput("transition: expected an array of rows");
    std::vector<std::vector<double>> t;
    for (const auto& row : tj) t.push_back(doubles(row, "transition row"));
    return EnvironmentSpec::markov(std::move(family), std::move(t), seed);
  }
  if (kind == "periodic") {
    reject_unknown_fields(j, {"kind", "seed", "cycle"}, "periodic environment");
    return EnvironmentSpec::periodic(kernels(field(j, "cycle", "periodic environment"), "cycle"),
                                     seed);
  }
  if (kind == "scripted") {
    reject_unknown_fields(j, {"kind", "seed", "kernels"}, "scripted environment");
    return EnvironmentSpec::scripted(
        kernels(field(j, "kernels", "scripted environment"), "kernels"), seed);
  }
  throw InvalidInput("environment: unknown kind \"" + kind + "\"");
}

json to_json(const EnvironmentSpec& spec) {
  json j;
  json family = json::array();
  for (const auto& k : spec.family()) family.push_back(to_json(k));
  j["seed"] = spec.seed();
  switch (spec.kind()) {
    case EnvKind::iid:
      j["kind"] = "iid";
      j["family"] = family;
      j["weights"] = spec.weights();
      break;
    case EnvKind::markov:
      j["kind"] = "markov";
      j["family"] = family;
      j["transition"] = spec.transition();
      break;
    case EnvKind::periodic:
      j["kind"] = "periodic";
      j["cycle"] = family;
      break;
    case EnvKind::scripted:
      j["kind"] = "scripted";
      j["kernels"] = family;
      break;
  }
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "jsonl") return OutputFormat::jsonl;
  throw InvalidInput("format must be csv or jsonl, got \"" + s + "\"");
}

RecordWriter::RecordWriter(const std::string& path, OutputFormat format,
                           std::vector<std::string> columns)
    : path_(path), format_(format), columns_(std::move(columns)), out_(path) {
  if (!out_) throw InvalidInput("cannot write " + path);
  if (format_ == OutputFormat::csv) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << '\n';
  }
}

void RecordWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) throw DimensionError("RecordWriter: wrong cell count");
  if (format_ == OutputFormat::csv) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cell_text(cells[i]);
    out_ << '\n';
  } else {
    json j = json::object();
    for (std::size_t i = 0; i < cells.size(); ++i) j[columns_[i]] = cell_json(cells[i]);
    out_ << j.dump() << '\n';
  }
  if (!out_) throw InvalidInput("write failed: " + path_);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw InvalidInput("write failed: " + path);
}

}  // namespace kprod
