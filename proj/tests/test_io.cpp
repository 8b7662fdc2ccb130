#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kprod/io.hpp"

using namespace kprod;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("kprod_io_" + name)).string();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("kernel round trip") {
  const Kernel d = Kernel::dense({{2, 1}, {0.1, 1e-300}});
  CHECK(kernel_from_json(to_json(d)) == d);
  const Kernel l = Kernel::leslie({1, 0.3, 2}, {0.5, 0.25, 0});
  CHECK(kernel_from_json(to_json(l)) == l);
  CHECK(kernel_from_json(json::parse(to_json(d).dump())) == d);

  CHECK_THROWS_AS(kernel_from_json(json::parse(R"({"p":2,"storage":"dense","entries":[[1,2],[3,4]],"x":1})")),
                  InvalidInput);
  CHECK_THROWS_AS(kernel_from_json(json::parse(R"({"p":2,"storage":"sparse","entries":[1,2,3,4]})")),
                  InvalidInput);
  CHECK_THROWS(kernel_from_json(json::parse(R"({"p":2,"storage":"dense","entries":[1,-2,3,4]})")));
}

TEST_CASE("environment round trip") {
  const Kernel a = Kernel::dense({{2, 1}, {1, 2}});
  const Kernel b = Kernel::ones(2);
  const std::vector<EnvironmentSpec> specs = {
      EnvironmentSpec::iid({a, b}, {0.25, 0.75}, 7),
      EnvironmentSpec::constant(a, 3),
      EnvironmentSpec::markov({a, b}, {{0.9, 0.1}, {0.4, 0.6}}, 11),
      EnvironmentSpec::periodic({a, b, a}),
      EnvironmentSpec::scripted({b, a}),
  };
  for (const auto& s : specs) {
    const auto back = environment_from_json(json::parse(to_json(s).dump()));
    CHECK(back.kind() == s.kind());
    CHECK(back.seed() == s.seed());
    CHECK(back.family() == s.family());
    CHECK(back.weights() == s.weights());
    EnvironmentStream x(s), y(back);
    for (int i = 0; i < 20 && s.kind() != EnvKind::scripted; ++i) CHECK(x.next() == y.next());
  }

  const auto uniform = environment_from_json(json::parse(
      R"({"kind":"iid","family":[{"p":1,"storage":"dense","entries":[1]},{"p":1,"storage":"dense","entries":[2]}]})"));
  CHECK(uniform.weights() == std::vector<double>{0.5, 0.5});

  CHECK_THROWS_AS(environment_from_json(json::parse(R"({"kind":"iid","family":[],"colour":1})")), InvalidInput);
  CHECK_THROWS_AS(environment_from_json(json::parse(R"({"kind":"brownian"})")), InvalidInput);
  CHECK_THROWS_AS(
      environment_from_json(json::parse(R"({"kind":"constant","kernel":{"p":1,"storage":"dense","entries":[1]},"seed":-1})")),
      InvalidInput);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(NAN) == "nan");
  CHECK(parse_format("csv") == OutputFormat::csv);
  CHECK(parse_format("jsonl") == OutputFormat::jsonl);
  CHECK_THROWS_AS(parse_format("xml"), InvalidInput);
}

TEST_CASE("record writer") {
  const std::string csv = temp_path("t.csv");
  {
    RecordWriter w(csv, OutputFormat::csv, {"n", "x", "ok", "tag"});
    w.row({std::int64_t{1}, 0.5, true, std::string("a")});
    w.row({std::int64_t{2}, INFINITY, false, std::string("b")});
  }
  CHECK(slurp(csv) == "n,x,ok,tag\n1,0.5,true,a\n2,inf,false,b\n");

  const std::string jl = temp_path("t.jsonl");
  {
    RecordWriter w(jl, OutputFormat::jsonl, {"n", "x"});
    w.row({std::int64_t{1}, 0.25});
    w.row({std::int64_t{2}, NAN});
    CHECK_THROWS(w.row({std::int64_t{3}}));
  }
  std::istringstream lines(slurp(jl));
  std::string line;
  std::getline(lines, line);
  CHECK(json::parse(line) == json{{"n", 1}, {"x", 0.25}});
  std::getline(lines, line);
  CHECK(json::parse(line)["x"] == "nan");
  std::remove(csv.c_str());
  std::remove(jl.c_str());

  CHECK_THROWS_AS(read_json_file(temp_path("missing.json")), InvalidInput);
}

}
