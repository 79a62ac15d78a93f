#include <sstream>

#include "doctest.h"
#include "xipinn/experiment.hpp"
#include "xipinn/levelset.hpp"

using namespace xipinn;
using nlohmann::json;

namespace {

std::vector<std::string> problems_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& p : v)
    if (p.rfind(s, 0) == 0) return true;
  return false;
}

}  // namespace

TEST_CASE("defaults parse and round trip through the canonical form") {
  const auto c = parse_config(json::object());
  CHECK(c.benchmark == "ex1");
  CHECK(c.effective_test_resolution(2) == 101);
  CHECK(c.effective_test_resolution(3) == 41);
  const auto j = to_json(c);
  const auto c2 = parse_config(j);
  CHECK(to_json(c2) == j);
  CHECK(config_hash(c2) == config_hash(c));
  auto c3 = c;
  c3.lm.max_iters = 7;
  CHECK(config_hash(c3) != config_hash(c));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("unknown keys and bad values are reported by field path") {
  const auto p = problems_of(json::parse(R"({
    "benchmark": "ex7", "sed": 1,
    "lm": {"max_iters": 0, "lambda": 2},
    "samples": {"interior": "many"},
    "level_set": {"mode": "spline", "delta": 1.5},
    "network": {"hidden": []}
  })"));
  CHECK(mentions(p, "sed: unknown key"));
  CHECK(mentions(p, "lm.lambda: unknown key"));
  CHECK(mentions(p, "lm.max_iters:"));
  CHECK(mentions(p, "samples.interior: expected an integer"));
  CHECK(mentions(p, "level_set.mode:"));
  CHECK(mentions(p, "level_set.delta:"));
  CHECK(mentions(p, "network.hidden:"));
  CHECK(mentions(p, "benchmark:"));
  CHECK(mentions(problems_of(json::parse(R"({"level_set": {"mode": "neural", "checkpoint": "/no/such.ckpt"}})")),
                 "level_set.checkpoint:"));
  CHECK(mentions(problems_of(json::parse(R"({"seed": -3})")), "seed:"));
  CHECK(mentions(problems_of(json::parse(R"({"test": 5})")), "test: expected an object"));
}

TEST_CASE("model checkpoint round trip") {
  ModelCheckpoint m{"ex3", ExtensionKind::abs_level_set, LevelSetMode::neural, net::init_network({4, 5, 3}, 2)};
  std::stringstream ss;
  save_model(ss, m);
  const auto back = load_model(ss);
  CHECK(back.benchmark == "ex3");
  CHECK(back.kind == ExtensionKind::abs_level_set);
  CHECK(back.level_set_mode == LevelSetMode::neural);
  CHECK(back.net.layer_dims() == m.net.layer_dims());
  CHECK(back.net.params() == m.net.params());
  std::stringstream bad("xipinn-model 2\n");
  CHECK_THROWS_AS(load_model(bad), std::runtime_error);
}

TEST_CASE("one-iteration training is deterministic and evaluation reproduces it") {
  auto c = parse_config(json::parse(R"({
    "benchmark": "ex1", "seed": 4, "network": {"hidden": [8]},
    "samples": {"interior": 60, "boundary": 20, "initial": 10, "interface": 10},
    "lm": {"max_iters": 1}, "test": {"resolution": 11, "times": 2}
  })"));
  const auto b = benchmark_registry("ex1");
  const auto ls = analytic_level_set(b);
  const auto a = train_experiment(c, b, ls);
  const auto a2 = train_experiment(c, b, ls);
  CHECK(a.report.e0 == a2.report.e0);
  CHECK(std::isfinite(a.report.e0));
  CHECK(a.trace.steps.size() == 1);
  CHECK(evaluate_network(c, b, ls, a.kind, a.net).e0 == a.report.e0);
  CHECK(a.kind == ExtensionKind::abs_level_set);
  c.extension = "indicator";
  CHECK(resolve_extension(c, b) == ExtensionKind::indicator);
}

TEST_CASE("analytic mode needs a closed-form level set") {
  ExperimentConfig c;
  c.benchmark = "ex4";
  CHECK_THROWS_AS(prepare_level_set(c, benchmark_registry("ex4")), ConfigError);
}
