#include "xipinn/experiment.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "xipinn/levelset.hpp"

namespace xipinn {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "\n") + x;
  return s;
}

// Reads one JSON object, recording type problems and unknown keys by path.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& errs) : j_(j), path_(std::move(path)), errs_(errs) {
    if (!j_.is_object()) errs_.push_back(where() + ": expected an object");
  }
  ~Reader() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) errs_.push_back(sub(k) + ": unknown key");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.is_object() && j_.contains(k);
  }
  std::string sub(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const json& at(const std::string& k) const { return j_.at(k); }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return type_error(k, "a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return type_error(k, "an integer");
      if (std::is_unsigned_v<T> && v.get<long long>() < 0) return type_error(k, "a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return type_error(k, "a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return type_error(k, "a string");
    } else {
      if (!v.is_array()) return type_error(k, "an array of integers");
      for (const auto& e : v)
        if (!e.is_number_integer()) return type_error(k, "an array of integers");
    }
    out = v.get<T>();
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  void type_error(const std::string& k, const char* what) { errs_.push_back(sub(k) + ": expected " + what); }

  const json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
};

void read_lm(Reader& parent, const std::string& key, lm::LmConfig& lm, std::vector<std::string>& errs) {
  if (!parent.has(key)) return;
  Reader r(parent.at(key), parent.sub(key), errs);
  r.get("max_iters", lm.max_iters);
  r.get("loss_stop", lm.loss_stop);
  r.get("lambda_init", lm.lambda_init);
  r.get("lambda_up", lm.lambda_up);
  r.get("lambda_down", lm.lambda_down);
  r.get("floor", lm.floor);
  r.get("lambda_max", lm.lambda_max);
}

json lm_json(const lm::LmConfig& lm) {
  return {{"max_iters", lm.max_iters}, {"loss_stop", lm.loss_stop},   {"lambda_init", lm.lambda_init},
          {"lambda_up", lm.lambda_up}, {"lambda_down", lm.lambda_down}, {"floor", lm.floor},
          {"lambda_max", lm.lambda_max}};
}

void check_lm(const lm::LmConfig& lm, const std::string& p, std::vector<std::string>& e) {
  if (lm.max_iters < 1) e.push_back(p + ".max_iters: must be >= 1");
  if (!(lm.loss_stop >= 0)) e.push_back(p + ".loss_stop: must be >= 0");
  if (!(lm.lambda_init > 0)) e.push_back(p + ".lambda_init: must be > 0");
  if (!(lm.lambda_up > 1)) e.push_back(p + ".lambda_up: must be > 1");
  if (!(lm.lambda_down > 0 && lm.lambda_down < 1)) e.push_back(p + ".lambda_down: must be in (0, 1)");
  if (!(lm.floor >= 0)) e.push_back(p + ".floor: must be >= 0");
  if (!(lm.lambda_max > lm.lambda_init)) e.push_back(p + ".lambda_max: must exceed lambda_init");
}

void check_widths(const std::vector<int>& h, const std::string& p, std::vector<std::string>& e) {
  if (h.empty()) e.push_back(p + ": at least one hidden layer required");
  for (int w : h)
    if (w < 1 || w > 4096) e.push_back(p + ": widths must be in [1, 4096]");
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error(join_lines(problems)), problems_(problems) {}

int ExperimentConfig::effective_test_resolution(int dim) const {
  if (test_resolution > 0) return test_resolution;
  return dim == 3 ? 41 : 101;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::vector<std::string> errs;
  {
    Reader r(j, "", errs);
    r.get("benchmark", c.benchmark);
    r.get("seed", c.seed);
    r.get("out", c.out);
    r.get("extension", c.extension);
    if (r.has("network")) {
      Reader n(r.at("network"), "network", errs);
      n.get("hidden", c.hidden);
    }
    if (r.has("samples")) {
      Reader s(r.at("samples"), "samples", errs);
      s.get("interior", c.samples.n_interior);
      s.get("boundary", c.samples.n_boundary);
      s.get("initial", c.samples.n_initial);
      s.get("interface", c.samples.n_interface);
      s.get("interface_times", c.samples.n_interface_times);
    }
    read_lm(r, "lm", c.lm, errs);
    if (r.has("weights")) {
      Reader w(r.at("weights"), "weights", errs);
      w.get("pde", c.weights.pde);
      w.get("divergence", c.weights.divergence);
      w.get("boundary", c.weights.boundary);
      w.get("initial", c.weights.initial);
      w.get("flux", c.weights.flux);
      w.get("value", c.weights.value);
      w.get("mean_square", c.weights.mean_square);
    }
    if (r.has("level_set")) {
      Reader l(r.at("level_set"), "level_set", errs);
      std::string mode = "analytic";
      l.get("mode", mode);
      if (mode == "analytic")
        c.level_set_mode = LevelSetMode::analytic;
      else if (mode == "neural")
        c.level_set_mode = LevelSetMode::neural;
      else
        errs.push_back("level_set.mode: expected \"analytic\" or \"neural\"");
      l.get("checkpoint", c.level_set_checkpoint);
      auto& ls = c.level_set;
      l.get("interface", ls.n_interface);
      l.get("anchors", ls.n_anchor);
      l.get("times", ls.n_times);
      l.get("hidden", ls.hidden);
      l.get("adaptive", ls.adaptive);
      l.get("delta", ls.delta);
      l.get("grid_spacing", ls.grid_spacing);
      l.get("rk_steps_per_unit", ls.rk_steps_per_unit);
      read_lm(l, "lm", ls.lm, errs);
    }
    if (r.has("test")) {
      Reader t(r.at("test"), "test", errs);
      t.get("resolution", c.test_resolution);
      t.get("times", c.test_times);
    }
    if (r.has("export")) {
      Reader x(r.at("export"), "export", errs);
      x.get("resolution", c.export_resolution);
      x.get("times", c.export_times);
    }
    if (r.has("ntk")) {
      Reader n(r.at("ntk"), "ntk", errs);
      n.get("width", c.ntk_width);
      n.get("interior", c.ntk_counts.interior);
      n.get("boundary", c.ntk_counts.boundary);
      n.get("initial", c.ntk_counts.initial);
      n.get("interface", c.ntk_counts.interface);
      n.get("eps", c.ntk_eps);
      n.get("full_spectrum", c.ntk_full_spectrum);
    }
  }
  if (!c.level_set_checkpoint.empty()) {
    std::filesystem::path p(c.level_set_checkpoint);
    if (p.is_relative() && !base_dir.empty()) c.level_set_checkpoint = (base_dir / p).string();
  }
  c.samples.seed = c.seed;
  c.level_set.seed = c.seed;
  try {
    validate_config(c);
  } catch (const ConfigError& e) {
    errs.insert(errs.end(), e.problems().begin(), e.problems().end());
  }
  if (!errs.empty()) throw ConfigError(errs);
  return c;
}

void validate_config(const ExperimentConfig& c) {
  std::vector<std::string> e;
  const auto& names = benchmark_names();
  if (std::find(names.begin(), names.end(), c.benchmark) == names.end())
    e.push_back("benchmark: unknown benchmark \"" + c.benchmark + "\"");
  if (c.extension != "auto" && c.extension != "indicator" && c.extension != "abs_level_set")
    e.push_back("extension: expected auto, indicator or abs_level_set");
  check_widths(c.hidden, "network.hidden", e);
  const auto& s = c.samples;
  if (s.n_interior < 1) e.push_back("samples.interior: must be >= 1");
  if (s.n_boundary < 1) e.push_back("samples.boundary: must be >= 1");
  if (s.n_initial < 1) e.push_back("samples.initial: must be >= 1");
  if (s.n_interface < 1) e.push_back("samples.interface: must be >= 1");
  if (s.n_interface_times < 1) e.push_back("samples.interface_times: must be >= 1");
  check_lm(c.lm, "lm", e);
  const auto& w = c.weights;
  for (auto [v, name] : {std::pair{w.pde, "pde"}, {w.divergence, "divergence"}, {w.boundary, "boundary"},
                         {w.initial, "initial"}, {w.flux, "flux"}, {w.value, "value"}})
    if (!(v > 0) || !std::isfinite(v)) e.push_back(std::string("weights.") + name + ": must be positive");
  const auto& ls = c.level_set;
  if (ls.n_interface < 1) e.push_back("level_set.interface: must be >= 1");
  if (ls.n_anchor < 0) e.push_back("level_set.anchors: must be >= 0");
  if (ls.n_times < 1) e.push_back("level_set.times: must be >= 1");
  check_widths(ls.hidden, "level_set.hidden", e);
  if (!(ls.delta > 0 && ls.delta < 1)) e.push_back("level_set.delta: must be in (0, 1)");
  if (!(ls.grid_spacing > 0 && ls.grid_spacing <= 1)) e.push_back("level_set.grid_spacing: must be in (0, 1]");
  if (ls.rk_steps_per_unit < 1) e.push_back("level_set.rk_steps_per_unit: must be >= 1");
  check_lm(ls.lm, "level_set.lm", e);
  if (!c.level_set_checkpoint.empty()) {
    if (c.level_set_mode != LevelSetMode::neural)
      e.push_back("level_set.checkpoint: only used with mode \"neural\"");
    else if (!std::filesystem::is_regular_file(c.level_set_checkpoint))
      e.push_back("level_set.checkpoint: file not found: " + c.level_set_checkpoint);
  }
  if (c.test_resolution != 0 && c.test_resolution < 2) e.push_back("test.resolution: must be 0 or >= 2");
  if (c.test_times < 1) e.push_back("test.times: must be >= 1");
  if (c.export_resolution < 2) e.push_back("export.resolution: must be >= 2");
  if (c.export_times < 1) e.push_back("export.times: must be >= 1");
  if (c.ntk_width < 1) e.push_back("ntk.width: must be >= 1");
  const auto& n = c.ntk_counts;
  if (n.interior < 1 || n.boundary < 1 || n.initial < 1 || n.interface < 1)
    e.push_back("ntk: point counts must be >= 1");
  if (!(c.ntk_eps > 0)) e.push_back("ntk.eps: must be > 0");
  if (c.out.empty()) e.push_back("out: must not be empty");
  if (!e.empty()) throw ConfigError(e);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open " + path.string()});
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& ex) {
    throw ConfigError({"config: " + std::string(ex.what())});
  }
  return parse_config(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  const auto& ls = c.level_set;
  return {
      {"benchmark", c.benchmark},
      {"seed", c.seed},
      {"out", c.out},
      {"extension", c.extension},
      {"network", {{"hidden", c.hidden}}},
      {"samples",
       {{"interior", c.samples.n_interior},
        {"boundary", c.samples.n_boundary},
        {"initial", c.samples.n_initial},
        {"interface", c.samples.n_interface},
        {"interface_times", c.samples.n_interface_times}}},
      {"lm", lm_json(c.lm)},
      {"weights",
       {{"pde", c.weights.pde},
        {"divergence", c.weights.divergence},
        {"boundary", c.weights.boundary},
        {"initial", c.weights.initial},
        {"flux", c.weights.flux},
        {"value", c.weights.value},
        {"mean_square", c.weights.mean_square}}},
      {"level_set",
       {{"mode", c.level_set_mode == LevelSetMode::neural ? "neural" : "analytic"},
        {"checkpoint", c.level_set_checkpoint},
        {"interface", ls.n_interface},
        {"anchors", ls.n_anchor},
        {"times", ls.n_times},
        {"hidden", ls.hidden},
        {"adaptive", ls.adaptive},
        {"delta", ls.delta},
        {"grid_spacing", ls.grid_spacing},
        {"rk_steps_per_unit", ls.rk_steps_per_unit},
        {"lm", lm_json(ls.lm)}}},
      {"test", {{"resolution", c.test_resolution}, {"times", c.test_times}}},
      {"export", {{"resolution", c.export_resolution}, {"times", c.export_times}}},
      {"ntk",
       {{"width", c.ntk_width},
        {"interior", c.ntk_counts.interior},
        {"boundary", c.ntk_counts.boundary},
        {"initial", c.ntk_counts.initial},
        {"interface", c.ntk_counts.interface},
        {"eps", c.ntk_eps},
        {"full_spectrum", c.ntk_full_spectrum}}},
  };
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(to_json(cfg).dump()); }

ExtensionKind resolve_extension(const ExperimentConfig& cfg, const Benchmark& bench) {
  if (cfg.extension == "indicator") return ExtensionKind::indicator;
  if (cfg.extension == "abs_level_set") return ExtensionKind::abs_level_set;
  return extension_kind_for(bench.spec.jump_kind);
}

net::Mlp make_solver_net(const ExperimentConfig& cfg, const Benchmark& bench) {
  std::vector<int> dims{network_inputs(bench.spec.spatial_dim, true)};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(bench.spec.solution_arity());
  return net::init_network(dims, cfg.seed);
}

PreparedLevelSet prepare_level_set(const ExperimentConfig& cfg, const Benchmark& bench) {
  PreparedLevelSet out;
  if (cfg.level_set_mode == LevelSetMode::analytic) {
    if (!bench.level_set.analytic)
      throw ConfigError({"level_set.mode: benchmark " + bench.spec.name + " has no closed-form level set; use \"neural\""});
    out.field = analytic_level_set(bench);
    return out;
  }
  if (!cfg.level_set_checkpoint.empty()) {
    std::ifstream in(cfg.level_set_checkpoint);
    if (!in) throw ConfigError({"level_set.checkpoint: cannot open " + cfg.level_set_checkpoint});
    out.field = load_level_set(in, bench.level_set.phi0, bench.spec.spatial_dim);
    if (std::abs(out.field.t_end() - bench.spec.t_end) > 1e-12)
      throw ConfigError({"level_set.checkpoint: covers [0, " + std::to_string(out.field.t_end()) +
                         "] but the benchmark ends at " + std::to_string(bench.spec.t_end)});
    return out;
  }
  out.learned = learn_level_set(bench, cfg.level_set);
  out.field = out.learned->field;
  return out;
}

ErrorReport evaluate_network(const ExperimentConfig& cfg, const Benchmark& bench, const LevelSetField& ls,
                             ExtensionKind kind, const net::Mlp& net) {
  const auto pts = test_grid(bench.spec.domain, bench.spec.t_end, cfg.effective_test_resolution(bench.spec.spatial_dim),
                             cfg.test_times);
  auto r = error_norms(NetModel(net), bench, ls, kind, true, pts);
  r.seed = cfg.seed;
  return r;
}

TrainOutcome train_experiment(const ExperimentConfig& cfg, const Benchmark& bench, const LevelSetField& ls) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome out;
  out.kind = resolve_extension(cfg, bench);
  auto plan = cfg.samples;
  plan.seed = cfg.seed;
  const auto sets = sample_all(bench, ls, plan);
  ResidualOptions opt;
  opt.weights = cfg.weights;
  const auto sys = build_xi_system(bench, ls, out.kind, sets, opt);
  out.rows = sys.rows();
  out.excluded_interior = sys.excluded_interior;
  out.net = make_solver_net(cfg, bench);
  net::Mlp work = out.net;
  const auto a = sys.assembler(work);
  out.trace = lm::train(a, out.net.params(), cfg.lm);
  out.net.params() = out.trace.params;
  if (!out.net.all_finite()) throw NumericalError("training produced non-finite parameters");
  out.report = evaluate_network(cfg, bench, ls, out.kind, out.net);
  out.report.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void save_model(std::ostream& os, const ModelCheckpoint& m) {
  os << "xipinn-model 1\n";
  os << "benchmark " << m.benchmark << '\n';
  os << "extension " << to_string(m.kind) << '\n';
  os << "level_set " << (m.level_set_mode == LevelSetMode::neural ? "neural" : "analytic") << '\n';
  net::save_mlp(os, m.net);
}

ModelCheckpoint load_model(std::istream& is) {
  auto fail = [](const std::string& what) { throw std::runtime_error("model checkpoint: " + what); };
  std::string magic, key, value;
  int version = 0;
  if (!(is >> magic >> version) || magic != "xipinn-model" || version != 1) fail("bad header");
  ModelCheckpoint m;
  if (!(is >> key >> m.benchmark) || key != "benchmark") fail("missing benchmark");
  if (!(is >> key >> value) || key != "extension") fail("missing extension");
  if (value == "indicator")
    m.kind = ExtensionKind::indicator;
  else if (value == "abs_level_set")
    m.kind = ExtensionKind::abs_level_set;
  else
    fail("unknown extension " + value);
  if (!(is >> key >> value) || key != "level_set") fail("missing level_set");
  if (value == "neural")
    m.level_set_mode = LevelSetMode::neural;
  else if (value == "analytic")
    m.level_set_mode = LevelSetMode::analytic;
  else
    fail("unknown level_set mode " + value);
  m.net = net::load_mlp(is);
  return m;
}

}  // namespace xipinn
