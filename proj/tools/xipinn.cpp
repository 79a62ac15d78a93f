// xipinn: train, levelset, ntk and eval subcommands.
// Exit status: 0 ok, 2 configuration error, 3 numerical failure, 1 other.

#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "xipinn/experiment.hpp"
#include "xipinn/levelset.hpp"
#include "xipinn/parallel.hpp"

using namespace xipinn;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out;
  std::string checkpoint;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ExperimentConfig resolve(const Options& o) {
  if (o.config.empty()) throw ConfigError({"--config: required"});
  auto cfg = load_config(o.config);
  if (o.seed) cfg.seed = cfg.samples.seed = cfg.level_set.seed = *o.seed;
  if (!o.out.empty()) cfg.out = o.out;
  validate_config(cfg);
  if (o.threads) set_thread_cap(o.threads);
  return cfg;
}

fs::path make_run_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ConfigError({"out: cannot create directory " + dir.string()});
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const nlohmann::json& extra) {
  nlohmann::json m{{"command", command},
                   {"config", to_json(cfg)},
                   {"config_hash", hex(config_hash(cfg))},
                   {"seed", cfg.seed},
                   {"threads", thread_cap()},
                   {"versions",
                    {{"xipinn", "1.0.0"},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}}},
                   {"results", extra}};
  open_out(dir / "manifest.json") << m.dump(2) << '\n';
}

void write_zero_sets(const fs::path& dir, const Benchmark& bench, const LevelSetField& ls) {
  if (bench.spec.spatial_dim != 2) return;
  auto os = open_out(dir / "zeroset.csv");
  os.precision(17);
  os << "t,x0,x1\n";
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double t = frac * bench.spec.t_end;
    const auto pts = zero_set_2d([&](const Vec3& x) { return ls.value({x, t}); }, bench.spec.domain, 201);
    for (const auto& p : pts) os << t << ',' << p[0] << ',' << p[1] << '\n';
  }
}

void export_predictions(const fs::path& dir, const ExperimentConfig& cfg, const Benchmark& bench,
                        const LevelSetField& ls, ExtensionKind kind, const net::Mlp& net) {
  const auto pts = test_grid(bench.spec.domain, bench.spec.t_end, cfg.export_resolution, cfg.export_times);
  auto os = open_out(dir / "grid.csv");
  export_grid(os, NetModel(net), bench, ls, kind, true, pts);
}

int cmd_train(const Options& o) {
  const auto cfg = resolve(o);
  const auto dir = make_run_dir(cfg);
  const auto bench = benchmark_registry(cfg.benchmark);
  const auto ls = prepare_level_set(cfg, bench);
  if (ls.field.maps().size()) {
    auto os = open_out(dir / "levelset.ckpt");
    save_level_set(os, ls.field);
  }
  const auto res = train_experiment(cfg, bench, ls.field);
  {
    auto os = open_out(dir / "model.ckpt");
    save_model(os, {cfg.benchmark, res.kind, cfg.level_set_mode, res.net});
  }
  {
    auto os = open_out(dir / "trace.csv");
    lm::write_trace_csv(os, res.trace);
  }
  {
    auto os = open_out(dir / "report.csv");
    write_report_csv(os, res.report);
  }
  export_predictions(dir, cfg, bench, ls.field, res.kind, res.net);
  write_manifest(dir, "train", cfg,
                 {{"e0", res.report.e0},
                  {"e1", res.report.e1},
                  {"final_loss", res.trace.final_loss},
                  {"iterations", res.trace.steps.size()},
                  {"stop_reason", lm::to_string(res.trace.reason)},
                  {"residual_rows", res.rows},
                  {"excluded_interior", res.excluded_interior},
                  {"params", res.net.param_count()},
                  {"runtime_s", res.report.runtime}});
  std::cout.precision(6);
  std::cout << "train " << cfg.benchmark << ": loss " << res.trace.final_loss << " after " << res.trace.steps.size()
            << " iterations (" << lm::to_string(res.trace.reason) << "), e0 " << res.report.e0 << ", e1 "
            << res.report.e1 << "\n";
  if (res.trace.reason == lm::StopReason::non_finite) return kNumerical;
  return kOk;
}

int cmd_levelset(const Options& o) {
  auto cfg = resolve(o);
  cfg.level_set_mode = LevelSetMode::neural;
  cfg.level_set_checkpoint.clear();
  const auto dir = make_run_dir(cfg);
  const auto bench = benchmark_registry(cfg.benchmark);
  const auto t0 = std::chrono::steady_clock::now();
  const auto ls = prepare_level_set(cfg, bench);
  const auto& learned = *ls.learned;
  {
    auto os = open_out(dir / "levelset.ckpt");
    save_level_set(os, ls.field);
  }
  {
    auto os = open_out(dir / "intervals.csv");
    os.precision(17);
    os << "k,t_start,t_end,loss,min_det,refits\n";
    for (std::size_t k = 0; k < learned.steps.intervals.size(); ++k) {
      const auto& r = learned.steps.intervals[k];
      os << k + 1 << ',' << r.t_start << ',' << r.t_end << ',' << r.loss << ',' << r.min_det << ',' << r.refits << '\n';
    }
  }
  write_zero_sets(dir, bench, ls.field);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "levelset", cfg,
                 {{"intervals", learned.steps.intervals.size()},
                  {"flow_error", learned.flow_error},
                  {"events", learned.steps.events},
                  {"runtime_s", secs}});
  std::cout.precision(6);
  std::cout << "levelset " << cfg.benchmark << ": " << learned.steps.intervals.size() << " sub-maps, flow error "
            << learned.flow_error << "\n";
  return kOk;
}

int cmd_ntk(const Options& o) {
  const auto cfg = resolve(o);
  const auto dir = make_run_dir(cfg);
  const auto bench = benchmark_registry(cfg.benchmark);
  if (bench.spec.kind != PdeKind::parabolic) throw ConfigError({"benchmark: the NTK comparison needs a parabolic problem"});
  if (!bench.level_set.analytic) throw ConfigError({"benchmark: the NTK comparison needs a closed-form level set"});
  const auto c = ntk_compare(bench, cfg.ntk_width, cfg.ntk_counts, cfg.seed, cfg.ntk_eps, cfg.ntk_full_spectrum);
  {
    auto os = open_out(dir / "spectrum.csv");
    write_spectrum_csv(os, {&c.xi, &c.vanilla});
  }
  {
    auto os = open_out(dir / "ntk_metrics.txt");
    write_ntk_metrics(os, {&c.xi, &c.vanilla});
  }
  const double ratio = c.xi.metrics.c_total / c.vanilla.metrics.c_total;
  write_manifest(dir, "ntk", cfg,
                 {{"xi_c_total", c.xi.metrics.c_total},
                  {"xi_c_partial", c.xi.metrics.c_partial},
                  {"vanilla_c_total", c.vanilla.metrics.c_total},
                  {"vanilla_c_partial", c.vanilla.metrics.c_partial},
                  {"ratio", ratio}});
  std::cout.precision(6);
  std::cout << "ntk " << cfg.benchmark << ": c_total xi " << c.xi.metrics.c_total << ", vanilla "
            << c.vanilla.metrics.c_total << ", ratio " << ratio << "\n";
  return kOk;
}

int cmd_eval(const Options& o) {
  auto cfg = resolve(o);
  if (o.checkpoint.empty()) throw ConfigError({"--checkpoint: required"});
  std::ifstream in(o.checkpoint);
  if (!in) throw ConfigError({"--checkpoint: cannot open " + o.checkpoint});
  const auto model = load_model(in);
  if (model.benchmark != cfg.benchmark)
    throw ConfigError({"benchmark: checkpoint was trained on " + model.benchmark + ", config names " + cfg.benchmark});
  const auto bench = benchmark_registry(cfg.benchmark);
  if (model.net.input_dim() != network_inputs(bench.spec.spatial_dim, true) ||
      model.net.output_dim() != bench.spec.solution_arity())
    throw ConfigError({"--checkpoint: network shape does not match benchmark " + cfg.benchmark});
  cfg.level_set_mode = model.level_set_mode;
  if (cfg.level_set_mode == LevelSetMode::neural && cfg.level_set_checkpoint.empty()) {
    const auto sibling = fs::path(o.checkpoint).parent_path() / "levelset.ckpt";
    if (!fs::is_regular_file(sibling)) throw ConfigError({"level_set.checkpoint: not given and " + sibling.string() + " missing"});
    cfg.level_set_checkpoint = sibling.string();
  }
  const auto ls = prepare_level_set(cfg, bench);
  const auto t0 = std::chrono::steady_clock::now();
  auto rep = evaluate_network(cfg, bench, ls.field, model.kind, model.net);
  rep.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.out.empty()) {
    const auto dir = make_run_dir(cfg);
    auto os = open_out(dir / "report.csv");
    write_report_csv(os, rep);
    write_manifest(dir, "eval", cfg, {{"checkpoint", o.checkpoint}, {"e0", rep.e0}, {"e1", rep.e1}});
  }
  std::cout.precision(17);
  std::cout << "e0 " << rep.e0 << "\ne1 " << rep.e1 << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended-variable PINN solver for moving interface problems"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "experiment config (JSON)")->required();
    s->add_option("--seed", o.seed, "override the config seed");
    s->add_option("--threads", o.threads, "worker thread cap")->check(CLI::PositiveNumber);
    s->add_option("--out", o.out, "output directory (overrides config)");
  };
  auto* train = app.add_subcommand("train", "train a solver network and report errors");
  auto* levelset = app.add_subcommand("levelset", "fit a neural level set by adaptive time stepping");
  auto* ntk = app.add_subcommand("ntk", "NTK spectra and convergence metrics at initialization");
  auto* eval = app.add_subcommand("eval", "recompute errors of a saved model");
  for (auto* s : {train, levelset, ntk, eval}) add_common(s);
  eval->add_option("--checkpoint", o.checkpoint, "model.ckpt written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  try {
    if (*train) return cmd_train(o);
    if (*levelset) return cmd_levelset(o);
    if (*ntk) return cmd_ntk(o);
    return cmd_eval(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
