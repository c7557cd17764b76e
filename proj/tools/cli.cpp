#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "bless/em.hpp"
#include "bless/experiments.hpp"
#include "bless/identifiability.hpp"
#include "bless/io.hpp"
#include "bless/model.hpp"
#include "bless/simulation.hpp"
#include "bless/version.hpp"

namespace bless::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
  Clock::time_point start = Clock::now();
  int threads = 1;
};

fs::path manifest_path_for(const fs::path& output) {
  fs::path path = output;
  path.replace_extension(".manifest.json");
  return path;
}

void write_manifest(const Context& ctx, const fs::path& path,
                    const std::string& subcommand, std::optional<std::uint64_t> seed,
                    std::vector<std::string> inputs, std::vector<std::string> outputs) {
  RunManifest manifest;
  manifest.subcommand = subcommand;
  manifest.arguments = ctx.args;
  manifest.seed = seed;
  manifest.inputs = std::move(inputs);
  manifest.outputs = std::move(outputs);
  manifest.wall_seconds =
      std::chrono::duration<double>(Clock::now() - ctx.start).count();
  manifest.tool_version = std::string(kVersion);
  write_json(path, to_json(manifest));
}

int read_threads() {
  const char* value = std::getenv("BLESS_THREADS");
  if (value == nullptr || *value == '\0') return 1;
  char* end = nullptr;
  const long threads = std::strtol(value, &end, 10);
  if (*end != '\0' || threads < 1 || threads > 1024) {
    throw std::invalid_argument("BLESS_THREADS must be an integer in [1, 1024]");
  }
  return static_cast<int>(threads);
}

// simulate --------------------------------------------------------------

struct SimulateOptions {
  std::optional<int> p;
  int k = 2;
  int d = 3;
  int n = 1000;
  std::uint64_t seed = 0;
  std::string g_file;
  std::string g_template = "cyclic";
  std::string model_file;
  int surface_latent = 0;
  double gap = 0.1;
  double nu_floor = 0.01;
  std::string out_dir = ".";
  std::string prefix = "sim";
};

GraphicalMatrix graph_from_template(const std::string& name, std::optional<int> p, int k) {
  if (name == "cyclic") {
    const int items = p.value_or(2 * k);
    std::vector<int> parents(static_cast<std::size_t>(items));
    for (int j = 0; j < items; ++j) parents[j] = j % k;
    return GraphicalMatrix::from_parents(parents, k);
  }
  const int copies = name == "two-children" ? 2 : 3;
  if (p && *p != copies * k) {
    throw std::invalid_argument("--g-template " + name + " needs p = " +
                                std::to_string(copies * k));
  }
  return GraphicalMatrix::identity_stack(k, copies);
}

int cmd_simulate(Context& ctx, const SimulateOptions& o) {
  std::vector<std::string> inputs;
  BlessModel model;
  if (!o.model_file.empty()) {
    model = read_model(o.model_file);
    inputs.push_back(o.model_file);
  } else {
    GraphicalMatrix g;
    if (!o.g_file.empty()) {
      g = read_graph(o.g_file);
      inputs.push_back(o.g_file);
      if (o.p && *o.p != g.items()) throw std::invalid_argument("--p differs from G");
      if (g.latents() != o.k) throw std::invalid_argument("--k differs from G");
    } else {
      g = graph_from_template(o.g_template, o.p, o.k);
    }
    SimConfig sim;
    sim.p = g.items();
    sim.k = g.latents();
    sim.d = o.d;
    sim.seed = o.seed;
    sim.theta_gap_min = o.gap;
    sim.nu_floor = o.nu_floor;
    model = o.surface_latent > 0
                ? random_model_on_independence_surface(sim, g, o.surface_latent - 1)
                : random_model(sim, g);
  }
  const SampledData sample = sample_dataset(model, o.n, derive_seed(o.seed, 1));

  const fs::path dir(o.out_dir);
  const fs::path model_path = dir / (o.prefix + "_model.json");
  const fs::path data_path = dir / (o.prefix + "_data.csv");
  const fs::path meta_path = dir / (o.prefix + "_data.meta.json");
  write_model(model_path, model);
  write_dataset_csv(data_path, sample.data);
  DatasetMetadata meta{o.seed, model_hash(model), o.n, std::string(Rng::kAlgorithm)};
  write_json(meta_path, to_json(meta));
  write_manifest(ctx, dir / (o.prefix + "_manifest.json"), "simulate", o.seed, inputs,
                 {model_path.string(), data_path.string(), meta_path.string()});
  ctx.out << "wrote " << data_path.string() << " (n = " << o.n << ", p = "
          << model.p() << ", d = " << model.d << ")\n";
  return kOk;
}

// fit -------------------------------------------------------------------

struct FitOptions {
  std::string data;
  int d = 0;
  int k = 0;
  std::string g_file;
  int restarts = 10;
  int max_iters = 2000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  bool soft_gamma = false;
  bool no_refine = false;
  std::string out = "fit.json";
};

int cmd_fit(Context& ctx, const FitOptions& o) {
  const Dataset data = read_dataset_csv(
      o.data, o.d > 0 ? std::optional<int>(o.d) : std::nullopt);
  EmConfig em;
  em.restarts = o.restarts;
  em.max_iters = o.max_iters;
  em.tol = o.tol;
  em.seed = o.seed;
  em.soft_gamma = o.soft_gamma;
  em.refine_graph = !o.no_refine;
  em.threads = ctx.threads;
  std::vector<std::string> inputs{o.data};
  EmResult result;
  if (!o.g_file.empty()) {
    const GraphicalMatrix g = read_graph(o.g_file);
    inputs.push_back(o.g_file);
    if (o.k > 0 && o.k != g.latents()) throw std::invalid_argument("--k differs from G");
    result = fit_known_g(data, g, data.categories(), em);
  } else {
    if (o.k < 1) throw std::invalid_argument("--k is required when --g is absent");
    result = fit_unknown_g(data, o.k, data.categories(), em);
  }
  write_json(o.out, to_json(result));
  write_manifest(ctx, manifest_path_for(o.out), "fit", o.seed, inputs, {o.out});
  ctx.out << std::setprecision(10) << "loglik " << result.loglik << " after "
          << result.iterations << " iterations; "
          << (result.converged ? "converged" : "NOT converged") << '\n';
  if (!result.converged) {
    ctx.err << "EM did not converge within " << o.max_iters << " iterations\n";
    return kNotConverged;
  }
  return kOk;
}

// check-graph -----------------------------------------------------------

struct CheckGraphOptions {
  std::string g_file;
  std::string out = "graph.json";
};

int cmd_check_graph(Context& ctx, const CheckGraphOptions& o) {
  const GraphicalMatrix g = read_graph(o.g_file);
  const GraphClassification c = classify_graph(g);
  for (std::size_t k = 0; k < c.verdicts.size(); ++k) {
    ctx.out << "latent " << k + 1 << ": " << c.child_counts[k]
            << (c.child_counts[k] == 1 ? " child, " : " children, ")
            << to_string(c.verdicts[k]) << '\n';
  }
  ctx.out << "overall: " << to_string(c.overall) << '\n';
  write_json(o.out, to_json(c));
  write_manifest(ctx, manifest_path_for(o.out), "check-graph", std::nullopt,
                 {o.g_file}, {o.out});
  return c.generic() ? kOk : kNonIdentifiableGraph;
}

// test-id ---------------------------------------------------------------

struct TestIdOptions {
  std::string data;
  std::string g_file;
  int d = 0;
  int latent = 0;
  bool all = false;
  std::string strategy = "full-complement";
  double alpha = 0.05;
  bool bonferroni = false;
  std::string out = "test_id.json";
};

int cmd_test_id(Context& ctx, const TestIdOptions& o) {
  if (o.all == (o.latent > 0)) {
    throw std::invalid_argument("give exactly one of --latent and --all");
  }
  const Dataset data = read_dataset_csv(
      o.data, o.d > 0 ? std::optional<int>(o.d) : std::nullopt);
  const GraphicalMatrix g = read_graph(o.g_file);
  const TestStrategy strategy = parse_strategy(o.strategy);
  const IdentifiabilityTestResult result =
      o.all ? identifiability_test_all(data, g, strategy, o.alpha, o.bonferroni)
            : identifiability_test(data, g, o.latent - 1, strategy, o.alpha,
                                   o.bonferroni);
  write_json(o.out, to_json(result));
  write_manifest(ctx, manifest_path_for(o.out), "test-id", std::nullopt,
                 {o.data, o.g_file}, {o.out});
  std::size_t rejections = 0;
  for (const TestReport& t : result.tests) rejections += t.reject ? 1 : 0;
  ctx.out << rejections << " of " << result.tests.size()
          << " tests rejected independence at level " << result.per_test_level << '\n';
  ctx.out << (result.evidence ? "evidence of identifiability" : "no evidence of identifiability")
          << '\n';
  return result.evidence ? kOk : kNoEvidence;
}

// construct-alt ---------------------------------------------------------

struct ConstructOptions {
  std::string model;
  std::string mode;
  int item = 0;
  int latent = 0;
  int count = 150;
  double radius = 0.01;
  std::uint64_t seed = 0;
  std::string out = "family.json";
};

int cmd_construct_alt(Context& ctx, const ConstructOptions& o) {
  const BlessModel model = read_model(o.model);
  AlternativeFamily family;
  try {
    if (o.mode == "prop1") {
      if (o.item < 1) throw std::invalid_argument("prop1 needs --item");
      family = construct_prop1_alternatives(model, o.item - 1, o.count, o.radius);
    } else {
      if (o.latent < 1) throw std::invalid_argument("thm2b needs --latent");
      family = construct_thm2b_alternatives(model, o.latent - 1, o.count, o.radius,
                                            o.seed);
    }
  } catch (const PreconditionError&) {
    write_manifest(ctx, manifest_path_for(o.out), "construct-alt", o.seed, {o.model}, {});
    throw;
  }
  write_json(o.out, to_json(family));
  write_manifest(ctx, manifest_path_for(o.out), "construct-alt", o.seed, {o.model},
                 {o.out});
  ctx.out << family.members.size() << " alternatives, " << family.skipped.size()
          << " skipped, max pmf deviation " << family.max_pmf_deviation << '\n';
  return kOk;
}

// experiment ------------------------------------------------------------

struct ExperimentOptions {
  std::string name;
  std::string out_dir = "experiment_out";
  std::uint64_t seed = 1;
  int models = 10;
  int datasets = 20;
  int n = 10000;
  int k = 2;
  int d = 3;
  int restarts = 10;
  int count = 150;
  double radius = 0.01;
};

int cmd_experiment(Context& ctx, const ExperimentOptions& o) {
  const fs::path dir(o.out_dir);
  const fs::path report_path = dir / "report.json";
  std::vector<fs::path> written;
  if (o.name == "prop1-figure") {
    const Prop1FigureResult r = run_prop1_figure({o.seed, o.count, o.radius});
    write_json(report_path, to_json(r));
    written = write_family_csv(dir, "prop1", r.truth, r.family);
    ctx.out << r.family.members.size() << " alternatives, max pmf deviation "
            << r.family.max_pmf_deviation << '\n';
  } else if (o.name == "surface-nonid") {
    SurfaceNonidConfig config;
    config.seed = o.seed;
    config.count = o.count;
    config.radius = o.radius;
    const SurfaceNonidResult r = run_surface_nonid(config);
    write_json(report_path, to_json(r));
    written = write_family_csv(dir, "surface", r.truth, r.family);
    ctx.out << r.family.members.size() << " alternatives, max pmf deviation "
            << r.family.max_pmf_deviation << "; off-surface construction "
            << (r.off_surface_refused ? "refused" : "NOT refused") << '\n';
  } else {
    BlessingMseConfig config;
    config.models = o.models;
    config.datasets = o.datasets;
    config.n = o.n;
    config.k = o.k;
    config.d = o.d;
    config.seed = o.seed;
    config.restarts = o.restarts;
    config.threads = ctx.threads;
    const BlessingMseResult r = run_blessing_mse(config);
    write_json(report_path, to_json(r, config));
    written = write_blessing_csv(dir, r);
    ctx.out << "median distance to surface: top " << r.median_distance_top
            << ", rest " << r.median_distance_rest << "; Mann-Whitney p = "
            << r.test.p_value << '\n';
  }
  std::vector<std::string> outputs{report_path.string()};
  for (const fs::path& p : written) outputs.push_back(p.string());
  write_manifest(ctx, dir / "manifest.json", "experiment", o.seed, {}, outputs);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{args, out, err};
  CLI::App app{"Binary latent star-forest models: simulation, fitting and identifiability"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::function<int()> action;

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Draw a random model and a dataset");
  s->add_option("--p", sim.p, "Number of items")->check(CLI::Range(1, 64));
  s->add_option("--k", sim.k, "Number of latent variables")->check(CLI::Range(1, 20));
  s->add_option("--d", sim.d, "Categories per item")->check(CLI::Range(2, 64));
  s->add_option("--n", sim.n, "Subjects")->check(CLI::Range(1, 100000000));
  s->add_option("--seed", sim.seed, "Seed");
  auto* g_opt = s->add_option("--g", sim.g_file, "G as JSON")->check(CLI::ExistingFile);
  s->add_option("--g-template", sim.g_template, "G template when --g is absent")
      ->check(CLI::IsMember({"cyclic", "two-children", "three-children"}))
      ->excludes(g_opt);
  s->add_option("--model", sim.model_file, "Sample from this model JSON instead")
      ->check(CLI::ExistingFile);
  s->add_option("--surface-latent", sim.surface_latent,
                "Make this latent (1-based) independent of the others")
      ->check(CLI::PositiveNumber);
  s->add_option("--gap", sim.gap, "Minimal theta1 - theta0 margin")->check(CLI::Range(0.0, 1.0));
  s->add_option("--nu-floor", sim.nu_floor, "Minimal pattern proportion")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--out-dir", sim.out_dir, "Output directory");
  s->add_option("--prefix", sim.prefix, "Output file prefix");
  s->callback([&] { action = [&] { return cmd_simulate(ctx, sim); }; });

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Fit by EM (known G) or approximate EM (unknown G)");
  f->add_option("--data", fit.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--d", fit.d, "Categories (default: largest observed)")->check(CLI::Range(2, 64));
  f->add_option("--k", fit.k, "Latent variables (required without --g)")->check(CLI::Range(1, 20));
  f->add_option("--g", fit.g_file, "Known G as JSON")->check(CLI::ExistingFile);
  f->add_option("--restarts", fit.restarts, "Random initializations")->check(CLI::Range(1, 100000));
  f->add_option("--max-iters", fit.max_iters, "Iteration cap")->check(CLI::Range(1, 100000000));
  f->add_option("--tol", fit.tol, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
  f->add_option("--seed", fit.seed, "Seed");
  f->add_flag("--soft-gamma", fit.soft_gamma, "Unknown G: use posterior means for parent scores");
  f->add_flag("--no-refine", fit.no_refine, "Unknown G: skip the local graph refinement pass");
  f->add_option("--out", fit.out, "Result JSON");
  f->callback([&] { action = [&] { return cmd_fit(ctx, fit); }; });

  CheckGraphOptions check;
  auto* c = app.add_subcommand("check-graph", "Classify identifiability of G");
  c->add_option("--g", check.g_file, "G as JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--out", check.out, "Classification JSON");
  c->callback([&] { action = [&] { return cmd_check_graph(ctx, check); }; });

  TestIdOptions test;
  auto* t = app.add_subcommand("test-id", "Chi-square test for latent dependence");
  t->add_option("--data", test.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--g", test.g_file, "G as JSON")->required()->check(CLI::ExistingFile);
  t->add_option("--d", test.d, "Categories (default: largest observed)")->check(CLI::Range(2, 64));
  auto* latent_opt = t->add_option("--latent", test.latent, "Latent to test (1-based)")
                         ->check(CLI::PositiveNumber);
  t->add_flag("--all", test.all, "Test every latent with exactly two children")
      ->excludes(latent_opt);
  t->add_option("--strategy", test.strategy, "full-complement or pairwise-subsets")
      ->check(CLI::IsMember({"full-complement", "pairwise-subsets"}));
  t->add_option("--alpha", test.alpha, "Significance level")->check(CLI::Range(1e-12, 0.999999));
  t->add_flag("--bonferroni", test.bonferroni, "Divide alpha by the number of tests");
  t->add_option("--out", test.out, "Report JSON");
  t->callback([&] { action = [&] { return cmd_test_id(ctx, test); }; });

  ConstructOptions alt;
  auto* a = app.add_subcommand("construct-alt", "Build parameters with the same pmf");
  a->add_option("--model", alt.model, "Model JSON")->required()->check(CLI::ExistingFile);
  a->add_option("--mode", alt.mode, "prop1 or thm2b")
      ->required()
      ->check(CLI::IsMember({"prop1", "thm2b"}));
  a->add_option("--item", alt.item, "prop1: item (1-based)")->check(CLI::PositiveNumber);
  a->add_option("--latent", alt.latent, "thm2b: latent (1-based)")->check(CLI::PositiveNumber);
  a->add_option("--count", alt.count, "Number of perturbations")->check(CLI::Range(0, 1000000));
  a->add_option("--radius", alt.radius, "Perturbation radius")->check(CLI::Range(1e-12, 1.0));
  a->add_option("--seed", alt.seed, "Seed for the second shift (thm2b)");
  a->add_option("--out", alt.out, "Family JSON");
  a->callback([&] { action = [&] { return cmd_construct_alt(ctx, alt); }; });

  ExperimentOptions exp;
  auto* e = app.add_subcommand("experiment", "Run a packaged experiment");
  e->add_option("name", exp.name, "prop1-figure, blessing-mse or surface-nonid")
      ->required()
      ->check(CLI::IsMember({"prop1-figure", "blessing-mse", "surface-nonid"}));
  e->add_option("--out-dir", exp.out_dir, "Output directory");
  e->add_option("--seed", exp.seed, "Seed");
  e->add_option("--models", exp.models, "blessing-mse: models M")->check(CLI::Range(2, 1000000));
  e->add_option("--datasets", exp.datasets, "blessing-mse: datasets per model L")
      ->check(CLI::Range(1, 1000000));
  e->add_option("--n", exp.n, "blessing-mse: subjects per dataset")->check(CLI::Range(1, 100000000));
  e->add_option("--k", exp.k, "blessing-mse: latent variables")->check(CLI::Range(1, 8));
  e->add_option("--d", exp.d, "blessing-mse: categories")->check(CLI::Range(2, 64));
  e->add_option("--restarts", exp.restarts, "blessing-mse: EM restarts")->check(CLI::Range(1, 100000));
  e->add_option("--count", exp.count, "Family size")->check(CLI::Range(0, 1000000));
  e->add_option("--radius", exp.radius, "Perturbation radius")->check(CLI::Range(1e-12, 1.0));
  e->callback([&] { action = [&] { return cmd_experiment(ctx, exp); }; });

  std::vector<const char*> argv;
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& error) {
    if (error.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&error) != nullptr
                  ? error.what()
                  : app.help(""));
      out << '\n';
      return kOk;
    }
    err << "error: " << error.what() << '\n';
    return kInputError;
  }

  try {
    ctx.threads = read_threads();
    return action();
  } catch (const PreconditionError& error) {
    err << "precondition failed: " << error.what() << '\n';
    return kPreconditionFailed;
  } catch (const DataError& error) {
    err << "input error: " << error.what() << '\n';
    return kInputError;
  } catch (const SizeGuardError& error) {
    err << "input error: " << error.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& error) {
    err << "input error: " << error.what() << '\n';
    return kInputError;
  } catch (const std::out_of_range& error) {
    err << "input error: " << error.what() << '\n';
    return kInputError;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << '\n';
    return 1;
  }
}

}  // namespace bless::cli
