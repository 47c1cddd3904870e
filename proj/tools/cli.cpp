#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "diswot/arch.hpp"
#include "diswot/data.hpp"
#include "diswot/error.hpp"
#include "diswot/evo.hpp"
#include "diswot/parallel.hpp"
#include "diswot/rank.hpp"
#include "diswot/scoring.hpp"

namespace diswot::cli {

namespace {

using nlohmann::ordered_json;

struct CommonOptions {
  std::string space = "s0";
  std::string teacher = "max";
  std::vector<std::string> proxies;
  int batch_size = 64;
  std::string data;
  bool synthetic = false;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::int64_t max_params = 0, max_flops = 0, max_depth = 0;
  int classes = 0, input_size = 0;
  std::string init = "kaiming";
  double gaussian_std = 0.01;
  std::string gradcam_source = "fc";
  std::string normalization = "row";
  double temperature = 1.0;
  std::string out;

  CLI::Option* max_params_opt = nullptr;
  CLI::Option* max_flops_opt = nullptr;
  CLI::Option* max_depth_opt = nullptr;
  CLI::Option* classes_opt = nullptr;
  CLI::Option* input_size_opt = nullptr;
};

struct ScoreOptions {
  bool all_s0 = false;
  std::vector<std::string> archs;
  std::string arch_file;
};

struct SearchOptions {
  std::string strategy = "evo";
  std::string fitness = "diswot";
  bool minimize = false;
  int budget = 0;
  CLI::Option* budget_opt = nullptr;
  bool reject_repeats = false;
  int population = 20;
  int iters = 100;
  double sample_ratio = 0.5;
  int topk = 3;
  bool retry_mutation = false;
  std::string summary;
};

struct RankOptionsCli {
  std::vector<std::string> scores;
  std::string accuracy;
  std::vector<std::string> proxies;
  int sample = 0;
  CLI::Option* sample_opt = nullptr;
  int seeds = 1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  bool tau_b = false;
  std::string out;
};

void add_space_options(CLI::App* app, CommonOptions& c) {
  app->add_option("--space", c.space, "Search space: s0, nb201, s2_cifar, s2_imagenet")
      ->capture_default_str();
  c.classes_opt = app->add_option("--classes", c.classes, "Override the number of classes")
                      ->check(CLI::PositiveNumber);
  c.input_size_opt = app->add_option("--input-size", c.input_size, "Override the input resolution")
                         ->check(CLI::PositiveNumber);
  c.max_params_opt = app->add_option("--max-params", c.max_params, "Parameter budget")
                         ->check(CLI::PositiveNumber);
  c.max_flops_opt = app->add_option("--max-flops", c.max_flops, "FLOP budget")
                        ->check(CLI::PositiveNumber);
  c.max_depth_opt = app->add_option("--max-depth", c.max_depth, "Depth budget")
                        ->check(CLI::PositiveNumber);
}

void add_scoring_options(CLI::App* app, CommonOptions& c) {
  app->add_option("--teacher", c.teacher, "Teacher arch id, or 'max'")->capture_default_str();
  app->add_option("--batch-size", c.batch_size, "Images per scoring batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* data = app->add_option("--data", c.data, "CIFAR binary batch file");
  app->add_flag("--synthetic", c.synthetic, "Use a seeded Gaussian batch (default)")->excludes(data);
  app->add_option("--seed", c.seeds, "Run seed(s); falls back to DISWOT_SEED")->delimiter(',');
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--init", c.init, "kaiming or gaussian")
      ->check(CLI::IsMember({"kaiming", "gaussian"}))
      ->capture_default_str();
  app->add_option("--gaussian-std", c.gaussian_std, "Std for --init gaussian")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--gradcam-source", c.gradcam_source, "fc (classifier weights) or grad")
      ->check(CLI::IsMember({"fc", "grad"}))
      ->capture_default_str();
  app->add_option("--normalization", c.normalization, "Gram normalization: row or matrix")
      ->check(CLI::IsMember({"row", "matrix"}))
      ->capture_default_str();
  app->add_option("--temperature", c.temperature, "Softmax temperature for kd_kl")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_space_options(app, c);
}

std::vector<std::uint64_t> resolve_seeds(const CommonOptions& c) {
  if (!c.seeds.empty()) return c.seeds;
  if (const char* env = std::getenv("DISWOT_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError("DISWOT_SEED must be an unsigned integer, got '" + s + "'");
    }
    return {v};
  }
  return {0};
}

SearchSpace make_space(const CommonOptions& c) {
  SearchSpace space = SearchSpace::make(parse_space_kind(c.space));
  if (c.classes_opt && c.classes_opt->count()) space.num_classes = c.classes;
  if (c.input_size_opt && c.input_size_opt->count()) space.input_size = c.input_size;
  if (c.max_params_opt->count()) space.constraints.max_params = c.max_params;
  if (c.max_flops_opt->count()) space.constraints.max_flops = c.max_flops;
  if (c.max_depth_opt->count()) space.constraints.max_depth = c.max_depth;
  return space;
}

ArchDescriptor resolve_teacher(const CommonOptions& c, const SearchSpace& space) {
  if (c.teacher == "max") return max_descriptor(space);
  ArchDescriptor d = parse_arch_id(c.teacher, space.kind);
  validate_descriptor(d, space);
  return d;
}

Batch make_batch(const CommonOptions& c, const SearchSpace& space, std::uint64_t run_seed) {
  if (c.data.empty()) {
    return synth_batch(c.batch_size, 3, space.input_size, space.input_size, space.num_classes,
                       batch_seed(run_seed));
  }
  if (space.input_size != 32) {
    throw UsageError("CIFAR batches are 32x32 but the space expects input size " +
                     std::to_string(space.input_size));
  }
  Batch b = load_cifar_batch(c.data, c.batch_size, batch_seed(run_seed));
  for (int label : b.labels) {
    if (label >= space.num_classes) {
      throw UsageError("data label " + std::to_string(label) + " does not fit " +
                       std::to_string(space.num_classes) + " classes (see --classes)");
    }
  }
  return b;
}

ScoringConfig make_scoring_config(const CommonOptions& c, std::vector<std::string> proxies) {
  ScoringConfig cfg;
  cfg.proxies = std::move(proxies);
  cfg.weight_source = c.gradcam_source == "grad" ? WeightSource::FcWeightGrads : WeightSource::FcWeights;
  cfg.normalization = c.normalization == "matrix" ? GramNormalization::MatrixL2 : GramNormalization::RowL2;
  cfg.temperature = c.temperature;
  cfg.init = c.init == "gaussian" ? InitScheme::Gaussian : InitScheme::Kaiming;
  cfg.gaussian_std = c.gaussian_std;
  return cfg;
}

ordered_json common_json(const CommonOptions& c, const SearchSpace& space,
                         const std::vector<std::uint64_t>& seeds) {
  ordered_json j;
  j["space"] = std::string(space_name(space.kind));
  j["num_classes"] = space.num_classes;
  j["input_size"] = space.input_size;
  j["teacher"] = c.teacher;
  j["teacher_arch_id"] = arch_id(resolve_teacher(c, space));
  j["batch_size"] = c.batch_size;
  j["data"] = c.data.empty() ? ordered_json("synthetic") : ordered_json(c.data);
  j["seeds"] = seeds;
  j["init"] = c.init;
  if (c.init == "gaussian") j["gaussian_std"] = c.gaussian_std;
  j["gradcam_source"] = c.gradcam_source;
  j["normalization"] = c.normalization;
  j["temperature"] = c.temperature;
  ordered_json cons = ordered_json::object();
  if (space.constraints.max_params) cons["max_params"] = *space.constraints.max_params;
  if (space.constraints.max_flops) cons["max_flops"] = *space.constraints.max_flops;
  if (space.constraints.max_depth) cons["max_depth"] = *space.constraints.max_depth;
  j["constraints"] = cons;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

std::vector<std::string> read_arch_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open arch file '" + path + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    const auto start = line.find_first_not_of(' ');
    if (start == std::string::npos || line[start] == '#') continue;
    ids.push_back(line.substr(start));
  }
  return ids;
}

int cmd_score(const CommonOptions& c, const ScoreOptions& s, std::ostream& out) {
  const SearchSpace space = make_space(c);
  std::vector<std::string> proxies = c.proxies.empty() ? std::vector<std::string>{"diswot"} : c.proxies;
  for (const auto& p : proxies) check_proxy_name(p);

  std::vector<ArchDescriptor> archs;
  if (s.all_s0) {
    if (space.kind != SpaceKind::S0) throw UsageError("--all-s0 requires --space s0");
    archs = enumerate_s0();
  }
  std::vector<std::string> ids = s.archs;
  if (!s.arch_file.empty()) {
    const auto more = read_arch_file(s.arch_file);
    ids.insert(ids.end(), more.begin(), more.end());
  }
  for (const auto& id : ids) {
    ArchDescriptor d = parse_arch_id(id, space.kind);
    validate_descriptor(d, space);
    archs.push_back(d);
  }
  if (archs.empty()) throw UsageError("nothing to score: pass --all-s0, --arch or --arch-file");

  const auto seeds = resolve_seeds(c);
  const ArchDescriptor teacher = resolve_teacher(c, space);
  std::vector<ScoreRow> rows;
  for (const std::uint64_t seed : seeds) {
    const ProxyEvaluator eval(space, teacher, make_batch(c, space, seed),
                              make_scoring_config(c, proxies), seed);
    std::vector<std::vector<ProxyScore>> results(archs.size());
    parallel_for(archs.size(), c.jobs, [&](std::size_t i) { results[i] = eval.score(archs[i]); });
    for (std::size_t i = 0; i < archs.size(); ++i) {
      const std::string id = arch_id(archs[i]);
      for (const auto& r : results[i]) rows.push_back({id, r.proxy_name, r.value, r.higher_is_better, seed});
    }
  }

  if (c.out.empty()) {
    write_scores_csv(out, rows);
    return 0;
  }
  write_scores_csv(c.out, rows);
  ordered_json cfg;
  cfg["command"] = "score";
  cfg["config"] = common_json(c, space, seeds);
  cfg["config"]["proxies"] = proxies;
  std::vector<std::string> arch_ids;
  for (const auto& a : archs) arch_ids.push_back(arch_id(a));
  cfg["config"]["archs"] = arch_ids;
  cfg["rows"] = rows.size();
  write_text(c.out + ".json", cfg.dump(2) + "\n");
  out << "wrote " << rows.size() << " rows to " << c.out << "\n";
  return 0;
}

int cmd_search(const CommonOptions& c, const SearchOptions& s, std::ostream& out) {
  const SearchSpace space = make_space(c);
  check_proxy_name(s.fitness);
  const auto seeds = resolve_seeds(c);
  if (seeds.size() != 1) throw UsageError("search takes a single --seed");
  const std::uint64_t seed = seeds.front();
  if (s.strategy != "evo" && s.strategy != "random") {
    throw UsageError("--strategy must be evo or random");
  }
  if (s.budget_opt->count() && s.budget < 1) throw UsageError("--budget must be at least 1");

  EvoConfig cfg;
  cfg.population_size = s.population;
  cfg.max_iterations = s.iters;
  cfg.sample_ratio = s.sample_ratio;
  cfg.topk = s.topk;
  cfg.master_seed = seed;
  cfg.retry_mutation = s.retry_mutation;
  cfg.jobs = c.jobs;
  if (s.strategy == "evo") validate_evo_config(cfg);
  const int budget = s.budget_opt->count() ? s.budget : s.population + s.iters;

  const ArchDescriptor teacher = resolve_teacher(c, space);
  const ProxyEvaluator eval(space, teacher, make_batch(c, space, seed),
                            make_scoring_config(c, {s.fitness}), seed);
  const Fitness fitness = [&](const ArchDescriptor& d) {
    ProxyScore p = eval.score(d).front();
    if (s.minimize) p.value = -p.value;
    return p;
  };

  const SearchState state = s.strategy == "evo"
                                ? evolve(space, fitness, cfg)
                                : random_search(space, fitness, budget, seed, s.reject_repeats);

  std::ostringstream jsonl;
  for (const auto& h : state.history) {
    ordered_json j;
    j["iter"] = h.iter;
    j["best_score"] = h.best_score;
    j["best_arch"] = arch_id(h.best_arch);
    j["evals"] = h.evals;
    jsonl << j.dump() << "\n";
  }

  ordered_json summary;
  summary["command"] = "search";
  ordered_json conf = common_json(c, space, seeds);
  conf["strategy"] = s.strategy;
  conf["fitness"] = s.fitness;
  conf["minimize"] = s.minimize;
  if (s.strategy == "evo") {
    conf["population"] = s.population;
    conf["iters"] = s.iters;
    conf["sample_ratio"] = s.sample_ratio;
    conf["topk"] = s.topk;
    conf["retry_mutation"] = s.retry_mutation;
  } else {
    conf["budget"] = budget;
    conf["reject_repeats"] = s.reject_repeats;
  }
  summary["config"] = conf;
  summary["best"] = {{"arch_id", arch_id(state.best.arch)},
                     {"arch", ordered_json::parse(arch_to_json(state.best.arch, space.kind))},
                     {"score", state.best.score.value},
                     {"params", count_params(state.best.arch, space)},
                     {"flops", count_flops(state.best.arch, space)},
                     {"depth", count_depth(state.best.arch, space)}};
  summary["evaluations"] = state.evaluations;
  summary["iterations"] = state.history.size();

  if (!c.out.empty()) {
    write_text(c.out, jsonl.str());
    write_text(s.summary.empty() ? c.out + ".summary.json" : s.summary, summary.dump(2) + "\n");
  } else if (!s.summary.empty()) {
    write_text(s.summary, summary.dump(2) + "\n");
  }
  out << "best " << arch_id(state.best.arch) << " " << s.fitness << "="
      << format_double(state.best.score.value) << " evals=" << state.evaluations << "\n";
  return 0;
}

int cmd_rank(const RankOptionsCli& r, std::ostream& out) {
  std::vector<ScoreRow> rows;
  for (const auto& path : r.scores) {
    auto more = read_scores_csv(path);
    rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  const AccuracyTable acc = load_accuracy_csv(r.accuracy);
  std::vector<std::string> proxies = r.proxies;
  if (proxies.empty()) {
    std::set<std::string> seen;
    for (const auto& row : rows) {
      if (seen.insert(row.proxy).second) proxies.push_back(row.proxy);
    }
  }
  RankOptions opts;
  if (r.sample_opt->count()) opts.sample_size = r.sample;
  opts.n_seeds = r.seeds;
  opts.seed = r.seed;
  if (!r.seed_opt->count()) {
    CommonOptions none;
    opts.seed = resolve_seeds(none).front();
  }
  opts.tau = r.tau_b ? TauVariant::B : TauVariant::A;

  std::vector<CorrelationReport> reports;
  for (const auto& p : proxies) reports.push_back(evaluate_proxy(rows, p, acc, opts));
  for (const auto& rep : reports) {
    if (rep.degenerate_seeds > 0) {
      std::cerr << "warning: " << rep.proxy_name << ": constant series in " << rep.degenerate_seeds
                << " repetition(s); coefficients reported as 0\n";
    }
  }
  if (!r.out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, reports);
    write_text(r.out, csv.str());
  }
  print_report_table(out, reports);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free student architecture search"};
  app.name("diswot");
  app.require_subcommand(1);

  CommonOptions score_common, search_common;
  ScoreOptions score_opts;
  SearchOptions search_opts;
  RankOptionsCli rank_opts;

  auto* score = app.add_subcommand("score", "Score architectures with training-free proxies");
  add_scoring_options(score, score_common);
  score->add_option("--proxy", score_common.proxies, "Proxy name(s), comma separated")->delimiter(',');
  score->add_flag("--all-s0", score_opts.all_s0, "Score all 64 S0 candidates");
  score->add_option("--arch", score_opts.archs, "Architecture id (repeatable)");
  score->add_option("--arch-file", score_opts.arch_file, "File with one architecture id per line");
  score->add_option("--out", score_common.out, "Score CSV path (default: stdout)");

  auto* search = app.add_subcommand("search", "Evolutionary or random search");
  add_scoring_options(search, search_common);
  search->add_option("--strategy", search_opts.strategy, "evo or random")->capture_default_str();
  search->add_option("--fitness,--proxy", search_opts.fitness, "Proxy used as fitness")->capture_default_str();
  search->add_flag("--minimize", search_opts.minimize, "Minimize the fitness instead");
  search_opts.budget_opt = search->add_option("--budget", search_opts.budget,
                                              "Evaluations for random search (default population+iters)");
  search->add_flag("--reject-repeats", search_opts.reject_repeats, "Random search draws distinct candidates");
  search->add_option("--population", search_opts.population, "Population size")->capture_default_str();
  search->add_option("--iters", search_opts.iters, "Evolution iterations")->capture_default_str();
  search->add_option("--sample-ratio", search_opts.sample_ratio, "Fraction of the population sampled per step")
      ->capture_default_str();
  search->add_option("--topk", search_opts.topk, "Parents are drawn from the pool's top k")->capture_default_str();
  search->add_flag("--retry-mutation", search_opts.retry_mutation, "Redraw constraint-violating children");
  search->add_option("--out", search_common.out, "Per-iteration JSONL path");
  search->add_option("--summary", search_opts.summary, "Summary JSON path (default <out>.summary.json)");

  auto* rank = app.add_subcommand("rank", "Correlate proxy scores with accuracies");
  rank->add_option("--scores", rank_opts.scores, "Score CSV file(s)")->required();
  rank->add_option("--accuracy", rank_opts.accuracy, "Accuracy CSV (arch_id,accuracy)")->required();
  rank->add_option("--proxy", rank_opts.proxies, "Proxies to report (default: all)")->delimiter(',');
  rank_opts.sample_opt = rank->add_option("--sample", rank_opts.sample, "Architectures sampled per repetition");
  rank->add_option("--seeds", rank_opts.seeds, "Repetitions")->capture_default_str();
  rank_opts.seed_opt = rank->add_option("--seed", rank_opts.seed, "Sampling seed; falls back to DISWOT_SEED");
  rank->add_flag("--tau-b", rank_opts.tau_b, "Use tie-corrected Kendall tau-b");
  rank->add_option("--out", rank_opts.out, "Report CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(score)) return cmd_score(score_common, score_opts, out);
    if (app.got_subcommand(search)) return cmd_search(search_common, search_opts, out);
    return cmd_rank(rank_opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace diswot::cli
