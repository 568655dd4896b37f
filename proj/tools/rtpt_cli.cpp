// Command-line front end: attack generation, method evaluation, the ablation
// grid, report emission, and diagnostic plots over the run config.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtpt/rtpt.hpp"

namespace fs = std::filesystem;
using namespace rtpt;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.preset.empty()) cfg = RunConfig::preset(args.preset);
  if (!args.config_path.empty()) {
    RunConfig from_file = load_run_config(args.config_path);
    cfg = from_file;  // explicit file wins over preset defaults
  }
  return cfg;
}

struct LoadedWorld {
  BackendPtr backend;
  Dataset dataset;
  ClassHead attacker_head;
};

LoadedWorld load_world(const RunConfig& cfg) {
  LoadedWorld world;
  world.backend = make_backend(cfg.backend);
  world.dataset = make_dataset(cfg.dataset, *world.backend);
  world.attacker_head =
      build_class_head(*world.backend, world.backend->init_prompt(cfg.attack.prompt_template),
                       world.dataset.class_names, cfg.method.temperature);
  return world;
}

std::vector<MethodConfig> parse_methods(const RunConfig& cfg, const std::string& csv) {
  std::vector<MethodConfig> methods;
  std::stringstream stream(csv);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    MethodConfig m = cfg.method;
    m.method = method_from_name(token);
    methods.push_back(m);
  }
  if (methods.empty()) throw ConfigError("no methods given");
  return methods;
}

std::vector<EvalCondition> parse_conditions(const RunConfig& cfg, const std::string& csv,
                                            const LoadedWorld& world) {
  std::vector<EvalCondition> conditions;
  std::stringstream stream(csv);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token == "clean") {
      conditions.push_back(EvalCondition::make_clean());
    } else if (token == "attack") {
      conditions.push_back(EvalCondition::make_attack(cfg.attack, world.dataset,
                                                      world.backend->info().name));
    } else if (!token.empty()) {
      throw ConfigError("unknown condition (use clean/attack): " + token);
    }
  }
  if (conditions.empty()) throw ConfigError("no conditions given");
  return conditions;
}

void write_reports(const std::vector<EvalRecord>& records, const fs::path& out_dir) {
  const ReportTable table = compute_metrics(records);
  write_csv(table, (out_dir / "report.csv").string());
  std::ofstream md(out_dir / "report.md");
  md << to_markdown(table);
  std::cout << to_text(table);
}

int cmd_attack(const RunConfig& cfg) {
  LoadedWorld world = load_world(cfg);
  const AttackCache cache = generate_and_cache(*world.backend, world.attacker_head,
                                               world.dataset, cfg.attack, cfg.cache_dir,
                                               cfg.workers);
  long long fooled = 0;
  for (const auto& r : cache.records) {
    fooled += r.attacker_prediction != r.clean_label ? 1 : 0;
  }
  std::cout << (cache.reused ? "reused cache " : "wrote cache ") << cache.dir << "\n"
            << "  samples: " << cache.records.size() << "\n"
            << "  attacker success: " << fooled << "/" << cache.records.size() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& methods_csv,
             const std::string& conditions_csv, bool no_resume, bool log_traces) {
  LoadedWorld world = load_world(cfg);
  fs::create_directories(cfg.out_dir);
  save_run_config(cfg, (fs::path(cfg.out_dir) / "config.json").string());

  RunOptions opts;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  opts.resume = !no_resume;
  opts.record_file = (fs::path(cfg.out_dir) / "records.jsonl").string();
  opts.config_hash = config_hash(cfg);
  opts.log_objective_trace = log_traces;

  const auto records = run_eval(*world.backend, world.dataset,
                                parse_methods(cfg, methods_csv),
                                parse_conditions(cfg, conditions_csv, world),
                                cfg.cache_dir, opts);
  write_reports(records, cfg.out_dir);
  std::cout << "records: " << opts.record_file << "\n";
  return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, const std::string& conditions_csv) {
  LoadedWorld world = load_world(cfg);
  fs::create_directories(cfg.out_dir);
  save_run_config(cfg, (fs::path(cfg.out_dir) / "config.json").string());

  std::vector<MethodConfig> rows;
  const AblationFlags grid[] = {{false, false, false}, {false, false, true},
                                {true, false, false},  {true, false, true},
                                {true, true, false},   {true, true, true}};
  for (const auto& flags : grid) {
    MethodConfig m = cfg.method;
    m.method = Method::kAblation;
    m.ablation = flags;
    rows.push_back(m);
  }

  RunOptions opts;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  opts.record_file = (fs::path(cfg.out_dir) / "records.jsonl").string();
  opts.config_hash = config_hash(cfg);

  const auto records = run_eval(*world.backend, world.dataset, rows,
                                parse_conditions(cfg, conditions_csv, world),
                                cfg.cache_dir, opts);
  write_reports(records, cfg.out_dir);
  return kExitOk;
}

int cmd_report(const std::string& records_path, const std::string& out_dir) {
  const auto records = read_record_file(records_path);
  if (records.empty()) throw InputError("no records in " + records_path);
  fs::create_directories(out_dir);
  write_reports(records, out_dir);
  return kExitOk;
}

Dataset head_subset(const Dataset& full, std::size_t count) {
  Dataset sub = full;
  if (count < full.size()) {
    sub.samples.assign(full.samples.begin(),
                       full.samples.begin() + static_cast<long>(count));
    sub.name = full.name + "-sub" + std::to_string(count);
  }
  return sub;
}

int cmd_plot_weights(const RunConfig& cfg, int sample_index, bool adversarial,
                     const std::string& out_file) {
  LoadedWorld world = load_world(cfg);
  if (sample_index < 0 || static_cast<std::size_t>(sample_index) >= world.dataset.size()) {
    throw InputError("sample index out of range");
  }
  const Sample& sample = world.dataset.samples[static_cast<std::size_t>(sample_index)];
  Image image = sample.image;
  if (adversarial) {
    AttackSpec per = cfg.attack;
    per.seed = sample_seed(cfg.attack.seed, static_cast<std::uint64_t>(sample_index));
    image = run_attack(*world.backend, world.attacker_head, sample.image, sample.label, per,
                       sample.id)
                .image;
  }
  const auto outcome =
      rtpt_infer(*world.backend, world.dataset.class_names, image, cfg.method,
                 sample_seed(cfg.seed, static_cast<std::uint64_t>(sample_index)), sample.id);
  write_weight_bars_svg(outcome.view_weights, out_file,
                        std::string("per-view weights, sample ") + sample.id +
                            (adversarial ? " (attacked)" : " (clean)"));
  std::cout << "wrote " << out_file << "\n";
  return kExitOk;
}

int cmd_plot_sweep_k(const RunConfig& cfg, const std::vector<int>& ks, std::size_t samples,
                     const std::string& out_file) {
  LoadedWorld world = load_world(cfg);
  const Dataset subset = head_subset(world.dataset, samples);
  const AttackCache cache = generate_and_cache(*world.backend, world.attacker_head, subset,
                                               cfg.attack, cfg.cache_dir, cfg.workers);
  std::vector<double> xs;
  std::vector<double> acc_curve, rob_curve;
  for (int k : ks) {
    MethodConfig m = cfg.method;
    m.method = Method::kRtpt;
    m.neighbors = k;
    long long acc = 0, rob = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const Sample& s = subset.samples[i];
      const auto clean = run_inference(*world.backend, subset.class_names, s.image, m,
                                       sample_seed(cfg.seed, i), s.id);
      const auto attacked =
          run_inference(*world.backend, subset.class_names, cache.records[i].image, m,
                        sample_seed(cfg.seed, i), s.id);
      acc += clean.predicted_class == s.label ? 1 : 0;
      rob += attacked.predicted_class == s.label ? 1 : 0;
    }
    xs.push_back(k);
    acc_curve.push_back(100.0 * static_cast<double>(acc) / static_cast<double>(subset.size()));
    rob_curve.push_back(100.0 * static_cast<double>(rob) / static_cast<double>(subset.size()));
    std::cout << "K=" << k << " Acc=" << acc_curve.back() << " Rob=" << rob_curve.back()
              << "\n";
  }
  write_curves_svg(xs, {{"Acc.", acc_curve}, {"Rob.", rob_curve}}, out_file,
                   "neighbor-count sensitivity", "neighbors K", "accuracy (%)");
  std::cout << "wrote " << out_file << "\n";
  return kExitOk;
}

int cmd_plot_templates(const RunConfig& cfg, std::size_t samples, const std::string& out_file) {
  // Attack transfer across the attacker's prompt template choice.
  const std::vector<std::string> templates = {
      "a photo of a []",       "a bad photo of the []", "a origami []",
      "a photo of the large []", "a toy []",            "art of the []"};
  LoadedWorld world = load_world(cfg);
  const Dataset subset = head_subset(world.dataset, samples);

  std::vector<double> xs;
  std::vector<double> zs_curve, rtpt_curve;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    AttackSpec spec = cfg.attack;
    spec.prompt_template = templates[t];
    const ClassHead attacker_head =
        build_class_head(*world.backend, world.backend->init_prompt(spec.prompt_template),
                         subset.class_names, cfg.method.temperature);
    const AttackCache cache = generate_and_cache(*world.backend, attacker_head, subset, spec,
                                                 cfg.cache_dir, cfg.workers);
    long long zs = 0, rt = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const Sample& s = subset.samples[i];
      const Image& adv = cache.records[i].image;
      zs += zeroshot_infer(*world.backend, subset.class_names, adv, cfg.method,
                           sample_seed(cfg.seed, i), s.id)
                    .predicted_class == s.label
                ? 1
                : 0;
      rt += rtpt_infer(*world.backend, subset.class_names, adv, cfg.method,
                       sample_seed(cfg.seed, i), s.id)
                    .predicted_class == s.label
                ? 1
                : 0;
    }
    xs.push_back(static_cast<double>(t));
    zs_curve.push_back(100.0 * static_cast<double>(zs) / static_cast<double>(subset.size()));
    rtpt_curve.push_back(100.0 * static_cast<double>(rt) / static_cast<double>(subset.size()));
    std::cout << "P" << t << " (" << templates[t] << ") zeroshot=" << zs_curve.back()
              << " rtpt=" << rtpt_curve.back() << "\n";
  }
  write_curves_svg(xs, {{"zeroshot", zs_curve}, {"rtpt", rtpt_curve}}, out_file,
                   "attack transfer across prompt templates", "template index P0..P5",
                   "adversarial accuracy (%)");
  std::cout << "wrote " << out_file << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"test-time adversarial defense workbench"};
  app.require_subcommand(1);
  app.fallthrough();  // parent options may appear after the subcommand

  CommonArgs common;
  app.add_option("-c,--config", common.config_path, "run config JSON file");
  app.add_option("--preset", common.preset, "named preset: paper-rn50 | paper-vit | toy-benchmark");

  // Shared overrides applied after config resolution.
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override;
  std::optional<std::string> out_override, cache_override, dataset_override;
  app.add_option("--seed", seed_override, "global seed");
  app.add_option("--workers", workers_override, "worker thread count");
  app.add_option("--out", out_override, "output directory");
  app.add_option("--cache-dir", cache_override, "attack cache root");
  app.add_option("--dataset", dataset_override, "dataset kind: toy | folder");

  auto* attack_cmd = app.add_subcommand("attack", "generate and cache adversarial examples");
  std::optional<std::string> family;
  std::optional<double> eps, step_size;
  std::optional<int> steps;
  std::optional<std::string> templ;
  std::optional<std::uint64_t> attack_seed;
  attack_cmd->add_option("--family", family, "fgsm | pgd | cw | deepfool");
  attack_cmd->add_option("--eps", eps, "budget in /255 units");
  attack_cmd->add_option("--steps", steps, "iteration count");
  attack_cmd->add_option("--step-size", step_size, "step size in /255 units");
  attack_cmd->add_option("--template", templ, "attacker prompt template");
  attack_cmd->add_option("--attack-seed", attack_seed, "attack RNG seed");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate methods over conditions");
  std::string methods_csv = "zeroshot,ensemble,tpt,rtpt";
  std::string conditions_csv = "clean,attack";
  bool no_resume = false;
  bool log_traces = false;
  eval_cmd->add_option("--methods", methods_csv, "comma list: zeroshot,ensemble,tpt,rtpt");
  eval_cmd->add_option("--conditions", conditions_csv, "comma list: clean,attack");
  eval_cmd->add_flag("--no-resume", no_resume, "ignore existing records");
  eval_cmd->add_flag("--log-traces", log_traces, "record per-sample tuning loss traces");

  auto* ablate_cmd = app.add_subcommand("ablate", "run the six-row ablation grid");
  std::string ablate_conditions = "clean,attack";
  ablate_cmd->add_option("--conditions", ablate_conditions, "comma list: clean,attack");

  auto* report_cmd = app.add_subcommand("report", "aggregate a record file into tables");
  std::string records_path;
  report_cmd->add_option("--records", records_path, "records.jsonl path")->required();

  auto* plot_cmd = app.add_subcommand("plot", "emit SVG diagnostics");
  std::string plot_kind = "weights";
  int sample_index = 0;
  bool adversarial = false;
  std::string plot_out = "plot.svg";
  std::string ks_csv = "10,15,20,25,30";
  std::size_t plot_samples = 100;
  plot_cmd->add_option("--kind", plot_kind, "weights | sweep-k | templates");
  plot_cmd->add_option("--sample", sample_index, "sample index for weight bars");
  plot_cmd->add_flag("--adversarial", adversarial, "attack the sample first");
  plot_cmd->add_option("--file", plot_out, "output SVG path");
  plot_cmd->add_option("--ks", ks_csv, "neighbor counts for sweep-k");
  plot_cmd->add_option("--samples", plot_samples, "sample budget for sweeps");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(common);
    if (seed_override) cfg.seed = *seed_override;
    if (workers_override) cfg.workers = *workers_override;
    if (out_override) cfg.out_dir = *out_override;
    if (cache_override) cfg.cache_dir = *cache_override;
    if (dataset_override) cfg.dataset.name = *dataset_override;
    if (family) cfg.attack.family = family_from_name(*family);
    if (eps) cfg.attack.epsilon = *eps;
    if (steps) cfg.attack.steps = *steps;
    if (step_size) cfg.attack.step_size = *step_size;
    if (templ) cfg.attack.prompt_template = *templ;
    if (attack_seed) cfg.attack.seed = *attack_seed;

    if (attack_cmd->parsed()) {
      // For attack generation the global seed is the attack seed.
      if (seed_override && !attack_seed) cfg.attack.seed = *seed_override;
      return cmd_attack(cfg);
    }
    if (eval_cmd->parsed()) return cmd_eval(cfg, methods_csv, conditions_csv, no_resume, log_traces);
    if (ablate_cmd->parsed()) return cmd_ablate(cfg, ablate_conditions);
    if (report_cmd->parsed()) return cmd_report(records_path, cfg.out_dir);
    if (plot_cmd->parsed()) {
      if (plot_kind == "weights") {
        return cmd_plot_weights(cfg, sample_index, adversarial, plot_out);
      }
      if (plot_kind == "sweep-k") {
        std::vector<int> ks;
        std::stringstream stream(ks_csv);
        std::string token;
        while (std::getline(stream, token, ',')) {
          if (!token.empty()) ks.push_back(std::stoi(token));
        }
        return cmd_plot_sweep_k(cfg, ks, plot_samples, plot_out);
      }
      if (plot_kind == "templates") return cmd_plot_templates(cfg, plot_samples, plot_out);
      throw ConfigError("unknown plot kind: " + plot_kind);
    }
    return kExitFailure;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kExitIntegrityError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
