#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latentpose/config.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/pipeline.hpp"

namespace fs = std::filesystem;
using namespace latentpose;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (const char* root = std::getenv("LATENTPOSE_OUT"); root && *root && c.config.empty())
    cfg.output_dir = root;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg, const char* sub) {
  if (!c.out.empty()) return c.out;
  return fs::path(cfg.output_dir) / sub;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config file (key = value)");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "override the config seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latentpose: latent structured 3D pose regression experiments"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  add_common(gen, gen_opts);
  gen->add_flag("--force", gen_opts.force, "overwrite an existing dataset directory");

  Common train_opts;
  std::string stage_name, train_data, train_models;
  auto* train = app.add_subcommand("train", "train one pipeline stage");
  add_common(train, train_opts);
  train->add_option("--stage", stage_name, "ae|latent|finetune|direct|pca|extrafc")->required();
  train->add_option("--data", train_data, "dataset directory (default <output.dir>/data)");
  train->add_option("--models", train_models, "model directory (default <output.dir>/models)");
  train->add_flag("--force", train_opts.force, "overwrite an existing model of this stage");

  Common eval_opts;
  std::string eval_data, eval_models;
  bool references = false;
  auto* eval = app.add_subcommand("eval", "evaluate trained models on the test split");
  add_common(eval, eval_opts);
  eval->add_option("--data", eval_data, "dataset directory (default <output.dir>/data)");
  eval->add_option("--models", eval_models, "model directory (default <output.dir>/models)");
  eval->add_flag("--references", references, "add ground-truth and untrained reference rows");

  Common sweep_opts;
  std::string sweep_data, axis = "ae-layers";
  std::vector<std::string> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "compare auto-encoder configurations");
  add_common(sweep, sweep_opts);
  sweep->add_option("--data", sweep_data, "dataset directory (default <output.dir>/data)");
  sweep->add_option("--axis", axis, "sweep axis")->check(CLI::IsMember({"ae-layers"}));
  sweep->add_option("--values", sweep_values, "layer specs, e.g. 500 2000 300-300")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      const auto cfg = resolve_config(gen_opts);
      run_gen_data(cfg, out_dir(gen_opts, cfg, "data"), gen_opts.force, std::cout);
    } else if (*train) {
      const Stage stage = parse_stage(stage_name);
      const auto cfg = resolve_config(train_opts);
      const fs::path data = train_data.empty() ? fs::path(cfg.output_dir) / "data" : fs::path(train_data);
      fs::path models = !train_models.empty() ? fs::path(train_models)
                                              : out_dir(train_opts, cfg, "models");
      run_train(cfg, data, models, stage, train_opts.force, std::cout);
    } else if (*eval) {
      const auto cfg = resolve_config(eval_opts);
      const fs::path data = eval_data.empty() ? fs::path(cfg.output_dir) / "data" : fs::path(eval_data);
      const fs::path models = eval_models.empty() ? fs::path(cfg.output_dir) / "models" : fs::path(eval_models);
      run_eval(cfg, data, models, out_dir(eval_opts, cfg, "eval"), {references}, std::cout);
    } else if (*sweep) {
      const auto cfg = resolve_config(sweep_opts);
      std::vector<std::vector<std::size_t>> values;
      for (const auto& v : sweep_values) values.push_back(parse_layer_spec(v));
      const fs::path data = sweep_data.empty() ? fs::path(cfg.output_dir) / "data" : fs::path(sweep_data);
      const auto rows = run_sweep(cfg, data, values, out_dir(sweep_opts, cfg, "sweep"), std::cout);
      for (const auto& r : rows)
        if (!r.ok) return kRuntime;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
