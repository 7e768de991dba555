// pisa: synthetic data generation, training, evaluation and experiments.

#include <CLI11.hpp>
#include <iostream>

#include "pisa/app/commands.hpp"
#include "pisa/common/errors.hpp"

int main(int argc, char** argv) {
  using namespace pisa;
  CLI::App cli{"Session purchase-intent prediction from item content"};
  cli.require_subcommand(1);

  std::string config_path;
  app::Overrides o;
  bool force = false;
  std::string model_kind = "content";
  std::vector<std::string> model_files;

  // Options are accepted before or after the subcommand name; subcommands inherit this.
  cli.fallthrough();

  cli.add_option("--config", config_path, "JSON run configuration");
  cli.add_option("--seed", o.seed, "global seed");
  cli.add_option("--out", o.out, "output directory");
  cli.add_option("--catalog", o.catalog, "catalog TSV");
  cli.add_option("--events", o.events, "events TSV");
  cli.add_option("--embedding", o.embedding, "embedding component file");

  auto* gen = cli.add_subcommand("gen-data", "write a synthetic catalog and event log");
  gen->add_flag("--force", force, "overwrite existing files");
  auto* embed = cli.add_subcommand("train-embed", "train the category-supervised embedding component");
  auto* train = cli.add_subcommand("train", "train one session predictor");
  train->add_option("--model-kind", model_kind, "content|integrated|baseline")
      ->check(CLI::IsMember({"content", "integrated", "baseline"}));
  auto* eval = cli.add_subcommand("evaluate", "score model files on the test split");
  eval->add_option("--model", model_files, "model file (repeatable)")->required();
  auto* exp = cli.add_subcommand("experiment", "run an all-data, cold-start or random-removal experiment");
  exp->add_option("--protocol", o.protocol, "all-data|cold-start|random-removal")
      ->check(CLI::IsMember({"all-data", "cold-start", "random-removal"}));
  exp->add_option("--x-list", o.x_list, "comma separated removal fractions");
  exp->add_option("--workers", o.workers, "parallel conditions")->check(CLI::PositiveNumber);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kUsage;
  }

  try {
    auto cfg = app::load_config(config_path.empty() ? std::nullopt
                                                    : std::optional<std::filesystem::path>(config_path));
    app::apply_overrides(cfg, o);
    if (*gen) app::cmd_gen_data(cfg, force, std::cout);
    if (*embed) app::cmd_train_embed(cfg, std::cout);
    if (*train) app::cmd_train(cfg, models::parse_model_kind(model_kind), std::cout);
    if (*eval) app::cmd_evaluate(cfg, model_files, std::cout);
    if (*exp) app::cmd_experiment(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code_for(e);
  }
  return app::kOk;
}
