#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Non-stationary spatio-temporal Gaussian random fields from advection-diffusion SPDEs"};
  app.require_subcommand(1);

  stadr::cli::Overrides ov;
  std::string command;
  for (const auto& name : stadr::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", ov.config, "key = value configuration file");
    if (name == "simulate" || name == "fit" || name == "predict" || name == "score")
      sub->get_option("--config")->required();
    sub->add_option("--seed", ov.seed, "master seed");
    sub->add_option("--out", ov.out, "output directory");
    sub->add_option("--workers", ov.workers, "worker threads (default: STADR_WORKERS or all cores)");
    sub->add_option("--model", ov.model, "nstat-ad, stat-ad, nstat-sep or nstat-true")
        ->check(CLI::IsMember({"nstat-ad", "stat-ad", "nstat-sep", "nstat-true"}));
    sub->add_option("--scale", ov.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--n", ov.count, "number of realizations (simulate)");
    sub->callback([&command, name] { command = name; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return stadr::cli::run_command(command, ov, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "stadr " << command << ": " << e.what() << '\n';
    return 1;
  }
}
