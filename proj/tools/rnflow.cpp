#include <rnflow/rnflow.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"rnflow: regularized Newton and SDC flow experiments"};
  app.require_subcommand(1);

  std::string run_cfg;
  bool dump = false;
  auto* run = app.add_subcommand("run", "integrate one configuration, write trajectory.csv and report.json");
  run->add_option("config", run_cfg, "config JSON")->required();
  run->add_flag("--dump-config", dump, "print the resolved config and exit");

  std::string sweep_cfg;
  std::string axis = "p";
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "run one experiment per value of a schedule or mu parameter");
  sweep->add_option("config", sweep_cfg, "config JSON")->required();
  sweep->add_option("--axis", axis, "p, c or mu")->required();
  sweep->add_option("--values", values, "comma-separated values, e.g. 0.5,0.75,1,2");

  std::string check_cfg;
  auto* check = app.add_subcommand("check", "print the hypothesis report without integrating");
  check->add_option("config", check_cfg, "config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rnflow::exit_code::kConfigError;
  }

  if (*run) return rnflow::cmd_run(run_cfg, dump, std::cout, std::cerr);
  if (*sweep) return rnflow::cmd_sweep(sweep_cfg, axis, values, std::cerr);
  return rnflow::cmd_check(check_cfg, std::cout, std::cerr);
}
