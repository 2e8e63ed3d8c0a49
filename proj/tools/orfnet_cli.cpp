// Command-line front end; talks to the library only through the C API.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "orfnet/orfnet.h"

namespace {

struct Flags {
  std::string config;
  std::string out = "./out";
  int workers = 0;
  bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "experiment config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--workers", f.workers,
                  "worker threads (default: available parallelism)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", f.quiet, "suppress progress and warnings");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed online zeroth-order optimization with residual feedback"};
  app.require_subcommand(1);
  app.set_version_flag("--version", orfnet_version());

  Flags flags;
  using Command = orfnet_status (*)(const orfnet_config*, const orfnet_run_options*);
  struct Entry {
    const char* name;
    const char* help;
    Command cmd;
  };
  const Entry entries[] = {
      {"run", "run repetitions and write traces and a summary", orfnet_cmd_run},
      {"compare", "paired ORF vs one-point comparison", orfnet_cmd_compare},
      {"sweep", "regret over a horizon grid with an exponent fit", orfnet_cmd_sweep},
      {"validate", "numerical checks of the mixing, smoothing and estimator properties",
       orfnet_cmd_validate},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_flags(sub, flags);
    subs.emplace_back(sub, e.cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ORFNET_ERR_CONFIG;
  }

  orfnet_config* cfg = nullptr;
  if (orfnet_config_load(flags.config.c_str(), &cfg) != ORFNET_OK) {
    std::fprintf(stderr, "config error: %s\n", orfnet_last_error());
    return ORFNET_ERR_CONFIG;
  }
  orfnet_run_options opts{flags.out.c_str(),
                          flags.workers > 0 ? flags.workers : orfnet_default_workers(),
                          flags.quiet ? 1 : 0};
  orfnet_status status = ORFNET_OK;
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) status = cmd(cfg, &opts);
  }
  orfnet_config_free(cfg);

  switch (status) {
    case ORFNET_OK:
      return 0;
    case ORFNET_ERR_CONFIG:
    case ORFNET_ERR_ARGUMENT:
      std::fprintf(stderr, "config error: %s\n", orfnet_last_error());
      return 1;
    case ORFNET_ERR_VALIDATION:
      std::fprintf(stderr, "validation failed: %s\n", orfnet_last_error());
      return 2;
    default:
      std::fprintf(stderr, "runtime error: %s\n", orfnet_last_error());
      return 3;
  }
}
