// hedgemix: run, serve or replay experiments.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hedgemix/harness.hpp"
#include "hedgemix/server.hpp"

using namespace hedgemix;

namespace {

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::string out;
  std::string env;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "run only this seed");
  app->add_option("--steps", o.steps, "override the step count");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--env", o.env, "domain: rps, taxi or epidemic");
}

ExperimentConfig resolve(const Overrides& o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(o.config + ": " + e.what());
    }
  }
  if (!o.env.empty()) {
    if (j.contains("domain") && j["domain"] != o.env) j.erase("env");  // env params belong to the old domain
    j["domain"] = o.env;
  }
  if (o.seed) j["seeds"] = {*o.seed};
  if (o.steps) j["steps"] = *o.steps;
  if (!o.out.empty()) j["output"] = o.out;
  return ExperimentConfig::from_json(j);
}

void set_log_level() {
  const char* level = std::getenv("HEDGEMIX_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"DynamicHedgeAIXI experiments"};
  app.require_subcommand(1);

  Overrides run_o, serve_o, replay_o;
  auto* run = app.add_subcommand("run", "run every seed in batch mode");
  add_common(run, run_o);

  auto* serve = app.add_subcommand("serve", "run one seed behind the control service");
  add_common(serve, serve_o);
  std::string listen = "127.0.0.1:8750";
  bool exit_when_done = false;
  serve->add_option("--listen", listen, "listen address host:port");
  serve->add_flag("--exit-when-done", exit_when_done, "stop serving once the run finishes");

  auto* replay = app.add_subcommand("replay", "rerun with a recorded command log");
  add_common(replay, replay_o);
  std::string commands;
  replay->add_option("--commands", commands, "commands.jsonl from a live run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto summary = run_experiment(resolve(run_o));
      std::cout << "wrote " << summary.output.string() << '\n';
    } else if (replay->parsed()) {
      ExperimentConfig cfg = resolve(replay_o);
      json j = cfg.to_json();
      j["commands"] = load_command_log(commands);
      cfg = ExperimentConfig::from_json(j);
      auto summary = run_experiment(cfg);
      std::cout << "wrote " << summary.output.string() << '\n';
    } else {
      ExperimentConfig cfg = resolve(serve_o);
      if (cfg.injection_mode == "simulated")
        throw ConfigError("serve needs injection_mode live or both");
      const auto seed = cfg.seeds.front();
      std::filesystem::create_directories(cfg.output);
      {
        std::ofstream f(std::filesystem::path(cfg.output) / "config.json");
        f << cfg.to_json().dump(2) << '\n';
      }
      auto [host, port] = parse_listen(listen);
      ControlServer server(cfg, seed, std::filesystem::path(cfg.output) / ("seed_" + std::to_string(seed)));
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      int bound = server.start(host, port);
      std::cout << "listening on " << host << ':' << bound << std::endl;
      bool done = false;
      std::thread waiter([&] {
        server.wait_done();
        done = true;
      });
      while (!interrupted && !(exit_when_done && done)) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      waiter.join();
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
