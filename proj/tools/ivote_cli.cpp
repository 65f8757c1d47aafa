// ivote command line: params, run, resume, attack.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ivote/harness.hpp"

using namespace ivote;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kRegime = 3, kIo = 4 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

struct RunOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "table";
  std::string snapshot;
  std::string events;
  std::optional<std::size_t> stop_after;
};

/// Steps the run, writes snapshot/events/report as requested.
void drive(ElectionRun& run, const RunOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.stop_after) {
    run.run_until(*o.stop_after);
  } else {
    run.run_until(run.schedule().size());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.snapshot.empty()) write_out(o.snapshot, run.snapshot().dump(2) + "\n");
  if (!o.events.empty()) write_out(o.events, run.event_log());
  if (!run.done()) {
    std::cerr << "stopped after " << run.cursor() << " of " << run.schedule().size() << " events\n";
    return;
  }
  const RunReport rep = run.report();
  write_out(o.out, o.format == "records" ? rep.to_records() : rep.to_table());
  std::cerr << "wall time " << secs << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ivote: election simulator and collusion-attack harness"};
  app.require_subcommand(1);

  int bits = 0;
  std::uint64_t params_seed = 0;
  std::string params_out;
  auto* params = app.add_subcommand("params", "emit field parameters (p, q, g) as text");
  params->add_option("--bits", bits, "bit length of p (>= 5)")->required();
  params->add_option("--seed", params_seed, "seed");
  params->add_option("--out", params_out, "output file (default stdout)");

  RunOpts run_opts;
  auto* run = app.add_subcommand("run", "simulate an election from a config file");
  run->add_option("--config", run_opts.config, "election config (JSON)")->required();
  run->add_option("--seed", run_opts.seed, "override the config seed");
  run->add_option("--out", run_opts.out, "report file (default stdout)");
  run->add_option("--format", run_opts.format, "table or records")->check(CLI::IsMember({"table", "records"}));
  run->add_option("--snapshot", run_opts.snapshot, "write a snapshot after the last processed event");
  run->add_option("--events", run_opts.events, "write the message log");
  run->add_option("--stop-after", run_opts.stop_after, "stop after this many events");

  RunOpts resume_opts;
  auto* resume = app.add_subcommand("resume", "continue a run from a snapshot");
  resume->add_option("--snapshot", resume_opts.config, "snapshot to resume from")->required();
  resume->add_option("--out", resume_opts.out, "report file (default stdout)");
  resume->add_option("--format", resume_opts.format, "table or records")->check(CLI::IsMember({"table", "records"}));
  resume->add_option("--save", resume_opts.snapshot, "write a snapshot when stopping");
  resume->add_option("--events", resume_opts.events, "write the message log");
  resume->add_option("--stop-after", resume_opts.stop_after, "stop after this many events in total");

  std::string attack_config, attack_out, attack_format = "table";
  std::optional<std::uint64_t> attack_seed;
  auto* attack = app.add_subcommand("attack", "run a server-collusion attack");
  attack->add_option("--config", attack_config, "attack config (JSON)")->required();
  attack->add_option("--seed", attack_seed, "override the config seed");
  attack->add_option("--out", attack_out, "report file (default stdout)");
  attack->add_option("--format", attack_format, "table or records")->check(CLI::IsMember({"table", "records"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*params) {
      write_out(params_out, emit_params(bits, params_seed));
    } else if (*run) {
      ElectionConfig config = election_config_from_json(read_json(run_opts.config));
      if (run_opts.seed) config.seed = *run_opts.seed;
      ElectionRun r(config);
      drive(r, run_opts);
    } else if (*resume) {
      ElectionRun r = ElectionRun::resume(read_json(resume_opts.config));
      drive(r, resume_opts);
    } else if (*attack) {
      AttackConfig config = attack_config_from_json(read_json(attack_config));
      if (attack_seed) config.seed = *attack_seed;
      const AttackReport rep = run_attack(config);
      write_out(attack_out, attack_format == "records" ? rep.to_records() : rep.to_table());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParamError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kConfig;
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << "\n";
    return kRegime;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}
