#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tlr/baselines.hpp"
#include "tlr/bench.hpp"
#include "tlr/detector.hpp"
#include "tlr/metrics.hpp"
#include "tlr/scenario.hpp"
#include "tlr/synth.hpp"

namespace fs = std::filesystem;
using namespace tlr;

namespace {

// Everything a subcommand may pull from --config and the shared flags.
struct RunConfig {
  std::string dataset;
  std::string variant = "tlr3";
  std::uint64_t seed = 1;
  std::vector<std::string> params;  // name=value
  std::string config;
  bool exhaustive = false;
  bool pacing = false;
};

// "key value" lines: variant, seed, exhaustive, pacing, param <name> <value>.
// Values given on the command line win.
void apply_config_file(RunConfig& rc, const CLI::App& cmd) {
  if (rc.config.empty()) return;
  std::ifstream in(rc.config);
  if (!in) throw Error("cannot open config " + rc.config);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> file_params;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value)) throw ParseError(line_no, "missing value for " + key);
    if (key == "variant") {
      if (cmd.count("--variant") == 0) rc.variant = value;
    } else if (key == "seed") {
      if (cmd.count("--seed") == 0) rc.seed = std::stoull(value);
    } else if (key == "exhaustive") {
      if (cmd.count("--exhaustive") == 0) rc.exhaustive = value == "1" || value == "true";
    } else if (key == "pacing") {
      if (cmd.count("--pacing") == 0) rc.pacing = value == "1" || value == "true";
    } else if (key == "param") {
      std::string v;
      if (!(ls >> v)) throw ParseError(line_no, "param needs a name and a value");
      file_params.push_back(value + "=" + v);
    } else {
      throw SchemaError("unknown config key '" + key + "'");
    }
  }
  file_params.insert(file_params.end(), rc.params.begin(), rc.params.end());
  rc.params = std::move(file_params);
}

TissueParams build_params(const RunConfig& rc) {
  TissueParams p;
  for (const auto& kv : rc.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--param expects name=value, got '" + kv + "'");
    p.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  p.validate();
  return p;
}

std::string header(std::uint64_t seed, const TissueParams& p, const Dataset& ds) {
  std::ostringstream h;
  h << "# seed " << seed << " params_hash " << params_hash(p) << " dataset_hash " << dataset_hash(ds)
    << '\n';
  return h.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ',');)
    if (!t.empty()) out.push_back(t);
  return out;
}

Roster load_roster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path);
  return read_roster(in);
}

const Scenario& pick_scenario(const Roster& r, const std::string& id) {
  if (r.scenarios.empty()) throw ValidationError("scenario file holds no scenarios");
  if (id.empty()) {
    if (r.scenarios.size() > 1)
      throw ValidationError("scenario file holds several scenarios; pass --scenario-id");
    return r.scenarios.front();
  }
  for (const auto& s : r.scenarios)
    if (s.id == id) return s;
  throw ValidationError("no scenario with id " + id);
}

std::vector<const Session*> resolve(const Dataset& ds, const std::vector<std::string>& ids) {
  std::vector<const Session*> out;
  for (const auto& id : ids) {
    const Session* s = ds.find(id);
    if (!s) throw ValidationError("session " + id + " not in dataset");
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_synth(const std::string& profile_path, std::uint64_t seed, const std::string& out_dir) {
  auto profile = SynthProfile::defaults();
  if (!profile_path.empty()) {
    std::ifstream in(profile_path);
    if (!in) throw Error("cannot open profile " + profile_path);
    profile = parse_synth_profile(in);
  }
  profile.validate();
  const auto ds = synth_dataset(seed, profile);
  save_dataset(out_dir, ds);

  const auto h = header(seed, TissueParams{}, ds);
  std::ifstream list_in(fs::path(out_dir) / "dataset.list");
  std::stringstream list;
  list << list_in.rdbuf();
  list_in.close();
  write_text(fs::path(out_dir) / "dataset.list", h + list.str());
  std::ostringstream prof;
  write_synth_profile(prof, profile);
  write_text(fs::path(out_dir) / "profile.txt", h + prof.str());
  std::cout << h << ds.sessions.size() << " sessions written to " << out_dir << '\n';
}

void cmd_train(const RunConfig& rc, const std::string& sessions, const std::string& roster,
               const std::string& scenario_id, const std::string& out) {
  const auto ds = load_dataset(rc.dataset);
  std::vector<std::string> ids;
  if (!sessions.empty()) {
    ids = split_csv(sessions);
  } else if (!roster.empty()) {
    ids = pick_scenario(load_roster(roster), scenario_id).training_ids;
  } else {
    for (const auto* s : ds.with_label(SessionLabel::normal)) ids.push_back(s->id);
  }
  const auto training = resolve(ds, ids);
  const std::span<const Session* const> span(training);

  std::ostringstream body;
  body << header(rc.seed, build_params(rc), ds);
  const auto sys = system_from_string(rc.variant);
  if (!sys) throw ValidationError("unknown variant '" + rc.variant + "'");
  switch (*sys) {
    case System::systrace:
      write_whitelist(body, train_syscall_whitelist(span));
      break;
    case System::sig1:
    case System::sig2:
    case System::sig3:
      write_whitelist(body, train_signal_whitelist(
                                span, static_cast<SigVariant>(static_cast<int>(*sys) -
                                                              static_cast<int>(System::sig1))));
      break;
    default:
      write_profile(body, train(span, engine_variant(*sys), ds.universe_size));
  }
  if (out.empty()) {
    std::cout << body.str();
  } else {
    write_text(out, body.str());
  }
}

struct DetectOutputs {
  std::string alerts;
  std::string probe_log;
  std::string result;
};

int cmd_detect(const RunConfig& rc, const std::string& profile_path, const std::string& scenario_path,
               const std::string& scenario_id, const DetectOutputs& outs) {
  const auto variant = variant_from_string(rc.variant);
  if (!variant) throw ValidationError("detect needs a tissue variant (tlr1, tlr2, tlr3, negsel)");
  const auto ds = load_dataset(rc.dataset);
  std::ifstream pin(profile_path);
  if (!pin) throw Error("cannot open profile " + profile_path);
  const auto profile = read_profile(pin);
  const auto roster = load_roster(scenario_path);
  const auto& scn = pick_scenario(roster, scenario_id);

  const std::set<std::string> trained(profile.training_ids.begin(), profile.training_ids.end());
  std::vector<std::string> overlap;
  for (const auto& e : scn.entries)
    if (trained.contains(e.session_id)) overlap.push_back(e.session_id);
  if (!overlap.empty()) {
    std::cerr << "warning: fold contamination: " << overlap.size() << " session(s) of scenario "
              << scn.id << " are in the profile's training set:";
    for (const auto& id : overlap) std::cerr << ' ' << id;
    std::cerr << '\n';
  }

  DetectorOptions opt;
  opt.variant = *variant;
  opt.seed = rc.seed;
  opt.params = build_params(rc);
  opt.exhaustive = rc.exhaustive;
  opt.pacing = rc.pacing;
  Detector det(profile, opt);
  const auto h = header(rc.seed, opt.params, ds);

  std::ostringstream probe;
  const auto timeline = project_signals(assemble_timeline(scn, ds), monitored_signals(*variant));
  const auto result = det.run(timeline, scn.id, false, outs.probe_log.empty() ? nullptr : &probe);

  std::ostringstream alerts;
  alerts << h;
  write_alert_log(alerts, result.alerts);
  std::ostringstream summary;
  summary << h << "scenario " << result.scenario_id << "\nvariant " << to_string(*variant)
          << "\nverdict " << (result.verdict_attack() ? "attack" : "normal") << "\nalerts "
          << result.alerts.size() << "\nticks " << result.ticks << "\nactivations "
          << result.activations << "\ntolerance_deletions " << result.tolerance_deletions << '\n';

  if (!outs.alerts.empty()) write_text(outs.alerts, alerts.str());
  if (!outs.probe_log.empty())
    write_text(outs.probe_log, h + "# tick iDC smDC mDC nTC aTC alerts\n" + probe.str());
  if (!outs.result.empty()) write_text(outs.result, summary.str());
  std::cout << summary.str();
  return 0;
}

void cmd_bench(const RunConfig& rc, const std::string& systems, unsigned threads,
               bool no_exhaustive_negsel, bool exhaustive_tlr, const std::string& out_dir) {
  const auto ds = load_dataset(rc.dataset);
  BenchConfig cfg;
  cfg.seed = rc.seed;
  cfg.params = build_params(rc);
  cfg.threads = threads;
  cfg.exhaustive_negsel = !no_exhaustive_negsel;
  cfg.exhaustive_tlr = exhaustive_tlr || rc.exhaustive;
  if (!systems.empty()) {
    cfg.systems.clear();
    for (const auto& name : split_csv(systems)) {
      const auto s = system_from_string(name);
      if (!s) throw ValidationError("unknown system '" + name + "'");
      cfg.systems.push_back(*s);
    }
  }
  const auto result = run_bench(ds, cfg);
  const auto table = result.header + emit_table(result.report);
  std::cout << table;
  if (out_dir.empty()) return;
  const fs::path dir(out_dir);
  write_text(dir / "report.txt", table);
  write_text(dir / "report.tsv", result.header + emit_delimited(result.report));
  write_text(dir / "verdicts.tsv", emit_verdicts(result));
  std::ostringstream roster;
  roster << result.header;
  write_roster(roster, result.roster);
  write_text(dir / "roster.txt", roster.str());
}

void cmd_scatter(const RunConfig& rc, const std::string& signal, const std::string& label,
                 const std::string& out) {
  const auto ds = load_dataset(rc.dataset);
  std::vector<const Session*> picked;
  for (const auto& s : ds.sessions) {
    if (label == "all" || to_string(s.label) == label) picked.push_back(&s);
  }
  if (label != "all" && !label_from_string(label)) throw ValidationError("unknown label '" + label + "'");
  const auto text = header(rc.seed, TissueParams{}, ds) +
                    emit_scatter(std::span<const Session* const>(picked), signal);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

void add_common(CLI::App* cmd, RunConfig& rc, bool with_dataset = true) {
  if (with_dataset) cmd->add_option("--dataset", rc.dataset, "dataset directory or dataset.list file")->required();
  cmd->add_option("--seed", rc.seed, "random seed");
  cmd->add_option("--param", rc.params, "tissue parameter override name=value (repeatable)");
  cmd->add_option("--config", rc.config, "config file (variant, seed, exhaustive, pacing, param)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tlr: immune-inspired process anomaly detection"};
  app.require_subcommand(1);

  RunConfig rc;

  auto* synth = app.add_subcommand("synth", "generate a synthetic session corpus");
  std::string profile_path, out_dir;
  synth->add_option("--profile", profile_path, "synthesis profile file");
  synth->add_option("--seed", rc.seed, "random seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train a detector profile or whitelist");
  std::string sessions, roster_path, scenario_id, out_path;
  add_common(train_cmd, rc);
  train_cmd->add_option("--variant", rc.variant, "tlr1|tlr2|tlr3|negsel|systrace|sig1|sig2|sig3");
  train_cmd->add_option("--sessions", sessions, "comma-separated training session ids");
  train_cmd->add_option("--roster", roster_path, "take the training fold of a roster scenario");
  train_cmd->add_option("--scenario-id", scenario_id, "scenario within --roster");
  train_cmd->add_option("--out", out_path, "output file (default stdout)");

  auto* detect = app.add_subcommand("detect", "replay one scenario through a trained detector");
  std::string scenario_path;
  DetectOutputs outs;
  add_common(detect, rc);
  detect->add_option("--variant", rc.variant, "tlr1|tlr2|tlr3|negsel");
  detect->add_option("--profile", profile_path, "trained profile")->required();
  detect->add_option("--scenario", scenario_path, "scenario file (roster format)")->required();
  detect->add_option("--scenario-id", scenario_id, "scenario within the file");
  detect->add_flag("--exhaustive", rc.exhaustive, "sweep the permissible set for receptor locks");
  detect->add_flag("--pacing", rc.pacing, "sleep one cell update period per tick");
  detect->add_option("--alerts", outs.alerts, "alert log output (\"tick syscall\")");
  detect->add_option("--probe-log", outs.probe_log, "population probe output");
  detect->add_option("--out", outs.result, "result summary output");

  auto* bench = app.add_subcommand("bench", "run the 40-scenario benchmark");
  std::string systems;
  unsigned threads = 1;
  bool no_exhaustive_negsel = false, exhaustive_tlr = false;
  add_common(bench, rc);
  bench->add_option("--systems", systems, "comma-separated systems (default all)");
  bench->add_option("--threads", threads, "parallel scenarios")->check(CLI::Range(1u, 256u));
  bench->add_flag("--no-exhaustive-negsel", no_exhaustive_negsel, "random locks for tlr-negsel");
  bench->add_flag("--exhaustive,--exhaustive-tlr", exhaustive_tlr, "sweep locks for tlr1..3 as well");
  bench->add_option("--out", out_dir, "directory for report and roster files");

  auto* scatter = app.add_subcommand("scatter", "per-session distinct signal levels");
  std::string signal = "rss", label = "all";
  add_common(scatter, rc);
  scatter->add_option("--signal", signal, "signal name");
  scatter->add_option("--label", label, "normal|attack|failed_attack|all");
  scatter->add_option("--out", out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      cmd_synth(profile_path, rc.seed, out_dir);
    } else if (*train_cmd) {
      apply_config_file(rc, *train_cmd);
      cmd_train(rc, sessions, roster_path, scenario_id, out_path);
    } else if (*detect) {
      apply_config_file(rc, *detect);
      return cmd_detect(rc, profile_path, scenario_path, scenario_id, outs);
    } else if (*bench) {
      apply_config_file(rc, *bench);
      cmd_bench(rc, systems, threads, no_exhaustive_negsel, exhaustive_tlr, out_dir);
    } else if (*scatter) {
      apply_config_file(rc, *scatter);
      cmd_scatter(rc, signal, label, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "tlr: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
