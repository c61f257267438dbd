#include "tlr/scenario.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tlr {

Timeline assemble_timeline(std::span<const Placement> placements) {
  std::vector<Placement> order(placements.begin(), placements.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const Placement& a, const Placement& b) { return a.start < b.start; });
  Timeline tl;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Session& s = *order[i].session;
    const Nanos start = order[i].start;
    if (start < 0) throw ValidationError("session " + s.id + " placed before time zero");
    if (i > 0) {
      const auto& prev = order[i - 1];
      if (start < prev.start + prev.session->duration)
        throw ValidationError("sessions " + prev.session->id + " and " + s.id +
                              " overlap; only sequential sessions are modelled");
    }
    for (const auto& e : s.events) tl.events.push_back({start + e.t, e.syscall});
    for (auto r : s.readings) {
      r.t += start;
      tl.readings.push_back(r);
    }
    tl.span = std::max(tl.span, start + s.duration);
  }
  // Sessions are disjoint and each is internally ordered, so only readings of
  // different signals need interleaving.
  std::stable_sort(tl.readings.begin(), tl.readings.end(),
                   [](const SignalReading& a, const SignalReading& b) { return a.t < b.t; });
  return tl;
}

Timeline project_signals(const Timeline& t, std::span<const Signal> keep) {
  Timeline out;
  out.events = t.events;
  out.span = t.span;
  for (const auto& r : t.readings)
    if (std::ranges::find(keep, r.name) != keep.end()) out.readings.push_back(r);
  return out;
}

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::normal: return "normal";
    case ScenarioKind::failure: return "failure";
    case ScenarioKind::attack: return "attack";
  }
  return "?";
}

bool Scenario::ground_truth_attack(const Dataset& ds) const {
  return std::ranges::any_of(entries, [&](const ScenarioEntry& e) {
    const Session* s = ds.find(e.session_id);
    return s && is_attack_truth(s->label);
  });
}

Timeline assemble_timeline(const Scenario& s, const SessionLookup& lookup) {
  std::vector<Placement> placements;
  Nanos at = 0;
  for (const auto& e : s.entries) {
    if (e.pause_after_s < 1 || e.pause_after_s > 10)
      throw ValidationError("scenario " + s.id + ": pause outside 1..10 s");
    const Session& session = lookup(e.session_id);
    placements.push_back({&session, at});
    at += session.duration + static_cast<Nanos>(e.pause_after_s) * kNanosPerSecond;
  }
  return assemble_timeline(placements);
}

Timeline assemble_timeline(const Scenario& s, const Dataset& ds) {
  return assemble_timeline(s, [&](const std::string& id) -> const Session& {
    const Session* found = ds.find(id);
    if (!found) throw ValidationError("scenario " + s.id + " references unknown session " + id);
    return *found;
  });
}

PartitionPlan partition_twofold(std::span<const std::string> ids, std::uint64_t seed,
                                int replicate) {
  if (ids.size() < 2) throw ValidationError("two-fold split needs at least 2 sessions");
  std::vector<std::string> shuffled(ids.begin(), ids.end());
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto half = static_cast<std::ptrdiff_t>(shuffled.size() / 2);
  PartitionPlan plan;
  plan.fold_a.assign(shuffled.begin(), shuffled.begin() + half);
  plan.fold_b.assign(shuffled.begin() + half, shuffled.end());
  plan.replicate = replicate;
  plan.seed = seed;
  return plan;
}

namespace {

Scenario make_scenario(const PartitionPlan& plan, bool train_on_a, ScenarioKind kind,
                       std::optional<AttackKind> inserted, const RosterInputs& in, Rng& rng) {
  Scenario s;
  s.kind = kind;
  s.inserted = inserted;
  s.replicate = plan.replicate;
  s.trained_on_a = train_on_a;
  s.partition_seed = plan.seed;
  s.training_ids = train_on_a ? plan.fold_a : plan.fold_b;
  std::vector<std::string> test = train_on_a ? plan.fold_b : plan.fold_a;
  std::shuffle(test.begin(), test.end(), rng);
  if (inserted) {
    s.insert_position = std::uniform_int_distribution<std::size_t>(0, test.size())(rng);
    test.insert(test.begin() + static_cast<std::ptrdiff_t>(s.insert_position),
                in.attacks.at(*inserted));
  }
  std::uniform_int_distribution<int> pause(1, 10);
  for (auto& id : test) s.entries.push_back({std::move(id), pause(rng)});
  return s;
}

std::string numbered(std::string_view prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%02d", n);
  return std::string(prefix) + buf;
}

}  // namespace

Roster build_roster(const RosterInputs& inputs, std::uint64_t seed) {
  for (auto k : kAttackKinds)
    if (!inputs.attacks.contains(k))
      throw ValidationError("roster needs attack session " + std::string(to_string(k)));
  Roster roster;
  roster.seed = seed;
  Rng rng(seed);
  int replicate = 0;
  auto next_plan = [&] {
    roster.partitions.push_back(partition_twofold(inputs.normals, rng(), ++replicate));
    return roster.partitions.back();
  };

  int normal_n = 0;
  for (int r = 0; r < kNormalReplicates; ++r) {
    const auto plan = next_plan();
    for (bool on_a : {true, false}) {
      auto s = make_scenario(plan, on_a, ScenarioKind::normal, std::nullopt, inputs, rng);
      s.id = numbered("normal", ++normal_n);
      roster.scenarios.push_back(std::move(s));
    }
  }

  std::vector<AttackKind> attack_order;
  for (auto [kind, times] : {std::pair{AttackKind::success01, 6}, {AttackKind::success02, 6},
                             {AttackKind::success03, 4}, {AttackKind::success04, 4}})
    attack_order.insert(attack_order.end(), static_cast<std::size_t>(times), kind);
  int attack_n = 0;
  for (std::size_t j = 0; j < attack_order.size(); j += 2) {
    const auto plan = next_plan();
    for (bool on_a : {true, false}) {
      const auto kind = attack_order[j + (on_a ? 0 : 1)];
      auto s = make_scenario(plan, on_a, ScenarioKind::attack, kind, inputs, rng);
      s.id = numbered("attack", ++attack_n);
      roster.scenarios.push_back(std::move(s));
    }
  }

  int failure_n = 0;
  for (int r = 0; r < 2; ++r) {
    const auto plan = next_plan();
    for (bool on_a : {true, false}) {
      auto s = make_scenario(plan, on_a, ScenarioKind::failure, AttackKind::failure01, inputs, rng);
      s.id = numbered("failure", ++failure_n);
      roster.scenarios.push_back(std::move(s));
    }
  }
  return roster;
}

RosterInputs roster_inputs(const Dataset& ds) {
  RosterInputs in;
  for (const auto& s : ds.sessions) {
    if (s.label == SessionLabel::normal) {
      in.normals.push_back(s.id);
    } else if (const auto k = attack_kind_from_string(s.id)) {
      in.attacks[*k] = s.id;
    }
  }
  for (auto k : kAttackKinds)
    if (!in.attacks.contains(k))
      throw ValidationError("dataset has no session named " + std::string(to_string(k)));
  return in;
}

void write_roster(std::ostream& out, const Roster& r) {
  out << "seed " << r.seed << '\n';
  for (const auto& p : r.partitions) {
    out << "partition " << p.replicate << ' ' << p.seed << "\nfold_a";
    for (const auto& id : p.fold_a) out << ' ' << id;
    out << "\nfold_b";
    for (const auto& id : p.fold_b) out << ' ' << id;
    out << '\n';
  }
  for (const auto& s : r.scenarios) {
    out << "scenario " << s.id << ' ' << to_string(s.kind) << ' '
        << (s.inserted ? to_string(*s.inserted) : std::string_view("-")) << ' '
        << s.insert_position << ' ' << s.replicate << ' ' << (s.trained_on_a ? 'A' : 'B') << ' '
        << s.partition_seed << "\ntraining";
    for (const auto& id : s.training_ids) out << ' ' << id;
    out << '\n';
    for (const auto& e : s.entries) out << "entry " << e.session_id << ' ' << e.pause_after_s << '\n';
    out << "end\n";
  }
}

Roster read_roster(std::istream& in) {
  Roster r;
  std::string line;
  std::size_t line_no = 0;
  Scenario* open = nullptr;
  auto words = [](std::istringstream& ls) {
    std::vector<std::string> v;
    for (std::string w; ls >> w;) v.push_back(w);
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "seed") {
      if (!(ls >> r.seed)) throw ParseError(line_no, "bad seed");
    } else if (key == "partition") {
      PartitionPlan p;
      if (!(ls >> p.replicate >> p.seed)) throw ParseError(line_no, "bad partition header");
      r.partitions.push_back(std::move(p));
    } else if (key == "fold_a" || key == "fold_b") {
      if (r.partitions.empty()) throw ParseError(line_no, "fold outside a partition");
      (key == "fold_a" ? r.partitions.back().fold_a : r.partitions.back().fold_b) = words(ls);
    } else if (key == "scenario") {
      Scenario s;
      std::string kind, inserted;
      char fold = 0;
      if (!(ls >> s.id >> kind >> inserted >> s.insert_position >> s.replicate >> fold >>
            s.partition_seed))
        throw ParseError(line_no, "bad scenario header");
      if (kind == "normal") s.kind = ScenarioKind::normal;
      else if (kind == "failure") s.kind = ScenarioKind::failure;
      else if (kind == "attack") s.kind = ScenarioKind::attack;
      else throw ParseError(line_no, "unknown scenario kind " + kind);
      if (inserted != "-") {
        s.inserted = attack_kind_from_string(inserted);
        if (!s.inserted) throw ParseError(line_no, "unknown attack kind " + inserted);
      }
      s.trained_on_a = fold == 'A';
      r.scenarios.push_back(std::move(s));
      open = &r.scenarios.back();
    } else if (key == "training") {
      if (!open) throw ParseError(line_no, "training outside a scenario");
      open->training_ids = words(ls);
    } else if (key == "entry") {
      if (!open) throw ParseError(line_no, "entry outside a scenario");
      ScenarioEntry e;
      if (!(ls >> e.session_id >> e.pause_after_s)) throw ParseError(line_no, "bad entry");
      open->entries.push_back(std::move(e));
    } else if (key == "end") {
      open = nullptr;
    } else {
      throw ParseError(line_no, "unknown roster key " + key);
    }
  }
  return r;
}

}  // namespace tlr
