#include "tlr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "tlr/baselines.hpp"

namespace tlr {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string params_hash(const TissueParams& p) { return sha256_hex(p.to_text()).substr(0, 16); }

std::string dataset_hash(const Dataset& ds) {
  std::ostringstream canon;
  canon << "universe_size " << ds.universe_size << '\n';
  for (const auto& s : ds.sessions) {
    canon << "session " << s.id << ' ' << to_string(s.label) << ' ' << s.duration << '\n';
    write_syscall_trace(canon, s.events);
    write_signal_log(canon, s.readings);
  }
  return sha256_hex(canon.str()).substr(0, 16);
}

std::string_view to_string(System s) {
  switch (s) {
    case System::systrace: return "systrace";
    case System::negsel: return "tlr-negsel";
    case System::sig1: return "sig1";
    case System::sig2: return "sig2";
    case System::sig3: return "sig3";
    case System::tlr1: return "tlr1";
    case System::tlr2: return "tlr2";
    case System::tlr3: return "tlr3";
  }
  return "?";
}

std::optional<System> system_from_string(std::string_view name) {
  if (name == "negsel") return System::negsel;
  for (auto s : kAllSystems)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

bool uses_tissue(System s) {
  return s == System::negsel || s == System::tlr1 || s == System::tlr2 || s == System::tlr3;
}

Variant engine_variant(System s) {
  switch (s) {
    case System::tlr1: return Variant::tlr1;
    case System::tlr2: return Variant::tlr2;
    case System::tlr3: return Variant::tlr3;
    default: return Variant::negsel;
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

ScenarioOutcome evaluate(const Dataset& ds, const Scenario& scn, std::size_t index,
                         const BenchConfig& cfg) {
  ScenarioOutcome out;
  out.truth_attack = scn.ground_truth_attack(ds);
  const auto timeline = assemble_timeline(scn, ds);
  std::vector<const Session*> training;
  for (const auto& id : scn.training_ids) {
    const Session* s = ds.find(id);
    if (!s) throw ValidationError("training session " + id + " missing from dataset");
    training.push_back(s);
  }
  for (auto sys : cfg.systems) {
    bool verdict = false;
    int alerts = 0;
    switch (sys) {
      case System::systrace:
        verdict = classify_systrace(train_syscall_whitelist(training), timeline);
        break;
      case System::sig1:
      case System::sig2:
      case System::sig3: {
        const auto v = static_cast<SigVariant>(static_cast<int>(sys) - static_cast<int>(System::sig1));
        verdict = classify_sig(train_signal_whitelist(training, v), timeline);
        break;
      }
      default: {
        const auto variant = engine_variant(sys);
        const bool exhaustive = variant == Variant::negsel ? cfg.exhaustive_negsel : cfg.exhaustive_tlr;
        const auto profile = train(std::span<const Session* const>(training), variant, ds.universe_size);
        auto det = build_detector(profile, variant, cfg.params,
                                  derive_seed(cfg.seed, index, static_cast<std::uint64_t>(sys)),
                                  exhaustive);
        const auto result =
            run_scenario(*det, project_signals(timeline, monitored_signals(variant)), scn.id);
        verdict = result.verdict_attack();
        alerts = static_cast<int>(result.alerts.size());
        break;
      }
    }
    out.verdict[sys] = verdict;
    out.alerts[sys] = alerts;
  }
  return out;
}

}  // namespace

BenchResult run_bench(const Dataset& ds, const BenchConfig& cfg) {
  BenchResult result;
  result.roster = build_roster(roster_inputs(ds), cfg.seed);
  std::ostringstream header;
  header << "# seed " << cfg.seed << " params_hash " << params_hash(cfg.params) << " dataset_hash "
         << dataset_hash(ds) << '\n';
  result.header = header.str();

  const auto& scenarios = result.roster.scenarios;
  result.outcomes.resize(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      try {
        result.outcomes[i] = evaluate(ds, scenarios[i], i, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, cfg.threads);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto sys : cfg.systems) result.report.rows.push_back(metrics_row(std::string(to_string(sys)), counts_for(result, sys)));
  result.report.rows.push_back(reference_row("DCA", 1.00, 0.83));
  return result;
}

ConfusionCounts counts_for(const BenchResult& r, System s) {
  // std::vector<bool> has no contiguous storage to span over.
  auto verdicts = std::make_unique<bool[]>(r.outcomes.size());
  auto truths = std::make_unique<bool[]>(r.outcomes.size());
  std::size_t n = 0;
  for (const auto& o : r.outcomes) {
    const auto it = o.verdict.find(s);
    if (it == o.verdict.end()) continue;
    verdicts[n] = it->second;
    truths[n] = o.truth_attack;
    ++n;
  }
  return confusion(std::span<const bool>(verdicts.get(), n), std::span<const bool>(truths.get(), n));
}

std::string emit_verdicts(const BenchResult& r) {
  std::ostringstream out;
  out << r.header << "scenario\tkind\ttruth";
  std::vector<System> systems;
  if (!r.outcomes.empty())
    for (const auto& [sys, _] : r.outcomes.front().verdict) systems.push_back(sys);
  for (auto s : systems) out << '\t' << to_string(s);
  out << '\n';
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    const auto& o = r.outcomes[i];
    const auto& scn = r.roster.scenarios[i];
    out << scn.id << '\t' << to_string(scn.kind) << '\t' << (o.truth_attack ? "attack" : "normal");
    for (auto s : systems) out << '\t' << (o.verdict.at(s) ? "attack" : "normal") << ':' << o.alerts.at(s);
    out << '\n';
  }
  return out.str();
}

}  // namespace tlr
