#include "tlr/baselines.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <ostream>
#include <sstream>

namespace tlr {

namespace {

constexpr std::array<Signal, 3> kSigSignals{Signal::rss, Signal::num_files, Signal::num_reg};

void require_normal(const Session& s) {
  if (s.label != SessionLabel::normal)
    throw ContractError("whitelist training session " + s.id + " is not normal");
}

}  // namespace

std::string_view to_string(SigVariant v) {
  switch (v) {
    case SigVariant::sig1: return "sig1";
    case SigVariant::sig2: return "sig2";
    case SigVariant::sig3: return "sig3";
  }
  return "?";
}

std::span<const Signal> whitelist_signals(SigVariant v) {
  return std::span<const Signal>(kSigSignals).first(static_cast<std::size_t>(v) + 1);
}

SyscallWhitelist train_syscall_whitelist(std::span<const Session* const> sessions) {
  SyscallWhitelist wl;
  for (const Session* s : sessions) {
    require_normal(*s);
    for (const auto& e : s->events) wl.allowed.insert(e.syscall);
  }
  return wl;
}

SignalWhitelist train_signal_whitelist(std::span<const Session* const> sessions, SigVariant v) {
  SignalWhitelist wl;
  const auto sigs = whitelist_signals(v);
  wl.signals.assign(sigs.begin(), sigs.end());
  for (auto sig : sigs) wl.allowed[sig];
  for (const Session* s : sessions) {
    require_normal(*s);
    for (const auto& r : s->readings)
      if (auto it = wl.allowed.find(r.name); it != wl.allowed.end()) it->second.insert(r.level);
  }
  return wl;
}

bool classify_systrace(const SyscallWhitelist& wl, const Timeline& scenario) {
  return std::ranges::any_of(scenario.events,
                             [&](const TimelineEvent& e) { return !wl.allowed.contains(e.syscall); });
}

bool classify_sig(const SignalWhitelist& wl, const Timeline& scenario) {
  return std::ranges::any_of(scenario.readings, [&](const SignalReading& r) {
    const auto it = wl.allowed.find(r.name);
    return it != wl.allowed.end() && !it->second.contains(r.level);
  });
}

void write_whitelist(std::ostream& out, const SyscallWhitelist& wl) {
  for (auto s : wl.allowed) out << s << '\n';
}

SyscallWhitelist read_syscall_whitelist(std::istream& in) {
  SyscallWhitelist wl;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    Syscall s = 0;
    if (!(ls >> s)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(n, "expected a syscall number");
    }
    wl.allowed.insert(s);
  }
  return wl;
}

void write_whitelist(std::ostream& out, const SignalWhitelist& wl) {
  out << "signals";
  for (auto s : wl.signals) out << ' ' << to_string(s);
  out << '\n';
  for (const auto& [sig, levels] : wl.allowed)
    for (auto l : levels) out << to_string(sig) << ' ' << l << '\n';
}

SignalWhitelist read_signal_whitelist(std::istream& in) {
  SignalWhitelist wl;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;
    if (name == "signals") {
      for (std::string s; ls >> s;) {
        const auto sig = signal_from_string(s);
        if (!sig) throw SchemaError("unknown signal '" + s + "'");
        wl.signals.push_back(*sig);
        wl.allowed[*sig];
      }
      continue;
    }
    const auto sig = signal_from_string(name);
    if (!sig) throw SchemaError("unknown signal '" + name + "'");
    std::int64_t level = 0;
    if (!(ls >> level)) throw ParseError(n, "expected \"name level\"");
    wl.allowed[*sig].insert(level);
  }
  return wl;
}

}  // namespace tlr
