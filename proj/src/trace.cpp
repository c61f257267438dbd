#include "tlr/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tlr {

namespace {

constexpr std::array<std::string_view, kSignalCount> kSignalNames{
    "processes", "cpu",     "mem",     "rss",      "size",     "sz",       "vsz",        "num_files",
    "num_reg",   "num_dir", "num_chr", "num_ipv4", "num_sock", "num_unix", "num_unknown"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view s) {
  if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
  return trim(s);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

template <typename Int>
bool parse_int(std::string_view tok, Int& out) {
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

// Calls fn(line_no, fields) for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = strip_comment(line);
    if (body.empty()) continue;
    fn(line_no, split_ws(body));
  }
}

void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << data;
  if (!out) throw Error("write failed: " + p.string());
}

}  // namespace

std::string_view to_string(Signal s) { return kSignalNames[static_cast<std::size_t>(s)]; }

std::optional<Signal> signal_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSignalNames.size(); ++i)
    if (kSignalNames[i] == name) return static_cast<Signal>(i);
  return std::nullopt;
}

const std::array<Signal, kSignalCount>& all_signals() {
  static const auto all = [] {
    std::array<Signal, kSignalCount> a{};
    for (std::size_t i = 0; i < kSignalCount; ++i) a[i] = static_cast<Signal>(i);
    return a;
  }();
  return all;
}

std::string_view to_string(SessionLabel l) {
  switch (l) {
    case SessionLabel::normal: return "normal";
    case SessionLabel::attack: return "attack";
    case SessionLabel::failed_attack: return "failed_attack";
  }
  return "?";
}

std::optional<SessionLabel> label_from_string(std::string_view name) {
  if (name == "normal") return SessionLabel::normal;
  if (name == "attack") return SessionLabel::attack;
  if (name == "failed_attack") return SessionLabel::failed_attack;
  return std::nullopt;
}

Nanos Session::last_timestamp() const {
  Nanos last = 0;
  if (!events.empty()) last = std::max(last, events.back().t);
  for (const auto& r : readings) last = std::max(last, r.t);
  return last;
}

void validate(const Session& s, int universe_size) {
  if (s.id.empty()) throw ValidationError("session id is empty");
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    if (e.t < 0 || e.pid < 0) throw ValidationError(s.id + ": negative event field");
    if (i > 0 && e.t < s.events[i - 1].t)
      throw ValidationError(s.id + ": events out of order at index " + std::to_string(i));
    if (e.syscall < 0 || e.syscall >= universe_size)
      throw RangeError(s.id + ": syscall " + std::to_string(e.syscall) + " outside universe");
  }
  std::array<Nanos, kSignalCount> last{};
  last.fill(-1);
  for (const auto& r : s.readings) {
    if (r.t < 0) throw ValidationError(s.id + ": negative reading time");
    auto& prev = last[static_cast<std::size_t>(r.name)];
    if (r.t < prev)
      throw ValidationError(s.id + ": readings for " + std::string(to_string(r.name)) +
                            " out of order");
    prev = r.t;
  }
  if (s.duration < s.last_timestamp())
    throw ValidationError(s.id + ": duration " + std::to_string(s.duration) +
                          " ns is before the last timestamp");
}

std::vector<SyscallEvent> parse_syscall_trace(std::istream& in, int universe_size) {
  std::vector<SyscallEvent> events;
  for_each_record(in, [&](std::size_t line, const std::vector<std::string_view>& f) {
    SyscallEvent e;
    if (f.size() != 3 || !parse_int(f[0], e.t) || !parse_int(f[1], e.pid) ||
        !parse_int(f[2], e.syscall) || e.t < 0 || e.pid < 0 || e.syscall < 0)
      throw ParseError(line, "expected \"t_ns pid syscall\"");
    if (e.syscall >= universe_size)
      throw RangeError("line " + std::to_string(line) + ": syscall " + std::to_string(e.syscall) +
                       " >= universe size " + std::to_string(universe_size));
    if (!events.empty() && e.t < events.back().t)
      throw ParseError(line, "timestamp goes backwards");
    events.push_back(e);
  });
  return events;
}

std::vector<SignalReading> parse_signal_log(std::istream& in) {
  std::vector<SignalReading> readings;
  std::array<Nanos, kSignalCount> last{};
  last.fill(-1);
  for_each_record(in, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 3) throw ParseError(line, "expected \"t_ns name level\"");
    const auto name = signal_from_string(f[1]);
    if (!name)
      throw SchemaError("line " + std::to_string(line) + ": unknown signal '" +
                        std::string(f[1]) + "'");
    SignalReading r{.name = *name};
    if (!parse_int(f[0], r.t) || r.t < 0 || !parse_int(f[2], r.level))
      throw ParseError(line, "expected \"t_ns name level\"");
    auto& prev = last[static_cast<std::size_t>(r.name)];
    if (r.t < prev) throw ParseError(line, "timestamp goes backwards for " + std::string(f[1]));
    prev = r.t;
    readings.push_back(r);
  });
  return readings;
}

void write_syscall_trace(std::ostream& out, const std::vector<SyscallEvent>& events) {
  for (const auto& e : events) out << e.t << ' ' << e.pid << ' ' << e.syscall << '\n';
}

void write_signal_log(std::ostream& out, const std::vector<SignalReading>& readings) {
  for (const auto& r : readings) out << r.t << ' ' << to_string(r.name) << ' ' << r.level << '\n';
}

Session load_session(const std::filesystem::path& manifest, int universe_size) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  Session s;
  std::optional<std::filesystem::path> syscalls, signals;
  std::optional<Nanos> duration;
  bool have_label = false;
  for_each_record(in, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 2) throw ParseError(line, "expected \"key value\"");
    if (f[0] == "id") {
      s.id = f[1];
    } else if (f[0] == "label") {
      const auto l = label_from_string(f[1]);
      if (!l) throw SchemaError("unknown label '" + std::string(f[1]) + "'");
      s.label = *l;
      have_label = true;
    } else if (f[0] == "syscalls") {
      syscalls = manifest.parent_path() / std::string(f[1]);
    } else if (f[0] == "signals") {
      signals = manifest.parent_path() / std::string(f[1]);
    } else if (f[0] == "duration_ns") {
      Nanos d = 0;
      if (!parse_int(f[1], d) || d < 0) throw ParseError(line, "bad duration_ns");
      duration = d;
    } else {
      throw SchemaError("unknown manifest key '" + std::string(f[0]) + "'");
    }
  });
  if (s.id.empty()) throw ValidationError(manifest.string() + ": missing id");
  if (!have_label) throw ValidationError(manifest.string() + ": missing label");
  if (!duration) throw ValidationError(manifest.string() + ": missing duration_ns");
  s.duration = *duration;
  if (syscalls) {
    if (!std::filesystem::exists(*syscalls)) throw Error("missing file " + syscalls->string());
    std::ifstream f(*syscalls);
    s.events = parse_syscall_trace(f, universe_size);
  }
  if (signals) {
    if (!std::filesystem::exists(*signals)) throw Error("missing file " + signals->string());
    std::ifstream f(*signals);
    s.readings = parse_signal_log(f);
  }
  validate(s, universe_size);
  return s;
}

void save_session(const std::filesystem::path& dir, const Session& s) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << "id " << s.id << "\nlabel " << to_string(s.label)
           << "\nsyscalls syscalls.txt\nsignals signals.txt\nduration_ns " << s.duration << '\n';
  write_file(dir / "session.manifest", manifest.str());
  std::ostringstream ev, sig;
  write_syscall_trace(ev, s.events);
  write_signal_log(sig, s.readings);
  write_file(dir / "syscalls.txt", ev.str());
  write_file(dir / "signals.txt", sig.str());
}

const Session* Dataset::find(std::string_view id) const {
  for (const auto& s : sessions)
    if (s.id == id) return &s;
  return nullptr;
}

std::vector<const Session*> Dataset::with_label(SessionLabel l) const {
  std::vector<const Session*> out;
  for (const auto& s : sessions)
    if (s.label == l) out.push_back(&s);
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  // A dataset directory stands for its dataset.list.
  const auto list_file = std::filesystem::is_directory(path) ? path / "dataset.list" : path;
  std::ifstream in(list_file);
  if (!in) throw Error("cannot open dataset list " + list_file.string());
  Dataset ds;
  std::vector<std::filesystem::path> manifests;
  for_each_record(in, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 2) throw ParseError(line, "expected \"key value\"");
    if (f[0] == "universe_size") {
      if (!parse_int(f[1], ds.universe_size) || ds.universe_size <= 0)
        throw ParseError(line, "bad universe_size");
    } else if (f[0] == "session") {
      manifests.push_back(list_file.parent_path() / std::string(f[1]));
    } else {
      throw SchemaError("unknown dataset key '" + std::string(f[0]) + "'");
    }
  });
  for (const auto& m : manifests) {
    auto s = load_session(m, ds.universe_size);
    if (ds.find(s.id)) throw ValidationError("duplicate session id " + s.id);
    ds.sessions.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir / "sessions");
  std::ostringstream list;
  list << "universe_size " << ds.universe_size << '\n';
  for (const auto& s : ds.sessions) {
    save_session(dir / "sessions" / s.id, s);
    list << "session sessions/" << s.id << "/session.manifest\n";
  }
  write_file(dir / "dataset.list", list.str());
}

namespace {

bool same_behaviour(const Session& a, const Session& b, Nanos tol) {
  if (a.events.size() != b.events.size()) return false;
  if (a.events.empty()) return true;
  const Nanos a0 = a.events.front().t;
  const Nanos b0 = b.events.front().t;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    if (a.events[i].syscall != b.events[i].syscall) return false;
    const Nanos da = a.events[i].t - a0;
    const Nanos db = b.events[i].t - b0;
    if (std::llabs(da - db) > tol) return false;
  }
  return true;
}

}  // namespace

std::vector<Session> dedup_sessions(std::vector<Session> sessions, double tolerance_s) {
  if (tolerance_s < 0) throw ValidationError("dedup tolerance must be non-negative");
  const auto tol = static_cast<Nanos>(std::llround(tolerance_s * kNanosPerSecond));
  std::stable_sort(sessions.begin(), sessions.end(),
                   [](const Session& a, const Session& b) { return a.id < b.id; });
  std::vector<Session> kept;
  for (auto& s : sessions) {
    const bool dup = std::any_of(kept.begin(), kept.end(),
                                 [&](const Session& k) { return same_behaviour(k, s, tol); });
    if (!dup) kept.push_back(std::move(s));
  }
  return kept;
}

}  // namespace tlr
