#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tlr {

using Nanos = std::int64_t;
using Syscall = std::int32_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;
inline constexpr int kDefaultUniverseSize = 350;

// Error hierarchy shared by the whole library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// Runtime statistics a process monitor can report.
enum class Signal : std::uint8_t {
  processes,
  cpu,
  mem,
  rss,
  size,
  sz,
  vsz,
  num_files,
  num_reg,
  num_dir,
  num_chr,
  num_ipv4,
  num_sock,
  num_unix,
  num_unknown,
};

inline constexpr std::size_t kSignalCount = 15;

std::string_view to_string(Signal s);
std::optional<Signal> signal_from_string(std::string_view name);
const std::array<Signal, kSignalCount>& all_signals();

enum class SessionLabel : std::uint8_t { normal, attack, failed_attack };

std::string_view to_string(SessionLabel l);
std::optional<SessionLabel> label_from_string(std::string_view name);

// Failed attacks are scored as normal traffic.
constexpr bool is_attack_truth(SessionLabel l) { return l == SessionLabel::attack; }

struct SyscallEvent {
  Nanos t = 0;
  std::int64_t pid = 0;
  Syscall syscall = 0;

  friend bool operator==(const SyscallEvent&, const SyscallEvent&) = default;
};

struct SignalReading {
  Nanos t = 0;
  Signal name = Signal::rss;
  std::int64_t level = 0;

  friend bool operator==(const SignalReading&, const SignalReading&) = default;
};

struct Session {
  std::string id;
  SessionLabel label = SessionLabel::normal;
  std::vector<SyscallEvent> events;
  std::vector<SignalReading> readings;
  Nanos duration = 0;

  // Largest timestamp over events and readings, 0 when both are empty.
  Nanos last_timestamp() const;

  friend bool operator==(const Session&, const Session&) = default;
};

// Throws ValidationError when the session breaks an ordering or duration
// invariant, RangeError when a syscall lies outside the universe.
void validate(const Session& s, int universe_size);

// "t_ns pid syscall" per line, '#' starts a comment.
std::vector<SyscallEvent> parse_syscall_trace(std::istream& in,
                                              int universe_size = kDefaultUniverseSize);
// "t_ns name level" per line.
std::vector<SignalReading> parse_signal_log(std::istream& in);

void write_syscall_trace(std::ostream& out, const std::vector<SyscallEvent>& events);
void write_signal_log(std::ostream& out, const std::vector<SignalReading>& readings);

// Session directory layout: <dir>/session.manifest, syscalls.txt, signals.txt.
Session load_session(const std::filesystem::path& manifest,
                     int universe_size = kDefaultUniverseSize);
void save_session(const std::filesystem::path& dir, const Session& s);

struct Dataset {
  int universe_size = kDefaultUniverseSize;
  std::vector<Session> sessions;

  const Session* find(std::string_view id) const;
  std::vector<const Session*> with_label(SessionLabel l) const;
};

// Dataset list file: "universe_size N" followed by "session <manifest>" lines,
// manifest paths relative to the list file. A directory means its dataset.list.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

// Keeps the first (by id) of every group of sessions with identical syscall
// sequences whose relative event timings agree to within `tolerance_s`.
std::vector<Session> dedup_sessions(std::vector<Session> sessions, double tolerance_s);

}  // namespace tlr
