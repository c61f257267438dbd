#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "tlr/scenario.hpp"
#include "tlr/trace.hpp"

namespace tlr {

// systrace-style policy: syscall numbers seen under normal usage.
struct SyscallWhitelist {
  std::set<Syscall> allowed;
};

enum class SigVariant : std::uint8_t { sig1, sig2, sig3 };
std::string_view to_string(SigVariant v);
std::span<const Signal> whitelist_signals(SigVariant v);

struct SignalWhitelist {
  std::vector<Signal> signals;
  std::map<Signal, std::set<std::int64_t>> allowed;
};

// Both trainers throw ContractError on a non-normal session.
SyscallWhitelist train_syscall_whitelist(std::span<const Session* const> sessions);
SignalWhitelist train_signal_whitelist(std::span<const Session* const> sessions, SigVariant v);

// true = attack.
bool classify_systrace(const SyscallWhitelist& wl, const Timeline& scenario);
bool classify_sig(const SignalWhitelist& wl, const Timeline& scenario);

// Sorted, one value per line ("name level" for signal whitelists).
void write_whitelist(std::ostream& out, const SyscallWhitelist& wl);
SyscallWhitelist read_syscall_whitelist(std::istream& in);
void write_whitelist(std::ostream& out, const SignalWhitelist& wl);
SignalWhitelist read_signal_whitelist(std::istream& in);

}  // namespace tlr
