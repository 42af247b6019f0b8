/*
 * Copyright 2026 The LeakLab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LEAKLAB_TRACE_HPP_
#define LEAKLAB_TRACE_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace leaklab {

using Gpn = std::uint64_t;
using Block = std::array<std::uint8_t, 16>;

inline constexpr Gpn kMaxGpn = Gpn{1} << 40;
inline constexpr unsigned kLinesPerPage = 64;
inline constexpr unsigned kBlocksPerPage = 256;

// Observation channels a collector can enable.
enum class Channel : std::uint8_t { kPage = 1, kCache = 2, kCipher = 4, kPmc = 8 };

class ChannelSet {
 public:
  constexpr ChannelSet() = default;
  constexpr ChannelSet(std::initializer_list<Channel> channels) {
    for (Channel c : channels) insert(c);
  }

  constexpr void insert(Channel c) { bits_ |= static_cast<std::uint8_t>(c); }
  constexpr void erase(Channel c) { bits_ &= ~static_cast<std::uint8_t>(c); }
  constexpr bool contains(Channel c) const {
    return (bits_ & static_cast<std::uint8_t>(c)) != 0;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool operator==(const ChannelSet&) const = default;

  // Canonical comma list, e.g. "page,cipher".
  std::string to_string() const;
  // Throws std::invalid_argument on unknown names.
  static ChannelSet parse(std::string_view comma_list);

 private:
  std::uint8_t bits_ = 0;
};

std::string_view channel_name(Channel c);
Channel channel_from_name(std::string_view name);

struct CodeFetch {
  Gpn gpn = 0;
  bool operator==(const CodeFetch&) const = default;
};

// `lines` is sorted ascending and duplicate-free; empty means no cache
// observation was attached.
struct DataAccess {
  Gpn gpn = 0;
  std::vector<std::uint8_t> lines;
  bool operator==(const DataAccess&) const = default;
};

struct CiphertextDiff {
  Gpn gpn = 0;
  std::uint8_t block = 0;
  Block before{};
  Block after{};
  bool operator==(const CiphertextDiff&) const = default;
};

// instructions, uops, branches, taken branches, near returns.
struct CounterSnapshot {
  std::array<std::uint64_t, 5> values{};
  bool operator==(const CounterSnapshot&) const = default;
};

enum class MarkerKind : std::uint8_t { kStart, kStop };

struct Marker {
  MarkerKind kind = MarkerKind::kStart;
  bool operator==(const Marker&) const = default;
};

using TraceEvent =
    std::variant<CodeFetch, DataAccess, CiphertextDiff, CounterSnapshot, Marker>;

struct TraceHeader {
  std::uint32_t num_code_pages = 0;
  std::uint64_t seed = 0;
  ChannelSet channels;
  bool operator==(const TraceHeader&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;
  bool operator==(const Trace&) const = default;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TraceInvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Checks every Trace invariant (index ranges, gpn bound, before != after,
// marker alternation, NUM consistency). Throws TraceInvariantError.
void validate_trace(const Trace& trace);

// Recomputes header.num_code_pages from the CodeFetch events.
void refresh_num_code_pages(Trace& trace);

Trace parse_trace(std::string_view text);
std::string write_trace(const Trace& trace);

Trace read_trace_file(const std::string& path);
void write_trace_file(const std::string& path, const Trace& trace);

// Events inside MARK START / MARK STOP windows when the trace carries
// markers, otherwise every event. Markers themselves are excluded.
std::vector<TraceEvent> windowed_events(std::span<const TraceEvent> events);

struct TraceStats {
  std::uint64_t total_cf = 0;
  std::uint64_t unique_cf = 0;
  std::uint64_t total_da = 0;
  std::uint64_t unique_da = 0;
  std::uint64_t total_lines = 0;
  std::uint64_t unique_lines = 0;
  std::uint64_t total_ci = 0;
  std::uint64_t unique_ci_blocks = 0;
  bool operator==(const TraceStats&) const = default;
};

TraceStats trace_stats(const Trace& trace);

std::string to_hex(const Block& block);

}  // namespace leaklab

#endif  // LEAKLAB_TRACE_HPP_
