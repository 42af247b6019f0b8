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

#include "leaklab/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace leaklab {
namespace {

constexpr std::array<Channel, 4> kAllChannels = {
    Channel::kPage, Channel::kCache, Channel::kCipher, Channel::kPmc};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_int(std::string_view s, int base, T& out) {
  if (s.empty()) return false;
  // from_chars accepts neither '+' nor a 0x prefix, which is what we want.
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_lower_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
}

Gpn parse_gpn(std::string_view s, std::size_t line_no) {
  Gpn gpn = 0;
  if (!is_lower_hex(s) || !parse_int(s, 16, gpn)) {
    throw TraceParseError(line_no, "malformed page number '" + std::string(s) + "'");
  }
  if (gpn >= kMaxGpn) {
    throw TraceParseError(line_no, "page number out of range: " + std::string(s));
  }
  return gpn;
}

Block parse_block(std::string_view s, std::size_t line_no) {
  if (s.size() != 32 || !is_lower_hex(s)) {
    throw TraceParseError(line_no, "malformed 16-byte hex value '" + std::string(s) + "'");
  }
  Block b{};
  for (std::size_t i = 0; i < 16; ++i) {
    parse_int(s.substr(2 * i, 2), 16, b[i]);
  }
  return b;
}

std::vector<std::uint8_t> parse_lines(std::string_view s, std::size_t line_no) {
  std::set<std::uint8_t> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string_view item =
        s.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                         : comma - start);
    unsigned v = 0;
    if (!parse_int(item, 10, v)) {
      throw TraceParseError(line_no, "malformed cache line index '" + std::string(item) + "'");
    }
    if (v >= kLinesPerPage) {
      throw TraceParseError(line_no, "cache line index out of range: " + std::to_string(v));
    }
    lines.insert(static_cast<std::uint8_t>(v));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return {lines.begin(), lines.end()};
}

void append_hex(std::string& out, std::uint64_t v) {
  char buf[20];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, 16);
  out.append(buf, ptr);
}

template <typename T>
void append_dec(std::string& out, T v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::kPage: return "page";
    case Channel::kCache: return "cache";
    case Channel::kCipher: return "cipher";
    case Channel::kPmc: return "pmc";
  }
  return "?";
}

Channel channel_from_name(std::string_view name) {
  for (Channel c : kAllChannels) {
    if (channel_name(c) == name) return c;
  }
  throw std::invalid_argument("unknown channel '" + std::string(name) + "'");
}

std::string ChannelSet::to_string() const {
  std::string out;
  for (Channel c : kAllChannels) {
    if (!contains(c)) continue;
    if (!out.empty()) out += ',';
    out += channel_name(c);
  }
  return out;
}

ChannelSet ChannelSet::parse(std::string_view comma_list) {
  ChannelSet set;
  if (comma_list.empty()) return set;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = comma_list.find(',', start);
    set.insert(channel_from_name(comma_list.substr(
        start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return set;
}

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string to_hex(const Block& block) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(32, '0');
  for (std::size_t i = 0; i < block.size(); ++i) {
    out[2 * i] = kDigits[block[i] >> 4];
    out[2 * i + 1] = kDigits[block[i] & 0xf];
  }
  return out;
}

void refresh_num_code_pages(Trace& trace) {
  std::unordered_set<Gpn> pages;
  for (const auto& ev : trace.events) {
    if (const auto* cf = std::get_if<CodeFetch>(&ev)) pages.insert(cf->gpn);
  }
  trace.header.num_code_pages = static_cast<std::uint32_t>(pages.size());
}

void validate_trace(const Trace& trace) {
  std::unordered_set<Gpn> code_pages;
  bool window_open = false;
  for (const auto& ev : trace.events) {
    if (const auto* cf = std::get_if<CodeFetch>(&ev)) {
      if (cf->gpn >= kMaxGpn) throw TraceInvariantError("code page number out of range");
      code_pages.insert(cf->gpn);
    } else if (const auto* da = std::get_if<DataAccess>(&ev)) {
      if (da->gpn >= kMaxGpn) throw TraceInvariantError("data page number out of range");
      for (std::size_t i = 0; i < da->lines.size(); ++i) {
        if (da->lines[i] >= kLinesPerPage) throw TraceInvariantError("cache line index out of range");
        if (i > 0 && da->lines[i] <= da->lines[i - 1]) {
          throw TraceInvariantError("cache lines must be strictly ascending");
        }
      }
    } else if (const auto* ci = std::get_if<CiphertextDiff>(&ev)) {
      if (ci->gpn >= kMaxGpn) throw TraceInvariantError("ciphertext page number out of range");
      if (ci->before == ci->after) throw TraceInvariantError("ciphertext diff with before == after");
    } else if (const auto* mk = std::get_if<Marker>(&ev)) {
      bool start = mk->kind == MarkerKind::kStart;
      if (start == window_open) throw TraceInvariantError("markers must alternate START/STOP");
      window_open = start;
    }
  }
  if (window_open) throw TraceInvariantError("unterminated MARK START");
  if (code_pages.size() != trace.header.num_code_pages) {
    throw TraceInvariantError("NUM does not match the number of distinct code pages");
  }
}

Trace parse_trace(std::string_view text) {
  Trace trace;
  bool saw_num = false;
  bool in_events = false;
  bool window_open = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                          : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (std::size_t hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto tok = split_ws(raw);
    if (tok.empty()) continue;

    const std::string_view kw = tok[0];
    auto expect = [&](std::size_t n) {
      if (tok.size() != n) {
        throw TraceParseError(line_no, "'" + std::string(kw) + "' expects " +
                                           std::to_string(n - 1) + " operand(s)");
      }
    };
    auto header_only = [&] {
      if (in_events) throw TraceParseError(line_no, "header line after first event");
    };

    if (kw == "SEED") {
      header_only();
      expect(2);
      if (!parse_int(tok[1], 10, trace.header.seed)) {
        throw TraceParseError(line_no, "malformed SEED");
      }
    } else if (kw == "NUM") {
      header_only();
      expect(2);
      if (!parse_int(tok[1], 10, trace.header.num_code_pages)) {
        throw TraceParseError(line_no, "malformed NUM");
      }
      saw_num = true;
    } else if (kw == "CHANNELS") {
      header_only();
      if (tok.size() > 2) throw TraceParseError(line_no, "'CHANNELS' expects a comma list");
      try {
        trace.header.channels = ChannelSet::parse(tok.size() == 2 ? tok[1] : std::string_view{});
      } catch (const std::invalid_argument& e) {
        throw TraceParseError(line_no, e.what());
      }
    } else if (kw == "CF") {
      in_events = true;
      expect(2);
      trace.events.emplace_back(CodeFetch{parse_gpn(tok[1], line_no)});
    } else if (kw == "MA") {
      in_events = true;
      DataAccess da;
      if (tok.size() == 2) {
        da.gpn = parse_gpn(tok[1], line_no);
      } else if (tok.size() == 4 && tok[2] == "CL") {
        da.gpn = parse_gpn(tok[1], line_no);
        da.lines = parse_lines(tok[3], line_no);
      } else {
        throw TraceParseError(line_no, "expected 'MA <gpn>[ CL <idx>[,<idx>...]]'");
      }
      trace.events.emplace_back(std::move(da));
    } else if (kw == "CI") {
      in_events = true;
      if (tok.size() != 6 || tok[2] != "BK") {
        throw TraceParseError(line_no, "expected 'CI <gpn> BK <idx> <hex32> <hex32>'");
      }
      CiphertextDiff ci;
      ci.gpn = parse_gpn(tok[1], line_no);
      unsigned block = 0;
      if (!parse_int(tok[3], 10, block)) throw TraceParseError(line_no, "malformed block index");
      if (block >= kBlocksPerPage) {
        throw TraceParseError(line_no, "block index out of range: " + std::to_string(block));
      }
      ci.block = static_cast<std::uint8_t>(block);
      ci.before = parse_block(tok[4], line_no);
      ci.after = parse_block(tok[5], line_no);
      if (ci.before == ci.after) throw TraceParseError(line_no, "ciphertext unchanged");
      trace.events.emplace_back(ci);
    } else if (kw == "PN") {
      in_events = true;
      expect(6);
      CounterSnapshot pn;
      for (std::size_t i = 0; i < 5; ++i) {
        if (!parse_int(tok[i + 1], 10, pn.values[i])) {
          throw TraceParseError(line_no, "malformed counter value");
        }
      }
      trace.events.emplace_back(pn);
    } else if (kw == "MARK") {
      in_events = true;
      expect(2);
      Marker mk;
      if (tok[1] == "START") {
        mk.kind = MarkerKind::kStart;
      } else if (tok[1] == "STOP") {
        mk.kind = MarkerKind::kStop;
      } else {
        throw TraceParseError(line_no, "unknown marker '" + std::string(tok[1]) + "'");
      }
      if ((mk.kind == MarkerKind::kStart) == window_open) {
        throw TraceParseError(line_no, "markers must alternate START/STOP");
      }
      window_open = mk.kind == MarkerKind::kStart;
      trace.events.emplace_back(mk);
    } else {
      throw TraceParseError(line_no, "unknown record '" + std::string(kw) + "'");
    }
  }
  if (window_open) throw TraceParseError(line_no, "unterminated MARK START");

  std::uint32_t declared = trace.header.num_code_pages;
  refresh_num_code_pages(trace);
  if (saw_num && declared != trace.header.num_code_pages) {
    throw TraceParseError(line_no, "NUM " + std::to_string(declared) + " but " +
                                       std::to_string(trace.header.num_code_pages) +
                                       " distinct code pages");
  }
  return trace;
}

std::string write_trace(const Trace& trace) {
  std::string out;
  out.reserve(32 + trace.events.size() * 12);
  out += "SEED ";
  append_dec(out, trace.header.seed);
  out += "\nNUM ";
  append_dec(out, trace.header.num_code_pages);
  out += "\nCHANNELS";
  if (!trace.header.channels.empty()) {
    out += ' ';
    out += trace.header.channels.to_string();
  }
  out += '\n';
  for (const auto& ev : trace.events) {
    std::visit(
        [&out](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, CodeFetch>) {
            out += "CF ";
            append_hex(out, e.gpn);
          } else if constexpr (std::is_same_v<T, DataAccess>) {
            out += "MA ";
            append_hex(out, e.gpn);
            for (std::size_t i = 0; i < e.lines.size(); ++i) {
              out += i == 0 ? " CL " : ",";
              append_dec(out, unsigned{e.lines[i]});
            }
          } else if constexpr (std::is_same_v<T, CiphertextDiff>) {
            out += "CI ";
            append_hex(out, e.gpn);
            out += " BK ";
            append_dec(out, unsigned{e.block});
            out += ' ';
            out += to_hex(e.before);
            out += ' ';
            out += to_hex(e.after);
          } else if constexpr (std::is_same_v<T, CounterSnapshot>) {
            out += "PN";
            for (auto v : e.values) {
              out += ' ';
              append_dec(out, v);
            }
          } else {
            out += e.kind == MarkerKind::kStart ? "MARK START" : "MARK STOP";
          }
        },
        ev);
    out += '\n';
  }
  return out;
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

void write_trace_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace file " + path);
  out << write_trace(trace);
}

std::vector<TraceEvent> windowed_events(std::span<const TraceEvent> events) {
  bool has_markers = std::any_of(events.begin(), events.end(), [](const TraceEvent& e) {
    return std::holds_alternative<Marker>(e);
  });
  std::vector<TraceEvent> out;
  if (!has_markers) {
    out.assign(events.begin(), events.end());
    return out;
  }
  bool open = false;
  for (const auto& ev : events) {
    if (const auto* mk = std::get_if<Marker>(&ev)) {
      open = mk->kind == MarkerKind::kStart;
    } else if (open) {
      out.push_back(ev);
    }
  }
  return out;
}

TraceStats trace_stats(const Trace& trace) {
  TraceStats s;
  std::unordered_set<Gpn> cf_pages;
  std::unordered_set<Gpn> da_pages;
  std::unordered_set<std::uint64_t> lines;
  std::unordered_set<std::uint64_t> blocks;
  for (const auto& ev : windowed_events(trace.events)) {
    if (const auto* cf = std::get_if<CodeFetch>(&ev)) {
      ++s.total_cf;
      cf_pages.insert(cf->gpn);
    } else if (const auto* da = std::get_if<DataAccess>(&ev)) {
      ++s.total_da;
      da_pages.insert(da->gpn);
      s.total_lines += da->lines.size();
      for (auto l : da->lines) lines.insert((da->gpn << 8) | l);
    } else if (const auto* ci = std::get_if<CiphertextDiff>(&ev)) {
      ++s.total_ci;
      blocks.insert((ci->gpn << 8) | ci->block);
    }
  }
  s.unique_cf = cf_pages.size();
  s.unique_da = da_pages.size();
  s.unique_lines = lines.size();
  s.unique_ci_blocks = blocks.size();
  return s;
}

}  // namespace leaklab
