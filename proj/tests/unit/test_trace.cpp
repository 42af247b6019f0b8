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

#include <random>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fuzz.hpp"
#include "leaklab/trace.hpp"

using namespace leaklab;

namespace {

// Second implementation of trace_stats, straight over the text form.
TraceStats rescan(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  bool has_markers = false;
  while (std::getline(in, line)) {
    if (line.rfind("MARK", 0) == 0) has_markers = true;
    lines.push_back(line);
  }
  TraceStats s;
  std::set<std::string> cf, da, cl, ci;
  bool inside = !has_markers;
  for (const std::string& l : lines) {
    std::istringstream f(l);
    std::string op, gpn;
    f >> op;
    if (op == "MARK") {
      std::string kind;
      f >> kind;
      inside = kind == "START";
      continue;
    }
    if (!inside) continue;
    if (op == "CF") {
      f >> gpn;
      ++s.total_cf;
      cf.insert(gpn);
    } else if (op == "MA") {
      f >> gpn;
      ++s.total_da;
      da.insert(gpn);
      std::string tag, list;
      if (f >> tag >> list) {
        std::istringstream ls(list);
        std::string idx;
        while (std::getline(ls, idx, ',')) {
          ++s.total_lines;
          cl.insert(gpn + ":" + idx);
        }
      }
    } else if (op == "CI") {
      std::string bk, idx;
      f >> gpn >> bk >> idx;
      ++s.total_ci;
      ci.insert(gpn + ":" + idx);
    }
  }
  s.unique_cf = cf.size();
  s.unique_da = da.size();
  s.unique_lines = cl.size();
  s.unique_ci_blocks = ci.size();
  return s;
}

}  // namespace

TEST_CASE("example line parses to a single-line data access") {
  Trace t = parse_trace("NUM 0\nMA 141b69 CL 60\n");
  REQUIRE(t.events.size() == 1);
  CHECK(std::get<DataAccess>(t.events[0]) == DataAccess{0x141b69, {60}});
}

TEST_CASE("empty event section") {
  Trace t = parse_trace("NUM 0\n");
  CHECK(t.events.empty());
  CHECK(t.header.num_code_pages == 0);
}

TEST_CASE("writer formats") {
  Trace t;
  t.events.push_back(CodeFetch{0x10});
  refresh_num_code_pages(t);
  std::string text = write_trace(t);
  CHECK(text.find("\nCF 10\n") != std::string::npos);

  Trace c;
  CiphertextDiff d{0x2a, 3, {}, {}};
  d.after[15] = 0xff;
  c.events.push_back(d);
  CHECK(write_trace(c).find("\nCI 2a BK 3 00000000000000000000000000000000 "
                            "000000000000000000000000000000ff\n") != std::string::npos);

  Trace m;
  m.events.push_back(DataAccess{0x141b69, {1, 7, 60}});
  CHECK(write_trace(m).find("\nMA 141b69 CL 1,7,60\n") != std::string::npos);
}

TEST_CASE("round trip over 1000 fuzzed traces") {
  std::mt19937_64 gen(20261018);
  for (int i = 0; i < 1000; ++i) {
    Trace t = testing::random_trace(gen);
    std::string text = write_trace(t);
    Trace back = parse_trace(text);
    REQUIRE(back == t);
    REQUIRE(write_trace(back) == text);
  }
}

TEST_CASE("comments and blank lines are ignored") {
  Trace t = parse_trace("# hello\nSEED 5\n\nNUM 1\nCHANNELS page,pmc\nCF a # trailing\nPN 1 2 3 4 5\n");
  CHECK(t.header.seed == 5);
  CHECK(t.header.channels == ChannelSet{Channel::kPage, Channel::kPmc});
  CHECK(t.events.size() == 2);
}

TEST_CASE("parse errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_trace(text);
    } catch (const TraceParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("NUM 0\nMA 10 CL 64\n") == 2);
  CHECK(line_of("NUM 0\nCI 10 BK 256 00000000000000000000000000000000 "
                "00000000000000000000000000000001\n") == 2);
  CHECK(line_of("NUM 1\nCF 1G\n") == 2);
  CHECK(line_of("NUM 1\nCF 0x10\n") == 2);
  CHECK(line_of("NUM 1\nCF AB\n") == 2);
  CHECK(line_of("FOO 1\n") == 1);
  CHECK(line_of("NUM 1\nCF 10\nSEED 3\n") == 3);
  CHECK(line_of("NUM 0\nPN 1 2 3 4\n") == 2);
  CHECK(line_of("NUM 0\nCI 10 BK 1 0000 0001\n") == 2);
  CHECK(line_of("NUM 0\nCHANNELS page,bogus\n") == 2);
}

TEST_CASE("invariant violations are rejected") {
  CHECK_THROWS_AS(parse_trace("NUM 2\nCF 10\n"), TraceParseError);
  CHECK_THROWS_AS(parse_trace("NUM 0\nMARK STOP\n"), TraceParseError);
  CHECK_THROWS_AS(parse_trace("NUM 0\nMARK START\n"), TraceParseError);
  CHECK_THROWS_AS(parse_trace("NUM 0\nCI 10 BK 1 00000000000000000000000000000001 "
                              "00000000000000000000000000000001\n"),
                  TraceParseError);
  CHECK_THROWS_AS(parse_trace("NUM 1\nCF 10000000000\n"), TraceParseError);

  Trace t;
  t.events.push_back(CodeFetch{1});
  CHECK_THROWS_AS(validate_trace(t), TraceInvariantError);
  refresh_num_code_pages(t);
  CHECK_NOTHROW(validate_trace(t));
  t.events.push_back(DataAccess{2, {64}});
  CHECK_THROWS_AS(validate_trace(t), TraceInvariantError);
  t.events.back() = DataAccess{2, {5, 3}};
  CHECK_THROWS_AS(validate_trace(t), TraceInvariantError);
  t.events.back() = CodeFetch{kMaxGpn};
  CHECK_THROWS_AS(validate_trace(t), TraceInvariantError);
  t.events.back() = Marker{MarkerKind::kStop};
  CHECK_THROWS_AS(validate_trace(t), TraceInvariantError);
}

TEST_CASE("trace_stats direct counts") {
  Trace t = parse_trace("NUM 1\nCF 10\nCF 10\nMA 20\n");
  TraceStats s = trace_stats(t);
  CHECK(s.total_cf == 2);
  CHECK(s.unique_cf == 1);
  CHECK(s.total_da == 1);
  CHECK(s.unique_da == 1);
  CHECK(trace_stats(Trace{}) == TraceStats{});
}

TEST_CASE("trace_stats honours marker windows") {
  Trace t = parse_trace("NUM 2\nCF 10\nMARK START\nCF 11\nMA 5 CL 1,2\nMARK STOP\nMA 6\n");
  TraceStats s = trace_stats(t);
  CHECK(s.total_cf == 1);
  CHECK(s.total_da == 1);
  CHECK(s.total_lines == 2);
}

TEST_CASE("trace_stats equals an independent re-scan of the text") {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 500; ++i) {
    Trace t = testing::random_trace(gen);
    REQUIRE(trace_stats(t) == rescan(write_trace(t)));
  }
}
