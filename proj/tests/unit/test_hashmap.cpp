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

#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "leaklab/collector.hpp"
#include "leaklab/hashmap.hpp"

using namespace leaklab;

namespace {

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

std::set<Gpn> touched_pages(const std::vector<MemEvent>& tap) {
  std::set<Gpn> out;
  for (const auto& e : tap) {
    if (auto* r = std::get_if<mem::Read>(&e)) out.insert(r->gpn);
    if (auto* w = std::get_if<mem::Write>(&e)) out.insert(w->gpn);
  }
  return out;
}

}  // namespace

TEST_CASE("prime ladder is made of increasing primes") {
  const auto& ladder = default_prime_ladder();
  CHECK(std::vector<std::uint64_t>(ladder.begin(), ladder.begin() + 7) ==
        std::vector<std::uint64_t>{13, 29, 59, 127, 257, 541, 1109});
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    CHECK(is_prime(ladder[i]));
    if (i > 0) CHECK(ladder[i] > ladder[i - 1]);
  }
}

TEST_CASE("rehash happens exactly when a new key pushes size past bucket_count") {
  SimMachine m(1);
  m.set_tracing(false);
  SimHashMap map(m);
  for (int i = 0; i < 1200; ++i) {
    const std::uint64_t size_before = map.size();
    const std::uint64_t buckets_before = map.bucket_count();
    auto r = map.insert("key" + std::to_string(i));
    CHECK(r.created);
    CHECK(r.rehashed == (size_before + 1 > buckets_before));
    // Re-inserting an existing key never rehashes.
    auto again = map.insert("key" + std::to_string(i));
    CHECK_FALSE(again.created);
    CHECK_FALSE(again.rehashed);
    CHECK(map.size() <= map.bucket_count());
  }
  CHECK(map.bucket_count() == 2357);
  CHECK(map.rehash_count() == 7);
}

TEST_CASE("a table holding exactly a rung of keys rehashes on the next new key only") {
  SimMachine m(1);
  m.set_tracing(false);
  SimHashMap map(m);
  for (int i = 0; i < 541; ++i) map.insert("k" + std::to_string(i));
  CHECK(map.bucket_count() == 541);
  CHECK(map.size() == 541);
  CHECK_FALSE(map.insert("k7").rehashed);
  CHECK(map.insert("fresh").rehashed);
  CHECK(map.bucket_count() == 1109);
}

TEST_CASE("counts, lookups and keys") {
  SimMachine m(1);
  SimHashMap map(m);
  map.insert("a");
  map.insert("b", 5);
  map.insert("a");
  auto a = map.find("a");
  REQUIRE(a.has_value());
  CHECK(map.peek_count(*a) == 2);
  CHECK(map.peek_key(*a) == "a");
  CHECK(map.read_count(*map.find("b")) == 5);
  CHECK_FALSE(map.find("c").has_value());
  CHECK_THROWS_AS(map.insert(std::string(225, 'x')), std::invalid_argument);
  CHECK_NOTHROW(map.insert(std::string(224, 'x')));
}

TEST_CASE("nodes are packed sixteen per page in insertion order") {
  SimMachine m(1);
  SimHashMap map(m);
  for (int i = 0; i < 40; ++i) map.insert("n" + std::to_string(i));
  CHECK(page_of(map.node_addr(0)) == page_of(map.node_addr(15)));
  CHECK(page_of(map.node_addr(16)) != page_of(map.node_addr(15)));
  CHECK(map.node_addr(1) - map.node_addr(0) == 256);
}

TEST_CASE("rehash touches every bucket page and every node page") {
  SimMachine m(1);
  m.set_tracing(false);
  SimHashMap map(m);
  for (int i = 0; i < 541; ++i) map.insert("k" + std::to_string(i));
  std::set<Gpn> nodes;
  for (std::size_t i = 0; i < map.size(); ++i) nodes.insert(page_of(map.node_addr(i)));
  const Gpn old_buckets = page_of(map.bucket_addr(0));
  m.set_tracing(true);
  REQUIRE(map.insert("new").rehashed);
  std::set<Gpn> pages = touched_pages(m.take_tap());
  for (Gpn g : nodes) CHECK(pages.count(g) == 1);
  CHECK(pages.count(old_buckets) == 1);
  CHECK(pages.count(page_of(map.bucket_addr(0))) == 1);
  CHECK(pages.count(page_of(map.bucket_addr(1108))) == 1);
}

TEST_CASE("insertion order does not change where keys land") {
  std::vector<std::string> keys;
  for (int i = 0; i < 300; ++i) keys.push_back("url" + std::to_string(i % 120));
  auto bucket_of_keys = [](const std::vector<std::string>& ks) {
    SimMachine m(1);
    m.set_tracing(false);
    SimHashMap map(m);
    for (const auto& k : ks) map.insert(k);
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> out;
    for (std::size_t i = 0; i < map.size(); ++i) {
      std::string k = map.peek_key(i);
      out[k] = {SimHashMap::hash_key(k) % map.bucket_count(), map.peek_count(i)};
    }
    return std::make_pair(map.bucket_count(), out);
  };
  std::vector<std::string> reversed(keys.rbegin(), keys.rend());
  CHECK(bucket_of_keys(keys) == bucket_of_keys(reversed));
}

TEST_CASE("custom ladders and exhaustion") {
  SimMachine m(1);
  m.set_tracing(false);
  SimHashMap map(m, {3, 7});
  for (int i = 0; i < 7; ++i) map.insert(std::to_string(i));
  CHECK(map.bucket_count() == 7);
  CHECK_THROWS_AS(map.insert("overflow"), std::length_error);
  CHECK_THROWS_AS(SimHashMap(m, {}), std::invalid_argument);
  CHECK_THROWS_AS(SimHashMap(m, {7, 3}), std::invalid_argument);
}

TEST_CASE("operations run on their own code pages") {
  SimMachine m(1);
  SimHashMap map(m);
  m.clear_tap();
  map.insert("x");
  map.insert("x");
  std::set<Gpn> code;
  for (const auto& e : m.tap()) {
    if (auto* x = std::get_if<mem::Exec>(&e)) code.insert(x->gpn);
  }
  const auto& c = map.code();
  CHECK(code == std::set<Gpn>{c.hash, c.probe, c.new_node, c.increment});
}
