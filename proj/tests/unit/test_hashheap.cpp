#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "../reference/heap_oracle.hpp"
#include "pbagg/hashheap.hpp"

using namespace pbagg;

namespace {

ReservoirEntry entry(Key k, double w, double u) { return ReservoirEntry::make(k, w, u, w); }

// Keys 0.. whose home slot equals that of `first`.
std::vector<Key> colliding_keys(const HashHeap& h, Key first, std::size_t n) {
  std::vector<Key> out{first};
  for (Key k = first + 1; out.size() < n; ++k)
    if (h.home_slot(k) == h.home_slot(first)) out.push_back(k);
  return out;
}

}  // namespace

TEST_CASE("hashheap: insert and lookup") {
  HashHeap h(3);
  CHECK(h.empty());
  CHECK(h.table_size() == 8);
  h.insert(entry(7, 5, 0.5));
  h.insert(entry(9, 3, 0.9));
  REQUIRE(h.lookup(7));
  CHECK(h[*h.lookup(7)].w == 5);
  CHECK_FALSE(h.lookup(8));
  CHECK(h.min()->key == 9);
  CHECK(h.check_invariants());
}

TEST_CASE("hashheap: min follows priority w/u, not weight") {
  HashHeap h(4);
  h.insert(entry(1, 10, 1.0));  // 10
  h.insert(entry(2, 1, 0.05));  // 20
  h.insert(entry(3, 4, 0.5));   // 8
  CHECK(h.min()->key == 3);
  CHECK(h.min()->priority == doctest::Approx(8));
  h.increase_weight(3, 2);  // 12
  CHECK(h.min()->key == 1);
  CHECK(h.check_invariants());
}

TEST_CASE("hashheap: equal priorities order by key") {
  HashHeap h(3);
  h.insert(entry(5, 2, 0.5));
  h.insert(entry(3, 4, 1.0));
  h.insert(entry(4, 1, 0.25));
  CHECK(h.min()->key == 3);
}

TEST_CASE("hashheap: contract violations throw") {
  HashHeap h(2);
  h.insert(entry(1, 1, 0.5));
  CHECK_THROWS_AS(h.insert(entry(1, 2, 0.5)), std::logic_error);
  CHECK_THROWS_AS(h.increase_weight(2, 1.0), std::logic_error);
  CHECK_THROWS_AS(h.increase_weight(1, 0.0), std::logic_error);
  CHECK_THROWS_AS(h.increase_weight(1, -1.0), std::logic_error);
  CHECK_THROWS_AS(h.replace_min(entry(3, 9, 0.5)), std::logic_error);  // not full
  h.insert(entry(2, 3, 0.5));
  CHECK_THROWS_AS(h.insert(entry(3, 1, 0.5)), std::logic_error);
  CHECK_THROWS_AS(h.replace_min(entry(3, 0.1, 0.5)), std::logic_error);  // does not outrank
  CHECK_THROWS_AS(h.replace_min(entry(2, 100, 0.5)), std::logic_error);  // duplicate
  CHECK_THROWS_AS(HashHeap(0), std::invalid_argument);
}

TEST_CASE("hashheap: replace_min returns the evicted root") {
  HashHeap h(2);
  h.insert(entry(1, 1, 0.5));  // 2
  h.insert(entry(2, 3, 0.5));  // 6
  const auto ev = h.replace_min(entry(3, 2, 0.5));  // 4
  CHECK(ev.key == 1);
  CHECK(ev.priority == 2);
  CHECK_FALSE(h.lookup(1));
  CHECK(h.lookup(3));
  CHECK(h.min()->key == 3);
  CHECK(h.check_invariants());
}

TEST_CASE("hashheap: colliding keys resolve through the heap key") {
  HashHeap h(8);
  const auto keys = colliding_keys(h, 11, 5);
  for (std::size_t i = 0; i < keys.size(); ++i) h.insert(entry(keys[i], 1.0 + static_cast<double>(i), 0.5));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    REQUIRE(h.lookup(keys[i]));
    CHECK(h[*h.lookup(keys[i])].w == 1.0 + static_cast<double>(i));
  }
  // Fill up, then evict the cluster head; backward-shift deletion must keep
  // the rest of the cluster reachable.
  for (Key k = 0; k < 3; ++k) h.insert(entry(1000 + k, 50.0, 0.5));
  const auto ev = h.replace_min(entry(5000, 500.0, 0.5));
  CHECK(ev.key == keys[0]);
  for (std::size_t i = 1; i < keys.size(); ++i) CHECK(h.lookup(keys[i]));
  CHECK_FALSE(h.lookup(keys[0]));
  CHECK(h.check_invariants());
}

TEST_CASE("hashheap: randomized ops agree with the ordered-set oracle") {
  std::mt19937_64 rng(123);
  for (const std::size_t cap : {1u, 2u, 7u, 64u}) {
    HashHeap h(cap);
    ref::HeapOracle oracle;
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    for (int op = 0; op < 20000; ++op) {
      const Key k = rng() % (3 * cap + 2);
      const int kind = static_cast<int>(rng() % 3);
      if (oracle.contains(k)) {
        const double d = unit(rng);
        h.increase_weight(k, d);
        oracle.increase(k, d);
      } else if (!h.full()) {
        const auto e = entry(k, unit(rng) * 5, unit(rng));
        h.insert(e);
        oracle.insert(e);
      } else if (kind != 0) {
        const auto e = entry(k, unit(rng) * 5, unit(rng));
        if (lower_priority(h[0], e)) {
          const auto ev = h.replace_min(e);
          const auto expect = oracle.pop_min();
          CHECK(ev.key == expect.key);
          oracle.insert(e);
        }
      }
      REQUIRE(h.size() == oracle.size());
      REQUIRE(h.min()->key == oracle.min()->second);
    }
    CHECK(h.check_invariants());
    for (const auto& [k, e] : oracle.entries()) {
      REQUIRE(h.lookup(k));
      CHECK(h[*h.lookup(k)].w == e.w);
    }
  }
}

TEST_CASE("hashheap: aggregation moves stay O(1) on average") {
  // Heavy-tailed key popularity over a full heap, the regime of a running
  // reservoir.
  std::mt19937_64 rng(9);
  const std::size_t m = 1000;
  HashHeap h(m);
  std::uniform_real_distribution<double> unit(1e-9, 1.0);
  for (Key k = 0; k < m; ++k) h.insert(entry(k, 1.0, unit(rng)));
  const std::size_t ops = 200000;
  for (std::size_t i = 0; i < ops; ++i) {
    const Key k = static_cast<Key>(std::pow(unit(rng), -1.0 / 1.2)) % m;
    h.increase_weight(k, 1.0);
  }
  const double per_op = static_cast<double>(h.aggregation_moves()) / static_cast<double>(ops);
  MESSAGE("mean sift-down moves per aggregation: " << per_op);
  CHECK(per_op <= 2.5);
  CHECK(h.check_invariants());
}

TEST_CASE("hashheap: priorities 5,3,8 and root replacement") {
  const auto build = [] {
    HashHeap h(3);
    h.insert(entry(1, 5, 1.0));
    h.insert(entry(2, 3, 1.0));
    h.insert(entry(3, 8, 1.0));
    return h;
  };
  HashHeap h = build();
  CHECK(h.min()->priority == 3);
  CHECK(h.replace_min(entry(4, 4, 1.0)).key == 2);
  CHECK(h.min()->priority == 4);

  HashHeap g = build();
  CHECK(g.replace_min(entry(4, 9, 1.0)).key == 2);
  CHECK(g.min()->priority == 5);
  CHECK(g.check_invariants());

  HashHeap one(1);
  CHECK_FALSE(one.min());
  one.insert(entry(1, 1, 1.0));
  CHECK(one.min()->key == 1);
  CHECK(one.replace_min(entry(2, 2, 1.0)).key == 1);
  CHECK(one.min()->key == 2);
}

TEST_CASE("hashheap: increase at root sinks it, at a leaf it stays") {
  HashHeap h(7);
  for (Key k = 1; k <= 7; ++k) h.insert(entry(k, static_cast<double>(k), 1.0));
  // Already a heap: insertion in order moved nothing.
  for (Key k = 1; k <= 7; ++k) CHECK(*h.lookup(k) == k - 1);
  h.increase_weight(7, 1.0);  // leaf
  CHECK(*h.lookup(7) == 6);
  h.increase_weight(1, 9.5);  // root: 10.5 -> swaps with the smaller child (2)
  CHECK(h.min()->key == 2);
  CHECK(h.check_invariants());
  CHECK(h.entries().size() == 7);
}
