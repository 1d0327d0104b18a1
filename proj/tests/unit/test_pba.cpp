#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "../reference/eager_pba.hpp"
#include "../reference/stats.hpp"
#include "pbagg/baselines.hpp"
#include "pbagg/pba.hpp"

using namespace pbagg;

namespace {

Pba pinned_pba(std::size_t m, std::vector<double> u, bool ef = false, bool preagg = false) {
  return Pba(PbaOptions{m, ef, preagg}, UniformSource::pinned(std::move(u)));
}

const ReservoirEntry& stored(const Pba& p, Key k) {
  const auto off = p.reservoir().lookup(k);
  REQUIRE(off);
  return p.reservoir()[*off];
}

}  // namespace

TEST_CASE("preaggregation merges consecutive runs only") {
  PreAggregator pre;
  CHECK_FALSE(pre.push({1, 1}));
  CHECK_FALSE(pre.push({1, 1}));
  CHECK_FALSE(pre.push({1, 1}));
  const auto run = pre.flush();
  REQUIRE(run);
  CHECK(*run == StreamItem{1, 3});
  CHECK_FALSE(pre.flush());

  CHECK_FALSE(pre.push({1, 1}));
  CHECK(*pre.push({2, 1}) == StreamItem{1, 1});
  CHECK(*pre.push({1, 1}) == StreamItem{2, 1});
  CHECK(*pre.flush() == StreamItem{1, 1});
}

TEST_CASE("update entry: q and estimate algebra") {
  Estimate e{5.0, 1.0};
  apply_threshold(e, 5.0, 10.0);
  CHECK(e.q == 0.5);
  CHECK(e.value() == 10.0);

  Estimate same{5.0, 1.0};
  apply_threshold(same, 5.0, 0.0);
  CHECK(same.q == 1.0);
  CHECK(same.value() == 5.0);

  Estimate half{2.5, 0.5};
  apply_threshold(half, 5.0, 8.0);  // 5/8 > 0.5
  CHECK(half.q == 0.5);
  CHECK(half.value() == 5.0);
}

TEST_CASE("pba: below capacity is exact") {
  auto p = pinned_pba(3, {0.3, 0.6});
  p.observe({1, 5});
  CHECK(stored(p, 1).w == 5);
  CHECK(stored(p, 1).est.q == 1);
  CHECK(p.query(1) == 5);
  p.observe({1, 2});
  CHECK(stored(p, 1).w == 7);
  CHECK(p.query(1) == 7);

  auto q = pinned_pba(2, {0.5, 0.5});
  q.observe({1, 5});
  q.observe({2, 3});
  q.observe({1, 2});
  CHECK(q.threshold() == 0);
  const auto s = q.summary();
  REQUIRE(s.entries.size() == 2);
  CHECK(s.entries[0] == SummaryEntry{1, 7});
  CHECK(s.entries[1] == SummaryEntry{2, 3});
  CHECK(q.query(42) == 0);
}

TEST_CASE("pba: m=1 rejection hand trace") {
  auto p = pinned_pba(1, {0.5, 0.9});
  p.observe({1, 5});  // priority 10
  p.observe({2, 3});  // priority 3.33, rejected
  CHECK(p.threshold() == doctest::Approx(3.0 / 0.9));
  CHECK(p.threshold() == 3.0 / 0.9);
  CHECK(p.query(2) == 0);
  CHECK(p.query(1) == 5);  // q = min(1, 5/3.33) = 1
  CHECK(p.counters().rejections == 1);
  CHECK(p.counters().evictions == 0);
}

TEST_CASE("pba: m=1 survivor is the larger priority") {
  // Enumerate both orderings of the two priorities.
  struct Case {
    double ua, ub;
    Key survivor;
  };
  for (const Case c : {Case{0.5, 0.9, 1}, Case{0.9, 0.1, 2}}) {
    auto p = pinned_pba(1, {c.ua, c.ub});
    p.observe({1, 5});
    p.observe({2, 3});
    const double pa = 5 / c.ua, pb = 3 / c.ub;
    const auto s = p.summary();
    REQUIRE(s.entries.size() == 1);
    CHECK(s.entries[0].key == c.survivor);
    CHECK(p.threshold() == std::min(pa, pb));
    // Survivor estimate is max(x, z).
    const double x = c.survivor == 1 ? 5.0 : 3.0;
    CHECK(s.entries[0].estimate == doctest::Approx(std::max(x, std::min(pa, pb))));
  }
}

TEST_CASE("pba: a deferred update fires on the next touch") {
  // m=1: a(2) u=0.5 -> prio 4; b(1) u=0.5 -> prio 2, rejected, z*=2 -> q_a unchanged (2/2 = 1)
  // c(3) u=0.25 -> prio 12 evicts a, z*=4; c has w=3, q -> 3/4 at next touch.
  auto p = pinned_pba(1, {0.5, 0.5, 0.25});
  p.observe({1, 2});
  p.observe({2, 1});
  CHECK(p.threshold() == 2);
  p.observe({3, 3});
  CHECK(p.threshold() == 4);
  CHECK(stored(p, 3).est.q == 1);  // not yet touched
  p.observe({3, 1});               // q = 0.75, acc = 3 + 0.75
  CHECK(stored(p, 3).est.q == 0.75);
  CHECK(p.query(3) == doctest::Approx(3.75 / 0.75));
  CHECK(p.query(3) == p.query(3));  // idempotent
}

TEST_CASE("pba: error filter drops the admitting item") {
  auto p = pinned_pba(1, {0.5, 0.25}, true);
  p.observe({1, 2});  // admitted below capacity, estimate 0
  CHECK(p.query(1) == 0);
  p.observe({1, 1});
  CHECK(p.query(1) == 1);
  p.observe({2, 4});  // prio 16 > 6, evicts 1 with z* = 6
  CHECK(p.threshold() == 6);
  CHECK(p.query(2) == 0);  // single-item key: nothing counted
  p.observe({2, 3});       // q = 4/6
  CHECK(p.query(2) == doctest::Approx(3.0));
}

TEST_CASE("pba: validation of items and capacity") {
  auto p = pinned_pba(1, {0.5});
  CHECK_THROWS_AS(p.observe({1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(p.observe({1, -2}), std::invalid_argument);
  CHECK_THROWS_AS(p.observe({1, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(p.observe({1, INFINITY}), std::invalid_argument);
  CHECK(p.counters().items == 0);
}

TEST_CASE("pba: preaggregated runs behave like single items") {
  auto a = Pba(PbaOptions{2, false, true}, UniformSource::pinned({0.5, 0.4, 0.3}));
  for (const StreamItem it : {StreamItem{1, 1}, {1, 2}, {2, 1}, {3, 5}, {3, 1}}) a.observe(it);
  auto b = pinned_pba(2, {0.5, 0.4, 0.3});
  for (const StreamItem it : {StreamItem{1, 3}, {2, 1}, {3, 6}}) b.observe(it);
  CHECK(a.summary().entries == b.summary().entries);
  CHECK(a.counters().items == 5);
}

TEST_CASE("pba: deferred equals eager on random streams") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + rng() % 8;
    const std::size_t n = 1 + rng() % 150;
    const Key keys = 1 + rng() % 30;
    std::vector<StreamItem> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back({rng() % keys, 0.5 + static_cast<double>(rng() % 40) / 4});
    std::vector<double> u(n);
    for (auto& x : u) x = to_unit(rng());
    for (const bool ef : {false, true}) {
      auto p = pinned_pba(m, u, ef);
      ref::EagerPba e(m, u, ef);
      for (const auto& it : items) {
        p.observe(it);
        e.observe(it.key, it.size);
      }
      const auto s = p.summary();
      const auto expect = e.estimates();
      REQUIRE(s.entries.size() == expect.size());
      for (const auto& entry : s.entries) CHECK(entry.estimate == expect.at(entry.key));
      CHECK(p.threshold() == e.threshold());
    }
  }
}

TEST_CASE("pba: unique keys reduce to priority sampling") {
  // n=5, m=2
  const std::vector<double> w{4, 1, 7, 2, 3};
  const std::vector<double> u{0.5, 0.9, 0.8, 0.1, 0.3};
  auto p = pinned_pba(2, u);
  for (Key k = 0; k < w.size(); ++k) p.observe({k, w[k]});
  const auto ps = priority_sample(w, 2, u);
  // priorities 8, 1.11, 8.75, 20, 10
  CHECK(ps.retained == std::vector<std::size_t>{3, 4});
  CHECK(ps.threshold == 8.75);
  CHECK(p.threshold() == ps.threshold);
  for (const auto& e : p.summary().entries) CHECK(e.estimate == doctest::Approx(ps.estimates[e.key]));
}

TEST_CASE("pba: conservation a >= w and q stays in (0,1]") {
  std::mt19937_64 rng(5);
  Pba p(PbaOptions{16, false, false}, UniformSource::seeded(3));
  for (int i = 0; i < 20000; ++i) {
    p.observe({rng() % 200, 1.0 + static_cast<double>(rng() % 3)});
    if (i % 500 == 0) {
      for (const auto& e : p.reservoir().entries()) {
        CHECK(e.est.q > 0);
        CHECK(e.est.q <= 1);
        CHECK(p.query(e.key) >= e.w * (1 - 1e-12));
      }
    }
  }
}

TEST_CASE("pba: unbiased on a small instance") {
  const std::vector<double> truth{40, 20, 10, 6, 3, 2, 1, 1};
  std::vector<StreamItem> stream;
  for (Key k = 0; k < truth.size(); ++k)
    for (int j = 0; j < truth[k]; ++j) stream.push_back({k, 1.0});
  std::vector<ref::Running> est(truth.size());
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    auto items = stream;
    std::shuffle(items.begin(), items.end(), std::mt19937_64(seed));
    Pba p(PbaOptions{3, false, true}, UniformSource::seeded(seed));
    for (const auto& it : items) p.observe(it);
    for (Key k = 0; k < truth.size(); ++k) est[k].add(p.query(k));
  }
  for (Key k = 0; k < truth.size(); ++k) CHECK(std::abs(est[k].mean - truth[k]) <= 4 * est[k].se() + 1e-9);
}

TEST_CASE("pba: hashed randomizers are reproducible") {
  const auto run = [] {
    Pba p(PbaOptions{4, false, true}, UniformSource::hashed(11));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) p.observe({rng() % 50, 1.0});
    return p.summary().entries;
  };
  CHECK(run() == run());
}
