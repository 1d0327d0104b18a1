#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "../reference/stats.hpp"
#include "pbagg/baselines.hpp"

using namespace pbagg;

TEST_CASE("exact aggregation") {
  ExactAggregator e;
  CHECK(e.summary().entries.empty());
  e.observe({1, 5});
  e.observe({1, 2});
  CHECK(e.query(1) == 7);
  CHECK(e.query(2) == 0);

  std::mt19937_64 rng(1);
  ExactAggregator big;
  std::map<Key, double> expect;
  for (int i = 0; i < 10000; ++i) {
    const Key k = rng() % 300;
    const double x = 1.0 + static_cast<double>(rng() % 1000);  // integers: order-free sums
    big.observe({k, x});
    expect[k] += x;
  }
  for (const auto& [k, v] : expect) CHECK(big.query(k) == v);
  CHECK(big.summary().entries.size() == expect.size());
}

TEST_CASE("priority_sample: hand examples") {
  const std::vector<double> w{4, 1};
  const std::vector<double> u{0.5, 0.9};
  const auto s = priority_sample(w, 1, u);
  CHECK(s.retained == std::vector<std::size_t>{0});
  CHECK(s.threshold == 1.0 / 0.9);
  CHECK(s.estimates[0] == 4);
  CHECK(s.estimates[1] == 0);

  const auto all = priority_sample(w, 2, u);
  CHECK(all.threshold == 0);
  CHECK(all.estimates == w);
}

TEST_CASE("priority_sample: retained set is the top-m by full sort") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng() % 40, m = 1 + rng() % 10;
    std::vector<double> w(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.1 + to_unit(rng()) * 10;
      u[i] = to_unit(rng());
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return w[a] / u[a] > w[b] / u[b]; });
    idx.resize(std::min(n, m));
    std::sort(idx.begin(), idx.end());
    CHECK(priority_sample(w, m, u).retained == idx);
  }
}

TEST_CASE("priority_sample: unbiased") {
  const std::vector<double> w{5, 1, 3, 0.5, 2};
  std::vector<ref::Running> est(w.size());
  std::mt19937_64 rng(3);
  std::vector<double> u(w.size());
  for (int r = 0; r < 100000; ++r) {
    for (auto& x : u) x = to_unit(rng());
    const auto s = priority_sample(w, 2, u);
    for (std::size_t i = 0; i < w.size(); ++i) est[i].add(s.estimates[i]);
  }
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(est[i].mean - w[i]) <= 4 * est[i].se());
}

TEST_CASE("sample and hold") {
  SampleHold tiny(1e-12, UniformSource::seeded(1));
  for (const StreamItem it : {StreamItem{1, 2}, {2, 3}, {1, 1}}) tiny.observe(it);
  CHECK(tiny.query(1) == 3);
  CHECK(tiny.query(2) == 3);

  // x >= z admits deterministically whatever the draw.
  SampleHold sure(2.0, UniformSource::pinned({1.0}));
  sure.observe({7, 2.5});
  CHECK(sure.query(7) == 2.5);

  std::vector<StreamItem> items(100, StreamItem{9, 1.0});
  ref::Running est;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    SampleHold sh(10.0, UniformSource::seeded(seed));
    for (const auto& it : items) sh.observe(it);
    est.add(sh.query(9));
  }
  CHECK(std::abs(est.mean - 100) <= 4 * est.se());
}

TEST_CASE("ash: exact while the cache has room") {
  Ash a(4, UniformSource::seeded(1));
  for (const StreamItem it : {StreamItem{1, 2}, {2, 3}, {1, 1}, {3, 1}}) a.observe(it);
  CHECK(a.query(1) == 3);
  CHECK(a.query(2) == 3);
  CHECK(a.counters().deletion_rounds == 0);
}

TEST_CASE("ash: m=1 symmetric keys survive half the time") {
  int first = 0;
  const int runs = 20000;
  for (int s = 0; s < runs; ++s) {
    Ash a(1, UniformSource::seeded(static_cast<std::uint64_t>(s)));
    a.observe({1, 5});
    a.observe({2, 5});
    first += a.query(1) > 0;
  }
  const double p = static_cast<double>(first) / runs;
  CHECK(std::abs(p - 0.5) <= 4 * std::sqrt(0.25 / runs));
}

TEST_CASE("ash: each deletion round draws cache size + 1 randomizers") {
  Ash a(10, UniformSource::seeded(1));
  for (Key k = 0; k < 50; ++k) a.observe({k, 1.0});
  CHECK(a.size() == 10);
  CHECK(a.counters().deletion_rounds == 40);
  CHECK(a.counters().randomizer_draws == 40 * 11);
  CHECK(a.counters().evictions == 40);
}

TEST_CASE("ash: unbiased on a small instance") {
  const std::vector<double> truth{30, 12, 7, 4, 2, 2, 1, 1, 1};
  std::vector<StreamItem> stream;
  for (Key k = 0; k < truth.size(); ++k)
    for (int j = 0; j < truth[k]; ++j) stream.push_back({k, 1.0});
  std::vector<ref::Running> est(truth.size());
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    auto items = stream;
    std::shuffle(items.begin(), items.end(), std::mt19937_64(seed));
    Ash a(3, UniformSource::seeded(seed + 99));
    for (const auto& it : items) a.observe(it);
    for (Key k = 0; k < truth.size(); ++k) est[k].add(a.query(k));
  }
  for (Key k = 0; k < truth.size(); ++k) CHECK(std::abs(est[k].mean - truth[k]) <= 4 * est[k].se() + 1e-9);
}
