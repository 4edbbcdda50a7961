#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "normlens/elb.hpp"
#include "normlens/rng.hpp"

using namespace normlens;

TEST_CASE("elb reference values") {
  CHECK(std::abs(elb(0.0, 2, 1) - 0.365333855087208) < 1e-12);
  CHECK(std::abs(elb(-3.0, 2, 1) - 0.365333855087208) < 1e-12);
  CHECK(std::abs(elb(0.5, 3, 4) - 0.665572681898688) < 1e-12);
  CHECK(std::abs(elb(-50.0, 1024, 512) - std::log(1024.0)) < 1e-6);
  CHECK(std::abs(elb(3.0, 8, 512)) < 1e-6);
  CHECK(elb_gap(0.5, 77) == 2.0);
  CHECK_THROWS_AS(elb(0.0, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(elb(0.0, 4, 0), std::invalid_argument);
}

TEST_CASE("elb_dk") {
  CHECK(std::abs(elb_dk(0.3, 16, 64) - (-0.373439933974265)) < 1e-12);
  CHECK(elb_dk(0.7, 10, 1) == 0.0);
  Rng r(5);
  for (int t = 0; t < 200; ++t) {
    const double k = r.uniform(-1.0, 1.5);
    const std::size_t l = 2 + r.below(500);
    const std::size_t d = 2 + r.below(500);
    const double g = elb_dk(k, l, d);
    CHECK(g < 0.0);
    const double h = 1e-6;
    const double fd = (elb(k + h, l, d) - elb(k - h, l, d)) / (2.0 * h);
    // the difference quotient itself carries ~1e-10 of rounding noise
    if (std::abs(g) > 1e-3) CHECK(std::abs(fd - g) <= 1e-5 * std::abs(g));
  }
}

TEST_CASE("k50 solves the half-entropy equation") {
  const double expected[3][3] = {{0.709446214854817, 0.657084661141113, 0.62566772891289},
                                 {0.765312210394311, 0.698984157795733, 0.659187326236587},
                                 {0.812115329840543, 0.734086497380407, 0.687269197904326}};
  const std::size_t sizes[3] = {64, 256, 1024};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double k = k50(sizes[i], sizes[j]);
      CHECK(std::abs(k - expected[i][j]) < 1e-8);
      const double half = 0.5 * std::log(static_cast<double>(sizes[i]));
      CHECK(std::abs(elb(k, sizes[i], sizes[j]) - half) <= 1e-9);
      CHECK(elb(k - 1.0, sizes[i], sizes[j]) > half);
      CHECK(elb(k + 1.0, sizes[i], sizes[j]) < half);
    }
  CHECK_THROWS_AS(k50(16, 1), std::domain_error);
}

TEST_CASE("k50 does not depend on the bracket") {
  for (std::size_t l : {2u, 9u, 700u})
    for (std::size_t d : {2u, 30u, 4000u}) {
      const double ref = k50(l, d);
      for (auto [lo, hi] : {std::pair{-1.0, 3.0}, std::pair{0.9, 1.0}, std::pair{-20.0, -19.0},
                            std::pair{5.0, 6.0}}) {
        for (bool upper_first : {false, true}) {
          K50Options o;
          o.lo = lo;
          o.hi = hi;
          o.expand_upper_first = upper_first;
          const double k = k50(l, d, o);
          CHECK(std::abs(elb(k, l, d) - 0.5 * std::log(static_cast<double>(l))) <= 1e-9);
          CHECK(std::abs(k - ref) < 1e-6);
        }
      }
    }
  K50Options narrow;
  narrow.lo = 100.0;
  narrow.hi = 101.0;
  narrow.max_expansions = 2;
  CHECK_THROWS_AS(k50(64, 64, narrow), std::domain_error);
}

TEST_CASE("k50 varies less across L than across D") {
  double lo_l = 1e9, hi_l = -1e9, lo_d = 1e9, hi_d = -1e9;
  for (std::size_t v : {64u, 128u, 256u, 512u, 1024u}) {
    const double a = k50(v, 512), b = k50(512, v);
    lo_l = std::min(lo_l, a);
    hi_l = std::max(hi_l, a);
    lo_d = std::min(lo_d, b);
    hi_d = std::max(hi_d, b);
  }
  CHECK(hi_l - lo_l < hi_d - lo_d);
}

TEST_CASE("brute-force oracle") {
  SUBCASE("boundary minimizer") {
    const auto r = elb_bruteforce(0.0, 2, 1, 2001);
    CHECK(std::abs(r.entropy - 0.365333855087208) < 1e-12);
    REQUIRE(r.context.size() == 1);
    CHECK(r.context[0] == -1.0);
  }
  SUBCASE("closed form is the grid minimum, attained at c_j = -1") {
    for (std::size_t l : {2u, 3u, 4u})
      for (double k : {-1.0, 0.0, 0.75, 1.5})
        for (std::size_t d : {1u, 4u, 64u}) {
          // L >= 4 with a small gap is covered below
          if (l >= 4 && elb_gap(k, d) < 1.0) continue;
          const auto r = elb_bruteforce(k, l, d, 201);
          CHECK(r.entropy >= elb(k, l, d) - 1e-9);
          CHECK(std::abs(r.entropy - elb(k, l, d)) < 1e-9);
          for (double c : r.context) CHECK(c == -1.0);
        }
  }
  SUBCASE("L=4, small gap: one context token aligned with the anchor does better") {
    // d = 0.25; entropy of weights (1, 1, e^-d, e^-d) vs (1, e^-d, e^-d, e^-d)
    const auto r = elb_bruteforce(-1.0, 4, 4, 201);
    CHECK(std::abs(elb(-1.0, 4, 4) - 1.3799620748400562) < 1e-12);
    CHECK(std::abs(r.entropy - 1.3785424752173393) < 1e-12);
    CHECK(r.context == std::vector<double>{-1.0, -1.0, 1.0});
  }
  SUBCASE("endpoint-reduced search agrees with exhaustive search") {
    for (double k : {-0.5, 0.3, 1.0})
      for (std::size_t d : {3u, 50u}) {
        const auto ex4 = elb_bruteforce(k, 4, d, 101, SearchMode::Exhaustive);
        const auto ep4 = elb_bruteforce(k, 4, d, 101, SearchMode::EndpointReduced);
        CHECK(ex4.entropy == ep4.entropy);
        CHECK(ex4.context == ep4.context);
        CHECK(ep4.evaluations < ex4.evaluations);
      }
    const auto ex5 = elb_bruteforce(0.2, 5, 10, 101, SearchMode::Exhaustive);
    const auto ep5 = elb_bruteforce(0.2, 5, 10, 101, SearchMode::EndpointReduced);
    CHECK(ex5.entropy == ep5.entropy);
  }
  CHECK_THROWS_AS(elb_bruteforce(0.0, 7, 4, 101), std::invalid_argument);
  CHECK_THROWS_AS(elb_bruteforce(0.0, 1, 4, 101), std::invalid_argument);
  CHECK_THROWS_AS(elb_bruteforce(0.0, 3, 4, 100), std::invalid_argument);
  CHECK_THROWS_AS(elb_bruteforce(0.0, 6, 4, 100001), std::invalid_argument);
}

TEST_CASE("elb_curve") {
  const auto c = elb_curve(64, 256, -1.0, 3.0, 41);
  REQUIRE(c.size() == 41);
  CHECK(c.front().k == -1.0);
  CHECK(c.back().k == 3.0);
  CHECK(c.front().elb > c.back().elb);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c[i].elb >= 0.0);
    CHECK(c[i].elb < std::log(64.0));
    if (i) CHECK(c[i].elb <= c[i - 1].elb);
  }
  const auto two = elb_curve(8, 9, 0.1, 0.9, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].elb == elb(0.1, 8, 9));
  CHECK(two[1].elb == elb(0.9, 8, 9));
  CHECK_THROWS_AS(elb_curve(8, 9, 1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(elb_curve(8, 9, 0.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("k50_landscape layout") {
  const std::vector<std::size_t> ls{16, 32}, ds{8, 64, 512};
  const auto cells = k50_landscape(ls, ds, 1e-10);
  REQUIRE(cells.size() == 6);
  CHECK(cells[4].l == 32);
  CHECK(cells[4].d_dim == 64);
  CHECK(cells[4].k50 == k50(32, 64, [] {
          K50Options o;
          o.tol = 1e-10;
          return o;
        }()));
}
