#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plremix/diag.hpp"
#include "test_util.hpp"

using namespace plremix;
using namespace plremix::testing;

TEST_CASE("entanglement") {
  const Vec g{1.0, 2.0, -1.0};
  CHECK(entanglement(g, g) == doctest::Approx(1.0));
  Vec neg = g;
  for (double& v : neg) v = -v;
  CHECK(entanglement(neg, g) == doctest::Approx(-1.0));
  CHECK(entanglement({2.0, -1.0, 0.0}, {1.0, 2.0, 5.0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(entanglement(g, Vec(3, 0.0)), std::invalid_argument);

  SUBCASE("scaling behavior") {
    Rng rng(1);
    Vec g1(10), g2(10);
    for (double& v : g1) v = rng.normal();
    for (double& v : g2) v = rng.normal();
    const double c = 3.7;
    Vec g1c = g1;
    for (double& v : g1c) v *= c;
    CHECK(entanglement(g1c, g2) == doctest::Approx(c * entanglement(g1, g2)).epsilon(1e-12));
    CHECK(magnitude_ratio(g1c, g2) ==
          doctest::Approx(c * magnitude_ratio(g1, g2)).epsilon(1e-12));
  }
}

TEST_CASE("magnitude_ratio") {
  const Vec g{3.0, 4.0};
  CHECK(magnitude_ratio(g, g) == doctest::Approx(1.0));
  CHECK(magnitude_ratio(Vec(2, 0.0), g) == doctest::Approx(0.0));
  Vec twice = g;
  for (double& v : twice) v *= 2.0;
  CHECK(magnitude_ratio(twice, g) == doctest::Approx(2.0));
  CHECK_THROWS_AS(magnitude_ratio(g, Vec(2, 0.0)), std::invalid_argument);
}

TEST_CASE("neg_pair_stats") {
  SUBCASE("empty sets report zero selection and no correct ratio") {
    NegativeSets ns;
    ns.neighbors.resize(4);
    const NegPairStats st = neg_pair_stats(ns, {0, 1, 2, 3});
    CHECK(st.select_ratio == 0.0);
    CHECK_FALSE(st.correct_ratio.has_value());
  }
  SUBCASE("hand-built b=4 case") {
    NegativeSets ns;
    ns.neighbors = {{1, 2}, {0}, {0}, {}};
    const std::vector<int> truth{0, 0, 1, 1};
    const NegPairStats st = neg_pair_stats(ns, truth);
    CHECK(st.total_pairs == 12);
    CHECK(st.selected_pairs == 4);
    // (0,1) same, (0,2) differ, (1,0) same, (2,0) differ
    CHECK(st.correct_pairs == 2);
    CHECK(st.select_ratio == doctest::Approx(4.0 / 12.0));
    CHECK(st.correct_ratio.value() == doctest::Approx(0.5));
  }
  SUBCASE("full sets on balanced labels approach (C-1)/C") {
    const int b = 100, classes = 5;
    NegativeSets ns;
    ns.neighbors.resize(b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        if (i != j) ns.neighbors[i].push_back(j);
    std::vector<int> truth(b);
    for (int i = 0; i < b; ++i) truth[i] = i % classes;
    const NegPairStats st = neg_pair_stats(ns, truth);
    CHECK(st.select_ratio == doctest::Approx(1.0));
    // brute-force expectation on this exact label multiset
    long long differ = 0;
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        if (i != j && truth[i] != truth[j]) ++differ;
    CHECK(st.correct_ratio.value() == doctest::Approx(double(differ) / (b * (b - 1))));
    CHECK(st.correct_ratio.value() ==
          doctest::Approx((classes - 1.0) / classes).epsilon(0.02));
  }
  SUBCASE("counts match a quadratic enumerator on random sets") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      const int b = 2 + rng.uniform_int(20);
      const Mat t = random_prob_rows(b, 6, rng);
      std::vector<int> noisy(b), truth(b);
      for (int& v : noisy) v = rng.uniform_int(6);
      for (int& v : truth) v = rng.uniform_int(6);
      const NegativeSets ns = reliable_negative_set(t, noisy, 2, true);
      const NegPairStats st = neg_pair_stats(ns, truth);
      long long sel = 0, corr = 0;
      for (int i = 0; i < b; ++i)
        for (int j : ns.neighbors[i]) {
          ++sel;
          if (truth[i] != truth[j]) ++corr;
        }
      CHECK(st.selected_pairs == sel);
      CHECK(st.correct_pairs == corr);
    }
  }
}

TEST_CASE("separation_auc") {
  SUBCASE("perfect separation gives one") {
    const Vec w{0.9, 0.8, 0.2, 0.1};
    const std::vector<bool> clean{true, true, false, false};
    CHECK(separation_auc(w, clean) == doctest::Approx(1.0));
  }
  SUBCASE("a constant score gives one half") {
    const Vec w(6, 0.42);
    const std::vector<bool> clean{true, false, true, false, true, false};
    CHECK(separation_auc(w, clean) == doctest::Approx(0.5));
  }
  SUBCASE("small hand case via pair counting") {
    const Vec w{0.9, 0.8, 0.4, 0.6};
    const std::vector<bool> clean{true, true, false, false};
    // all four clean-noisy pairs are correctly ordered
    CHECK(separation_auc(w, clean) == doctest::Approx(1.0));
  }
  SUBCASE("invariant under strictly monotone transforms") {
    Rng rng(3);
    Vec w(30);
    for (double& v : w) v = rng.uniform();
    std::vector<bool> clean(30);
    for (int i = 0; i < 30; ++i) clean[i] = rng.uniform() < 0.4;
    if (std::none_of(clean.begin(), clean.end(), [](bool b) { return b; })) clean[0] = true;
    if (std::all_of(clean.begin(), clean.end(), [](bool b) { return b; })) clean[1] = false;
    const double base = separation_auc(w, clean);
    Vec squashed = w;
    for (double& v : squashed) v = 1.0 / (1.0 + std::exp(-7.0 * v));
    CHECK(separation_auc(squashed, clean) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("ties are averaged") {
    const Vec w{0.5, 0.5};
    const std::vector<bool> clean{true, false};
    CHECK(separation_auc(w, clean) == doctest::Approx(0.5));
  }
  SUBCASE("one-class input errors") {
    CHECK_THROWS_AS(separation_auc({0.1, 0.2}, {true, true}), std::invalid_argument);
  }
}
