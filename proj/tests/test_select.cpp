#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plremix/select.hpp"
#include "test_util.hpp"

using namespace plremix;
using namespace plremix::testing;

namespace {

std::vector<LossPair> two_gaussian_points(double mx0, double my0, double mx1, double my1,
                                          double sigma, int n_per, Rng& rng,
                                          std::vector<bool>* from_first = nullptr) {
  std::vector<LossPair> pts;
  for (int i = 0; i < n_per; ++i) {
    pts.push_back({mx0 + sigma * rng.normal(), my0 + sigma * rng.normal()});
    if (from_first) from_first->push_back(true);
  }
  for (int i = 0; i < n_per; ++i) {
    pts.push_back({mx1 + sigma * rng.normal(), my1 + sigma * rng.normal()});
    if (from_first) from_first->push_back(false);
  }
  return pts;
}

}  // namespace

TEST_CASE("loss_pairs") {
  SUBCASE("one-hot at the label gives zero classification loss") {
    Mat t(1, 3), s(1, 3, 1.0 / 3);
    t(0, 1) = 1.0;
    const auto pairs = loss_pairs(t, s, {1});
    CHECK(pairs[0].l_cls == doctest::Approx(0.0));
    CHECK(pairs[0].l_proto == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("uniform predictions over ten classes give ln 10") {
    const Mat t(2, 10, 0.1), s(2, 10, 0.1);
    const auto pairs = loss_pairs(t, s, {0, 7});
    CHECK(pairs[0].l_cls == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(pairs[1].l_proto == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SUBCASE("zero probability hits the clamp, not infinity") {
    Mat t(1, 2), s(1, 2, 0.5);
    t(0, 0) = 1.0;  // label 1 has probability zero
    const auto pairs = loss_pairs(t, s, {1});
    CHECK(pairs[0].l_cls == doctest::Approx(-std::log(1e-12)));
    CHECK(std::isfinite(pairs[0].l_cls));
  }
}

TEST_CASE("normalize_losses") {
  SUBCASE("identical pairs map to zero") {
    const std::vector<LossPair> pairs(5, {2.0, 3.0});
    for (const auto& p : normalize_losses(pairs)) {
      CHECK(p.l_cls == 0.0);
      CHECK(p.l_proto == 0.0);
    }
  }
  SUBCASE("endpoints") {
    const std::vector<LossPair> pairs{{0.0, 0.0}, {2.0, 4.0}};
    const auto out = normalize_losses(pairs);
    CHECK(out[0].l_cls == 0.0);
    CHECK(out[0].l_proto == 0.0);
    CHECK(out[1].l_cls == 1.0);
    CHECK(out[1].l_proto == 1.0);
  }
  SUBCASE("range property") {
    Rng rng(1);
    std::vector<LossPair> pairs;
    for (int i = 0; i < 40; ++i) pairs.push_back({rng.uniform() * 7, rng.uniform() * 3});
    const auto out = normalize_losses(pairs);
    double min_c = 1e300, max_c = -1e300, min_p = 1e300, max_p = -1e300;
    for (const auto& p : out) {
      min_c = std::min(min_c, p.l_cls);
      max_c = std::max(max_c, p.l_cls);
      min_p = std::min(min_p, p.l_proto);
      max_p = std::max(max_p, p.l_proto);
    }
    CHECK(min_c == 0.0);
    CHECK(max_c == 1.0);
    CHECK(min_p == 0.0);
    CHECK(max_p == 1.0);
  }
}

TEST_CASE("fit_gmm2d") {
  SUBCASE("recovers two well-separated clusters") {
    Rng rng(2);
    const auto pts = two_gaussian_points(0.0, 0.0, 5.0, 5.0, 0.3, 1000, rng);
    const Gmm2d gmm = fit_gmm2d(pts);
    const int low = gmm.comp[0].mean[0] < gmm.comp[1].mean[0] ? 0 : 1;
    CHECK(std::abs(gmm.comp[low].mean[0]) < 0.1);
    CHECK(std::abs(gmm.comp[low].mean[1]) < 0.1);
    CHECK(std::abs(gmm.comp[1 - low].mean[0] - 5.0) < 0.1);
    CHECK(std::abs(gmm.comp[1 - low].mean[1] - 5.0) < 0.1);
    CHECK(gmm.comp[0].weight + gmm.comp[1].weight == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("log-likelihood never decreases") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const auto pts = two_gaussian_points(rng.uniform(), rng.uniform(), 1 + rng.uniform() * 3,
                                           1 + rng.uniform() * 3, 0.2 + rng.uniform(), 100, rng);
      const Gmm2d gmm = fit_gmm2d(pts);
      for (size_t i = 1; i < gmm.loglik_history.size(); ++i)
        CHECK(gmm.loglik_history[i] >= gmm.loglik_history[i - 1] - 1e-9);
    }
  }
  SUBCASE("four points in two far pairs get near-binary posteriors") {
    const std::vector<LossPair> pts{{0.0, 0.0}, {0.1, 0.0}, {8.0, 8.0}, {8.1, 8.0}};
    const Gmm2d gmm = fit_gmm2d(pts, 200, 1e-9);
    const Vec w = clean_posterior(gmm, pts);
    CHECK(w[0] > 0.99);
    CHECK(w[1] > 0.99);
    CHECK(w[2] < 0.01);
    CHECK(w[3] < 0.01);
  }
  SUBCASE("degenerate inputs error") {
    CHECK_THROWS_AS(fit_gmm2d(std::vector<LossPair>(10, {1.0, 2.0})), std::invalid_argument);
    CHECK_THROWS_AS(fit_gmm2d({{0, 0}, {1, 1}}), std::invalid_argument);
  }
}

TEST_CASE("clean_posterior") {
  SUBCASE("point at the clean mean of well-separated equal components") {
    Gmm2d gmm;
    gmm.comp[0].mean[0] = 0.1;
    gmm.comp[0].mean[1] = 0.1;
    gmm.comp[1].mean[0] = 5.0;
    gmm.comp[1].mean[1] = 5.0;
    const Vec w = clean_posterior(gmm, {{0.1, 0.1}});
    CHECK(w[0] > 0.99);
  }
  SUBCASE("identical components give one half everywhere") {
    Gmm2d gmm;  // defaults are identical
    Rng rng(4);
    std::vector<LossPair> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({rng.normal(), rng.normal()});
    for (double v : clean_posterior(gmm, pts)) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("selection is by mean norm, not component order") {
    Rng rng(5);
    const auto pts = two_gaussian_points(0.2, 0.2, 4.0, 4.0, 0.3, 200, rng);
    Gmm2d gmm = fit_gmm2d(pts);
    const Vec w = clean_posterior(gmm, pts);
    Gmm2d swapped = gmm;
    std::swap(swapped.comp[0], swapped.comp[1]);
    const Vec w2 = clean_posterior(swapped, pts);
    for (size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(w2[i]).epsilon(1e-12));
  }
  SUBCASE("posteriors are proper probabilities") {
    Rng rng(6);
    const auto pts = two_gaussian_points(0, 0, 3, 1, 0.5, 100, rng);
    const Gmm2d gmm = fit_gmm2d(pts);
    for (double v : clean_posterior(gmm, pts)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("partition") {
  SUBCASE("extremes") {
    const Partition all_clean = partition(Vec(5, 1.0), 0.5);
    CHECK(all_clean.noisy_set.empty());
    CHECK(all_clean.clean_set.size() == 5);
    const Partition all_noisy = partition(Vec(5, 0.0), 0.5);
    CHECK(all_noisy.clean_set.empty());
  }
  SUBCASE("matches a brute-force filter and covers every index") {
    Rng rng(7);
    Vec w(40);
    for (double& v : w) v = rng.uniform();
    const Partition part = partition(w, 0.5);
    std::vector<int> clean, noisy;
    for (int i = 0; i < 40; ++i) (w[i] > 0.5 ? clean : noisy).push_back(i);
    CHECK(part.clean_set == clean);
    CHECK(part.noisy_set == noisy);
    CHECK(part.clean_set.size() + part.noisy_set.size() == 40);
  }
}

TEST_CASE("fit_gmm1d") {
  SUBCASE("recovers a bimodal split") {
    Rng rng(8);
    Vec values;
    for (int i = 0; i < 1000; ++i) values.push_back(0.1 + 0.05 * rng.normal());
    for (int i = 0; i < 1000; ++i) values.push_back(2.0 + 0.05 * rng.normal());
    const Gmm1d gmm = fit_gmm1d(values);
    const int low = gmm.mean[0] < gmm.mean[1] ? 0 : 1;
    CHECK(std::abs(gmm.mean[low] - 0.1) < 0.05);
    CHECK(std::abs(gmm.mean[1 - low] - 2.0) < 0.05);
  }
  SUBCASE("log-likelihood never decreases") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      Vec values;
      for (int i = 0; i < 150; ++i) values.push_back(rng.normal() + (i % 2) * rng.uniform() * 3);
      const Gmm1d gmm = fit_gmm1d(values);
      for (size_t i = 1; i < gmm.loglik_history.size(); ++i)
        CHECK(gmm.loglik_history[i] >= gmm.loglik_history[i - 1] - 1e-9);
    }
  }
  SUBCASE("symmetric unimodal data leaves the average posterior balanced") {
    Rng rng(10);
    Vec values;
    for (int i = 0; i < 500; ++i) {
      const double v = rng.normal();
      values.push_back(v);
      values.push_back(-v);  // exactly symmetric sample
    }
    const Gmm1d gmm = fit_gmm1d(values);
    const Vec w = clean_posterior_1d(gmm, values);
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= w.size();
    CHECK(mean == doctest::Approx(0.5).epsilon(0.08));
  }
  SUBCASE("degenerate input errors") {
    CHECK_THROWS_AS(fit_gmm1d(Vec(10, 3.0)), std::invalid_argument);
  }
}

TEST_CASE("posterior classification sits near the Bayes rule on known mixtures") {
  Rng rng(11);
  std::vector<bool> from_clean;
  const double s = 0.8;
  const auto pts = two_gaussian_points(0.5, 0.5, 2.5, 2.0, s, 1500, rng, &from_clean);

  const Gmm2d gmm = fit_gmm2d(pts);
  const Vec w = clean_posterior(gmm, pts);
  int em_hits = 0, bayes_hits = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const bool em_clean = w[i] > 0.5;
    if (em_clean == from_clean[i]) ++em_hits;
    // Bayes with the true isotropic generating parameters and equal weights
    const double d0 = (pts[i].l_cls - 0.5) * (pts[i].l_cls - 0.5) +
                      (pts[i].l_proto - 0.5) * (pts[i].l_proto - 0.5);
    const double d1 = (pts[i].l_cls - 2.5) * (pts[i].l_cls - 2.5) +
                      (pts[i].l_proto - 2.0) * (pts[i].l_proto - 2.0);
    if ((d0 < d1) == from_clean[i]) ++bayes_hits;
  }
  const double em_acc = double(em_hits) / pts.size();
  const double bayes_acc = double(bayes_hits) / pts.size();
  CHECK(em_acc >= bayes_acc - 0.02);
}
