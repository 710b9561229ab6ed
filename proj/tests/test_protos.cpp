#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plremix/protos.hpp"
#include "test_util.hpp"

using namespace plremix;
using namespace plremix::testing;

namespace {

// Gram-Schmidt on a random square matrix; rotates embeddings in tests.
Mat random_orthogonal(int d, Rng& rng) {
  Mat m = random_mat(d, d, rng);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < i; ++k) {
      const double proj = dot(m.row(i), m.row(k), d);
      for (int j = 0; j < d; ++j) m(i, j) -= proj * m(k, j);
    }
    const double n = l2_norm(m.row(i), d);
    for (int j = 0; j < d; ++j) m(i, j) /= n;
  }
  return m;
}

Mat apply_rotation(const Mat& x, const Mat& r) {
  Mat out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(i, j) = dot(x.row(i), r.row(j), x.cols);
  return out;
}

}  // namespace

TEST_CASE("init_prototypes") {
  SUBCASE("one sample per class keeps the normalized sample") {
    Rng rng(1);
    const Mat q = random_unit_rows(3, 4, rng);
    const ProtoState ps = init_prototypes(q, {0, 1, 2}, 3, 0.99, 0.1, 0.5);
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 4; ++j) CHECK(ps.prototypes(k, j) == doctest::Approx(q(k, j)));
    CHECK(ps.tau_g == doctest::Approx(1.0 / 3));
    for (double v : ps.tau_c_tilde) CHECK(v == doctest::Approx(1.0 / 3));
  }
  SUBCASE("matches brute-force per-class mean and normalize") {
    Rng rng(2);
    const int n = 100, c = 4, d = 6;
    const Mat q = random_unit_rows(n, d, rng);
    std::vector<int> labels(n);
    for (int& v : labels) v = rng.uniform_int(c);
    const ProtoState ps = init_prototypes(q, labels, c, 0.99, 0.1, 0.5);
    for (int k = 0; k < c; ++k) {
      Vec mean(d, 0.0);
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (labels[i] == k) {
          ++count;
          for (int j = 0; j < d; ++j) mean[j] += q(i, j);
        }
      for (double& v : mean) v /= count;
      const double norm = l2_norm(mean.data(), d);
      for (int j = 0; j < d; ++j)
        CHECK(ps.prototypes(k, j) == doctest::Approx(mean[j] / norm).epsilon(1e-12));
    }
  }
  SUBCASE("empty class errors") {
    Rng rng(3);
    const Mat q = random_unit_rows(4, 3, rng);
    CHECK_THROWS_AS(init_prototypes(q, {0, 0, 1, 1}, 3, 0.99, 0.1, 0.5), std::invalid_argument);
  }
  SUBCASE("antipodal degenerate mean errors") {
    Mat q(2, 3);
    q(0, 0) = 1.0;
    q(1, 0) = -1.0;
    CHECK_THROWS_AS(init_prototypes(q, {0, 0}, 1, 0.99, 0.1, 0.5), std::invalid_argument);
  }
}

TEST_CASE("similarity") {
  SUBCASE("matching prototype dominates at low temperature") {
    ProtoState ps;
    ps.tau_s = 0.1;
    ps.prototypes = Mat(3, 3);
    ps.prototypes(0, 0) = ps.prototypes(1, 1) = ps.prototypes(2, 2) = 1.0;
    Mat q(1, 3);
    q(0, 0) = 1.0;  // equals prototype 0, orthogonal to the others
    const Mat s = similarity(q, ps);
    const double expected = std::exp(10.0) / (std::exp(10.0) + 2.0);
    CHECK(s(0, 0) == doctest::Approx(expected).epsilon(1e-9));
  }
  SUBCASE("identical prototypes give the uniform distribution") {
    ProtoState ps;
    ps.tau_s = 0.1;
    ps.prototypes = Mat(4, 3);
    for (int k = 0; k < 4; ++k) ps.prototypes(k, 0) = 1.0;
    Rng rng(4);
    const Mat q = random_unit_rows(5, 3, rng);
    const Mat s = similarity(q, ps);
    for (int i = 0; i < 5; ++i)
      for (int k = 0; k < 4; ++k) CHECK(s(i, k) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("rows sum to one") {
    Rng rng(5);
    ProtoState ps;
    ps.tau_s = 0.1;
    ps.prototypes = random_unit_rows(6, 8, rng);
    const Mat s = similarity(random_unit_rows(9, 8, rng), ps);
    for (int i = 0; i < 9; ++i) {
      double sum = 0.0;
      for (int k = 0; k < 6; ++k) sum += s(i, k);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("invariant under a common rotation") {
    Rng rng(6);
    const int d = 5;
    ProtoState ps;
    ps.tau_s = 0.1;
    ps.prototypes = random_unit_rows(4, d, rng);
    const Mat q = random_unit_rows(7, d, rng);
    const Mat s = similarity(q, ps);

    const Mat rot = random_orthogonal(d, rng);
    ProtoState ps_rot = ps;
    ps_rot.prototypes = apply_rotation(ps.prototypes, rot);
    const Mat s_rot = similarity(apply_rotation(q, rot), ps_rot);
    for (size_t k = 0; k < s.data.size(); ++k)
      CHECK(s.data[k] == doctest::Approx(s_rot.data[k]).epsilon(1e-9));
  }
}

TEST_CASE("pseudo_soft_label") {
  Mat t(1, 2), s(1, 2);
  t(0, 0) = 1.0;
  s(0, 1) = 1.0;
  SUBCASE("alpha extremes") {
    const Mat a1 = pseudo_soft_label(t, s, 1.0);
    CHECK(a1(0, 0) == 1.0);
    const Mat a0 = pseudo_soft_label(t, s, 0.0);
    CHECK(a0(0, 1) == 1.0);
  }
  SUBCASE("midpoint") {
    const Mat mid = pseudo_soft_label(t, s, 0.5);
    CHECK(mid(0, 0) == doctest::Approx(0.5));
    CHECK(mid(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("stays on the simplex") {
    Rng rng(7);
    const Mat tp = random_prob_rows(6, 5, rng);
    const Mat sp = random_prob_rows(6, 5, rng);
    const Mat y = pseudo_soft_label(tp, sp, 0.3);
    for (int i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (int k = 0; k < 5; ++k) {
        CHECK(y(i, k) >= 0.0);
        sum += y(i, k);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("alpha out of range") {
    CHECK_THROWS_AS(pseudo_soft_label(t, s, 1.5), std::invalid_argument);
  }
}

TEST_CASE("update_thresholds") {
  Rng rng(8);
  const Mat y_hat = random_prob_rows(50, 4, rng);

  SUBCASE("eta one freezes the thresholds") {
    ProtoState ps;
    ps.eta = 1.0;
    ps.prototypes = random_unit_rows(4, 3, rng);
    ps.tau_g = 0.4;
    ps.tau_c_tilde = {0.1, 0.2, 0.3, 0.4};
    update_thresholds(ps, y_hat);
    CHECK(ps.tau_g == 0.4);
    CHECK(ps.tau_c_tilde == Vec{0.1, 0.2, 0.3, 0.4});
  }
  SUBCASE("eta zero adopts the batch statistics") {
    ProtoState ps;
    ps.eta = 0.0;
    ps.prototypes = random_unit_rows(4, 3, rng);
    ps.tau_g = 0.9;
    ps.tau_c_tilde = {0.9, 0.9, 0.9, 0.9};
    update_thresholds(ps, y_hat);
    double mean_max = 0.0;
    Vec mean_class(4, 0.0);
    for (int i = 0; i < y_hat.rows; ++i) {
      double mx = 0.0;
      for (int k = 0; k < 4; ++k) {
        mx = std::max(mx, y_hat(i, k));
        mean_class[k] += y_hat(i, k);
      }
      mean_max += mx;
    }
    CHECK(ps.tau_g == doctest::Approx(mean_max / y_hat.rows).epsilon(1e-12));
    for (int k = 0; k < 4; ++k)
      CHECK(ps.tau_c_tilde[k] ==
            doctest::Approx(mean_class[k] / y_hat.rows).epsilon(1e-12));
  }
  SUBCASE("the max class threshold equals the global threshold") {
    ProtoState ps;
    ps.eta = 0.7;
    ps.prototypes = random_unit_rows(4, 3, rng);
    ps.tau_g = 0.25;
    ps.tau_c_tilde = Vec(4, 0.25);
    update_thresholds(ps, y_hat);
    const Vec tau_c = ps.class_thresholds();
    const double mx = *std::max_element(tau_c.begin(), tau_c.end());
    CHECK(mx == doctest::Approx(ps.tau_g).epsilon(1e-12));
    for (double v : tau_c) CHECK(v <= ps.tau_g + 1e-12);
  }
}

TEST_CASE("confident_set") {
  ProtoState ps;
  ps.prototypes = Mat(3, 3);
  for (int k = 0; k < 3; ++k) ps.prototypes(k, k) = 1.0;
  ps.tau_g = 0.5;
  ps.tau_c_tilde = {0.5, 0.5, 0.5};  // tau_c = 0.5 for every class

  SUBCASE("uniform rows below the threshold select nothing") {
    const Mat y_hat(10, 3, 1.0 / 3);
    CHECK(confident_set(y_hat, ps).empty());
  }
  SUBCASE("one-hot rows clear any threshold below one") {
    Mat y_hat(4, 3);
    y_hat(0, 0) = y_hat(1, 2) = y_hat(2, 1) = y_hat(3, 0) = 1.0;
    const auto items = confident_set(y_hat, ps);
    REQUIRE(items.size() == 4);
    CHECK(items[0].label == 0);
    CHECK(items[1].label == 2);
    CHECK(items[2].label == 1);
    CHECK(items[3].label == 0);
  }
  SUBCASE("matches a brute-force filter on mixed data") {
    Rng rng(9);
    const Mat y_hat = random_prob_rows(50, 3, rng);
    const auto items = confident_set(y_hat, ps);
    const Vec tau_c = ps.class_thresholds();
    std::vector<ConfidentItem> expected;
    for (int i = 0; i < 50; ++i) {
      int arg = 0;
      for (int k = 1; k < 3; ++k)
        if (y_hat(i, k) > y_hat(i, arg)) arg = k;
      if (y_hat(i, arg) > tau_c[arg]) expected.push_back({i, arg});
    }
    REQUIRE(items.size() == expected.size());
    for (size_t k = 0; k < items.size(); ++k) {
      CHECK(items[k].index == expected[k].index);
      CHECK(items[k].label == expected[k].label);
    }
  }
}

TEST_CASE("update_prototypes") {
  Rng rng(10);

  SUBCASE("eta one freezes prototypes") {
    ProtoState ps;
    ps.eta = 1.0;
    ps.prototypes = random_unit_rows(3, 4, rng);
    const Mat before = ps.prototypes;
    const Mat q = random_unit_rows(2, 4, rng);
    update_prototypes(ps, q, {{0, 1}, {1, 2}});
    for (size_t k = 0; k < before.data.size(); ++k)
      CHECK(ps.prototypes.data[k] == doctest::Approx(before.data[k]).epsilon(1e-12));
  }
  SUBCASE("an embedding equal to its prototype is a fixed point") {
    ProtoState ps;
    ps.eta = 0.9;
    ps.prototypes = random_unit_rows(3, 4, rng);
    Mat q(1, 4);
    for (int j = 0; j < 4; ++j) q(0, j) = ps.prototypes(1, j);
    update_prototypes(ps, q, {{0, 1}});
    for (int j = 0; j < 4; ++j) CHECK(ps.prototypes(1, j) == doctest::Approx(q(0, j)).epsilon(1e-12));
  }
  SUBCASE("two sequential updates match the hand-computed chain") {
    ProtoState ps;
    ps.eta = 0.5;
    ps.prototypes = Mat(1, 2);
    ps.prototypes(0, 0) = 1.0;
    Mat q(2, 2);
    q(0, 1) = 1.0;  // first update pulls toward e1
    q(1, 0) = 1.0;  // second pulls back toward e0
    update_prototypes(ps, q, {{0, 0}, {1, 0}});
    // step 1: normalize(0.5 e0 + 0.5 e1) = (1,1)/sqrt(2)
    // step 2: normalize(0.5 of that + 0.5 e0)
    Vec p{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    Vec p2{0.5 * p[0] + 0.5, 0.5 * p[1]};
    const double n = std::sqrt(p2[0] * p2[0] + p2[1] * p2[1]);
    CHECK(ps.prototypes(0, 0) == doctest::Approx(p2[0] / n).epsilon(1e-12));
    CHECK(ps.prototypes(0, 1) == doctest::Approx(p2[1] / n).epsilon(1e-12));
  }
  SUBCASE("prototype rows stay unit norm") {
    ProtoState ps;
    ps.eta = 0.8;
    ps.prototypes = random_unit_rows(4, 5, rng);
    const Mat q = random_unit_rows(20, 5, rng);
    std::vector<ConfidentItem> items;
    for (int i = 0; i < 20; ++i) items.push_back({i, i % 4});
    update_prototypes(ps, q, items);
    for (int k = 0; k < 4; ++k)
      CHECK(l2_norm(ps.prototypes.row(k), 5) == doctest::Approx(1.0).epsilon(1e-9));
  }
}
