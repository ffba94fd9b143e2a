#include <doctest.h>

#include <cmath>
#include <random>

#include "dgdflow/objective.hpp"
#include "oracles.hpp"

using namespace dgdflow;

namespace {

VectorXd vec2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

VectorXd lift(const VectorXd& a, int n) {
  VectorXd out(a.size() * n);
  for (int i = 0; i < n; ++i) out.segment(i * a.size(), a.size()) = a;
  return out;
}

}  // namespace

TEST_CASE("eval_sum: quartic saddle frozen values") {
  const ObjectiveSet obj = make_preset("quartic_saddle", 4, 2);
  CHECK(obj.eval_sum(vec2(0, 0)) == doctest::Approx(0.0).epsilon(1e-14));
  // f(0, sqrt(2)) = -2 + 4/4 = -1
  CHECK(obj.eval_sum(vec2(0, std::sqrt(2.0))) == doctest::Approx(-1.0).epsilon(1e-12));

  // Homogeneous split telescopes to f.
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const VectorXd a = oracles::random_vector(rng, 2, 3.0);
    const double f = a(0) * a(0) - a(1) * a(1) + 0.25 * std::pow(a(1), 4.0);
    CHECK(obj.eval_sum(a) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("stacked_gradient: critical point, linearity, finite differences") {
  const ObjectiveSet obj = make_preset("quartic_saddle", 4, 2);
  CHECK(obj.stacked_gradient(lift(vec2(0, 0), 4)).norm() == 0.0);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const VectorXd a = oracles::random_vector(rng, 2, 3.0);
    const VectorXd stacked = obj.stacked_gradient(lift(a, 4));
    VectorXd block_sum = VectorXd::Zero(2);
    for (int n = 0; n < 4; ++n) block_sum += stacked.segment(2 * n, 2);
    CHECK((block_sum - obj.sum_gradient(a)).norm() <= 1e-12);
  }

  const ObjectiveSet het = make_preset("quartic_saddle", 4, 2, 99);
  for (int t = 0; t < 20; ++t) {
    const VectorXd x = oracles::random_vector(rng, 8, 3.0);
    const VectorXd g = het.stacked_gradient(x);
    for (int n = 0; n < 4; ++n) {
      const auto& local = het.local(n);
      const VectorXd fd = oracles::fd_gradient(local.value, x.segment(2 * n, 2));
      CHECK((g.segment(2 * n, 2) - fd).norm() <=
            1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("classify_hessian: saddle, minima, convex case, gates") {
  const ObjectiveSet obj = make_preset("quartic_saddle", 4, 2);
  const HessianClass saddle = classify_hessian(obj, vec2(0, 0));
  CHECK(saddle.kind == CriticalKind::saddle);
  CHECK(saddle.negative_count == 1);
  CHECK(saddle.eigenvalues(0) == doctest::Approx(-2.0));
  CHECK(saddle.eigenvalues(1) == doctest::Approx(2.0));

  const HessianClass lo = classify_hessian(obj, vec2(0, std::sqrt(2.0)));
  CHECK(lo.kind == CriticalKind::minimum);
  CHECK(lo.eigenvalues(0) == doctest::Approx(2.0));
  CHECK(lo.eigenvalues(1) == doctest::Approx(4.0).epsilon(1e-9));

  // Plain convex quadratic.
  const ObjectiveSet quad = make_preset("quadratic_convex", 3, 2, 8);
  VectorXd mean = VectorXd::Zero(2);
  // minimum of sum_n 0.5|a - c_n|^2 is the center mean; solve grad = 0.
  mean = quad.sum_hessian(vec2(0, 0)).ldlt().solve(-quad.sum_gradient(vec2(0, 0)));
  CHECK(classify_hessian(quad, mean).kind == CriticalKind::minimum);

  CHECK_THROWS_AS(classify_hessian(obj, vec2(0.5, 0.5)), std::invalid_argument);

  // Degenerate scalar quartic f(a) = a^4.
  LocalObjective quartic{
      [](const VectorXd& a) { return std::pow(a(0), 4.0); },
      [](const VectorXd& a) {
        return (VectorXd(1) << 4.0 * std::pow(a(0), 3.0)).finished();
      },
      [](const VectorXd& a) {
        return (MatrixXd(1, 1) << 12.0 * a(0) * a(0)).finished();
      }};
  const ObjectiveSet deg(1, {quartic});
  CHECK(classify_hessian(deg, (VectorXd(1) << 0.0).finished()).kind ==
        CriticalKind::degenerate);
}

TEST_CASE("make_preset: construction constraints") {
  CHECK_THROWS_AS(make_preset("cubic_surprise", 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_preset("quartic_saddle", 4, 3), std::invalid_argument);

  // Zero-sum offsets: seeded and unseeded sums agree exactly.
  const ObjectiveSet hom = make_preset("quartic_saddle", 5, 2);
  const ObjectiveSet het = make_preset("quartic_saddle", 5, 2, 1234);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const VectorXd a = oracles::random_vector(rng, 2, 3.0);
    CHECK(het.eval_sum(a) == doctest::Approx(hom.eval_sum(a)).epsilon(1e-13));
    CHECK((het.sum_gradient(a) - hom.sum_gradient(a)).norm() <= 1e-13);
  }

  // The offsets sum to zero exactly (summed in index order).
  VectorXd total = VectorXd::Zero(2);
  const VectorXd origin = vec2(0, 0);
  for (int n = 0; n < 5; ++n) total += het.local(n).gradient(origin);
  CHECK(total.norm() == 0.0);

  // Distributed signature: local gradients at the lifted saddle are nonzero
  // but their block sum vanishes.
  bool some_nonzero = false;
  for (int n = 0; n < 5; ++n)
    if (het.local(n).gradient(origin).norm() > 1e-3) some_nonzero = true;
  CHECK(some_nonzero);
}

TEST_CASE("preset oracles: gradient/Hessian finite differences and coercivity") {
  struct Item {
    const char* name;
    ObjectiveSet obj;
  };
  const std::vector<Item> presets = {
      {"quartic_saddle", make_preset("quartic_saddle", 4, 2, 21)},
      {"random_quartic", make_preset("random_quartic", 3, 3, 22)},
      {"quadratic_convex", make_preset("quadratic_convex", 4, 2, 23)},
  };
  std::mt19937_64 rng(6);
  for (const auto& item : presets) {
    const int d = item.obj.dimension();
    for (int t = 0; t < 50; ++t) {
      const VectorXd a = oracles::random_vector(rng, d, 3.0);
      for (int n = 0; n < item.obj.agent_count(); ++n) {
        const auto& local = item.obj.local(n);
        const VectorXd g = local.gradient(a);
        CHECK((g - oracles::fd_gradient(local.value, a)).norm() <=
              1e-5 * std::max(1.0, g.norm()));
        const MatrixXd h = local.hessian(a);
        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((h - oracles::fd_hessian(local.gradient, a)).norm() <=
              1e-3 * std::max(1.0, h.norm()));
      }
    }

    // Coercivity smoke: f_n grows along every sampled ray at radius 1e3.
    for (int n = 0; n < item.obj.agent_count(); ++n) {
      const double at_zero = item.obj.local(n).value(VectorXd::Zero(d));
      for (int t = 0; t < 10; ++t) {
        VectorXd dir = oracles::random_vector(rng, d, 1.0);
        dir.normalize();
        CHECK(item.obj.local(n).value(1e3 * dir) > at_zero + 1.0);
      }
    }
  }
}

TEST_CASE("stacked Hessian is block diagonal with local blocks") {
  const ObjectiveSet obj = make_preset("random_quartic", 3, 2, 77);
  std::mt19937_64 rng(8);
  const VectorXd x = oracles::random_vector(rng, 6, 2.0);
  const MatrixXd h = obj.stacked_hessian(x);
  for (int bi = 0; bi < 3; ++bi)
    for (int bj = 0; bj < 3; ++bj) {
      const MatrixXd block = h.block(2 * bi, 2 * bj, 2, 2);
      if (bi == bj)
        CHECK((block - obj.local(bi).hessian(x.segment(2 * bi, 2))).norm() == 0.0);
      else
        CHECK(block.cwiseAbs().maxCoeff() == 0.0);
    }
}
