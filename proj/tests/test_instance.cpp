#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlss/instance.hpp"
#include "qlss/io.hpp"

#include <Eigen/QR>

#include <cmath>

using namespace qlss;

namespace {

// independent oracle: normal-equations solve on A restricted to its row
// space (row-space basis from a rank-revealing QR of A^dagger)
Vector min_norm_oracle(const Matrix& a, const Vector& b) {
  Eigen::ColPivHouseholderQR<Matrix> qr(a.adjoint());
  const Index r = qr.rank();
  const Matrix q = qr.householderQ();
  const Matrix basis = q.leftCols(r);
  const Matrix ar = a * basis;
  const Vector z = (ar.adjoint() * ar).ldlt().solve(ar.adjoint() * b);
  return basis * z;
}

}  // namespace

TEST_CASE("min_norm_solution basics") {
  SUBCASE("identity") {
    const Matrix a = Matrix::Identity(4, 4);
    Vector b = Vector::Zero(4);
    b(0) = 1.0;
    const Vector x = min_norm_solution(a, b);
    CHECK((x - b).norm() <= 1e-14);
    CHECK(x.norm() == doctest::Approx(1.0));
  }

  SUBCASE("padded diagonal forces the norm") {
    const double kappa = 7.0;
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = 1.0 / kappa;
    Vector b = Vector::Zero(3);
    b(0) = b(1) = 1.0 / std::sqrt(2.0);
    const Vector x = min_norm_solution(a, b);
    CHECK(std::abs(x(0) - Complex(1.0 / std::sqrt(2.0), 0)) <= 1e-12);
    CHECK(std::abs(x(1) - Complex(kappa / std::sqrt(2.0), 0)) <= 1e-12);
    CHECK(std::abs(x(2)) <= 1e-14);
    CHECK(x.norm() == doctest::Approx(std::sqrt((1.0 + kappa * kappa) / 2.0)));
  }

  SUBCASE("random instances match the normal-equations oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
      const LinearSystemInstance inst = random_instance(8, 20.0, std::nullopt, seed);
      const Vector x = min_norm_solution(inst.a, inst.b);
      const Vector y = min_norm_oracle(inst.a, inst.b);
      CHECK((x - y).norm() <= 1e-8);
    }
  }

  SUBCASE("b outside the column space is rejected") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 1.0;
    Vector b(2);
    b << 0.6, 0.8;
    CHECK_THROWS_AS(min_norm_solution(a, b), NoSolution);
  }
}

TEST_CASE("spectrum_check") {
  auto inst_of = [](const RealVector& diag, double kappa) {
    const Index n = diag.size();
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) a(i, i) = diag(i);
    Vector b = Vector::Zero(n);
    b(0) = 1.0;
    LinearSystemInstance inst;
    inst.a = a;
    inst.b = b;
    inst.kappa = kappa;
    inst.svd = svd_of(a);
    return inst;
  };

  RealVector d1(2);
  d1 << 1.0, 1.0;
  const SpectrumReport r1 = spectrum_check(inst_of(d1, 1.0));
  CHECK(r1.pass);
  CHECK(r1.min_nonzero == doctest::Approx(1.0));
  CHECK(r1.max_value == doctest::Approx(1.0));

  RealVector d2(3);
  d2 << 1.0, 0.5, 0.0;
  const SpectrumReport r2 = spectrum_check(inst_of(d2, 2.0));
  CHECK(r2.pass);
  CHECK(r2.min_nonzero == doctest::Approx(0.5));
  CHECK(r2.zero_count == 1);

  RealVector d3(2);
  d3 << 1.0, 0.4;
  const SpectrumReport r3 = spectrum_check(inst_of(d3, 2.0));
  CHECK_FALSE(r3.pass);
}

TEST_CASE("random_instance") {
  SUBCASE("kappa = 1 gives a unitary matrix") {
    const LinearSystemInstance inst = random_instance(2, 1.0, std::nullopt, 7);
    CHECK((inst.a.adjoint() * inst.a - Matrix::Identity(2, 2)).norm() <= 1e-12);
    CHECK(inst.x_norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("norm target is met") {
    const LinearSystemInstance inst = random_instance(8, 50.0, 10.0, 1);
    CHECK(std::abs(inst.x_norm() - 10.0) <= 1e-6);
    CHECK(std::abs(min_norm_solution(inst.a, inst.b).norm() - 10.0) <= 1e-6);
  }

  SUBCASE("deterministic per seed") {
    const LinearSystemInstance a = random_instance(6, 12.0, 3.0, 42);
    const LinearSystemInstance b = random_instance(6, 12.0, 3.0, 42);
    CHECK(instance_to_json(a) == instance_to_json(b));
    const LinearSystemInstance c = random_instance(6, 12.0, 3.0, 43);
    CHECK(instance_to_json(a) != instance_to_json(c));
  }

  SUBCASE("construction invariants") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const double kappa = 1.0 + double(seed % 5) * 10.0;
      const LinearSystemInstance inst = random_instance(7, kappa, std::nullopt, seed);
      CHECK((inst.a * inst.x_min - inst.b).norm() <= 1e-8);
      CHECK(std::abs(inst.b.norm() - 1.0) <= 1e-12);
      CHECK(inst.x_norm() >= 1.0 - 1e-9);
      CHECK(inst.x_norm() <= kappa + 1e-9);
      CHECK((inst.svd.reconstruct() - inst.a).norm() <= 1e-10 * std::max(1.0, inst.a.norm()));
      // x_min has no kernel component: projecting onto the row space is a no-op
      Vector proj = Vector::Zero(inst.cols());
      for (Index j = 0; j < inst.svd.values.size(); ++j)
        if (inst.svd.values(j) > inst.svd.zero_threshold())
          proj += inst.svd.right.col(j) * inst.svd.right.col(j).dot(inst.x_min);
      CHECK((proj - inst.x_min).norm() <= 1e-10);
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(random_instance(1, 2.0, std::nullopt, 0), InvalidParams);
    CHECK_THROWS_AS(random_instance(4, 0.5, std::nullopt, 0), InvalidParams);
    CHECK_THROWS_AS(random_instance(4, 2.0, 5.0, 0), InvalidTarget);
    CHECK_THROWS_AS(random_instance(4, 2.0, 0.5, 0), InvalidTarget);
  }
}

TEST_CASE("hard instance family") {
  SUBCASE("norms match the pseudoinverse oracle") {
    for (Index n_size : {8, 16}) {
      const LinearSystemInstance inst =
          hard_instance_family(n_size, 3.0, 0.25, HardCase::i, 5);
      CHECK((inst.a * inst.x_min - inst.b).norm() <= 1e-8);
      const Vector oracle = min_norm_oracle(inst.a, inst.b);
      CHECK(std::abs(inst.x_norm() * inst.x_norm() - oracle.squaredNorm()) <= 1e-8);
      const SpectrumReport rep = spectrum_check(inst);
      CHECK(rep.pass);
    }
  }

  SUBCASE("case-i / case-ii norm gap") {
    for (Index n_size : {8, 16}) {
      const double eps = 0.25;
      const LinearSystemInstance ci = hard_instance_family(n_size, 3.0, eps, HardCase::i, 9);
      const LinearSystemInstance cii = hard_instance_family(n_size, 3.0, eps, HardCase::ii, 9);
      const double ratio = std::pow(ci.x_norm() / cii.x_norm(), 2.0);
      const double bound = (1.0 + 128.0 / 55.0 * eps) / (1.0 - 128.0 / 55.0 * eps);
      CHECK(ratio >= bound - 1e-10);
    }
  }

  SUBCASE("vanishing eps closes the gap") {
    const double eps = 1e-3;
    const LinearSystemInstance ci = hard_instance_family(16, 3.0, eps, HardCase::i, 2);
    const LinearSystemInstance cii = hard_instance_family(16, 3.0, eps, HardCase::ii, 2);
    const double ratio = std::pow(ci.x_norm() / cii.x_norm(), 2.0);
    CHECK(std::abs(ratio - 1.0) <= 20.0 * eps);
    CHECK(ratio >= 1.0);
  }

  SUBCASE("C inverse closed form") {
    const Index n_half = 8;
    const double kappa = 3.0;
    Vector ones = Vector::Constant(n_half, Complex(1.0 / std::sqrt(double(n_half)), 0.0));
    const Matrix eye = Matrix::Identity(n_half, n_half);
    const Matrix c = eye - (1.0 - 1.0 / kappa) * (ones * ones.adjoint());
    const Matrix c_inv = eye + (kappa - 1.0) * (ones * ones.adjoint());
    CHECK((c * c_inv - eye).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(hard_instance_family(6, 3.0, 0.25, HardCase::i, 0), InvalidParams);
    CHECK_THROWS_AS(hard_instance_family(8, 2.0, 0.25, HardCase::i, 0), InvalidParams);
    CHECK_THROWS_AS(hard_instance_family(8, 3.0, 0.3, HardCase::i, 0), InvalidParams);
  }
}

TEST_CASE("qlsi round trip") {
  const LinearSystemInstance inst = random_instance(5, 9.0, 2.0, 31);
  const std::string text = instance_to_json(inst);
  const LinearSystemInstance back = instance_from_json(text);
  CHECK(instance_to_json(back) == text);
  CHECK((back.a - inst.a).norm() == 0.0);
  CHECK((back.b - inst.b).norm() == 0.0);

  CHECK_THROWS_AS(instance_from_json("{"), ParseError);
  CHECK_THROWS_AS(instance_from_json("{\"version\": 99}"), VersionError);
  // malformed complex pair names the field
  const std::string bad =
      "{\"version\":1,\"rows\":1,\"cols\":1,\"kappa\":1.0,\"a\":[[1.0]],\"b\":[[1.0,0.0]]}";
  try {
    instance_from_json(bad);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}
