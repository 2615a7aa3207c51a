#include <doctest.h>

#include <cmath>

#include "mpedge/samplers.hpp"
#include "mpedge/spectral.hpp"

using namespace mpedge;

namespace {

double operator_norm_deviation_from_identity(const Eigen::MatrixXd& cov) {
    const SymmetricSpectrum spec = eigendecompose(cov);
    double dev = 0.0;
    for (int i = 0; i < spec.dim; ++i) dev = std::max(dev, std::abs(spec.eigenvalues(i) - 1.0));
    return dev;
}

}  // namespace

TEST_CASE("rademacher draws stay on the sign support") {
    SamplerModel model = make_rademacher(3, 5);
    RngStream stream = model.stream();
    for (int k = 0; k < 200; ++k) {
        const Eigen::VectorXd x = sample_vector(model, stream);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(x(i)) == 1.0);
    }
}

TEST_CASE("standardization constants are analytic") {
    CHECK(student_t_scale(5.0) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    CHECK(pareto_threshold(3.0) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-15));
    CHECK(uniform_ball_radius(2) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("uniform ball has unit coordinate variance and bounded support") {
    SamplerModel model = make_uniform_ball(2, 17);
    RngStream stream = model.stream();
    const int trials = 100000;
    double sum0 = 0.0, sum_sq0 = 0.0;
    for (int k = 0; k < trials; ++k) {
        const Eigen::VectorXd x = sample_vector(model, stream);
        CHECK(x.norm() <= 2.0 + 1e-12);
        sum0 += x(0);
        sum_sq0 += x(0) * x(0);
    }
    CHECK(std::abs(sum0 / trials) <= 0.02);
    CHECK(sum_sq0 / trials == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("student_t draws have unit empirical variance") {
    SamplerModel model = make_student_t(1, 5.0, 23);
    RngStream stream = model.stream();
    const int trials = 200000;
    double sum_sq = 0.0;
    for (int k = 0; k < trials; ++k) {
        const double v = sample_vector(model, stream)(0);
        sum_sq += v * v;
    }
    CHECK(sum_sq / trials == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("batches are reproducible and streams split independently") {
    const SamplerModel model = make_gaussian(8, 42);
    const SampleBatch a = sample_batch(model, 32);
    const SampleBatch b = sample_batch(model, 32);
    CHECK(a.rows.cwiseEqual(b.rows).all());  // bit-identical

    const SampleBatch c = sample_batch(model.with_seed(43), 32);
    CHECK_FALSE(a.rows.cwiseEqual(c.rows).all());

    RngStream parent(7);
    RngStream child_a = parent.split(1);
    RngStream child_b = parent.split(2);
    RngStream child_a2 = parent.split(1);
    CHECK(child_a.next_u64() == child_a2.next_u64());
    CHECK(child_a.next_u64() != child_b.next_u64());
}

TEST_CASE("empirical covariance on tiny batches") {
    SampleBatch batch;
    batch.model = make_gaussian(2, 1);
    batch.rows.resize(2, 2);
    batch.rows << 1.0, 0.0, 0.0, 1.0;
    const Eigen::MatrixXd cov = empirical_covariance(batch);
    CHECK(cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cov(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cov(0, 1) == 0.0);

    SampleBatch one;
    one.model = make_gaussian(2, 1);
    one.rows.resize(1, 2);
    one.rows << 1.0, 1.0;
    const Eigen::MatrixXd cov1 = empirical_covariance(one);
    CHECK(cov1.cwiseEqual(Eigen::MatrixXd::Ones(2, 2)).all());

    SampleBatch empty;
    empty.model = make_gaussian(2, 1);
    empty.rows.resize(0, 2);
    CHECK_THROWS_AS(empirical_covariance(empty), std::invalid_argument);
    CHECK_THROWS_AS(gram_matrix(empty), std::invalid_argument);
}

TEST_CASE("gram matrix equals m times the covariance, spectrum included") {
    SampleBatch batch;
    batch.model = make_gaussian(2, 1);
    batch.rows.resize(2, 2);
    batch.rows << 1.0, 0.0, 0.0, 1.0;
    CHECK(gram_matrix(batch).cwiseEqual(Eigen::MatrixXd::Identity(2, 2)).all());

    SampleBatch one;
    one.model = make_gaussian(3, 1);
    one.rows.resize(1, 3);
    one.rows << 1.0, 2.0, 2.0;
    const SymmetricSpectrum spec = eigendecompose(gram_matrix(one));
    CHECK(spec.lambda_max() == doctest::Approx(9.0).epsilon(1e-12));

    const SampleBatch big = sample_batch(make_exponential_product(12, 9), 40);
    const SymmetricSpectrum sa = eigendecompose(gram_matrix(big));
    const SymmetricSpectrum sc = eigendecompose(empirical_covariance(big));
    for (int i = 0; i < 12; ++i) {
        CHECK(sa.eigenvalues(i) ==
              doctest::Approx(40.0 * sc.eigenvalues(i)).epsilon(1e-12));
    }
}

TEST_CASE("large gaussian covariance approaches identity in operator norm") {
    const int n = 100, m = 10000;
    const SampleBatch batch = sample_batch(make_gaussian(n, 33), m);
    const double dev = operator_norm_deviation_from_identity(empirical_covariance(batch));
    CHECK(dev <= 2.0 * std::sqrt(static_cast<double>(n) / m) + 0.05);
}

TEST_CASE("every family is empirically isotropic") {
    struct Case {
        SamplerModel model;
    };
    const Case cases[] = {
        {make_gaussian(32, 101)},          {make_rademacher(32, 102)},
        {make_student_t(32, 5.0, 103)},    {make_symmetric_pareto(8, 3.0, 104)},
        {make_exponential_product(32, 105)}, {make_uniform_ball(16, 106)},
    };
    for (const auto& c : cases) {
        CAPTURE(c.model.family_name());
        const int n = c.model.dim;
        const int m = 50 * n;
        const SampleBatch batch = sample_batch(c.model, m);
        const Eigen::VectorXd mean = batch.rows.colwise().mean();
        CHECK(mean.norm() <= 4.0 / std::sqrt(double(m)) * std::sqrt(double(n)));
        Eigen::MatrixXd cov = empirical_covariance(batch);
        cov.diagonal().array() -= 1.0;
        CHECK(cov.cwiseAbs().maxCoeff() <= 10.0 / std::sqrt(double(m)));
    }
}

TEST_CASE("pareto fourth moment diverges with sample size") {
    SamplerModel model = make_symmetric_pareto(1, 3.0, 55);
    RngStream stream = model.stream();
    double sum4 = 0.0;
    double m4_at_1e3 = 0.0, m4_at_1e4 = 0.0, m4_at_1e5 = 0.0;
    for (int k = 1; k <= 100000; ++k) {
        const double v = sample_vector(model, stream)(0);
        sum4 += v * v * v * v;
        if (k == 1000) m4_at_1e3 = sum4 / k;
        if (k == 10000) m4_at_1e4 = sum4 / k;
        if (k == 100000) m4_at_1e5 = sum4 / k;
    }
    CHECK(m4_at_1e3 < m4_at_1e4);
    CHECK(m4_at_1e4 < m4_at_1e5);
}

TEST_CASE("model parameter validation") {
    CHECK_THROWS_AS(make_student_t(4, 2.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_symmetric_pareto(4, 2.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_symmetric_pareto(4, 4.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_gaussian(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_model("student_t", 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_model("mystery", 4, 1), std::invalid_argument);

    const SamplerModel t3 = parse_model("student_t(3)", 16, 9);
    CHECK(t3.nu == 3.0);
    const SamplerModel p3 = parse_model("pareto(3)", 16, 9);
    CHECK(p3.tail_index == 3.0);
    CHECK(parse_model("laplace", 4, 1).family == Family::exponential_product);
    CHECK(parse_model("zero", 4, 1).family == Family::zero_stub);
}

TEST_CASE("model kv round trip") {
    const SamplerModel m = make_student_t(24, 3.5, 77);
    const SamplerModel back = SamplerModel::from_kv(m.to_kv());
    CHECK(back.family == m.family);
    CHECK(back.dim == m.dim);
    CHECK(back.seed == m.seed);
    CHECK(back.nu == doctest::Approx(m.nu).epsilon(1e-12));
    const SampleBatch a = sample_batch(m, 8);
    const SampleBatch b = sample_batch(back, 8);
    CHECK(a.rows.cwiseEqual(b.rows).all());
}

TEST_CASE("zero stub emits zero vectors") {
    SamplerModel model = make_zero_stub(5, 1);
    RngStream stream = model.stream();
    CHECK(sample_vector(model, stream).norm() == 0.0);
    CHECK_FALSE(model.iid_coordinates());
}
