// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "swift4d/cloud.hpp"

using namespace swift4d;

TEST_CASE("covariance3d identity cases") {
    const Vec4<double> qid(1, 0, 0, 0);
    Mat3<double> c = covariance3d(qid, Vec3<double>(0, 0, 0));
    REQUIRE((c - Mat3<double>::Identity()).cwiseAbs().maxCoeff() < 1e-12);

    c = covariance3d(qid, Vec3<double>(std::log(2.0), 0, 0));
    Mat3<double> expect = Vec3<double>(4, 1, 1).asDiagonal();
    REQUIRE((c - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("covariance3d 90-degree z rotation moves the long axis") {
    // Hand evaluation of R diag(4,1,1) R^T with R = Rz(90): x-axis maps to y,
    // so the variance 4 lands on y.
    const double s = std::sqrt(0.5);
    const Vec4<double> q(s, 0, 0, s);
    Mat3<double> c = covariance3d(q, Vec3<double>(std::log(2.0), 0, 0));
    Mat3<double> expect = Vec3<double>(1, 4, 1).asDiagonal();
    REQUIRE((c - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("covariance3d eigenvalues are exp(2s) and matrix is symmetric PSD") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Vec4<double> q;
        for (int i = 0; i < 4; ++i) q[i] = rng.normal();
        q.normalize();
        Vec3<double> ls(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Mat3<double> c = covariance3d(q, ls);
        REQUIRE((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);

        Eigen::SelfAdjointEigenSolver<Mat3<double>> es(c);
        Vec3<double> expect = (2.0 * ls).array().exp().matrix();
        std::sort(expect.data(), expect.data() + 3);
        for (int i = 0; i < 3; ++i) {
            REQUIRE(es.eigenvalues()[i] == Catch::Approx(expect[i]).epsilon(1e-6));
            REQUIRE(es.eigenvalues()[i] > 0.0);
        }
    }
}

TEST_CASE("covariance3d rejects non-finite input") {
    Vec4<double> q(1, 0, 0, 0);
    Vec3<double> bad(std::numeric_limits<double>::quiet_NaN(), 0, 0);
    REQUIRE_THROWS_AS(covariance3d(q, bad), InvalidParameterError);
    Vec4<double> badq(std::numeric_limits<double>::infinity(), 0, 0, 0);
    REQUIRE_THROWS_AS(covariance3d(badq, Vec3<double>(0, 0, 0)), InvalidParameterError);
}

TEST_CASE("classify splits on strict d > zeta") {
    GaussianCloud<float> cloud;
    cloud.resize(3, 1);

    SECTION("all zero stays static") {
        auto part = classify(cloud, 7.0f);
        REQUIRE(part.dynamic.empty());
        REQUIRE(part.static_.size() == 3);
    }

    SECTION("boundary value is static") {
        cloud.dynamic_params = {10.f, -10.f, 7.0f};
        auto part = classify(cloud, 7.0f);
        REQUIRE(part.dynamic == std::vector<size_t>{0});
        REQUIRE(part.static_ == std::vector<size_t>{1, 2});
        REQUIRE(cloud.dynamic_flags == std::vector<uint8_t>{1, 0, 0});
    }
}

TEST_CASE("classify equals brute-force filter and is permutation invariant") {
    Rng rng(5);
    GaussianCloud<float> cloud;
    cloud.resize(200, 1);
    for (auto& d : cloud.dynamic_params) d = float(rng.uniform(-10, 10));
    const float zeta = 3.5f;
    auto part = classify(cloud, zeta);

    std::vector<size_t> oracle;
    for (size_t i = 0; i < cloud.size(); ++i)
        if (cloud.dynamic_params[i] > zeta) oracle.push_back(i);
    REQUIRE(part.dynamic == oracle);
    REQUIRE(part.dynamic.size() + part.static_.size() == cloud.size());

    // Idempotent.
    auto part2 = classify(cloud, zeta);
    REQUIRE(part2.dynamic == part.dynamic);

    // Per-point predicate: permuting d permutes the partition.
    GaussianCloud<float> shuffled = cloud;
    std::reverse(shuffled.dynamic_params.begin(), shuffled.dynamic_params.end());
    auto part3 = classify(shuffled, zeta);
    const size_t n = cloud.size();
    std::vector<size_t> mapped;
    for (size_t idx : part3.dynamic) mapped.push_back(n - 1 - idx);
    std::sort(mapped.begin(), mapped.end());
    REQUIRE(mapped == part.dynamic);
}

TEST_CASE("scene config validation") {
    SceneConfig<float> cfg;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.gamma = 0.f;
    REQUIRE_THROWS_AS(cfg.validate(), InvalidParameterError);
    cfg.gamma = 0.02f;
    cfg.sh_degree = 4;
    REQUIRE_THROWS_AS(cfg.validate(), InvalidParameterError);
}
