// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "swift4d/rasterizer.hpp"
#include "test_util.hpp"

using namespace swift4d;
using namespace swift4d::testutil;

namespace {

template <typename T>
GaussianCloud<T> single_point_cloud(const Vec3<T>& pos, T opacity_logit, const Vec3<T>& rgb,
                                    T d = T(0)) {
    GaussianCloud<T> cloud;
    cloud.sh_degree = 0;
    add_point(cloud, pos, Vec3<T>(T(-1), T(-1), T(-1)), opacity_logit, rgb, d);
    finish_cloud(cloud);
    return cloud;
}

}  // namespace

TEST_CASE("project culls points at or behind the near plane") {
    auto cam = axis_camera<float>(32, 32, 32.f, 32.f);
    GaussianCloud<float> cloud;
    cloud.sh_degree = 0;
    add_point(cloud, Vec3<float>(0, 0, 0), Vec3<float>(0, 0, 0), 0.f, Vec3<float>(1, 0, 0));
    add_point(cloud, Vec3<float>(0, 0, -2), Vec3<float>(0, 0, 0), 0.f, Vec3<float>(1, 0, 0));
    finish_cloud(cloud);

    const auto arrays = SplatArrays<float>::from(cloud);
    ProjectStats stats;
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f, &stats);
    REQUIRE(proj.empty());
    REQUIRE(stats.culled_depth == 2);
}

TEST_CASE("project puts an on-axis point at the principal point") {
    auto cam = axis_camera<double>(33, 47, 20.0, 25.0);
    GaussianCloud<double> cloud;
    cloud.sh_degree = 0;
    add_point(cloud, Vec3<double>(0, 0, 3.0), Vec3<double>(-3, -3, -3), 0.0, Vec3<double>(1, 1, 1));
    finish_cloud(cloud);

    const auto arrays = SplatArrays<double>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1, 100.0);
    REQUIRE(proj.size() == 1);
    REQUIRE(proj[0].mean2d.x() == Catch::Approx(cam.cx));
    REQUIRE(proj[0].mean2d.y() == Catch::Approx(cam.cy));
}

TEST_CASE("project matches the pinhole formula for off-axis points") {
    auto cam = axis_camera<double>(64, 64, 50.0, 55.0);
    Rng rng(17);
    GaussianCloud<double> cloud;
    cloud.sh_degree = 0;
    std::vector<Vec3<double>> pts;
    for (int i = 0; i < 20; ++i) {
        Vec3<double> p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(1.5, 5.0));
        pts.push_back(p);
        add_point(cloud, p, Vec3<double>(-2, -2, -2), 0.0, Vec3<double>(0.5, 0.5, 0.5));
    }
    finish_cloud(cloud);

    const auto arrays = SplatArrays<double>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1, 100.0);
    REQUIRE(proj.size() == pts.size());
    for (const auto& pg : proj) {
        const Vec3<double>& p = pts[pg.source];
        // Independent pinhole oracle.
        REQUIRE(pg.mean2d.x() == Catch::Approx(cam.fx * p.x() / p.z() + cam.cx).epsilon(1e-12));
        REQUIRE(pg.mean2d.y() == Catch::Approx(cam.fy * p.y() / p.z() + cam.cy).epsilon(1e-12));
    }
}

TEST_CASE("cov2d eigenvalues sit at or above the blur floor") {
    auto cam = axis_camera<double>(64, 64, 50.0, 50.0);
    Rng rng(23);
    GaussianCloud<double> cloud;
    cloud.sh_degree = 0;
    for (int i = 0; i < 30; ++i)
        add_point(cloud, Vec3<double>(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(1.0, 4.0)),
                  Vec3<double>(rng.uniform(-6, -1), rng.uniform(-6, -1), rng.uniform(-6, -1)), 0.0,
                  Vec3<double>(0.5, 0.5, 0.5));
    finish_cloud(cloud);
    const auto arrays = SplatArrays<double>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1, 100.0);
    for (const auto& pg : proj) {
        const double mid = 0.5 * (pg.cov2d[0] + pg.cov2d[2]);
        const double half = 0.5 * (pg.cov2d[0] - pg.cov2d[2]);
        const double lam_min = mid - std::sqrt(half * half + pg.cov2d[1] * pg.cov2d[1]);
        REQUIRE(lam_min >= kBlurFloor - 1e-9);
    }
}

TEST_CASE("empty scene renders background with zero alpha") {
    auto cam = axis_camera<float>(16, 16, 16.f, 16.f);
    RasterizeOptions<float> opts;
    opts.background = Vec3<float>(0.2f, 0.4f, 0.6f);
    std::vector<ProjectedGaussian<float>> none;
    auto out = rasterize(none, cam, opts);
    for (int p = 0; p < 16 * 16; ++p) {
        REQUIRE(out.color.data[p * 3 + 0] == 0.2f);
        REQUIRE(out.color.data[p * 3 + 1] == 0.4f);
        REQUIRE(out.color.data[p * 3 + 2] == 0.6f);
        REQUIRE(out.alpha.data[p] == 0.f);
        REQUIRE(out.payload.data[p] == 0.f);
    }
}

TEST_CASE("a fully opaque splat renders its own color") {
    // Odd image size: pixel (8,8) has center (8.5, 8.5), which is exactly the
    // principal point, so g = 1 there. sigmoid(40) == 1 in float and the
    // alpha clamp is lifted to realize alpha == 1.
    auto cam = axis_camera<float>(17, 17, 16.f, 16.f);
    auto cloud = single_point_cloud<float>(Vec3<float>(0, 0, 2), 40.f, Vec3<float>(0.8f, 0.3f, 0.1f));
    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    REQUIRE(proj.size() == 1);

    RasterizeOptions<float> opts;
    opts.alpha_clamp = 1.0f;
    opts.background = Vec3<float>(1, 1, 1);
    auto out = rasterize(proj, cam, opts);

    const Vec3<float> c = evaluated_color(cloud, 0);
    const int px = 8 + 8 * 17;
    REQUIRE(out.alpha.data[px] == 1.0f);
    for (int ch = 0; ch < 3; ++ch)
        REQUIRE(out.color.data[px * 3 + ch] == c[ch]);
}

TEST_CASE("two half-opacity splats composite per the blending formula") {
    auto cam = axis_camera<float>(17, 17, 16.f, 16.f);  // odd size: pixel center on axis
    GaussianCloud<float> cloud;
    cloud.sh_degree = 0;
    add_point(cloud, Vec3<float>(0, 0, 2), Vec3<float>(0, 0, 0), 0.f, Vec3<float>(1.f, 0.f, 0.f));
    add_point(cloud, Vec3<float>(0, 0, 3), Vec3<float>(0, 0, 0), 0.f, Vec3<float>(0.f, 1.f, 0.f));
    finish_cloud(cloud);
    cloud.dynamic_params = {2.f, -2.f};

    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    REQUIRE(proj.size() == 2);

    RasterizeOptions<float> opts;
    opts.mode = PayloadMode::DynamicValue;
    opts.background = Vec3<float>(0.f, 0.f, 1.f);
    auto out = rasterize(proj, cam, opts);

    // Center pixel (8,8) has center (8.5, 8.5) = principal point; g = 1 exactly.
    const int px = 8 + 8 * 17;
    const Vec3<float> c1 = evaluated_color(cloud, 0), c2 = evaluated_color(cloud, 1);
    for (int ch = 0; ch < 3; ++ch) {
        const float expect = 0.5f * c1[ch] + 0.25f * c2[ch] + 0.25f * opts.background[ch];
        REQUIRE(out.color.data[px * 3 + ch] == Catch::Approx(expect).margin(1e-7));
    }
    // Payload: 2*0.5 + (-2)*0.25 = 0.5 pre-sigmoid.
    REQUIRE(out.payload.data[px] == Catch::Approx(0.5f).margin(1e-7));
    REQUIRE(sigmoid(out.payload.data[px]) == Catch::Approx(0.62245935f).margin(1e-6));
    REQUIRE(out.alpha.data[px] == Catch::Approx(0.75f).margin(1e-7));
}

TEST_CASE("compositing invariants on random scenes") {
    auto cam = axis_camera<float>(32, 32, 24.f, 24.f);
    Rng rng(99);
    GaussianCloud<float> cloud;
    cloud.sh_degree = 0;
    for (int i = 0; i < 60; ++i)
        add_point(cloud,
                  Vec3<float>(float(rng.uniform(-0.8, 0.8)), float(rng.uniform(-0.8, 0.8)),
                              float(rng.uniform(1.0, 5.0))),
                  Vec3<float>(float(rng.uniform(-3, -0.5)), float(rng.uniform(-3, -0.5)),
                              float(rng.uniform(-3, -0.5))),
                  float(rng.uniform(-2, 3)), Vec3<float>(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)),
                                                         float(rng.uniform(0, 1))),
                  float(rng.uniform(-3, 3)));
    finish_cloud(cloud);

    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    RasterizeOptions<float> opts;
    opts.mode = PayloadMode::DynamicValue;
    auto out = rasterize(proj, cam, opts);

    for (size_t px = 0; px < size_t(32 * 32); ++px) {
        const int32_t cnt = out.rec_count[px];
        const int32_t off = out.rec_offset[px];
        float trans = 1.f, wsum = 0.f;
        for (int32_t r = 0; r < cnt; ++r) {
            const auto& rec = out.records[off + r];
            REQUIRE(rec.trans == trans);  // stored prefix matches replay
            REQUIRE(rec.trans >= 0.f);
            REQUIRE(rec.trans <= 1.f);
            wsum += rec.alpha * rec.trans;
            const float next = trans * (1.f - rec.alpha);
            REQUIRE(next <= trans);  // monotone
            trans = next;
        }
        REQUIRE(out.alpha.data[px] == Catch::Approx(wsum).margin(1e-6));
        REQUIRE(out.alpha.data[px] >= 0.f);
        REQUIRE(out.alpha.data[px] <= 1.f + 1e-6f);
        REQUIRE(out.final_t.data[px] == Catch::Approx(trans).margin(1e-7));
    }
}

TEST_CASE("rasterization is bit-deterministic across repeats and thread counts") {
    auto cam = axis_camera<float>(32, 32, 24.f, 24.f);
    Rng rng(123);
    GaussianCloud<float> cloud;
    cloud.sh_degree = 1;
    for (int i = 0; i < 40; ++i) {
        // Coincident depths exercise the tie-break.
        const float z = (i % 4 == 0) ? 2.5f : float(rng.uniform(1.0, 5.0));
        add_point(cloud, Vec3<float>(float(rng.uniform(-0.6, 0.6)), float(rng.uniform(-0.6, 0.6)), z),
                  Vec3<float>(-2, -2, -2), float(rng.uniform(-1, 2)),
                  Vec3<float>(0.5f, 0.7f, 0.2f));
    }
    finish_cloud(cloud);

    const auto arrays = SplatArrays<float>::from(cloud);
    auto render_once = [&]() {
        auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
        RasterizeOptions<float> opts;
        return rasterize(proj, cam, opts);
    };
    set_thread_count(2);
    auto a = render_once();
    auto b = render_once();
    REQUIRE(a.color.data == b.color.data);
    REQUIRE(a.alpha.data == b.alpha.data);

    set_thread_count(1);
    auto c = render_once();
    REQUIRE(a.color.data == c.color.data);
    set_thread_count(2);
}

TEST_CASE("backward: single opaque splat has unit payload gradient") {
    auto cam = axis_camera<float>(17, 17, 16.f, 16.f);
    auto cloud = single_point_cloud<float>(Vec3<float>(0, 0, 2), 40.f, Vec3<float>(0.5f, 0.5f, 0.5f), 1.f);
    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    RasterizeOptions<float> opts;
    opts.alpha_clamp = 1.0f;
    opts.mode = PayloadMode::DynamicValue;
    auto out = rasterize(proj, cam, opts);

    // Upstream gradient of 1 at the center pixel only.
    Image<float> gp(17, 17, 1);
    gp.at(8, 8, 0) = 1.f;
    auto grads = rasterize_backward(arrays, proj, out, cam, nullptr, &gp, opts);
    REQUIRE(grads.dynamic_params[0] == 1.0f);  // alpha = 1, empty occluder product
}

TEST_CASE("backward: payload gradient behind one occluder is alpha * (1 - alpha_occ)") {
    auto cam = axis_camera<float>(17, 17, 16.f, 16.f);
    GaussianCloud<float> cloud;
    cloud.sh_degree = 0;
    // Occluder in front with alpha 0.3, target behind with alpha 0.5.
    add_point(cloud, Vec3<float>(0, 0, 1.5f), Vec3<float>(0, 0, 0), logit(0.3f), Vec3<float>(1, 1, 1));
    add_point(cloud, Vec3<float>(0, 0, 3.f), Vec3<float>(0, 0, 0), 0.f, Vec3<float>(0, 0, 0), 1.f);
    finish_cloud(cloud);

    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    RasterizeOptions<float> opts;
    opts.mode = PayloadMode::DynamicValue;
    auto out = rasterize(proj, cam, opts);

    Image<float> gp(17, 17, 1);
    gp.at(8, 8, 0) = 1.f;
    auto grads = rasterize_backward(arrays, proj, out, cam, nullptr, &gp, opts);
    REQUIRE(grads.dynamic_params[1] == Catch::Approx(0.5f * 0.7f).margin(1e-6));
}

TEST_CASE("payload gradient is monotone non-increasing in an occluder's alpha") {
    auto cam = axis_camera<float>(17, 17, 16.f, 16.f);
    float prev = std::numeric_limits<float>::infinity();
    for (float occ_op : {0.1f, 0.3f, 0.5f, 0.7f, 0.9f}) {
        GaussianCloud<float> cloud;
        cloud.sh_degree = 0;
        add_point(cloud, Vec3<float>(0, 0, 1.5f), Vec3<float>(0, 0, 0), logit(occ_op), Vec3<float>(1, 1, 1));
        add_point(cloud, Vec3<float>(0, 0, 3.f), Vec3<float>(0, 0, 0), 2.f, Vec3<float>(0, 0, 0), 1.f);
        finish_cloud(cloud);
        const auto arrays = SplatArrays<float>::from(cloud);
        auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
        RasterizeOptions<float> opts;
        opts.mode = PayloadMode::DynamicValue;
        auto out = rasterize(proj, cam, opts);
        Image<float> gp(17, 17, 1, 1.f);  // uniform positive upstream gradient
        auto grads = rasterize_backward(arrays, proj, out, cam, nullptr, &gp, opts);
        REQUIRE(grads.dynamic_params[1] <= prev + 1e-7f);
        prev = grads.dynamic_params[1];
    }
}

TEST_CASE("backward without records is a contract violation") {
    auto cam = axis_camera<float>(16, 16, 16.f, 16.f);
    auto cloud = single_point_cloud<float>(Vec3<float>(0, 0, 2), 0.f, Vec3<float>(0.5f, 0.5f, 0.5f));
    const auto arrays = SplatArrays<float>::from(cloud);
    auto proj = project(arrays, all_indices(arrays), cam, 0.1f, 100.f);
    RasterizeOptions<float> opts;
    opts.retain_records = false;
    auto out = rasterize(proj, cam, opts);
    Image<float> gc(16, 16, 3, 1.f);
    REQUIRE_THROWS_AS(rasterize_backward(arrays, proj, out, cam, &gc, nullptr, opts), ContractError);
}
