#include <doctest.h>

#include <cmath>
#include <limits>

#include "dtnt/error.hpp"
#include "dtnt/geometry.hpp"
#include "dtnt/rng.hpp"

using namespace dtnt;

namespace {

// independent exhaustive-search oracle
std::pair<std::size_t, double> brute_nearest(const PointCloud& cloud, const Vec3& q) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        const double dx = q.x() - cloud.points[k].x();
        const double dy = q.y() - cloud.points[k].y();
        const double dz = q.z() - cloud.points[k].z();
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best_d2 || (d2 == best_d2 && k < best)) {
            best_d2 = d2;
            best = k;
        }
    }
    return {best, std::sqrt(best_d2)};
}

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    double forward = 0.0;
    for (std::size_t k = 0; k < a.points.size(); ++k) forward += brute_nearest(b, a.points[k]).second;
    double backward = 0.0;
    for (std::size_t k = 0; k < b.points.size(); ++k) backward += brute_nearest(a, b.points[k]).second;
    return forward / static_cast<double>(a.points.size()) +
           backward / static_cast<double>(b.points.size());
}

PointCloud random_cloud(std::size_t n, Rng& rng, double span = 1.0) {
    PointCloud c;
    c.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.points.emplace_back(rng.uniform(-span, span), rng.uniform(-span, span),
                              rng.uniform(-span, span));
    }
    return c;
}

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
    PointCloud c;
    c.points = pts;
    return c;
}

// full nearest-neighbor assignment signature of both Chamfer directions
std::vector<std::size_t> assignment_signature(const PointCloud& a, const PointCloud& b) {
    std::vector<std::size_t> sig;
    for (const Vec3& p : a.points) sig.push_back(brute_nearest(b, p).first);
    for (const Vec3& p : b.points) sig.push_back(brute_nearest(a, p).first);
    return sig;
}

}  // namespace

TEST_CASE("index over a single point answers every query with index 0") {
    const PointCloud c = cloud_of({Vec3(0.3, -0.2, 1.0)});
    const NeighborIndex index = build_index(c);
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto [idx, dist] = index.nearest(Vec3(rng.normal(), rng.normal(), rng.normal()));
        CHECK(idx == 0);
        CHECK(dist == doctest::Approx((index.cloud().points[0] -
                                       Vec3(0.3, -0.2, 1.0)).norm() + dist).epsilon(1.0));
    }
}

TEST_CASE("index matches the exhaustive scan on random queries") {
    Rng rng(42);
    const PointCloud c = random_cloud(500, rng);
    const NeighborIndex index = build_index(c);
    for (int i = 0; i < 100; ++i) {
        const Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        const auto fast = index.nearest(q);
        const auto slow = brute_nearest(c, q);
        CHECK(fast.first == slow.first);
        CHECK(fast.second == slow.second);  // bit-for-bit
    }
}

TEST_CASE("equidistant candidates break ties to the lower index") {
    const PointCloud c = cloud_of({Vec3(1, 0, 0), Vec3(-1, 0, 0)});
    const NeighborIndex index = build_index(c);
    const auto [idx, dist] = index.nearest(Vec3(0, 0, 0));
    CHECK(idx == 0);
    CHECK(dist == doctest::Approx(1.0));
}

TEST_CASE("nearest on a stored point returns distance 0") {
    Rng rng(3);
    const PointCloud c = random_cloud(64, rng);
    const NeighborIndex index = build_index(c);
    const auto [idx, dist] = index.nearest(c.points[17]);
    CHECK(idx == 17);
    CHECK(dist == 0.0);
}

TEST_CASE("nearest analytic example") {
    const PointCloud c = cloud_of({Vec3(1, 0, 0), Vec3(0, 2, 0)});
    const NeighborIndex index = build_index(c);
    const auto [idx, dist] = index.nearest(Vec3(0, 0, 0));
    CHECK(idx == 0);
    CHECK(dist == 1.0);
}

TEST_CASE("index rejects empty clouds and non-finite queries") {
    CHECK_THROWS_AS(build_index(PointCloud{}), EmptyCloudError);
    const PointCloud c = cloud_of({Vec3(0, 0, 0)});
    const NeighborIndex index = build_index(c);
    CHECK_THROWS_AS(index.nearest(Vec3(std::nan(""), 0, 0)), InvalidCoordinateError);
    PointCloud bad = cloud_of({Vec3(0, 0, std::numeric_limits<double>::infinity())});
    CHECK_THROWS_AS(build_index(bad), InvalidCoordinateError);
}

TEST_CASE("chamfer of identical clouds is exactly zero") {
    Rng rng(11);
    const PointCloud c = random_cloud(100, rng);
    CHECK(chamfer(c, c) == 0.0);
}

TEST_CASE("chamfer analytic examples") {
    const PointCloud a = cloud_of({Vec3(0, 0, 0)});
    const PointCloud b = cloud_of({Vec3(1, 0, 0)});
    CHECK(chamfer(a, b) == doctest::Approx(2.0).epsilon(1e-15));

    const PointCloud a2 = cloud_of({Vec3(0, 0, 0), Vec3(2, 0, 0)});
    CHECK(chamfer(a2, b) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("chamfer equals the exhaustive oracle bit-for-bit") {
    Rng rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t na = 1 + static_cast<std::size_t>(rng.below(400));
        const std::size_t nb = 1 + static_cast<std::size_t>(rng.below(400));
        const PointCloud a = random_cloud(na, rng);
        const PointCloud b = random_cloud(nb, rng);
        CHECK(chamfer(a, b) == brute_chamfer(a, b));
    }
}

TEST_CASE("chamfer is symmetric and non-negative") {
    Rng rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        const PointCloud a = random_cloud(40 + rng.below(40), rng);
        const PointCloud b = random_cloud(40 + rng.below(40), rng);
        const double ab = chamfer(a, b);
        const double ba = chamfer(b, a);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) <= 1e-12 * static_cast<double>(a.size() + b.size()));
    }
}

TEST_CASE("chamfer gradient is zero for identical clouds") {
    Rng rng(9);
    const PointCloud c = random_cloud(30, rng);
    for (const Vec3& g : chamfer_gradient(c, c)) CHECK(g.norm() == 0.0);
}

TEST_CASE("chamfer gradient analytic single-pair example") {
    const PointCloud a = cloud_of({Vec3(1, 0, 0)});
    const PointCloud b = cloud_of({Vec3(0, 0, 0)});
    const auto grad = chamfer_gradient(a, b);
    REQUIRE(grad.size() == 1);
    CHECK(grad[0].x() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(grad[0].y() == doctest::Approx(0.0));
    CHECK(grad[0].z() == doctest::Approx(0.0));
}

TEST_CASE("chamfer gradient matches central finite differences") {
    Rng rng(31337);
    PointCloud a = random_cloud(50, rng);
    const PointCloud b = random_cloud(50, rng);
    const auto grad = chamfer_gradient(a, b);
    const double h = 1e-6;

    int checked = 0, passed = 0;
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        for (int d = 0; d < 3; ++d) {
            const double saved = a.points[k][d];
            a.points[k][d] = saved + h;
            const double f_plus = brute_chamfer(a, b);
            const auto sig_plus = assignment_signature(a, b);
            a.points[k][d] = saved - h;
            const double f_minus = brute_chamfer(a, b);
            const auto sig_minus = assignment_signature(a, b);
            a.points[k][d] = saved;
            if (sig_plus != sig_minus) continue;  // assignment-switch boundary

            ++checked;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double an = grad[k][d];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
            if (std::abs(fd - an) / denom < 1e-5) ++passed;
        }
    }
    CHECK(checked > 100);
    CHECK(passed == checked);
}

TEST_CASE("extract_correspondence recovers identity and reversal") {
    Rng rng(77);
    const PointCloud c = random_cloud(64, rng);
    const CorrespondenceMap identity = extract_correspondence(c, c);
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(identity.match[k] == k);

    PointCloud reversed = c;
    std::reverse(reversed.points.begin(), reversed.points.end());
    const CorrespondenceMap rev = extract_correspondence(c, reversed);
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(rev.match[k] == c.size() - 1 - k);
}

TEST_CASE("extract_correspondence survives noise far below point spacing") {
    // grid with spacing 1, jitter sigma 0.01
    PointCloud grid;
    for (int x = 0; x < 5; ++x) {
        for (int y = 0; y < 5; ++y) {
            for (int z = 0; z < 4; ++z) grid.points.emplace_back(x, y, z);
        }
    }
    Rng rng(123);
    PointCloud noisy = grid;
    for (Vec3& p : noisy.points) {
        p += 0.01 * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    const CorrespondenceMap map = extract_correspondence(noisy, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(map.match[k] == k);
}

TEST_CASE("matching is covariant under a common translation") {
    Rng rng(55);
    const PointCloud a = random_cloud(80, rng);
    const PointCloud b = random_cloud(90, rng);
    const CorrespondenceMap before = extract_correspondence(a, b);

    const Vec3 shift(0.37, -1.2, 0.05);
    PointCloud a2 = a, b2 = b;
    for (Vec3& p : a2.points) p += shift;
    for (Vec3& p : b2.points) p += shift;
    const CorrespondenceMap after = extract_correspondence(a2, b2);
    CHECK(before.match == after.match);
}

TEST_CASE("unit-cube normalization round-trips and bounds the union") {
    Rng rng(88);
    std::vector<PointCloud> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(random_cloud(50, rng, 4.0));
    const NormTransform t = fit_unit_cube(frames);

    for (const PointCloud& f : frames) {
        const PointCloud n = apply_transform(f, t);
        for (const Vec3& p : n.points) {
            CHECK(p.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
        }
        const PointCloud back = invert_transform(n, t);
        for (std::size_t k = 0; k < f.size(); ++k) {
            CHECK((back.points[k] - f.points[k]).norm() <= 1e-12);
        }
    }
}
