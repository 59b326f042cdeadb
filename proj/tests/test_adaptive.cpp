#include "doctest.h"

#include <map>
#include <random>

#include "chac/adaptive.hpp"
#include "chac/lsh.hpp"
#include "oracles.hpp"

using namespace chac;

namespace {

NnsFactory exact_factory(std::size_t dim) {
    return [dim](std::span<const Centroid> pts, std::uint64_t) {
        auto store = std::make_unique<ExactNns>(dim);
        for (const Centroid& c : pts) store->insert(c);
        return store;
    };
}

// shim store that records every query point it is handed
struct RecordingStore final : DynamicNns {
    std::unique_ptr<DynamicNns> inner;
    std::vector<Point>* log;

    RecordingStore(std::unique_ptr<DynamicNns> in, std::vector<Point>* l)
        : inner(std::move(in)), log(l) {}
    void insert(const Centroid& u) override { inner->insert(u); }
    void erase(const Centroid& u) override { inner->erase(u); }
    QueryResult query(std::span<const double> u,
                      std::optional<std::uint64_t> excluded) const override {
        log->emplace_back(u.begin(), u.end());
        return inner->query(u, excluded);
    }
    std::size_t size() const override { return inner->size(); }
    NnsApproxSpec approx_spec() const override { return inner->approx_spec(); }
};

Centroid pt(std::initializer_list<double> coords, std::uint64_t id) {
    return Centroid{Point(coords), 1, id};
}

CoveringNet unit_net(std::size_t d, double spacing, double radius = 100.0) {
    return CoveringNet(Point(d, 0.0), radius, spacing);
}

}  // namespace

TEST_CASE("net snap: floor to the grid") {
    CoveringNet net(Point{0.0}, 10.0, 1.0);
    CHECK(net.grid_step() == 1.0);  // beta/sqrt(1) is already a power of two
    CHECK(net.snap(Point{2.3}) == Point{2.0});
    CHECK(net.snap(Point{2.0}) == Point{2.0});
    CHECK(net.snap(Point{-0.7}) == Point{-1.0});
}

TEST_CASE("net snap: clamping outside the radius is counted") {
    CoveringNet net(Point{0.0, 0.0}, 1.0, 0.25);
    CHECK(net.clamp_count() == 0);
    net.snap(Point{5.0, 0.0});
    CHECK(net.clamp_count() == 1);
    net.snap(Point{0.5, 0.5});
    CHECK(net.clamp_count() == 1);
}

TEST_CASE("net snap: bound and idempotence over random in-ball points") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const std::size_t d : {std::size_t{2}, std::size_t{8}, std::size_t{64}}) {
        const double beta = 0.37, radius = 50.0;
        Point center(d, 1.25);
        CoveringNet net(center, radius, beta);
        double worst = 0.0;
        for (int s = 0; s < 20000; ++s) {
            Point u(d);
            double norm = 0.0;
            for (double& v : u) {
                v = gauss(rng);
                norm += v * v;
            }
            const double scale =
                radius * std::pow(unit(rng), 1.0 / static_cast<double>(d)) / std::sqrt(norm);
            for (std::size_t k = 0; k < d; ++k) u[k] = center[k] + u[k] * scale;
            const Point snapped = net.snap(u);
            worst = std::max(worst, euclidean_dist(u, snapped));
            CHECK(net.snap(snapped) == snapped);
        }
        CHECK(worst <= beta);
    }
}

TEST_CASE("hac_query_beta formula and domain") {
    CHECK(hac_query_beta(2.0, 1.5, 1.0) == doctest::Approx(0.5 / 4.5).epsilon(1e-15));
    CHECK(hac_query_beta(2.0, 1.0 + 1e-9, 1.0) == doctest::Approx(0.0).epsilon(1e-8));
    // the small-c regime from the final algorithm still yields a usable slack
    const double c_hat = 1.01 / 1.001;
    const double beta0 = hac_query_beta(c_hat, 1.005, 1.0);
    CHECK(beta0 > 0.0);
    CHECK(beta0 == doctest::Approx(1.0 * 0.005 / ((1.0 + c_hat) * 1.005)).epsilon(1e-15));
    CHECK_THROWS_AS(hac_query_beta(2.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hac_query_beta(2.0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hac_query_beta(2.0, 1.5, 0.0), std::invalid_argument);
}

TEST_CASE("adaptive insert cascades level by level") {
    AdaptiveNns store(2, 16, unit_net(2, 0.01), exact_factory(2), {1.0, 0.0}, 1);
    store.insert(pt({0, 0}, 0));
    CHECK(store.level_size(0) == 1);
    store.insert(pt({1, 0}, 1));
    CHECK(store.level_size(0) == 0);
    CHECK(store.level_size(1) == 2);
    store.insert(pt({2, 0}, 2));
    CHECK(store.level_size(0) == 1);
    CHECK(store.level_size(1) == 2);
    store.insert(pt({3, 0}, 3));
    CHECK(store.level_size(0) == 0);
    CHECK(store.level_size(1) == 0);
    CHECK(store.level_size(2) == 4);
    store.check_invariants();
}

TEST_CASE("adaptive delete: direct removal, no rebuild") {
    AdaptiveNns store(2, 8, unit_net(2, 0.01), exact_factory(2), {1.0, 0.0}, 2);
    store.insert(pt({0, 0}, 0));
    store.erase(pt({0, 0}, 0));
    CHECK(store.size() == 0);
    for (std::size_t i = 0; i < store.level_count(); ++i) {
        CHECK(store.level_size(i) == 0);
    }

    for (std::uint64_t i = 0; i < 4; ++i) store.insert(pt({double(i), 0}, i));
    const std::uint64_t rebuilds_before = store.rebuild_count();
    store.erase(pt({1, 0}, 1));
    CHECK(store.rebuild_count() == rebuilds_before);  // deletes never rebuild
    const QueryResult r = store.query(Point{1.1, 0}, std::nullopt);
    CHECK((r.neighbor.id == 0 || r.neighbor.id == 2));
    store.check_invariants();

    CHECK_THROWS_AS(store.erase(pt({1, 0}, 1)), std::invalid_argument);
    CHECK_THROWS_AS(store.insert(pt({0, 0}, 0)), std::invalid_argument);
}

TEST_CASE("adaptive capacity is a hard limit") {
    AdaptiveNns store(1, 2, unit_net(1, 0.01), exact_factory(1), {1.0, 0.0}, 3);
    store.insert(pt({0}, 0));
    store.insert(pt({1}, 1));
    CHECK_THROWS_AS(store.insert(pt({2}, 2)), std::invalid_argument);
}

TEST_CASE("adaptive query equals the exact argmin at the snapped point") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    const double spacing = 0.01;
    AdaptiveNns store(2, 256, unit_net(2, spacing, 4.0), exact_factory(2), {1.0, 0.0}, 4);
    std::map<std::uint64_t, Point> live;
    std::uint64_t next_id = 0;
    for (int op = 0; op < 700; ++op) {
        const int kind = static_cast<int>(rng() % 3);
        if ((kind == 0 && live.size() < 200) || live.size() < 2) {
            Point p{coord(rng), coord(rng)};
            store.insert(Centroid{p, 1, next_id});
            live[next_id] = p;
            ++next_id;
        } else if (kind == 1 && live.size() > 2) {
            auto it = live.begin();
            std::advance(it, static_cast<long>(rng() % live.size()));
            store.erase(Centroid{it->second, 1, it->first});
            live.erase(it);
        } else {
            Point u{coord(rng), coord(rng)};
            const QueryResult r = store.query(u, std::nullopt);
            const Point snapped = store.net().snap(u);
            double best = std::numeric_limits<double>::infinity();
            std::uint64_t best_id = 0;
            for (const auto& [id, p] : live) {
                const double d = euclidean_dist(snapped, p);
                if (d < best || (d == best && id < best_id)) {
                    best = d;
                    best_id = id;
                }
            }
            CHECK(r.neighbor.id == best_id);
            CHECK(r.distance == euclidean_dist(u, live.at(best_id)));
            // exact levels: within 2*spacing of the true nearest neighbor
            double truth = std::numeric_limits<double>::infinity();
            for (const auto& [id, p] : live) truth = std::min(truth, euclidean_dist(u, p));
            CHECK(r.distance <= truth + 2.0 * spacing + 1e-15);
        }
        if (op % 50 == 0) store.check_invariants();
    }
}

TEST_CASE("adaptive wrapper composes the approximation spec") {
    AdaptiveNns store(2, 8, unit_net(2, 0.125), exact_factory(2), {1.0, 0.0}, 5);
    const NnsApproxSpec spec = store.approx_spec();
    CHECK(spec.alpha == 1.0);
    CHECK(spec.beta == doctest::Approx(2.0 * 0.125));

    AdaptiveNns lshish(2, 8, unit_net(2, 0.125), exact_factory(2), {3.0, 0.5}, 6);
    CHECK(lshish.approx_spec().alpha == 3.0);
    CHECK(lshish.approx_spec().beta == doctest::Approx(0.5 + 4.0 * 0.125));
}

TEST_CASE("cascade rebuilds resample level randomness") {
    std::vector<std::uint64_t> seeds;
    NnsFactory recorder = [&seeds](std::span<const Centroid> pts, std::uint64_t seed) {
        seeds.push_back(seed);
        auto store = std::make_unique<ExactNns>(2);
        for (const Centroid& c : pts) store->insert(c);
        return store;
    };
    AdaptiveNns store(2, 64, unit_net(2, 0.01), recorder, {1.0, 0.0}, 7);
    for (std::uint64_t i = 0; i < 32; ++i) store.insert(pt({double(i), 0}, i));
    REQUIRE(seeds.size() > 10);
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("oblivious levels only ever see net points") {
    std::vector<Point> seen;
    NnsFactory recorder = [&seen](std::span<const Centroid> pts, std::uint64_t) {
        auto inner = std::make_unique<ExactNns>(2);
        for (const Centroid& c : pts) inner->insert(c);
        return std::make_unique<RecordingStore>(std::move(inner), &seen);
    };
    CoveringNet net = unit_net(2, 0.037);
    AdaptiveNns store(2, 32, net, recorder, {1.0, 0.0}, 8);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    for (std::uint64_t i = 0; i < 20; ++i) {
        store.insert(Centroid{Point{coord(rng), coord(rng)}, 1, i});
    }
    for (int q = 0; q < 50; ++q) {
        store.query(Point{coord(rng), coord(rng)}, std::nullopt);
    }
    REQUIRE(!seen.empty());
    for (const Point& q : seen) {
        CHECK(store.net().snap(q) == q);  // every query point is a grid fixed point
    }
}

TEST_CASE("movement accounting stays within the amortized bound") {
    const std::size_t n = 1000;
    AdaptiveNns store(2, n, unit_net(2, 0.01, 40.0), exact_factory(2), {1.0, 0.0}, 9);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    for (std::uint64_t i = 0; i < n; ++i) {
        store.insert(Centroid{Point{coord(rng), coord(rng)}, 1, i});
        store.check_invariants();
    }
    const std::uint64_t cap =
        n * (static_cast<std::uint64_t>(std::floor(std::log2(double(n)))) + 1);
    CHECK(store.total_moves() <= cap);
}

TEST_CASE("adaptive adversary with exact levels never breaks the contract") {
    const double spacing = 0.01;
    AdaptiveNns store(2, 512, unit_net(2, spacing, 8.0), exact_factory(2), {1.0, 0.0}, 10);
    std::map<std::uint64_t, Point> live;
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    std::uint64_t next_id = 0;
    for (int i = 0; i < 16; ++i) {
        Point p{coord(rng), coord(rng)};
        store.insert(Centroid{p, 1, next_id});
        live[next_id++] = p;
    }
    Point q{0.5, 0.5};
    const NnsApproxSpec spec = store.approx_spec();
    for (int round = 0; round < 300; ++round) {
        const QueryResult r = store.query(q, std::nullopt);
        double truth = std::numeric_limits<double>::infinity();
        for (const auto& [id, p] : live) truth = std::min(truth, euclidean_dist(q, p));
        CHECK(r.distance <= spec.alpha * truth + spec.beta + 1e-12);
        // the next update depends on the answer just returned
        Point mid{0.5 * (q[0] + r.neighbor.coords[0]) + 1e-7 * double(round % 13),
                  0.5 * (q[1] + r.neighbor.coords[1])};
        store.insert(Centroid{mid, 1, next_id});
        live[next_id++] = mid;
        q = mid;
    }
    store.check_invariants();
}
