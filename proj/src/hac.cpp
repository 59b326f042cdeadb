#include "chac/hac.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <tuple>

#include "chac/lsh.hpp"
#include "chac/rng.hpp"

namespace chac {

void HacConfig::validate() const {
    if (!(epsilon >= 0.0)) {
        throw std::invalid_argument("HacConfig: epsilon must be >= 0");
    }
    if (mode == HacMode::exact && (epsilon != 0.0 || backend != NnsBackend::exact)) {
        throw std::invalid_argument("HacConfig: exact mode requires epsilon = 0 and the exact backend");
    }
    if (mode == HacMode::bucket_approx && !(epsilon > 0.0)) {
        throw std::invalid_argument("HacConfig: bucket mode requires epsilon > 0");
    }
    if (backend == NnsBackend::lsh_adaptive) {
        const double c_hat = c_target / (1.0 + epsilon);
        if (!(c_hat > 1.0)) {
            throw std::invalid_argument(
                "HacConfig: lsh_adaptive requires c_target > 1 + epsilon");
        }
        if (!(lambda > 1.0) || !(lambda < c_hat)) {
            throw std::invalid_argument(
                "HacConfig: lambda must lie in (1, c_target/(1+epsilon))");
        }
        if (lsh_gamma < 1) {
            throw std::invalid_argument("HacConfig: lsh_gamma must be >= 1");
        }
    }
    if (bounds) {
        if (!(bounds->delta > 0.0) || !(bounds->delta <= bounds->big_delta)) {
            throw std::invalid_argument("HacConfig: need 0 < delta <= big_delta");
        }
    }
}

const char* to_string(HacMode m) {
    switch (m) {
        case HacMode::exact: return "exact";
        case HacMode::heap_approx: return "heap";
        case HacMode::bucket_approx: return "bucket";
    }
    return "unknown";
}

const char* to_string(NnsBackend b) {
    switch (b) {
        case NnsBackend::exact: return "exact";
        case NnsBackend::lsh_adaptive: return "lsh";
    }
    return "unknown";
}

void ActiveSet::insert(const Centroid& c) {
    if (!by_coords_.emplace(coord_key(c.coords), c.id).second) {
        throw std::logic_error("ActiveSet: coordinate-identical centroid not absorbed");
    }
    if (!by_id_.emplace(c.id, c).second) {
        by_coords_.erase(coord_key(c.coords));
        throw std::logic_error("ActiveSet: duplicate id");
    }
}

void ActiveSet::erase(std::uint64_t id) {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        throw std::logic_error("ActiveSet: erasing unknown id");
    }
    by_coords_.erase(coord_key(it->second.coords));
    by_id_.erase(it);
}

const Centroid* ActiveSet::find(std::uint64_t id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &it->second;
}

const Centroid* ActiveSet::find_by_coords(std::span<const double> coords) const {
    auto it = by_coords_.find(coord_key(coords));
    return it == by_coords_.end() ? nullptr : find(it->second);
}

namespace {

struct QueueEntry {
    double l = 0.0;
    std::uint64_t x = 0;  // source centroid; at most one live entry per source
    std::uint64_t y = 0;  // candidate neighbor at queue time
};

// min-heap on (distance, smaller id, larger id, source id)
struct QueueAfter {
    static std::tuple<double, std::uint64_t, std::uint64_t, std::uint64_t> key(
        const QueueEntry& e) {
        return {e.l, std::min(e.x, e.y), std::max(e.x, e.y), e.x};
    }
    bool operator()(const QueueEntry& a, const QueueEntry& b) const { return key(a) > key(b); }
};

using MergeQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueAfter>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Tracks the live queue entry per source centroid so the engine can assert
// its queue invariants after every operation.
struct QueueAudit {
    double delta = 0.0;
    std::unordered_map<std::uint64_t, double> entry_of;
    std::size_t below_delta = 0;

    void on_push(std::uint64_t x, double l) {
        if (!entry_of.emplace(x, l).second) {
            throw std::logic_error("queue invariant: source centroid queued twice");
        }
        if (l < delta && ++below_delta > 1) {
            throw std::logic_error("queue invariant: two live entries below delta");
        }
    }
    void on_retire(std::uint64_t x) {
        auto it = entry_of.find(x);
        if (it == entry_of.end()) return;
        if (it->second < delta) --below_delta;
        entry_of.erase(it);
    }
};

struct Engine {
    const EngineHooks* hooks;
    ActiveSet active;
    std::unique_ptr<DynamicNns> nns;
    Dendrogram dend;
    RunStats stats;
    std::uint64_t next_id;
    std::unordered_map<std::uint64_t, std::uint64_t> requeues_of;
    std::unique_ptr<QueueAudit> audit;

    Engine(const EngineHooks* h, std::size_t n_leaves) : hooks(h), next_id(n_leaves) {
        dend.num_leaves = n_leaves;
        dend.merges.reserve(n_leaves - 1);
    }

    QueryResult query(const Centroid& c) {
        ++stats.nns_queries;
        return nns->query(c.coords, c.id);
    }

    void store_insert(const Centroid& c) {
        ++stats.nns_inserts;
        nns->insert(c);
    }

    void store_erase(const Centroid& c) {
        ++stats.nns_deletes;
        nns->erase(c);
    }

    void fire_hook(const Centroid& a, const Centroid& b, double distance) const {
        if (hooks && hooks->on_merge) {
            hooks->on_merge(a, b, distance, active);
        }
    }

    void note_push(std::uint64_t x, double l) {
        if (audit) audit->on_push(x, l);
    }

    void note_retire(std::uint64_t id) {
        if (audit) audit->on_retire(id);
    }

    void record(const Centroid& a, const Centroid& b, const Centroid& z, double distance) {
        dend.merges.push_back({std::min(a.id, b.id), std::max(a.id, b.id), z.id, distance,
                               z.weight});
        ++stats.merges;
    }

    // Retires x and y, forms their weighted mean, and absorbs any active
    // centroid landing on identical coordinates. The result is NOT yet in the
    // active set or the store. Takes copies: the arguments usually point into
    // the active set this erases from.
    Centroid merge_pair(Centroid x, Centroid y, double distance) {
        fire_hook(x, y, distance);
        Centroid z = merge_centroids(x, y, next_id++);
        active.erase(x.id);
        active.erase(y.id);
        store_erase(x);
        store_erase(y);
        note_retire(x.id);
        note_retire(y.id);
        record(x, y, z, distance);
        while (const Centroid* twin = active.find_by_coords(z.coords)) {
            const Centroid other = *twin;
            fire_hook(z, other, 0.0);
            active.erase(other.id);
            store_erase(other);
            note_retire(other.id);
            Centroid z2 = merge_centroids(z, other, next_id++);
            record(z, other, z2, 0.0);
            ++stats.identical_centroid_merges;
            z = std::move(z2);
        }
        return z;
    }
};

std::unique_ptr<DynamicNns> make_backend(const HacConfig& cfg, const Dataset& points,
                                         const std::optional<DistanceBounds>& bounds) {
    const std::size_t dim = points.dim;
    if (cfg.backend == NnsBackend::exact) {
        return std::make_unique<ExactNns>(dim);
    }
    // lsh_adaptive: wrap per-level LSH stores behind the covering net so the
    // engine's answer-dependent updates stay safe
    const double c_hat = cfg.c_target / (1.0 + cfg.epsilon);
    const double beta0 = hac_query_beta(c_hat, cfg.lambda, bounds->delta);
    const double alpha_level = c_hat / cfg.lambda;
    const double beta_level = beta0 / 2.0;
    const double net_spacing = beta0 / (2.0 * (alpha_level + 1.0));

    LshParams base;
    base.c = alpha_level;
    base.beta = beta_level;
    base.big_delta = 2.0 * bounds->big_delta;  // centroid pairs reach up to 2*Delta
    base.k_ands = cfg.lsh_k;
    base.l_ors = cfg.lsh_l;
    base.repetitions = cfg.lsh_gamma;
    base.p2_hint = estimate_collision_prob(base.c, base.bucket_width, 10000,
                                           splitmix64(cfg.seed ^ 0x9c2d1f4bull));

    const CoveringNet net(bounding_box_center(points), 2.0 * bounds->big_delta, net_spacing);
    NnsFactory factory = [dim, base](std::span<const Centroid> pts, std::uint64_t seed) {
        LshParams p = base;
        p.seed = seed;
        return std::make_unique<LshNns>(dim, p, pts);
    };
    NnsApproxSpec level_spec{2.0 * base.c, 2.0 * base.c * base.beta};
    return std::make_unique<AdaptiveNns>(dim, points.size(), net, std::move(factory),
                                         level_spec, splitmix64(cfg.seed));
}

struct Prepared {
    DedupResult dedup;
    std::optional<DistanceBounds> bounds;
};

Prepared prepare(const Dataset& points, const HacConfig& cfg) {
    cfg.validate();
    Prepared p;
    p.dedup = dedup_points(points);
    if (p.dedup.points.size() < 2) {
        throw std::invalid_argument("run_hac: need at least 2 distinct points");
    }
    p.bounds = cfg.bounds;
    const bool needs_bounds = cfg.backend == NnsBackend::lsh_adaptive ||
                              cfg.mode == HacMode::bucket_approx || cfg.debug_checks;
    if (!p.bounds && needs_bounds) {
        p.bounds = compute_bounds(p.dedup.points);
    }
    return p;
}

std::vector<Centroid> initial_centroids(const DedupResult& dedup) {
    std::vector<Centroid> cs(dedup.points.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto row = dedup.points[i];
        cs[i].coords.assign(row.begin(), row.end());
        cs[i].weight = dedup.weights[i];
        cs[i].id = i;
    }
    return cs;
}

// Activates the merge result; queues its neighbor entry unless it is the
// final centroid.
void finish_merge(Engine& eng, MergeQueue& queue, Centroid z) {
    eng.active.insert(z);
    if (eng.active.size() == 1) {
        return;
    }
    eng.store_insert(z);
    QueryResult r = eng.query(z);
    queue.push({r.distance, z.id, r.neighbor.id});
    eng.note_push(z.id, r.distance);
}

}  // namespace

HacResult run_hac(const Dataset& points, const HacConfig& config, const EngineHooks* hooks) {
    if (config.mode == HacMode::bucket_approx) {
        return run_hac_bucket(points, config, hooks);
    }
    const auto t0 = std::chrono::steady_clock::now();
    Prepared prep = prepare(points, config);
    const std::size_t n = prep.dedup.points.size();

    Engine eng(hooks, n);
    eng.nns = hooks && hooks->backend_factory
                  ? hooks->backend_factory(prep.dedup.points, n)
                  : make_backend(config, prep.dedup.points, prep.bounds);
    if (config.debug_checks && prep.bounds) {
        eng.audit = std::make_unique<QueueAudit>();
        eng.audit->delta = prep.bounds->delta;
    }

    MergeQueue queue;
    const std::vector<Centroid> init = initial_centroids(prep.dedup);
    for (const Centroid& c : init) {
        eng.active.insert(c);
        eng.store_insert(c);
    }
    for (const Centroid& c : init) {
        QueryResult r = eng.query(c);
        queue.push({r.distance, c.id, r.neighbor.id});
        eng.note_push(c.id, r.distance);
    }
    eng.stats.init_seconds = seconds_since(t0);

    while (!queue.empty()) {
        const QueueEntry e = queue.top();
        queue.pop();
        eng.note_retire(e.x);
        const Centroid* x = eng.active.find(e.x);
        const Centroid* y = eng.active.find(e.y);
        if (!y) {
            ++eng.stats.stale_dequeues;
        }
        if (!x) {
            continue;  // source already merged away
        }
        if (y) {
            const Centroid z = eng.merge_pair(*x, *y, e.l);
            finish_merge(eng, queue, z);
        } else {
            // target went stale: refresh the source's neighbor
            QueryResult r = eng.query(*x);
            if (r.distance <= (1.0 + config.epsilon) * e.l) {
                const Centroid z = eng.merge_pair(*x, r.neighbor, r.distance);
                finish_merge(eng, queue, z);
            } else {
                queue.push({r.distance, e.x, r.neighbor.id});
                eng.note_push(e.x, r.distance);
                ++eng.stats.requeues;
                const std::uint64_t count = ++eng.requeues_of[e.x];
                eng.stats.max_requeues_per_centroid =
                    std::max(eng.stats.max_requeues_per_centroid, count);
            }
        }
    }
    eng.stats.loop_seconds = seconds_since(t0) - eng.stats.init_seconds;
    eng.stats.total_seconds = seconds_since(t0);

    HacResult result;
    result.dendrogram = std::move(eng.dend);
    result.stats = eng.stats;
    result.leaf_of_input = std::move(prep.dedup.leaf_of_input);
    result.bounds_used = prep.bounds;
    validate_dendrogram(result.dendrogram, prep.dedup.weights);
    return result;
}

Dendrogram exact_hac(const Dataset& points) {
    HacConfig cfg;
    cfg.mode = HacMode::exact;
    cfg.epsilon = 0.0;
    cfg.backend = NnsBackend::exact;
    return run_hac(points, cfg).dendrogram;
}

HacResult run_hac_bucket(const Dataset& points, const HacConfig& config,
                         const EngineHooks* hooks) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.mode != HacMode::bucket_approx) {
        throw std::invalid_argument("run_hac_bucket: config.mode must be bucket_approx");
    }
    Prepared prep = prepare(points, config);
    const std::size_t n = prep.dedup.points.size();

    Engine eng(hooks, n);
    eng.nns = hooks && hooks->backend_factory
                  ? hooks->backend_factory(prep.dedup.points, n)
                  : make_backend(config, prep.dedup.points, prep.bounds);

    for (const Centroid& c : initial_centroids(prep.dedup)) {
        eng.active.insert(c);
        eng.store_insert(c);
    }
    eng.stats.init_seconds = seconds_since(t0);

    double threshold = prep.bounds->delta;
    while (eng.active.size() > 1) {
        std::vector<std::uint64_t> ids;
        ids.reserve(eng.active.size());
        eng.active.for_each([&](const Centroid& c) { ids.push_back(c.id); });
        std::sort(ids.begin(), ids.end());
        for (const std::uint64_t id : ids) {
            if (eng.active.size() <= 1) break;
            const Centroid* x = eng.active.find(id);
            if (!x) continue;  // merged earlier this round
            QueryResult r = eng.query(*x);
            if (r.distance > threshold) continue;
            Centroid z = eng.merge_pair(*x, r.neighbor, r.distance);
            // merge distances are not monotone, so keep re-checking the fresh
            // centroid against the threshold until its neighbor falls outside
            for (;;) {
                eng.active.insert(z);
                if (eng.active.size() == 1) break;
                eng.store_insert(z);
                QueryResult rz = eng.query(z);
                if (rz.distance > threshold) break;
                z = eng.merge_pair(z, rz.neighbor, rz.distance);
            }
        }
        threshold *= 1.0 + config.epsilon;
    }
    eng.stats.loop_seconds = seconds_since(t0) - eng.stats.init_seconds;
    eng.stats.total_seconds = seconds_since(t0);

    HacResult result;
    result.dendrogram = std::move(eng.dend);
    result.stats = eng.stats;
    result.leaf_of_input = std::move(prep.dedup.leaf_of_input);
    result.bounds_used = prep.bounds;
    validate_dendrogram(result.dendrogram, prep.dedup.weights);
    return result;
}

}  // namespace chac
