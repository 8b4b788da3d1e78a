#include "covnet/search.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

namespace covnet {

namespace {

// Moves must improve the total by more than this; smaller gains are
// round-off between score-equivalent graphs.
constexpr double kMinImprovement = 1e-10;

std::vector<NodeId> with_parent(std::vector<NodeId> ps, NodeId u) {
    ps.insert(std::lower_bound(ps.begin(), ps.end(), u), u);
    return ps;
}

std::vector<NodeId> without_parent(std::vector<NodeId> ps, NodeId u) {
    ps.erase(std::lower_bound(ps.begin(), ps.end(), u));
    return ps;
}

// Mutable graph used inside a climb.
class WorkingGraph {
public:
    explicit WorkingGraph(const Dag& dag)
        : p_(dag.p()),
          parents_(dag.parent_sets()),
          adj_(static_cast<std::size_t>(p_ * p_), 0),
          reach_(static_cast<std::size_t>(p_ * p_), 0),
          children_(static_cast<std::size_t>(p_)) {
        for (const Edge& e : dag.edges()) adj_[index(e.from, e.to)] = 1;
        edge_count_ = dag.edge_count();
    }

    int p() const { return p_; }
    std::size_t edge_count() const { return edge_count_; }
    const std::vector<NodeId>& parents(NodeId v) const {
        return parents_[static_cast<std::size_t>(v)];
    }
    bool edge(NodeId u, NodeId v) const { return adj_[index(u, v)] != 0; }
    // Directed path of length >= 1 from u to v.
    bool reaches(NodeId u, NodeId v) const { return reach_[index(u, v)] != 0; }

    void add(NodeId u, NodeId v) {
        adj_[index(u, v)] = 1;
        parents_[static_cast<std::size_t>(v)] = with_parent(parents(v), u);
        ++edge_count_;
    }
    void remove(NodeId u, NodeId v) {
        adj_[index(u, v)] = 0;
        parents_[static_cast<std::size_t>(v)] = without_parent(parents(v), u);
        --edge_count_;
    }

    void refresh_reachability() {
        for (auto& cs : children_) cs.clear();
        for (NodeId v = 0; v < p_; ++v) {
            for (NodeId u : parents(v)) children_[static_cast<std::size_t>(u)].push_back(v);
        }
        std::fill(reach_.begin(), reach_.end(), 0);
        std::vector<NodeId> stack;
        for (NodeId s = 0; s < p_; ++s) {
            stack.assign(children_[static_cast<std::size_t>(s)].begin(),
                         children_[static_cast<std::size_t>(s)].end());
            while (!stack.empty()) {
                const NodeId u = stack.back();
                stack.pop_back();
                if (reach_[index(s, u)]) continue;
                reach_[index(s, u)] = 1;
                for (NodeId c : children_[static_cast<std::size_t>(u)]) {
                    if (!reach_[index(s, c)]) stack.push_back(c);
                }
            }
        }
    }

    // True when u reaches v through some path other than the edge u -> v.
    // Valid after refresh_reachability().
    bool indirect_path(NodeId u, NodeId v) const {
        for (NodeId c : children_[static_cast<std::size_t>(u)]) {
            if (c != v && reaches(c, v)) return true;
        }
        return false;
    }

    Dag to_dag() const {
        std::vector<Edge> edges;
        edges.reserve(edge_count_);
        for (NodeId v = 0; v < p_; ++v) {
            for (NodeId u : parents(v)) edges.push_back({u, v});
        }
        return Dag(p_, edges);
    }

private:
    std::size_t index(NodeId u, NodeId v) const {
        return static_cast<std::size_t>(u) * static_cast<std::size_t>(p_) +
               static_cast<std::size_t>(v);
    }

    int p_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<char> adj_;
    std::vector<char> reach_;
    std::vector<std::vector<NodeId>> children_;
    std::size_t edge_count_ = 0;
};

ScoredNetwork assemble(const Dag& dag, ScoreCache& cache, const GraphPrior& prior) {
    ScoredNetwork out{dag, {}, prior.log_prior(dag.edge_count()), 0.0};
    double total = out.log_prior;
    for (NodeId v = 0; v < dag.p(); ++v) {
        const auto& ps = dag.parents(v);
        const double s = cache.family(v, ps);
        out.family_scores.push_back({v, ps, s});
        total += s;
    }
    out.total_log_score = total;
    return out;
}

}  // namespace

void SearchConfig::validate(Eigen::Index effective_samples) const {
    if (max_parents < 1) throw ConstraintError("max_parents must be positive");
    if (max_parents >= effective_samples) {
        throw ConstraintError("max_parents=" + std::to_string(max_parents) +
                              " must be smaller than the effective sample count " +
                              std::to_string(effective_samples));
    }
    if (restarts < 0) throw ConstraintError("restarts must be nonnegative");
    if (max_iterations < 1) throw ConstraintError("max_iterations must be positive");
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("COVNET_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t ScoreCache::KeyHash::operator()(const std::vector<NodeId>& key) const noexcept {
    // FNV-1a over the ids.
    std::uint64_t h = 1469598103934665603ull;
    for (NodeId v : key) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

double ScoreCache::family(NodeId node, std::span<const NodeId> parents) {
    std::vector<NodeId> key;
    key.reserve(parents.size() + 1);
    key.push_back(node);
    key.insert(key.end(), parents.begin(), parents.end());
    const std::size_t h = KeyHash{}(key);
    Shard& shard = shards_[(h >> 7) % kShards];
    std::lock_guard lock(shard.mutex);
    if (auto it = shard.entries.find(key); it != shard.entries.end()) return it->second;
    const double value = scorer_->score(node, parents);
    shard.entries.emplace(std::move(key), value);
    return value;
}

std::size_t ScoreCache::size() const {
    std::size_t total = 0;
    for (const Shard& shard : shards_) {
        std::lock_guard lock(shard.mutex);
        total += shard.entries.size();
    }
    return total;
}

const char* to_string(OpKind kind) {
    switch (kind) {
        case OpKind::add: return "add";
        case OpKind::remove: return "delete";
        case OpKind::reverse: return "reverse";
    }
    return "unknown";
}

bool is_legal(const Dag& dag, const EdgeOp& op, int max_parents) {
    const int p = dag.p();
    if (op.from < 0 || op.to < 0 || op.from >= p || op.to >= p || op.from == op.to) return false;
    const bool forward = dag.has_edge(op.from, op.to);
    const bool backward = dag.has_edge(op.to, op.from);
    std::vector<Edge> edges = dag.edges();
    switch (op.kind) {
        case OpKind::add:
            if (forward || backward) return false;
            if (static_cast<int>(dag.parents(op.to).size()) >= max_parents) return false;
            edges.push_back({op.from, op.to});
            return is_acyclic(edges, p);
        case OpKind::remove:
            return forward;
        case OpKind::reverse:
            if (!forward) return false;
            if (static_cast<int>(dag.parents(op.from).size()) >= max_parents) return false;
            std::erase(edges, Edge{op.from, op.to});
            edges.push_back({op.to, op.from});
            return is_acyclic(edges, p);
    }
    return false;
}

Dag apply_op(const Dag& dag, const EdgeOp& op, int max_parents) {
    if (!is_legal(dag, op, max_parents)) {
        throw ConstraintError(std::string("illegal ") + to_string(op.kind) + " of edge " +
                              std::to_string(op.from) + "->" + std::to_string(op.to));
    }
    std::vector<Edge> edges = dag.edges();
    switch (op.kind) {
        case OpKind::add: edges.push_back({op.from, op.to}); break;
        case OpKind::remove: std::erase(edges, Edge{op.from, op.to}); break;
        case OpKind::reverse:
            std::erase(edges, Edge{op.from, op.to});
            edges.push_back({op.to, op.from});
            break;
    }
    return Dag(dag.p(), edges);
}

double score_delta(ScoreCache& cache, const ScoredNetwork& current, const EdgeOp& op,
                   const GraphPrior& prior, int max_parents) {
    const Dag& dag = current.dag;
    if (!is_legal(dag, op, max_parents)) {
        throw ConstraintError(std::string("illegal ") + to_string(op.kind) + " of edge " +
                              std::to_string(op.from) + "->" + std::to_string(op.to));
    }
    const auto old_score = [&](NodeId v) {
        return current.family_scores[static_cast<std::size_t>(v)].log_ml;
    };
    const auto& pa_to = dag.parents(op.to);
    switch (op.kind) {
        case OpKind::add:
            return cache.family(op.to, with_parent(pa_to, op.from)) - old_score(op.to) +
                   prior.log_prior_delta(1);
        case OpKind::remove:
            return cache.family(op.to, without_parent(pa_to, op.from)) - old_score(op.to) +
                   prior.log_prior_delta(-1);
        case OpKind::reverse: {
            const auto& pa_from = dag.parents(op.from);
            return (cache.family(op.to, without_parent(pa_to, op.from)) - old_score(op.to)) +
                   (cache.family(op.from, with_parent(pa_from, op.to)) - old_score(op.from));
        }
    }
    return 0.0;
}

ClimbResult climb_from(const Dag& start, ScoreCache& cache, const GraphPrior& prior,
                       const SearchConfig& cfg) {
    const int p = start.p();
    if (p != cache.scorer().p()) throw ConstraintError("start graph does not match the data");
    for (NodeId v = 0; v < p; ++v) {
        if (static_cast<int>(start.parents(v).size()) > cfg.max_parents) {
            throw ConstraintError("start graph violates max_parents");
        }
    }

    WorkingGraph g(start);
    const auto up = static_cast<std::size_t>(p);
    std::vector<double> family(up);
    // toggle[u * p + v]: change in family v's score when u joins or leaves
    // its parent set. NaN marks moves blocked by the parent bound.
    std::vector<double> toggle(up * up, std::numeric_limits<double>::quiet_NaN());

    const auto refresh_family = [&](NodeId v) {
        const auto& ps = g.parents(v);
        family[static_cast<std::size_t>(v)] = cache.family(v, ps);
        const bool full = static_cast<int>(ps.size()) >= cfg.max_parents;
        for (NodeId u = 0; u < p; ++u) {
            double& slot = toggle[static_cast<std::size_t>(u) * up + static_cast<std::size_t>(v)];
            if (u == v) continue;
            if (g.edge(u, v)) {
                slot = cache.family(v, without_parent(ps, u)) - family[static_cast<std::size_t>(v)];
            } else if (!full) {
                slot = cache.family(v, with_parent(ps, u)) - family[static_cast<std::size_t>(v)];
            } else {
                slot = std::numeric_limits<double>::quiet_NaN();
            }
        }
    };
    const auto total = [&] {
        double t = prior.log_prior(g.edge_count());
        for (double f : family) t += f;
        return t;
    };
    const auto delta_at = [&](NodeId u, NodeId v) {
        return toggle[static_cast<std::size_t>(u) * up + static_cast<std::size_t>(v)];
    };

    for (NodeId v = 0; v < p; ++v) refresh_family(v);

    ClimbResult result;
    result.accepted_totals.push_back(total());
    const double add_prior = prior.log_prior_delta(1);
    const double remove_prior = prior.log_prior_delta(-1);

    while (result.iterations < cfg.max_iterations) {
        g.refresh_reachability();
        bool found = false;
        EdgeOp best{};
        double best_delta = kMinImprovement;
        const auto consider = [&](double d, OpKind kind, NodeId u, NodeId v) {
            if (d > best_delta) {
                best_delta = d;
                best = {kind, u, v};
                found = true;
            }
        };

        for (NodeId u = 0; u < p; ++u) {
            for (NodeId v = 0; v < p; ++v) {
                if (u == v || g.edge(u, v) || g.edge(v, u) || g.reaches(v, u)) continue;
                const double d = delta_at(u, v);
                if (!std::isnan(d)) consider(d + add_prior, OpKind::add, u, v);
            }
        }
        for (NodeId u = 0; u < p; ++u) {
            for (NodeId v = 0; v < p; ++v) {
                if (g.edge(u, v)) consider(delta_at(u, v) + remove_prior, OpKind::remove, u, v);
            }
        }
        for (NodeId u = 0; u < p; ++u) {
            for (NodeId v = 0; v < p; ++v) {
                if (!g.edge(u, v)) continue;
                const double gain_u = delta_at(v, u);
                if (std::isnan(gain_u) || g.indirect_path(u, v)) continue;
                consider(delta_at(u, v) + gain_u, OpKind::reverse, u, v);
            }
        }
        if (!found) break;

        switch (best.kind) {
            case OpKind::add:
                g.add(best.from, best.to);
                refresh_family(best.to);
                break;
            case OpKind::remove:
                g.remove(best.from, best.to);
                refresh_family(best.to);
                break;
            case OpKind::reverse:
                g.remove(best.from, best.to);
                g.add(best.to, best.from);
                refresh_family(best.to);
                refresh_family(best.from);
                break;
        }
        ++result.iterations;
        result.accepted_totals.push_back(total());
    }

    result.network = assemble(g.to_dag(), cache, prior);
    return result;
}

Dag random_initial_dag(int p, int max_parents, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<NodeId> order(static_cast<std::size_t>(p));
    for (NodeId i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates with Boost's portable integer distribution.
    for (int i = p - 1; i > 0; --i) {
        boost::random::uniform_int_distribution<int> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> position(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) position[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

    const double prob = p > 0 ? std::min(0.5, 2.0 / p) : 0.0;
    boost::random::bernoulli_distribution<double> draw(prob);
    std::vector<std::vector<NodeId>> parents(static_cast<std::size_t>(p));
    for (NodeId u = 0; u < p; ++u) {
        for (NodeId v = 0; v < p; ++v) {
            if (u == v) continue;
            const bool drawn = draw(rng);
            if (drawn && position[static_cast<std::size_t>(u)] < position[static_cast<std::size_t>(v)]) {
                parents[static_cast<std::size_t>(v)].push_back(u);
            }
        }
    }
    std::vector<Edge> edges;
    for (NodeId v = 0; v < p; ++v) {
        auto& ps = parents[static_cast<std::size_t>(v)];
        if (static_cast<int>(ps.size()) > max_parents) {
            for (int i = static_cast<int>(ps.size()) - 1; i > 0; --i) {
                boost::random::uniform_int_distribution<int> pick(0, i);
                std::swap(ps[static_cast<std::size_t>(i)], ps[static_cast<std::size_t>(pick(rng))]);
            }
            ps.resize(static_cast<std::size_t>(max_parents));
        }
        for (NodeId u : ps) edges.push_back({u, v});
    }
    return Dag(p, edges);
}

ScoredNetwork hill_climb(const FamilyScorer& scorer, const GraphPrior& prior,
                         const SearchConfig& cfg) {
    prior.validate();
    cfg.validate(scorer.effective_samples());
    const int p = scorer.p();
    const int runs = cfg.restarts + 1;

    ScoreCache cache(scorer);
    std::vector<ClimbResult> results(static_cast<std::size_t>(runs));
    const auto run_one = [&](int r) {
        const bool random_start = r > 0 || cfg.init == InitKind::random;
        const Dag start = random_start
                              ? random_initial_dag(p, cfg.max_parents, cfg.seed + static_cast<std::uint64_t>(r))
                              : Dag(p);
        results[static_cast<std::size_t>(r)] = climb_from(start, cache, prior, cfg);
    };

    const unsigned workers =
        std::min<unsigned>(cfg.threads ? cfg.threads : default_thread_count(),
                           static_cast<unsigned>(runs));
    if (workers <= 1) {
        for (int r = 0; r < runs; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int r = next++; r < runs; r = next++) {
                    try {
                        run_one(r);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
        if (failure) std::rethrow_exception(failure);
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r) {
        if (results[r].network.total_log_score > results[best].network.total_log_score) best = r;
    }
    return std::move(results[best].network);
}

ScoredNetwork hill_climb(const Dataset& data, const MetricSpec& metric, const Hyperparams& hp,
                         const GraphPrior& prior, const SearchConfig& cfg) {
    const FamilyScorer scorer(data, metric, hp);
    return hill_climb(scorer, prior, cfg);
}

std::vector<std::vector<Edge>> enumerate_dags(int p) {
    if (p < 0 || p > 5) throw ConstraintError("enumerate_dags supports 0 <= p <= 5");
    std::vector<Edge> pairs;
    for (NodeId u = 0; u < p; ++u) {
        for (NodeId v = 0; v < p; ++v) {
            if (u != v) pairs.push_back({u, v});
        }
    }
    const std::uint32_t combos = 1u << pairs.size();
    std::vector<std::vector<Edge>> out;
    std::vector<std::uint32_t> parent_mask(static_cast<std::size_t>(p));
    for (std::uint32_t mask = 0; mask < combos; ++mask) {
        std::fill(parent_mask.begin(), parent_mask.end(), 0u);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (mask & (1u << i)) {
                parent_mask[static_cast<std::size_t>(pairs[i].to)] |= 1u << pairs[i].from;
            }
        }
        // Peel nodes whose parents are all placed; acyclic iff all get placed.
        std::uint32_t placed = 0;
        bool progress = true;
        while (progress) {
            progress = false;
            for (int v = 0; v < p; ++v) {
                if (!(placed & (1u << v)) && (parent_mask[static_cast<std::size_t>(v)] & ~placed) == 0) {
                    placed |= 1u << v;
                    progress = true;
                }
            }
        }
        if (placed != (1u << p) - 1u) continue;
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (mask & (1u << i)) edges.push_back(pairs[i]);
        }
        out.push_back(std::move(edges));
    }
    return out;
}

}  // namespace covnet
