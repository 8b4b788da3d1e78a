#ifndef COVNET_SEARCH_HPP
#define COVNET_SEARCH_HPP

#include "covnet/metrics.hpp"
#include "covnet/model.hpp"

#include <array>
#include <climits>
#include <cstdint>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace covnet {

enum class InitKind { empty, random };

struct SearchConfig {
    int max_parents = 4;
    /// Additional runs from random starting graphs. Run 0 starts from
    /// `init`; run r >= 1 starts from a random graph with sub-seed seed + r.
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iterations = 100000;
    InitKind init = InitKind::empty;
    /// Worker threads for restarts; 0 means default_thread_count().
    unsigned threads = 0;

    void validate(Eigen::Index effective_samples) const;
};

/// COVNET_THREADS when set to a positive integer, else hardware concurrency.
unsigned default_thread_count();

/// Thread-safe map from (node, sorted parent set) to family log marginal
/// likelihood with get-or-compute semantics. Values come from
/// FamilyScorer::score, so a cached entry equals a fresh evaluation bit for bit.
class ScoreCache {
public:
    explicit ScoreCache(const FamilyScorer& scorer) : scorer_(&scorer) {}
    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    double family(NodeId node, std::span<const NodeId> parents);
    std::size_t size() const;
    const FamilyScorer& scorer() const { return *scorer_; }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<NodeId>& key) const noexcept;
    };
    struct Shard {
        mutable std::mutex mutex;
        std::unordered_map<std::vector<NodeId>, double, KeyHash> entries;
    };
    static constexpr std::size_t kShards = 64;

    const FamilyScorer* scorer_;
    std::array<Shard, kShards> shards_;
};

enum class OpKind { add = 0, remove = 1, reverse = 2 };

struct EdgeOp {
    OpKind kind = OpKind::add;
    NodeId from = 0;
    NodeId to = 0;

    friend auto operator<=>(const EdgeOp&, const EdgeOp&) = default;
};

const char* to_string(OpKind kind);

/// Legal when the result is a DAG respecting `max_parents`.
bool is_legal(const Dag& dag, const EdgeOp& op, int max_parents = INT_MAX);

/// The graph after `op`; throws ConstraintError for illegal operations.
Dag apply_op(const Dag& dag, const EdgeOp& op, int max_parents = INT_MAX);

/// new_total - old_total, touching only the families whose parent sets
/// change (one for add/delete, two for reverse) plus the graph-prior delta.
double score_delta(ScoreCache& cache, const ScoredNetwork& current, const EdgeOp& op,
                   const GraphPrior& prior = GraphPrior::uniform(), int max_parents = INT_MAX);

struct ClimbResult {
    ScoredNetwork network;
    /// Total score after the start graph and after every accepted move.
    std::vector<double> accepted_totals;
    int iterations = 0;
};

/// One best-improvement climb from `start`. Ties between equal deltas go
/// to the smallest (kind, from, to) with add < delete < reverse.
ClimbResult climb_from(const Dag& start, ScoreCache& cache, const GraphPrior& prior,
                       const SearchConfig& cfg);

/// Random start graph: each ordered pair is drawn with probability
/// min(0.5, 2/p), back-edges relative to a random node order are dropped and
/// over-full parent sets are thinned at random to `max_parents`.
Dag random_initial_dag(int p, int max_parents, std::uint64_t seed);

ScoredNetwork hill_climb(const FamilyScorer& scorer, const GraphPrior& prior,
                         const SearchConfig& cfg);

ScoredNetwork hill_climb(const Dataset& data, const MetricSpec& metric, const Hyperparams& hp,
                         const GraphPrior& prior, const SearchConfig& cfg);

/// Every DAG on p <= 5 labelled nodes, each exactly once, as sorted edge lists.
std::vector<std::vector<Edge>> enumerate_dags(int p);

}  // namespace covnet

#endif  // COVNET_SEARCH_HPP
