#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "saopt/types.hpp"

namespace saopt {

using Point = std::vector<double>;
using Points = std::vector<Point>;

class ClusterError : public std::runtime_error {
 public:
  enum class Kind { EmptyInput, KExceedsPoints, LengthMismatch, InvalidArgument };
  ClusterError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct ClusteringOutcome {
  std::vector<SituationId> labels;
  std::map<SituationId, SituationId> id_mapping;  // fresh id -> stabilized id
};

double euclidean(const Point& a, const Point& b);

// Per-dimension z-scores; constant dimensions are only centered.
Points standardize(const Points& points);

struct KMeansResult {
  std::vector<SituationId> labels;
  Points centers;
  double inertia = 0.0;
};

// Lloyd iteration from k-means++ seeds; best of `restarts` seedings by inertia.
KMeansResult kmeans(const Points& points, int k, std::uint64_t seed, int restarts = 3);

struct GapResult {
  int k = 1;
  std::vector<double> gap;  // indexed by k - k_min
  std::vector<double> s;
};

// Gap statistic with `references` uniform datasets over the bounding box and
// the one-standard-error rule.
GapResult gap_statistic(const Points& points, int k_min, int k_max, std::uint64_t seed, int references = 10);

ClusteringOutcome kmeans_cluster(const Points& points, int k, std::uint64_t seed);
ClusteringOutcome kmeans_cluster_auto(const Points& points, int k_min, int k_max, std::uint64_t seed, int references = 10);

// Border points join the cluster of their nearest core neighbour (lower index
// on ties), which makes the result independent of visiting order. Clusters are
// numbered by their lowest member index.
ClusteringOutcome dbscan_cluster(const Points& points, double eps, int min_samples);

struct OpticsGraph {
  std::vector<std::size_t> ordering;
  std::vector<double> core_distances;
  std::vector<double> reachability;
  std::vector<long> predecessor;
};

OpticsGraph optics_graph(const Points& points, int min_samples);
std::vector<SituationId> optics_xi_labels(const OpticsGraph& graph, int min_samples, int min_cluster_size, double xi);
ClusteringOutcome optics_cluster(const Points& points, int min_samples, int min_cluster_size, double xi = 0.05);

// Renames fresh cluster ids to maximise overlap with the previous labelling
// (greedy on the confusion matrix, ties to the lower old id). Unmatched fresh
// clusters receive ids above max(previous, max_used). Noise stays -1.
ClusteringOutcome stabilize_labels(const std::vector<SituationId>& previous, const std::vector<SituationId>& fresh,
                                   SituationId max_used = kNoise);

}  // namespace saopt
