#include "saopt/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

namespace saopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_points(const Points& points) {
  if (points.empty()) throw ClusterError(ClusterError::Kind::EmptyInput, "no points to cluster");
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ClusterError(ClusterError::Kind::InvalidArgument, "points differ in dimension");
  }
}

double squared(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Same rounding as numpy.around(x, 15): rint(x * 1e15) / 1e15.
double round15(double x) {
  if (!std::isfinite(x)) return x;
  return std::nearbyint(x * 1e15) / 1e15;
}

}  // namespace

double euclidean(const Point& a, const Point& b) { return std::sqrt(squared(a, b)); }

Points standardize(const Points& points) {
  if (points.empty()) return {};
  const std::size_t dim = points.front().size();
  const double n = static_cast<double>(points.size());
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (const auto& p : points) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
  }
  for (auto& m : mean) m /= n;
  for (const auto& p : points) {
    for (std::size_t d = 0; d < dim; ++d) sd[d] += (p[d] - mean[d]) * (p[d] - mean[d]);
  }
  for (auto& s : sd) {
    s = std::sqrt(s / n);
    if (s <= 1e-12) s = 1.0;
  }
  Points out = points;
  for (auto& p : out) {
    for (std::size_t d = 0; d < dim; ++d) p[d] = (p[d] - mean[d]) / sd[d];
  }
  return out;
}

// ---------------------------------------------------------------- k-means

namespace {

KMeansResult lloyd(const Points& points, Points centers) {
  const std::size_t n = points.size(), k = centers.size(), dim = points.front().size();
  std::vector<SituationId> labels(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      SituationId best = 0;
      double best_d = kInf;
      for (std::size_t c = 0; c < k; ++c) {
        double d = squared(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<SituationId>(c);
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Points sums(k, Point(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) sums[labels[i]][d] += points[i][d];
      ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an emptied cluster keeps its centre
      for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  KMeansResult r;
  r.labels = std::move(labels);
  r.centers = std::move(centers);
  for (std::size_t i = 0; i < n; ++i) r.inertia += squared(points[i], r.centers[r.labels[i]]);
  return r;
}

Points plus_plus_seeds(const Points& points, int k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  Points centers;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(points[pick(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > u) {
          chosen = i;
          break;
        }
      }
    }
    centers.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared(points[i], centers.back()));
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Points& points, int k, std::uint64_t seed, int restarts) {
  require_points(points);
  if (k < 1) throw ClusterError(ClusterError::Kind::InvalidArgument, "k must be >= 1");
  if (static_cast<std::size_t>(k) > points.size()) throw ClusterError(ClusterError::Kind::KExceedsPoints, "k exceeds the number of points");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = kInf;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto result = lloyd(points, plus_plus_seeds(points, k, rng));
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

GapResult gap_statistic(const Points& points, int k_min, int k_max, std::uint64_t seed, int references) {
  require_points(points);
  if (k_min < 1 || k_min > k_max) throw ClusterError(ClusterError::Kind::InvalidArgument, "need 1 <= k_min <= k_max");
  if (static_cast<std::size_t>(k_min) > points.size()) throw ClusterError(ClusterError::Kind::KExceedsPoints, "k_min exceeds the number of points");
  k_max = std::min<int>(k_max, static_cast<int>(points.size()));
  const std::size_t dim = points.front().size();
  Point lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<Points> refs(references, Points(points.size(), Point(dim)));
  for (auto& ref : refs) {
    for (auto& p : ref) {
      for (std::size_t d = 0; d < dim; ++d) p[d] = std::uniform_real_distribution<double>(lo[d], std::nextafter(hi[d], kInf))(rng);
    }
  }
  auto log_w = [](double inertia) { return std::log(std::max(inertia, 1e-300)); };
  GapResult g;
  const double b = static_cast<double>(references);
  for (int k = k_min; k <= k_max; ++k) {
    double lw = log_w(kmeans(points, k, seed + static_cast<std::uint64_t>(k)).inertia);
    std::vector<double> ref_lw;
    for (int r = 0; r < references; ++r) {
      ref_lw.push_back(log_w(kmeans(refs[r], k, seed + 1000u * static_cast<std::uint64_t>(r + 1) + static_cast<std::uint64_t>(k), 1).inertia));
    }
    double mean = std::accumulate(ref_lw.begin(), ref_lw.end(), 0.0) / b;
    double var = 0.0;
    for (double v : ref_lw) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / b);
    g.gap.push_back(mean - lw);
    g.s.push_back(sd * std::sqrt(1.0 + 1.0 / b));
  }
  g.k = k_max;
  for (int k = k_min; k < k_max; ++k) {
    std::size_t i = static_cast<std::size_t>(k - k_min);
    if (g.gap[i] >= g.gap[i + 1] - g.s[i + 1]) {
      g.k = k;
      break;
    }
  }
  return g;
}

ClusteringOutcome kmeans_cluster(const Points& points, int k, std::uint64_t seed) {
  ClusteringOutcome out;
  out.labels = kmeans(points, k, seed).labels;
  return out;
}

ClusteringOutcome kmeans_cluster_auto(const Points& points, int k_min, int k_max, std::uint64_t seed, int references) {
  auto g = gap_statistic(points, k_min, k_max, seed, references);
  return kmeans_cluster(points, g.k, seed + static_cast<std::uint64_t>(g.k));
}

// ---------------------------------------------------------------- DBSCAN

ClusteringOutcome dbscan_cluster(const Points& points, double eps, int min_samples) {
  require_points(points);
  if (!(eps > 0) || min_samples < 1) throw ClusterError(ClusterError::Kind::InvalidArgument, "need eps > 0 and min_samples >= 1");
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (euclidean(points[i], points[j]) <= eps) nbrs[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbrs[i].size() >= static_cast<std::size_t>(min_samples);

  ClusteringOutcome out;
  out.labels.assign(n, kNoise);
  SituationId next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || out.labels[i] != kNoise) continue;
    std::vector<std::size_t> stack{i};
    out.labels[i] = next;
    while (!stack.empty()) {
      auto p = stack.back();
      stack.pop_back();
      for (auto q : nbrs[p]) {
        if (core[q] && out.labels[q] == kNoise) {
          out.labels[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = kInf;
    for (auto q : nbrs[i]) {
      if (!core[q]) continue;
      double d = euclidean(points[i], points[q]);
      if (d < best) {
        best = d;
        out.labels[i] = out.labels[q];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- OPTICS

OpticsGraph optics_graph(const Points& points, int min_samples) {
  require_points(points);
  const std::size_t n = points.size();
  const auto k = static_cast<std::size_t>(min_samples);
  OpticsGraph g;
  g.core_distances.assign(n, kInf);
  g.reachability.assign(n, kInf);
  g.predecessor.assign(n, -1);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (k > n) break;
    for (std::size_t j = 0; j < n; ++j) row[j] = euclidean(points[i], points[j]);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    g.core_distances[i] = round15(row[k - 1]);
  }
  std::vector<bool> processed(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t point = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (processed[i]) continue;
      if (point == n || g.reachability[i] < g.reachability[point]) point = i;
    }
    processed[point] = true;
    g.ordering.push_back(point);
    if (g.core_distances[point] == kInf) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (processed[j]) continue;
      double r = round15(std::max(euclidean(points[point], points[j]), g.core_distances[point]));
      if (r < g.reachability[j]) {
        g.reachability[j] = r;
        g.predecessor[j] = static_cast<long>(point);
      }
    }
  }
  return g;
}

namespace {

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

std::size_t extend_region(const std::vector<bool>& steep, const std::vector<bool>& xward, std::size_t start, int min_samples) {
  const std::size_t n = steep.size();
  int non_xward = 0;
  std::size_t end = start;
  for (std::size_t index = start; index < n; ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      if (++non_xward > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

void update_filter_sdas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement, const std::vector<double>& r) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::erase_if(sdas, [&](const SteepDownArea& d) { return !(mib <= r[d.start] * xi_complement); });
  for (auto& d : sdas) d.mib = std::max(d.mib, mib);
}

bool correct_predecessor(const std::vector<double>& r, const std::vector<long>& pred, const std::vector<std::size_t>& ordering,
                         std::size_t s, std::size_t& e) {
  while (s < e) {
    if (r[s] > r[e]) return true;
    long p_e = pred[e];
    for (std::size_t i = s; i < e; ++i) {
      if (p_e == static_cast<long>(ordering[i])) return true;
    }
    --e;
  }
  return false;
}

}  // namespace

std::vector<SituationId> optics_xi_labels(const OpticsGraph& g, int min_samples, int min_cluster_size, double xi) {
  const std::size_t n = g.ordering.size();
  std::vector<double> r(n + 1);
  std::vector<long> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = g.reachability[g.ordering[i]];
    pred[i] = g.predecessor[g.ordering[i]];
  }
  r[n] = kInf;
  const double xc = 1.0 - xi;
  std::vector<bool> steep_up(n), steep_down(n), up(n), down(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ratio = r[i] / r[i + 1];  // NaN for inf/inf and 0/0 compares false everywhere
    steep_up[i] = ratio <= xc;
    steep_down[i] = ratio >= 1.0 / xc;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepDownArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index])) continue;
    if (steep_index < index) continue;
    mib = std::max(mib, *std::max_element(r.begin() + static_cast<std::ptrdiff_t>(index), r.begin() + static_cast<std::ptrdiff_t>(steep_index) + 1));
    if (steep_down[steep_index]) {
      update_filter_sdas(sdas, mib, xc, r);
      std::size_t d_end = extend_region(steep_down, up, steep_index, min_samples);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = r[index];
      continue;
    }
    update_filter_sdas(sdas, mib, xc, r);
    const std::size_t u_start = steep_index;
    const std::size_t u_end = extend_region(steep_up, down, u_start, min_samples);
    index = u_end + 1;
    mib = r[index];
    std::vector<std::pair<std::size_t, std::size_t>> u_clusters;
    for (const auto& d : sdas) {
      std::size_t c_start = d.start, c_end = u_end;
      if (r[c_end + 1] * xc < d.mib) continue;
      const double d_max = r[d.start];
      if (d_max * xc >= r[c_end + 1]) {
        while (r[c_start + 1] > r[c_end + 1] && c_start < d.end) ++c_start;
      } else if (r[c_end + 1] * xc >= d_max) {
        while (r[c_end - 1] > d_max && c_end > u_start) --c_end;
      }
      if (!correct_predecessor(r, pred, g.ordering, c_start, c_end)) continue;
      if (c_end - c_start + 1 < static_cast<std::size_t>(min_cluster_size)) continue;
      if (c_start > d.end) continue;
      if (c_end < u_start) continue;
      u_clusters.emplace_back(c_start, c_end);
    }
    clusters.insert(clusters.end(), u_clusters.rbegin(), u_clusters.rend());
  }

  std::vector<SituationId> ordered(n, kNoise);
  SituationId label = 0;
  for (const auto& [s, e] : clusters) {
    bool free = std::all_of(ordered.begin() + static_cast<std::ptrdiff_t>(s), ordered.begin() + static_cast<std::ptrdiff_t>(e) + 1,
                            [](SituationId l) { return l == kNoise; });
    if (!free) continue;
    std::fill(ordered.begin() + static_cast<std::ptrdiff_t>(s), ordered.begin() + static_cast<std::ptrdiff_t>(e) + 1, label);
    ++label;
  }
  std::vector<SituationId> labels(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) labels[g.ordering[i]] = ordered[i];
  return labels;
}

ClusteringOutcome optics_cluster(const Points& points, int min_samples, int min_cluster_size, double xi) {
  require_points(points);
  if (min_samples < 1 || min_cluster_size < 1) throw ClusterError(ClusterError::Kind::InvalidArgument, "need min_samples, min_cluster_size >= 1");
  if (!(xi > 0 && xi < 1)) throw ClusterError(ClusterError::Kind::InvalidArgument, "xi must lie in (0, 1)");
  ClusteringOutcome out;
  if (points.size() < static_cast<std::size_t>(min_samples)) {
    out.labels.assign(points.size(), kNoise);
    return out;
  }
  out.labels = optics_xi_labels(optics_graph(points, min_samples), min_samples, min_cluster_size, xi);
  return out;
}

// ---------------------------------------------------------------- stabilization

ClusteringOutcome stabilize_labels(const std::vector<SituationId>& previous, const std::vector<SituationId>& fresh, SituationId max_used) {
  if (previous.size() > fresh.size()) throw ClusterError(ClusterError::Kind::LengthMismatch, "previous labelling is longer than the fresh one");
  std::map<std::pair<SituationId, SituationId>, std::size_t> overlap;  // (old, fresh) -> count
  for (std::size_t i = 0; i < previous.size(); ++i) {
    if (previous[i] >= 0 && fresh[i] >= 0) ++overlap[{previous[i], fresh[i]}];
  }
  std::vector<std::tuple<std::size_t, SituationId, SituationId>> pairs;
  for (const auto& [key, count] : overlap) pairs.emplace_back(count, key.first, key.second);
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  ClusteringOutcome out;
  std::set<SituationId> used_old;
  for (const auto& [count, old_id, fresh_id] : pairs) {
    if (used_old.count(old_id) || out.id_mapping.count(fresh_id)) continue;
    out.id_mapping[fresh_id] = old_id;
    used_old.insert(old_id);
  }
  SituationId next = max_used;
  for (SituationId p : previous) next = std::max(next, p);
  std::set<SituationId> fresh_ids;
  for (SituationId f : fresh) {
    if (f >= 0) fresh_ids.insert(f);
  }
  for (SituationId f : fresh_ids) {
    if (!out.id_mapping.count(f)) out.id_mapping[f] = ++next;
  }
  out.labels.reserve(fresh.size());
  for (SituationId f : fresh) out.labels.push_back(f < 0 ? kNoise : out.id_mapping.at(f));
  return out;
}

}  // namespace saopt
