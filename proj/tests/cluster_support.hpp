#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "saopt/cluster.hpp"

namespace saopt::testing {

inline const nlohmann::json& fixture() {
  static const nlohmann::json j = [] {
    std::ifstream in(std::string(SAOPT_TEST_DATA) + "/cluster_oracle.json");
    return nlohmann::json::parse(in);
  }();
  return j;
}

inline Points points_of(const nlohmann::json& c) { return c.at("points").get<Points>(); }

// Same partition up to renaming, identical noise set.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

// Reference DBSCAN: union-find over the core graph, border points to the
// nearest core neighbour.
inline std::vector<int> reference_dbscan(const Points& pts, double eps, int min_samples) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < pts[i].size(); ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
    return std::sqrt(s);
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    int c = 0;
    for (std::size_t j = 0; j < n; ++j) c += dist(i, j) <= eps;
    core[i] = c >= min_samples;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (core[i] && core[j] && dist(i, j) <= eps) parent[find(i)] = find(j);
  std::vector<int> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (core[i]) labels[i] = static_cast<int>(find(i));
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = 1e300;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && dist(i, j) <= eps && dist(i, j) < best) {
        best = dist(i, j);
        labels[i] = labels[j];
      }
    }
  }
  return labels;
}

inline Points blobs(std::mt19937_64& rng, const Points& centers, int per_blob, double spread) {
  std::normal_distribution<double> g(0.0, spread);
  Points out;
  for (const auto& c : centers)
    for (int i = 0; i < per_blob; ++i) out.push_back({c[0] + g(rng), c[1] + g(rng)});
  return out;
}

}  // namespace saopt::testing
