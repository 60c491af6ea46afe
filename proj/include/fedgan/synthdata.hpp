#pragma once

// Synthetic ground truth for everything statistical: well-separated 2-D
// Gaussian clusters whose pairing across marginals is a known permutation.
// Because the clusters are separable by construction, nearest-centroid
// classification is an exact oracle, and "did the model learn the joint"
// reduces to counting rows whose components land in matched clusters.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fedgan/paired.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

using Point2 = std::array<double, 2>;

namespace detail {

inline void validate_separation(const std::vector<Point2>& centers, double sigma,
                                const char* which) {
  for (size_t i = 0; i < centers.size(); ++i) {
    for (size_t j = i + 1; j < centers.size(); ++j) {
      const double dx = centers[i][0] - centers[j][0];
      const double dy = centers[i][1] - centers[j][1];
      if (std::sqrt(dx * dx + dy * dy) < 6.0 * sigma) {
        throw ValueError(std::string(which) + " centers closer than 6 sigma");
      }
    }
  }
}

inline void validate_permutation(const std::vector<int>& perm, int k, const char* which) {
  if (static_cast<int>(perm.size()) != k) {
    throw ValueError(std::string(which) + " permutation has wrong length");
  }
  std::vector<bool> seen(static_cast<size_t>(k), false);
  for (int v : perm) {
    if (v < 0 || v >= k || seen[static_cast<size_t>(v)]) {
      throw ValueError(std::string(which) + " is not a bijection");
    }
    seen[static_cast<size_t>(v)] = true;
  }
}

inline std::vector<double> normalize_weights(std::vector<double> w, int k) {
  if (w.empty()) return std::vector<double>(static_cast<size_t>(k), 1.0 / k);
  if (static_cast<int>(w.size()) != k) throw ValueError("weights length mismatch");
  double sum = 0;
  for (double v : w) {
    if (v < 0) throw ValueError("negative mixture weight");
    sum += v;
  }
  if (sum <= 0) throw ValueError("weights sum to zero");
  for (auto& v : w) v /= sum;
  return w;
}

inline int draw_cluster(const std::vector<double>& weights, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace detail

// Two 2-D mixtures plus the permutation that says which A-cluster goes with
// which B-cluster. sigma is shared; centers must be >= 6 sigma apart so the
// nearest-centroid oracle is exact.
struct JointSpec {
  int cluster_count = 0;
  std::vector<Point2> centers_a;
  std::vector<Point2> centers_b;
  std::vector<int> pairing;       // cluster c of A pairs with pairing[c] of B
  double sigma = 0.3;
  std::vector<double> weights;    // empty = uniform

  void validate() const {
    if (cluster_count < 2) throw ValueError("joint spec: need at least two clusters");
    if (static_cast<int>(centers_a.size()) != cluster_count ||
        static_cast<int>(centers_b.size()) != cluster_count) {
      throw ValueError("joint spec: centers length mismatch");
    }
    if (sigma <= 0) throw ValueError("joint spec: sigma must be positive");
    detail::validate_permutation(pairing, cluster_count, "joint pairing");
    detail::validate_separation(centers_a, sigma, "marginal A");
    detail::validate_separation(centers_b, sigma, "marginal B");
    detail::normalize_weights(weights, cluster_count);
  }
};

// Three locations chained by two causal maps: an event in cluster c at
// location 1 implies pi12[c] at location 2 and pi23[pi12[c]] at location 3.
struct ChainSpec {
  int cluster_count = 0;
  std::vector<Point2> centers1;
  std::vector<Point2> centers2;
  std::vector<Point2> centers3;
  std::vector<int> pi12;
  std::vector<int> pi23;
  double sigma = 0.3;
  std::vector<double> weights;

  void validate() const {
    if (cluster_count < 2) throw ValueError("chain spec: need at least two clusters");
    if (static_cast<int>(centers1.size()) != cluster_count ||
        static_cast<int>(centers2.size()) != cluster_count ||
        static_cast<int>(centers3.size()) != cluster_count) {
      throw ValueError("chain spec: centers length mismatch");
    }
    if (sigma <= 0) throw ValueError("chain spec: sigma must be positive");
    detail::validate_permutation(pi12, cluster_count, "pi12");
    detail::validate_permutation(pi23, cluster_count, "pi23");
    detail::validate_separation(centers1, sigma, "location 1");
    detail::validate_separation(centers2, sigma, "location 2");
    detail::validate_separation(centers3, sigma, "location 3");
    detail::normalize_weights(weights, cluster_count);
  }

  // The end-to-end causal map: location-1 cluster -> location-3 cluster.
  int causal_map(int c) const { return pi23[static_cast<size_t>(pi12[static_cast<size_t>(c)])]; }
};

// Per row: draw cluster c, then a ~ N(centers_a[c], sigma^2 I), then
// b ~ N(centers_b[pairing[c]], sigma^2 I). Draw order (c, a0, a1, b0, b1)
// is part of the determinism contract.
inline PairedDataset sample_joint(const JointSpec& spec, int n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw ShapeError("sample_joint: n must be positive");
  const auto weights = detail::normalize_weights(spec.weights, spec.cluster_count);
  Tensor rows({n, 4});
  for (int r = 0; r < n; ++r) {
    const int c = detail::draw_cluster(weights, rng);
    const auto& ca = spec.centers_a[static_cast<size_t>(c)];
    const auto& cb = spec.centers_b[static_cast<size_t>(spec.pairing[static_cast<size_t>(c)])];
    rows.at(r, 0) = static_cast<float>(rng.normal(ca[0], spec.sigma));
    rows.at(r, 1) = static_cast<float>(rng.normal(ca[1], spec.sigma));
    rows.at(r, 2) = static_cast<float>(rng.normal(cb[0], spec.sigma));
    rows.at(r, 3) = static_cast<float>(rng.normal(cb[1], spec.sigma));
  }
  return PairedDataset(std::move(rows), {2, 2});
}

enum class Side { a, b };

// One marginal of the joint, drawn the same way a full row would be.
inline Tensor sample_marginal(const JointSpec& spec, Side side, int n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw ShapeError("sample_marginal: n must be positive");
  const auto weights = detail::normalize_weights(spec.weights, spec.cluster_count);
  Tensor rows({n, 2});
  for (int r = 0; r < n; ++r) {
    const int c = detail::draw_cluster(weights, rng);
    const auto& center = side == Side::a
                             ? spec.centers_a[static_cast<size_t>(c)]
                             : spec.centers_b[static_cast<size_t>(spec.pairing[static_cast<size_t>(c)])];
    rows.at(r, 0) = static_cast<float>(rng.normal(center[0], spec.sigma));
    rows.at(r, 1) = static_cast<float>(rng.normal(center[1], spec.sigma));
  }
  return rows;
}

inline PairedDataset sample_chain(const ChainSpec& spec, int n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw ShapeError("sample_chain: n must be positive");
  const auto weights = detail::normalize_weights(spec.weights, spec.cluster_count);
  Tensor rows({n, 6});
  for (int r = 0; r < n; ++r) {
    const int c1 = detail::draw_cluster(weights, rng);
    const int c2 = spec.pi12[static_cast<size_t>(c1)];
    const int c3 = spec.pi23[static_cast<size_t>(c2)];
    const Point2* centers[3] = {&spec.centers1[static_cast<size_t>(c1)],
                                &spec.centers2[static_cast<size_t>(c2)],
                                &spec.centers3[static_cast<size_t>(c3)]};
    for (int k = 0; k < 3; ++k) {
      rows.at(r, 2 * k) = static_cast<float>(rng.normal((*centers[k])[0], spec.sigma));
      rows.at(r, 2 * k + 1) = static_cast<float>(rng.normal((*centers[k])[1], spec.sigma));
    }
  }
  return PairedDataset(std::move(rows), {2, 2, 2});
}

inline Tensor sample_chain_marginal(const ChainSpec& spec, int location, int n, RngStream& rng) {
  spec.validate();
  if (location < 1 || location > 3) throw ShapeError("chain marginal: location must be 1..3");
  if (n < 1) throw ShapeError("chain marginal: n must be positive");
  const auto weights = detail::normalize_weights(spec.weights, spec.cluster_count);
  Tensor rows({n, 2});
  for (int r = 0; r < n; ++r) {
    int c = detail::draw_cluster(weights, rng);
    if (location >= 2) c = spec.pi12[static_cast<size_t>(c)];
    if (location == 3) c = spec.pi23[static_cast<size_t>(c)];
    const auto& ctrs = location == 1 ? spec.centers1 : location == 2 ? spec.centers2 : spec.centers3;
    rows.at(r, 0) = static_cast<float>(rng.normal(ctrs[static_cast<size_t>(c)][0], spec.sigma));
    rows.at(r, 1) = static_cast<float>(rng.normal(ctrs[static_cast<size_t>(c)][1], spec.sigma));
  }
  return rows;
}

// Nearest centroid, ties broken by the lowest index.
inline int classify(double x, double y, const std::vector<Point2>& centers) {
  if (centers.empty()) throw ShapeError("classify: no centers");
  int best = 0;
  double best_d = -1;
  for (size_t i = 0; i < centers.size(); ++i) {
    const double dx = x - centers[i][0];
    const double dy = y - centers[i][1];
    const double d = dx * dx + dy * dy;
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// Fraction of rows whose B component lands in the cluster paired with the
// A component's cluster.
inline double pairing_accuracy(const JointSpec& spec, const PairedDataset& pairs) {
  spec.validate();
  if (pairs.component_count() < 2 || pairs.component_dims[0] != 2 || pairs.component_dims[1] != 2) {
    throw ShapeError("pairing_accuracy: need two leading 2-D components");
  }
  if (pairs.size() < 1) throw ShapeError("pairing_accuracy: empty dataset");
  const int off_b = pairs.component_offset(1);
  int hits = 0;
  for (int r = 0; r < pairs.size(); ++r) {
    const int ca = classify(pairs.samples.at(r, 0), pairs.samples.at(r, 1), spec.centers_a);
    const int cb = classify(pairs.samples.at(r, off_b), pairs.samples.at(r, off_b + 1), spec.centers_b);
    if (cb == spec.pairing[static_cast<size_t>(ca)]) ++hits;
  }
  return static_cast<double>(hits) / pairs.size();
}

// Fraction of rows where both causal links hold.
inline double triple_accuracy(const ChainSpec& spec, const PairedDataset& triples) {
  spec.validate();
  if (triples.component_count() != 3) throw ShapeError("triple_accuracy: need three components");
  for (int d : triples.component_dims)
    if (d != 2) throw ShapeError("triple_accuracy: components must be 2-D");
  if (triples.size() < 1) throw ShapeError("triple_accuracy: empty dataset");
  int hits = 0;
  for (int r = 0; r < triples.size(); ++r) {
    const int c1 = classify(triples.samples.at(r, 0), triples.samples.at(r, 1), spec.centers1);
    const int c2 = classify(triples.samples.at(r, 2), triples.samples.at(r, 3), spec.centers2);
    const int c3 = classify(triples.samples.at(r, 4), triples.samples.at(r, 5), spec.centers3);
    if (c2 == spec.pi12[static_cast<size_t>(c1)] && c3 == spec.pi23[static_cast<size_t>(c2)]) ++hits;
  }
  return static_cast<double>(hits) / triples.size();
}

// Per location-1 cluster, does the modal location-3 cluster match the
// ground-truth causal map? Returns the fraction of clusters that do;
// clusters that attracted no samples count as misses.
inline double conditional_consistency(const ChainSpec& spec, const PairedDataset& triples) {
  spec.validate();
  if (triples.component_count() != 3) throw ShapeError("conditional_consistency: need triples");
  const int k = spec.cluster_count;
  std::vector<std::vector<int>> counts(static_cast<size_t>(k),
                                       std::vector<int>(static_cast<size_t>(k), 0));
  for (int r = 0; r < triples.size(); ++r) {
    const int c1 = classify(triples.samples.at(r, 0), triples.samples.at(r, 1), spec.centers1);
    const int c3 = classify(triples.samples.at(r, 4), triples.samples.at(r, 5), spec.centers3);
    counts[static_cast<size_t>(c1)][static_cast<size_t>(c3)]++;
  }
  int correct = 0;
  for (int c = 0; c < k; ++c) {
    int modal = 0, best = counts[static_cast<size_t>(c)][0];
    int total = best;
    for (int j = 1; j < k; ++j) {
      total += counts[static_cast<size_t>(c)][static_cast<size_t>(j)];
      if (counts[static_cast<size_t>(c)][static_cast<size_t>(j)] > best) {
        best = counts[static_cast<size_t>(c)][static_cast<size_t>(j)];
        modal = j;
      }
    }
    if (total > 0 && modal == spec.causal_map(c)) ++correct;
  }
  return static_cast<double>(correct) / k;
}

// Biased (V-statistic) squared MMD with an RBF kernel
// k(x,y) = exp(-|x-y|^2 / (2 h^2)), accumulated in 64-bit. The biased form
// makes mmd2(X, X) algebraically zero, which the tests rely on.
inline double mmd2(const Tensor& x, const Tensor& y, double bandwidth) {
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.cols()) {
    throw ShapeError("mmd2: feature dims must match");
  }
  if (bandwidth <= 0) throw ValueError("mmd2: bandwidth must be positive");
  const int m = x.rows(), n = y.rows(), d = x.cols();
  const double inv = -1.0 / (2.0 * bandwidth * bandwidth);
  auto kernel_sum = [&](const Tensor& p, const Tensor& q) {
    double s = 0;
    for (int i = 0; i < p.rows(); ++i) {
      for (int j = 0; j < q.rows(); ++j) {
        double dist = 0;
        for (int c = 0; c < d; ++c) {
          const double diff = static_cast<double>(p.at(i, c)) - static_cast<double>(q.at(j, c));
          dist += diff * diff;
        }
        s += std::exp(inv * dist);
      }
    }
    return s;
  };
  const double t_xx = kernel_sum(x, x) / (static_cast<double>(m) * m);
  const double t_yy = kernel_sum(y, y) / (static_cast<double>(n) * n);
  const double t_xy = kernel_sum(x, y) / (static_cast<double>(m) * n);
  return (t_xx + t_yy) - 2.0 * t_xy;
}

// Energy distance, V-statistic form; zero iff the sample multisets agree.
inline double energy_distance(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.cols()) {
    throw ShapeError("energy_distance: feature dims must match");
  }
  const int d = x.cols();
  auto dist_sum = [&](const Tensor& p, const Tensor& q) {
    double s = 0;
    for (int i = 0; i < p.rows(); ++i) {
      for (int j = 0; j < q.rows(); ++j) {
        double acc = 0;
        for (int c = 0; c < d; ++c) {
          const double diff = static_cast<double>(p.at(i, c)) - static_cast<double>(q.at(j, c));
          acc += diff * diff;
        }
        s += std::sqrt(acc);
      }
    }
    return s;
  };
  const double m = x.rows(), n = y.rows();
  return 2.0 * dist_sum(x, y) / (m * n) - dist_sum(x, x) / (m * m) - dist_sum(y, y) / (n * n);
}

// Canonical fixtures: K=4 clusters on radius-5 rings. Marginal A sits at
// 0/90/180/270 degrees, marginal B is the same ring rotated 45 degrees, and
// the pairing advances one step around the ring. The chain adds a third
// ring at 90 degrees with another +1 rotation.
inline std::vector<Point2> ring_centers(int k, double radius, double phase_deg) {
  std::vector<Point2> centers;
  centers.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double theta = (phase_deg + 360.0 * i / k) * std::numbers::pi / 180.0;
    centers.push_back({radius * std::cos(theta), radius * std::sin(theta)});
  }
  return centers;
}

inline JointSpec default_joint() {
  JointSpec spec;
  spec.cluster_count = 4;
  spec.centers_a = ring_centers(4, 5.0, 0.0);
  spec.centers_b = ring_centers(4, 5.0, 45.0);
  spec.pairing = {1, 2, 3, 0};
  spec.sigma = 0.3;
  spec.validate();
  return spec;
}

inline ChainSpec default_chain() {
  ChainSpec spec;
  spec.cluster_count = 4;
  spec.centers1 = ring_centers(4, 5.0, 0.0);
  spec.centers2 = ring_centers(4, 5.0, 45.0);
  spec.centers3 = ring_centers(4, 5.0, 90.0);
  spec.pi12 = {1, 2, 3, 0};
  spec.pi23 = {1, 2, 3, 0};
  spec.sigma = 0.3;
  spec.validate();
  return spec;
}

// The joint view of the chain's first two locations, for stage-1 training.
inline JointSpec chain_pair_spec(const ChainSpec& chain) {
  JointSpec spec;
  spec.cluster_count = chain.cluster_count;
  spec.centers_a = chain.centers1;
  spec.centers_b = chain.centers2;
  spec.pairing = chain.pi12;
  spec.sigma = chain.sigma;
  spec.weights = chain.weights;
  spec.validate();
  return spec;
}

}  // namespace fedgan
