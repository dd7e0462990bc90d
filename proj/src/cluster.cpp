#include "epicast/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "epicast/errors.hpp"
#include "epicast/rng.hpp"

namespace epicast::cluster {

namespace {

double sq_dist(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_points(const Tensor& points, int k, const char* who) {
  if (points.ndim() != 2)
    throw ValidationError(std::string(who) + ": points must be [N x m], got " +
                          points.shape_str());
  const std::size_t n = points.dim(0);
  if (n == 0 || points.dim(1) == 0)
    throw ValidationError(std::string(who) + ": empty point set");
  if (k < 2)
    throw ValidationError(std::string(who) + ": k must be >= 2, got " +
                          std::to_string(k));
  if (static_cast<std::size_t>(k) > n)
    throw ValidationError(std::string(who) + ": k (" + std::to_string(k) +
                          ") exceeds point count (" + std::to_string(n) + ")");
}

// Assign each point to its nearest center, lowest index on ties.
double assign_labels(const Tensor& points, const Tensor& centers,
                     std::vector<int>& labels) {
  const std::size_t n = points.dim(0), m = points.dim(1), k = centers.dim(0);
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(points.row(i), centers.row(c), m);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    labels[i] = best_c;
    inertia += best;
  }
  return inertia;
}

Tensor kmeanspp_init(const Tensor& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.dim(0), m = points.dim(1);
  Tensor centers({k, m});
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy(points.row(first), points.row(first) + m, centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = sq_dist(points.row(i), centers.row(c - 1), m);
      min_d[i] = std::min(min_d[i], d);
      total += min_d[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));  // all points coincide
    }
    std::copy(points.row(pick), points.row(pick) + m, centers.row(c));
  }
  return centers;
}

ClusterAssignment lloyd_once(const Tensor& points, int k, Rng& rng, int max_iter,
                             double tol) {
  const std::size_t n = points.dim(0), m = points.dim(1);
  const auto ku = static_cast<std::size_t>(k);
  Tensor centers = kmeanspp_init(points, ku, rng);
  std::vector<int> labels(n, -1);
  std::vector<int> prev_labels;
  double prev_inertia = std::numeric_limits<double>::infinity();
  double inertia = 0.0;

  for (int iter = 0; iter < max_iter; ++iter) {
    inertia = assign_labels(points, centers, labels);

    // Reseed empty clusters to the farthest point from its current center;
    // a reassignment can empty another cluster, so repeat until stable.
    std::vector<std::size_t> sizes(ku, 0);
    for (int guard = 0; guard <= 2 * k + 2; ++guard) {
      sizes.assign(ku, 0);
      for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
      const auto empty_it = std::find(sizes.begin(), sizes.end(), std::size_t{0});
      if (empty_it == sizes.end()) break;
      if (guard == 2 * k + 2)
        throw std::logic_error("kmeans: unable to repair empty clusters");
      const auto c = static_cast<std::size_t>(empty_it - sizes.begin());
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(labels[i])] <= 1) continue;
        const double d =
            sq_dist(points.row(i), centers.row(static_cast<std::size_t>(labels[i])), m);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy(points.row(far), points.row(far) + m, centers.row(c));
      inertia = assign_labels(points, centers, labels);
      if (labels[far] != static_cast<int>(c)) {
        // Duplicate-point tie: the point sits at distance 0 from both its old
        // center and the new one, so pinning it to c costs nothing.
        labels[far] = static_cast<int>(c);
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          inertia +=
              sq_dist(points.row(i), centers.row(static_cast<std::size_t>(labels[i])), m);
      }
    }

    if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
      throw std::logic_error("kmeans: inertia increased across Lloyd iterations");
    prev_inertia = inertia;

    if (labels == prev_labels) break;
    prev_labels = labels;

    // Update step: centroids of the (now non-empty) clusters.
    Tensor next({ku, m});
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = points.row(i);
      double* cr = next.row(static_cast<std::size_t>(labels[i]));
      for (std::size_t j = 0; j < m; ++j) cr[j] += p[j];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < ku; ++c) {
      double* cr = next.row(c);
      for (std::size_t j = 0; j < m; ++j) cr[j] /= static_cast<double>(sizes[c]);
      movement += sq_dist(cr, centers.row(c), m);
    }
    centers = std::move(next);
    if (movement < tol) {
      // Keep the current labels (a reassignment could undo an empty-cluster
      // repair on tied distances); refresh the inertia against the moved centers.
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        inertia +=
            sq_dist(points.row(i), centers.row(static_cast<std::size_t>(labels[i])), m);
      break;
    }
  }

  ClusterAssignment out;
  out.labels = std::move(labels);
  out.centers = std::move(centers);
  out.cost = inertia;
  out.k = k;
  out.method = Method::kmeans;
  return out;
}

}  // namespace

std::string method_name(Method m) {
  return m == Method::kmeans ? "kmeans" : "kmedoids";
}

ClusterAssignment kmeans(const Tensor& points, int k, std::uint64_t seed,
                         int n_init, int max_iter, double tol) {
  check_points(points, k, "kmeans");
  if (n_init < 1) throw ValidationError("kmeans: n_init must be >= 1");
  ClusterAssignment best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int run = 0; run < n_init; ++run) {
    Rng rng(mix_seed(seed, {static_cast<std::uint64_t>(run)}));
    ClusterAssignment cand = lloyd_once(points, k, rng, max_iter, tol);
    if (cand.cost < best.cost) best = std::move(cand);
  }
  return best;
}

ClusterAssignment kmedoids(const Tensor& points, int k, std::uint64_t /*seed*/,
                           int max_iter) {
  check_points(points, k, "kmedoids");
  const std::size_t n = points.dim(0), m = points.dim(1);
  const auto ku = static_cast<std::size_t>(k);

  Tensor dist({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(sq_dist(points.row(i), points.row(j), m));
      dist.at(i, j) = d;
      dist.at(j, i) = d;
    }

  auto total_cost = [&](const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t mi : medoids) best = std::min(best, dist.at(i, mi));
      cost += best;
    }
    return cost;
  };

  // BUILD: start from the 1-medoid optimum, then greedily add the point with
  // the largest cost reduction.
  std::vector<std::size_t> medoids;
  std::vector<bool> is_medoid(n, false);
  {
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += dist.at(i, j);
      if (c < best_cost) {
        best_cost = c;
        best = j;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
  }
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = dist.at(i, medoids[0]);
  while (medoids.size() < ku) {
    std::size_t best = 0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (is_medoid[j]) continue;
      double gain = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        gain += std::max(0.0, nearest[i] - dist.at(i, j));
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], dist.at(i, best));
  }

  // SWAP: best-improvement until a local optimum.
  double cost = total_cost(medoids);
  for (int iter = 0; iter < max_iter; ++iter) {
    double best_cost = cost;
    std::size_t best_m = 0, best_h = 0;
    bool found = false;
    for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
      for (std::size_t h = 0; h < n; ++h) {
        if (is_medoid[h]) continue;
        std::vector<std::size_t> trial = medoids;
        trial[mi] = h;
        const double c = total_cost(trial);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          best_m = mi;
          best_h = h;
          found = true;
        }
      }
    }
    if (!found) break;
    is_medoid[medoids[best_m]] = false;
    is_medoid[best_h] = true;
    medoids[best_m] = best_h;
    cost = best_cost;
  }

  ClusterAssignment out;
  out.medoids = medoids;
  out.labels.resize(n);
  out.centers = Tensor({ku, m});
  for (std::size_t c = 0; c < ku; ++c)
    std::copy(points.row(medoids[c]), points.row(medoids[c]) + m, out.centers.row(c));
  double final_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < ku; ++c) {
      if (dist.at(i, medoids[c]) < best) {
        best = dist.at(i, medoids[c]);
        best_c = static_cast<int>(c);
      }
    }
    out.labels[i] = best_c;
    final_cost += best;
  }
  out.cost = final_cost;
  out.k = k;
  out.method = Method::kmedoids;
  return out;
}

double silhouette(const Tensor& points, const std::vector<int>& labels) {
  if (points.ndim() != 2)
    throw ValidationError("silhouette: points must be [N x m], got " +
                          points.shape_str());
  const std::size_t n = points.dim(0), m = points.dim(1);
  if (labels.size() != n)
    throw ValidationError("silhouette: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(n) + " points");
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw ValidationError("silhouette: negative label");
    k = std::max(k, l + 1);
  }
  if (k < 2) throw ValidationError("silhouette: needs at least 2 clusters");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];

  double total = 0.0;
  std::vector<double> mean_to(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(mean_to.begin(), mean_to.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      mean_to[static_cast<std::size_t>(labels[j])] +=
          std::sqrt(sq_dist(points.row(i), points.row(j), m));
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] <= 1) continue;  // singleton contributes s(i) = 0
    const double a = mean_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, mean_to[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

std::uint64_t cell_seed(std::uint64_t seed, std::string_view reduction_tag,
                        Method method, int k) {
  return mix_seed(seed, {fnv1a64(reduction_tag),
                         static_cast<std::uint64_t>(method == Method::kmeans ? 0 : 1),
                         static_cast<std::uint64_t>(k)});
}

ClusterOutcome select_best(const std::vector<ReductionInput>& reductions, int k_min,
                           int k_max, std::uint64_t seed, int kmeans_n_init) {
  if (reductions.empty()) throw ValidationError("select_best: no reductions given");
  const std::size_t n = reductions.front().matrix.dim(0);
  for (const auto& r : reductions) {
    if (r.matrix.ndim() != 2 || r.matrix.dim(0) != n)
      throw ValidationError("select_best: reduction '" + r.tag +
                            "' has mismatched row count");
  }
  if (k_min < 2 || k_max < k_min)
    throw ValidationError("select_best: need 2 <= k_min <= k_max");
  if (static_cast<std::size_t>(k_max) >= n)
    throw ValidationError("select_best: k_max (" + std::to_string(k_max) +
                          ") must be < number of points (" + std::to_string(n) + ")");

  ClusterOutcome outcome;
  outcome.grid.k_min = k_min;
  outcome.grid.k_max = k_max;
  for (const auto& r : reductions) outcome.grid.reduction_tags.push_back(r.tag);

  bool have_best = false;
  GridCell best_cell;
  std::vector<int> best_labels;
  for (std::size_t ri = 0; ri < reductions.size(); ++ri) {
    for (const Method method : {Method::kmeans, Method::kmedoids}) {
      for (int k = k_min; k <= k_max; ++k) {
        const std::uint64_t cseed = cell_seed(seed, reductions[ri].tag, method, k);
        const ClusterAssignment assignment =
            method == Method::kmeans
                ? kmeans(reductions[ri].matrix, k, cseed, kmeans_n_init)
                : kmedoids(reductions[ri].matrix, k, cseed);
        GridCell cell;
        cell.reduction = ri;
        cell.method = method;
        cell.k = k;
        cell.silhouette = silhouette(reductions[ri].matrix, assignment.labels);
        outcome.grid.cells.push_back(cell);

        // Strictly-better silhouette wins; exact ties fall to smaller k, then
        // kmeans, then the earlier reduction -- all implied by scan order
        // except k vs method precedence, which needs the explicit comparison.
        const bool better =
            !have_best || cell.silhouette > best_cell.silhouette ||
            (cell.silhouette == best_cell.silhouette &&
             (cell.k < best_cell.k ||
              (cell.k == best_cell.k &&
               (static_cast<int>(cell.method) < static_cast<int>(best_cell.method) ||
                (cell.method == best_cell.method && cell.reduction < best_cell.reduction)))));
        if (better) {
          have_best = true;
          best_cell = cell;
          best_labels = assignment.labels;
          outcome.grid.best_index = outcome.grid.cells.size() - 1;
        }
      }
    }
  }

  outcome.reduction = reductions[best_cell.reduction].tag;
  outcome.method = best_cell.method;
  outcome.k = best_cell.k;
  outcome.silhouette = best_cell.silhouette;
  outcome.labels = std::move(best_labels);
  return outcome;
}

}  // namespace epicast::cluster
