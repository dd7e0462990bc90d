#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "epicast/tensor.hpp"

namespace epicast::cluster {

enum class Method { kmeans, kmedoids };

std::string method_name(Method m);

struct ClusterAssignment {
  std::vector<int> labels;            // [N], values in 0..k-1, every cluster non-empty
  Tensor centers;                     // kmeans: [k x m] centroids
  std::vector<std::size_t> medoids;   // kmedoids: point indices, one per cluster
  double cost = 0.0;                  // kmeans: squared-distance inertia; PAM: plain-distance cost
  int k = 0;
  Method method = Method::kmeans;
};

// Lloyd iterations with k-means++ seeding, best of n_init restarts by inertia.
// Ties in point-to-center distance break toward the lowest center index;
// empty clusters are reseeded to the farthest point.
ClusterAssignment kmeans(const Tensor& points, int k, std::uint64_t seed,
                         int n_init = 10, int max_iter = 300, double tol = 1e-6);

// PAM: greedy BUILD then best-improvement SWAP until no single
// (medoid, non-medoid) exchange lowers the total Euclidean-distance cost.
// Deterministic; the seed parameter is accepted for interface symmetry.
ClusterAssignment kmedoids(const Tensor& points, int k, std::uint64_t seed,
                           int max_iter = 100);

// Mean over points of (b - a) / max(a, b); singleton clusters contribute 0.
double silhouette(const Tensor& points, const std::vector<int>& labels);

// One reduced matrix entering the selection grid.
struct ReductionInput {
  std::string tag;
  Tensor matrix;  // [N x m], rows aligned with the region order
};

struct GridCell {
  std::size_t reduction = 0;  // index into the reduction list
  Method method = Method::kmeans;
  int k = 0;
  double silhouette = -1.0;
};

struct SelectionGrid {
  std::vector<std::string> reduction_tags;
  int k_min = 3, k_max = 10;
  std::vector<GridCell> cells;  // reduction-major, then method, then k
  std::size_t best_index = 0;
};

struct ClusterOutcome {
  std::string reduction;
  Method method = Method::kmeans;
  int k = 0;
  double silhouette = -1.0;
  std::vector<int> labels;
  SelectionGrid grid;
};

// RNG stream for one grid cell, derived from (seed, reduction, method, k) so
// results do not depend on evaluation order.
std::uint64_t cell_seed(std::uint64_t seed, std::string_view reduction_tag,
                        Method method, int k);

// Evaluates every (reduction, method, k) cell and returns the
// highest-silhouette clustering. Ties break toward smaller k, then k-means
// over k-medoids, then earlier reduction.
ClusterOutcome select_best(const std::vector<ReductionInput>& reductions,
                           int k_min, int k_max, std::uint64_t seed,
                           int kmeans_n_init = 10);

}  // namespace epicast::cluster
