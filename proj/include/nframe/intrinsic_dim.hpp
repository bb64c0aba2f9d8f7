#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nframe/linalg.hpp"

namespace nframe::idim {

enum class Estimator { TwoNN, Mle };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct IdEstimate {
    Estimator estimator = Estimator::TwoNN;
    double value = 0.0;
    std::size_t points = 0;              // after duplicate removal
    std::size_t duplicates_removed = 0;
    int k_neighbors = 0;                 // mle only
    double discard_fraction = 0.0;       // twonn only
    std::vector<std::string> warnings;
};

// Points are the rows of `points`.
IdEstimate twonn_id(const linalg::Matrix& points, double discard_fraction = 0.1, int jobs = 1);
IdEstimate mle_id(const linalg::Matrix& points, int k_neighbors = 20, int jobs = 1);

// Exact Euclidean neighbour distances, ascending, excluding the point itself.
// Row i of the result holds the k nearest distances of point i.
linalg::Matrix knn_distances(const linalg::Matrix& points, int k, int jobs = 1);

// Drops exact duplicate rows, keeping first occurrences in their original order.
linalg::Matrix unique_rows(const linalg::Matrix& points, std::size_t* removed = nullptr);

// Synthetic point clouds.
// Uniform on [0,1]^2 mapped into R^ambient by a random orthonormal 2-frame.
linalg::Matrix sample_plane(std::size_t count, int ambient, std::uint64_t seed);
// Uniform on [0,1] along a random unit direction in R^ambient.
linalg::Matrix sample_line(std::size_t count, int ambient, std::uint64_t seed);
// Uniform in [0,1]^dim.
linalg::Matrix sample_hypercube(std::size_t count, int dim, std::uint64_t seed);

}  // namespace nframe::idim
