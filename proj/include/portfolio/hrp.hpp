#pragma once

#include "portfolio/market_data.hpp"
#include "portfolio/portfolio.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace portfolio {

/// Symmetric, non-negative, zero-diagonal stock-to-stock distances.
struct DistanceMatrix {
    std::vector<std::string> tickers;
    Eigen::MatrixXd values;
};

/// One agglomerative merge. Node ids 0..N-1 are leaves; merge k creates
/// node N+k. `left` is the child with the smaller id, except when both are
/// leaves: then it is the leaf with the smaller total distance to all
/// stocks (smaller id on an exact tie), so the tree shape does not depend
/// on how the stocks are labelled.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t count = 0;

    friend bool operator==(const Merge&, const Merge&) = default;
};

struct LinkageTree {
    std::size_t leaves = 0;
    std::vector<Merge> merges;  // N-1 records, in merge order
};

/// Leaf order induced by the tree (a permutation of 0..N-1).
using SeriationOrder = std::vector<std::size_t>;

/// d_ij = sqrt(0.5 * (1 - rho_ij)), in [0, 1].
DistanceMatrix correlation_distance(const CorrelationMatrix& corr);

/// Ward agglomerative clustering with the Lance-Williams update
///
///   d(k, a+b)^2 = ((n_a+n_k) d(k,a)^2 + (n_b+n_k) d(k,b)^2 - n_k d(a,b)^2) / (n_a+n_b+n_k)
///
/// Each step merges the closest pair of active clusters; exact ties go to
/// the lexicographically smallest (smaller id, larger id) pair. See Merge
/// for how the two children are oriented.
LinkageTree ward_linkage(const DistanceMatrix& dist);

/// Throws NumericError if the merge list is not a well-formed binary tree
/// over `tree.leaves` leaves.
void validate_tree(const LinkageTree& tree);

/// Depth-first leaf expansion from the root, left child first.
SeriationOrder quasi_diagonalize(const LinkageTree& tree);

/// w_i proportional to 1/var_i over the member indices.
Eigen::VectorXd inverse_variance_weights(const CovarianceMatrix& cov, std::span<const std::size_t> members);

/// w' S_sub w with w the inverse-variance weights of the members.
double cluster_variance(const CovarianceMatrix& cov, std::span<const std::size_t> members);

/// Top-down bisection of the seriation order (ceil(k/2) items go left).
/// Each split gives the left half alpha = 1 - V_L / (V_L + V_R) of the
/// parent weight and the right half 1 - alpha.
Portfolio recursive_bisection(const CovarianceMatrix& cov, const SeriationOrder& order);

struct HrpResult {
    DistanceMatrix distances;
    LinkageTree tree;
    SeriationOrder order;
    Portfolio portfolio;
};

/// Correlation distance, ward tree, seriation, then recursive bisection.
HrpResult hrp_portfolio(const CovarianceMatrix& cov);

/// CSV `left,right,height,count`, one merge per row.
void write_linkage_csv(const LinkageTree& tree, std::ostream& out);

/// Indented text rendering of the tree with ticker names at the leaves.
void write_dendrogram(const LinkageTree& tree, const std::vector<std::string>& tickers, std::ostream& out);

}  // namespace portfolio
