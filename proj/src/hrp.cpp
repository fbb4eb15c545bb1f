#include "portfolio/hrp.hpp"

#include "portfolio/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <utility>

namespace portfolio {

DistanceMatrix correlation_distance(const CorrelationMatrix& corr) {
    const auto n = corr.values.rows();
    if (corr.values.cols() != n) throw NumericError("correlation matrix is not square");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double rho = corr.values(i, j);
            if (!std::isfinite(rho)) throw NumericError("non-finite correlation");
            const double v = std::sqrt(std::max(0.0, 0.5 * (1.0 - std::clamp(rho, -1.0, 1.0))));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return {corr.tickers, std::move(d)};
}

LinkageTree ward_linkage(const DistanceMatrix& dist) {
    const auto n = static_cast<std::size_t>(dist.values.rows());
    if (n < 2) throw NumericError("ward_linkage needs at least 2 stocks");
    if (dist.values.cols() != dist.values.rows()) throw NumericError("distance matrix is not square");

    // Slot s holds an active cluster; `ids[s]` is its node id.
    Eigen::MatrixXd d = dist.values;
    std::vector<std::size_t> ids(n), sizes(n, 1);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;

    // Orientation key for a merge of two leaves: total distance to all stocks.
    const Eigen::VectorXd spread = dist.values.rowwise().sum();

    LinkageTree tree;
    tree.leaves = n;
    tree.merges.reserve(n - 1);

    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t best_a = 0, best_b = 0;
        std::pair<std::size_t, std::size_t> best_key{std::numeric_limits<std::size_t>::max(), 0};
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                const double v = d(a, b);
                const std::pair key{std::min(ids[a], ids[b]), std::max(ids[a], ids[b])};
                if (v < best || (v == best && key < best_key)) {
                    best = v;
                    best_key = key;
                    best_a = a;
                    best_b = b;
                }
            }
        }

        const double na = static_cast<double>(sizes[best_a]);
        const double nb = static_cast<double>(sizes[best_b]);
        const double dab2 = best * best;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == best_a || k == best_b) continue;
            const double nk = static_cast<double>(sizes[k]);
            const double num = (na + nk) * d(k, best_a) * d(k, best_a) +
                               (nb + nk) * d(k, best_b) * d(k, best_b) - nk * dab2;
            const double v = std::sqrt(std::max(0.0, num / (na + nb + nk)));
            d(k, best_a) = v;
            d(best_a, k) = v;
        }

        auto [left, right] = best_key;
        if (right < n) {
            const auto sl = spread(static_cast<Eigen::Index>(left)), sr = spread(static_cast<Eigen::Index>(right));
            if (sr < sl) std::swap(left, right);
        }
        tree.merges.push_back({left, right, best, sizes[best_a] + sizes[best_b]});
        // The merged cluster reuses slot best_a.
        ids[best_a] = n + step;
        sizes[best_a] += sizes[best_b];
        active[best_b] = false;
    }
    return tree;
}

void validate_tree(const LinkageTree& tree) {
    const std::size_t n = tree.leaves;
    if (n < 1) throw NumericError("malformed tree: no leaves");
    if (tree.merges.size() + 1 != n) throw NumericError("malformed tree: expected N-1 merges");
    std::vector<std::size_t> counts(2 * n - 1, 0);
    std::vector<bool> used(2 * n - 1, false);
    for (std::size_t i = 0; i < n; ++i) counts[i] = 1;
    for (std::size_t k = 0; k < tree.merges.size(); ++k) {
        const auto& m = tree.merges[k];
        const std::size_t node = n + k;
        if (m.left >= node || m.right >= node || m.left == m.right)
            throw NumericError("malformed tree: merge " + std::to_string(k) + " references an invalid node");
        if (used[m.left] || used[m.right])
            throw NumericError("malformed tree: node merged twice at merge " + std::to_string(k));
        used[m.left] = used[m.right] = true;
        counts[node] = counts[m.left] + counts[m.right];
        if (m.count != counts[node])
            throw NumericError("malformed tree: member count mismatch at merge " + std::to_string(k));
    }
}

SeriationOrder quasi_diagonalize(const LinkageTree& tree) {
    validate_tree(tree);
    const std::size_t n = tree.leaves;
    SeriationOrder order;
    order.reserve(n);
    std::vector<std::size_t> stack{2 * n - 2};
    while (!stack.empty()) {
        const std::size_t node = stack.back();
        stack.pop_back();
        if (node < n) {
            order.push_back(node);
            continue;
        }
        const auto& m = tree.merges[node - n];
        stack.push_back(m.right);
        stack.push_back(m.left);
    }
    return order;
}

Eigen::VectorXd inverse_variance_weights(const CovarianceMatrix& cov, std::span<const std::size_t> members) {
    if (members.empty()) throw NumericError("inverse_variance_weights: no members");
    Eigen::VectorXd w(static_cast<Eigen::Index>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(members[k]);
        const double var = cov.values(i, i);
        if (!(var > 0.0)) throw NumericError("zero-variance stock '" + cov.tickers[members[k]] + "'");
        w(static_cast<Eigen::Index>(k)) = 1.0 / var;
    }
    return w / w.sum();
}

double cluster_variance(const CovarianceMatrix& cov, std::span<const std::size_t> members) {
    const Eigen::VectorXd w = inverse_variance_weights(cov, members);
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            sub(a, b) = cov.values(static_cast<Eigen::Index>(members[a]), static_cast<Eigen::Index>(members[b]));
    return w.dot(sub * w);
}

Portfolio recursive_bisection(const CovarianceMatrix& cov, const SeriationOrder& order) {
    const auto n = static_cast<std::size_t>(cov.values.rows());
    if (n < 1) throw NumericError("recursive_bisection: empty covariance");
    if (order.size() != n) throw NumericError("recursive_bisection: order length mismatch");
    std::vector<bool> seen(n, false);
    for (auto i : order) {
        if (i >= n || seen[i]) throw NumericError("recursive_bisection: order is not a permutation");
        seen[i] = true;
    }

    Eigen::VectorXd weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    // Contiguous [begin, end) ranges of the seriation order still to split.
    std::vector<std::pair<std::size_t, std::size_t>> pending{{0, n}};
    const std::span<const std::size_t> all(order);
    while (!pending.empty()) {
        const auto [begin, end] = pending.back();
        pending.pop_back();
        const std::size_t k = end - begin;
        if (k < 2) continue;
        const std::size_t mid = begin + (k + 1) / 2;
        const auto left = all.subspan(begin, mid - begin);
        const auto right = all.subspan(mid, end - mid);
        const double vl = cluster_variance(cov, left);
        const double vr = cluster_variance(cov, right);
        const double alpha = 1.0 - vl / (vl + vr);
        for (auto i : left) weights(static_cast<Eigen::Index>(i)) *= alpha;
        for (auto i : right) weights(static_cast<Eigen::Index>(i)) *= 1.0 - alpha;
        pending.emplace_back(mid, end);
        pending.emplace_back(begin, mid);
    }
    return {cov.tickers, std::move(weights), Method::HRP};
}

HrpResult hrp_portfolio(const CovarianceMatrix& cov) {
    HrpResult r;
    r.distances = correlation_distance(correlation_matrix(cov));
    if (cov.values.rows() == 1) {
        r.tree.leaves = 1;
        r.order = {0};
    } else {
        r.tree = ward_linkage(r.distances);
        r.order = quasi_diagonalize(r.tree);
    }
    r.portfolio = recursive_bisection(cov, r.order);
    return r;
}

void write_linkage_csv(const LinkageTree& tree, std::ostream& out) {
    out << "left,right,height,count\n";
    char buf[128];
    for (const auto& m : tree.merges) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.12f,%zu\n", m.left, m.right, m.height, m.count);
        out << buf;
    }
}

namespace {

void render(const LinkageTree& tree, const std::vector<std::string>& tickers, std::size_t node,
            int depth, std::ostream& out) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    if (node < tree.leaves) {
        out << indent << tickers.at(node) << '\n';
        return;
    }
    const auto& m = tree.merges[node - tree.leaves];
    char buf[96];
    std::snprintf(buf, sizeof buf, "+ node %zu  height=%.6f  n=%zu", node, m.height, m.count);
    out << indent << buf << '\n';
    render(tree, tickers, m.left, depth + 1, out);
    render(tree, tickers, m.right, depth + 1, out);
}

}  // namespace

void write_dendrogram(const LinkageTree& tree, const std::vector<std::string>& tickers, std::ostream& out) {
    validate_tree(tree);
    render(tree, tickers, 2 * tree.leaves - 2, 0, out);
}

}  // namespace portfolio
