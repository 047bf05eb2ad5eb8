#include "pcdream/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace pcdream {

namespace {

double dist_sq(const Point3& a, const Point3& b) {
    const double dx = static_cast<double>(a.x) - b.x;
    const double dy = static_cast<double>(a.y) - b.y;
    const double dz = static_cast<double>(a.z) - b.z;
    return dx * dx + dy * dy + dz * dz;
}

float axis_value(const Point3& p, int axis) {
    switch (axis) {
        case 0: return p.x;
        case 1: return p.y;
        default: return p.z;
    }
}

} // namespace

KdTree::KdTree(const PointCloud& pc) : points_(pc.points) {
    if (points_.empty()) {
        throw std::invalid_argument("KdTree: empty cloud");
    }
    std::vector<std::size_t> idx(points_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    nodes_.reserve(points_.size());
    root_ = build(idx, 0, idx.size(), 0);
}

std::int64_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi,
                           int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const std::size_t mid = lo + (hi - lo) / 2;
    // Tie-break the partition on index so construction is deterministic.
    std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                     idx.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx.begin() + static_cast<std::ptrdiff_t>(hi),
                     [this, axis](std::size_t a, std::size_t b) {
                         const float va = axis_value(points_[a], axis);
                         const float vb = axis_value(points_[b], axis);
                         if (va != vb) return va < vb;
                         return a < b;
                     });
    const std::size_t node_idx = nodes_.size();
    nodes_.push_back({idx[mid], axis, -1, -1});
    const std::int64_t left = build(idx, lo, mid, depth + 1);
    const std::int64_t right = build(idx, mid + 1, hi, depth + 1);
    nodes_[node_idx].left = left;
    nodes_[node_idx].right = right;
    return static_cast<std::int64_t>(node_idx);
}

void KdTree::search(std::int64_t node, const Point3& query, std::int64_t skip, Hit& best) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Point3& p = points_[n.point];

    if (static_cast<std::int64_t>(n.point) != skip) {
        const double d = dist_sq(query, p);
        if (d < best.dist_sq || (d == best.dist_sq && n.point < best.index)) {
            best.dist_sq = d;
            best.index = n.point;
        }
    }

    const double diff = static_cast<double>(axis_value(query, n.axis)) - axis_value(p, n.axis);
    const std::int64_t near_side = diff < 0.0 ? n.left : n.right;
    const std::int64_t far_side = diff < 0.0 ? n.right : n.left;
    search(near_side, query, skip, best);
    // <= so equal-distance candidates on the far side stay reachable and
    // the lower-index tie rule holds exactly.
    if (diff * diff <= best.dist_sq) {
        search(far_side, query, skip, best);
    }
}

KdTree::Hit KdTree::nearest(const Point3& query) const {
    Hit best;
    search(root_, query, -1, best);
    return best;
}

KdTree::Hit KdTree::nearest_excluding(const Point3& query, std::size_t skip) const {
    if (points_.size() < 2) {
        throw std::invalid_argument("KdTree: nearest_excluding needs at least 2 points");
    }
    Hit best;
    search(root_, query, static_cast<std::int64_t>(skip), best);
    return best;
}

std::vector<double> nn_distances(const PointCloud& pc) {
    if (pc.count() < 2) {
        throw std::invalid_argument("nn_distances: need at least 2 points");
    }
    const KdTree tree(pc);
    std::vector<double> out;
    out.reserve(pc.count());
    for (std::size_t i = 0; i < pc.count(); ++i) {
        out.push_back(std::sqrt(tree.nearest_excluding(pc.points[i], i).dist_sq));
    }
    return out;
}

double chamfer_directed(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("chamfer_directed: empty cloud");
    }
    const KdTree tree(b);
    double sum = 0.0;
    for (const Point3& p : a.points) {
        sum += tree.nearest(p).dist_sq;
    }
    return sum / static_cast<double>(a.count());
}

double coverage(const PointCloud& a, const PointCloud& b, double eps) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("coverage: empty cloud");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("coverage: eps must be positive");
    }
    const KdTree tree(b);
    std::size_t hits = 0;
    const double eps_sq = eps * eps;
    for (const Point3& p : a.points) {
        if (tree.nearest(p).dist_sq <= eps_sq) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(a.count());
}

std::vector<ConfidencePoint> confidence_trajectory(const Model& model, const DreamTrace& trace,
                                                   int target) {
    if (trace.snapshots.empty()) {
        throw std::invalid_argument("confidence_trajectory: trace has no snapshots");
    }
    std::vector<ConfidencePoint> out;
    out.reserve(trace.snapshots.size());
    for (const auto& [iter, cloud] : trace.snapshots) {
        const Tensor logits = forward(model, cloud);
        const std::vector<float> probs = softmax(logits);
        out.push_back({iter, logits.data[static_cast<std::size_t>(target)],
                       probs[static_cast<std::size_t>(target)]});
    }
    return out;
}

std::string trajectory_to_csv(const std::vector<ConfidencePoint>& traj) {
    std::string out = "iter,target_logit,target_prob\n";
    char buf[96];
    for (const ConfidencePoint& p : traj) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", p.iter, static_cast<double>(p.logit),
                      static_cast<double>(p.prob));
        out += buf;
    }
    return out;
}

namespace {

SparsityReport make_report(const PointCloud& input, const PointCloud& output, const Model& model,
                           int target, double eps) {
    SparsityReport r;
    std::vector<double> nn = nn_distances(output);
    r.mean_nn_distance = std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(nn.size());
    r.max_nn_distance = *std::max_element(nn.begin(), nn.end());
    std::sort(nn.begin(), nn.end());
    const std::size_t mid = nn.size() / 2;
    r.median_nn_distance = nn.size() % 2 == 1 ? nn[mid] : 0.5 * (nn[mid - 1] + nn[mid]);

    r.chamfer_input_to_output = chamfer_directed(input, output);
    r.coverage = coverage(input, output, eps);

    const Tensor in_logits = forward(model, input);
    const std::vector<float> in_probs = softmax(in_logits);
    const Tensor out_logits = forward(model, output);
    const std::vector<float> out_probs = softmax(out_logits);
    const auto t = static_cast<std::size_t>(target);
    r.initial_logit = in_logits.data[t];
    r.initial_prob = in_probs[t];
    r.final_logit = out_logits.data[t];
    r.final_prob = out_probs[t];
    return r;
}

nlohmann::ordered_json report_to_json(const SparsityReport& r) {
    return {{"mean_nn_distance", r.mean_nn_distance},
            {"median_nn_distance", r.median_nn_distance},
            {"max_nn_distance", r.max_nn_distance},
            {"chamfer_input_to_output", r.chamfer_input_to_output},
            {"coverage", r.coverage},
            {"initial_logit", r.initial_logit},
            {"initial_prob", r.initial_prob},
            {"final_logit", r.final_logit},
            {"final_prob", r.final_prob}};
}

bool wins(const SparsityReport& a, const SparsityReport& b) {
    return a.mean_nn_distance <= 0.75 * b.mean_nn_distance && a.coverage >= b.coverage + 0.10;
}

} // namespace

CompareResult compare_runs(const PointCloud& input, const PointCloud& naive_out,
                           const PointCloud& add_out, const Model& model, int target, double eps) {
    if (target < 0 || static_cast<std::size_t>(target) >= model.config.class_count) {
        throw std::invalid_argument("compare_runs: target class out of range");
    }
    CompareResult result;
    result.naive = make_report(input, naive_out, model, target, eps);
    result.add = make_report(input, add_out, model, target, eps);
    if (wins(result.add, result.naive)) {
        result.verdict = "ADD";
    } else if (wins(result.naive, result.add)) {
        result.verdict = "naive";
    } else {
        result.verdict = "tie";
    }
    return result;
}

std::string compare_to_json(const CompareResult& result, const std::string& target_name,
                            double eps) {
    nlohmann::ordered_json doc;
    doc["target"] = target_name;
    doc["eps"] = eps;
    doc["naive"] = report_to_json(result.naive);
    doc["add"] = report_to_json(result.add);
    doc["verdict"] = result.verdict;
    return doc.dump(2) + "\n";
}

} // namespace pcdream
