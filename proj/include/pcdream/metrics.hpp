#pragma once

#include "pcdream/classifier.hpp"
#include "pcdream/dreamer.hpp"
#include "pcdream/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pcdream {

// Static 3D spatial index. Queries return exactly the brute-force nearest
// point; distance ties break toward the lower point index.
class KdTree {
public:
    explicit KdTree(const PointCloud& pc);

    struct Hit {
        std::size_t index = 0;
        double dist_sq = std::numeric_limits<double>::infinity();
    };

    Hit nearest(const Point3& query) const;

    // Nearest point whose index differs from `skip` (for within-cloud
    // neighbor distances). Requires at least 2 points.
    Hit nearest_excluding(const Point3& query, std::size_t skip) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::size_t point = 0; // index into the original cloud
        int axis = 0;
        std::int64_t left = -1;
        std::int64_t right = -1;
    };

    std::int64_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
    void search(std::int64_t node, const Point3& query, std::int64_t skip, Hit& best) const;

    std::vector<Point3> points_;
    std::vector<Node> nodes_;
    std::int64_t root_ = -1;
};

// Distance from each point to its nearest neighbor within the same cloud
// (self excluded by index, so coincident duplicates give 0). Requires
// count >= 2.
std::vector<double> nn_distances(const PointCloud& pc);

// Mean over a's points of the squared distance to the nearest point of b.
double chamfer_directed(const PointCloud& a, const PointCloud& b);

// Fraction of a's points whose nearest neighbor in b lies within eps.
double coverage(const PointCloud& a, const PointCloud& b, double eps);

struct SparsityReport {
    double mean_nn_distance = 0.0;
    double median_nn_distance = 0.0;
    double max_nn_distance = 0.0;
    double chamfer_input_to_output = 0.0;
    double coverage = 0.0;
    double initial_logit = 0.0;
    double initial_prob = 0.0;
    double final_logit = 0.0;
    double final_prob = 0.0;
};

struct ConfidencePoint {
    std::size_t iter = 0;
    float logit = 0.0f;
    float prob = 0.0f;
};

// Re-evaluates the model on every snapshot in the trace. Throws if the
// trace holds no snapshots.
std::vector<ConfidencePoint> confidence_trajectory(const Model& model, const DreamTrace& trace,
                                                   int target);

std::string trajectory_to_csv(const std::vector<ConfidencePoint>& traj);

struct CompareResult {
    SparsityReport naive;
    SparsityReport add;
    std::string verdict; // "ADD", "naive", or "tie"
};

// Scores both outputs against the input: within-cloud spacing, input
// preservation (directed chamfer + coverage), and target confidence before
// and after. The verdict follows fixed thresholds: a side wins when its
// mean neighbor distance is at most 0.75x the other's AND its coverage
// beats the other's by at least 0.10; anything else is a tie.
CompareResult compare_runs(const PointCloud& input, const PointCloud& naive_out,
                           const PointCloud& add_out, const Model& model, int target, double eps);

std::string compare_to_json(const CompareResult& result, const std::string& target_name,
                            double eps);

} // namespace pcdream
