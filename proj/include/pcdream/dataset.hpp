#pragma once

#include "pcdream/point_cloud.hpp"

#include <string>
#include <vector>

namespace pcdream {

struct LabeledCloud {
    PointCloud cloud;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledCloud> train;
    std::vector<LabeledCloud> test;
    std::vector<std::string> labels;
};

} // namespace pcdream
