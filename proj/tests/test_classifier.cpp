#include "pcdream/classifier.hpp"
#include "pcdream/rng.hpp"
#include "pcdream/synthgen.hpp"

#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace pcdream;

namespace {

std::vector<std::string> numbered_labels(std::size_t c) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < c; ++i) labels.push_back("class" + std::to_string(i));
    return labels;
}

Model small_random_model(std::uint64_t seed, std::size_t classes = 3) {
    ModelConfig cfg;
    cfg.point_widths = {3, 8, 16};
    cfg.head_widths = {16, 8, classes};
    cfg.class_count = classes;
    cfg.init_seed = seed;
    return init_model(cfg, numbered_labels(classes));
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    PointCloud pc;
    for (std::size_t i = 0; i < n; ++i) {
        pc.points.push_back({static_cast<float>(rng.next_double() * 2 - 1),
                             static_cast<float>(rng.next_double() * 2 - 1),
                             static_cast<float>(rng.next_double() * 2 - 1)});
    }
    return pc;
}

// Per-point weights (1,1,1) into one feature, identity head: the logit is
// max over points of relu(x+y+z).
Model toy_sum_model() {
    ModelConfig cfg;
    cfg.point_widths = {3, 1};
    cfg.head_widths = {1, 1};
    cfg.class_count = 1;
    Model m = init_model(cfg, {"only"});
    m.weights[0] = Tensor({3, 1}, {1, 1, 1});
    m.biases[0] = Tensor({1}, {0});
    m.weights[1] = Tensor({1, 1}, {1});
    m.biases[1] = Tensor({1}, {0});
    return m;
}

} // namespace

TEST_CASE("forward is invariant to point permutations, bit for bit") {
    const Model model = small_random_model(1);
    SplitMix64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const PointCloud pc = random_cloud(64, 100 + trial);
        PointCloud shuffled = pc;
        for (std::size_t i = 0; i + 1 < shuffled.count(); ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.next_below(shuffled.count() - i));
            std::swap(shuffled.points[i], shuffled.points[j]);
        }
        const Tensor a = forward(model, pc);
        const Tensor b = forward(model, shuffled);
        CHECK(a.data == b.data);
    }
}

TEST_CASE("forward with all-zero parameters gives all-zero logits") {
    Model model = small_random_model(3);
    for (Tensor& w : model.weights) {
        for (float& v : w.data) v = 0.0f;
    }
    const Tensor logits = forward(model, random_cloud(16, 4));
    for (float v : logits.data) CHECK(v == 0.0f);
}

TEST_CASE("forward rejects an empty cloud") {
    const Model model = small_random_model(5);
    CHECK_THROWS_WITH_AS(forward(model, PointCloud{}), "empty cloud", std::invalid_argument);
}

TEST_CASE("input_gradient on the toy sum model") {
    const Model model = toy_sum_model();
    PointCloud pc({{ {1, 2, 3}, {0.5f, 0.5f, 0.5f} }});
    const PointCloud grad = input_gradient(model, pc, 0);
    CHECK(grad.points[0].x == 1.0f);
    CHECK(grad.points[0].y == 1.0f);
    CHECK(grad.points[0].z == 1.0f);
    CHECK(grad.points[1].x == 0.0f);
    CHECK(grad.points[1].y == 0.0f);
    CHECK(grad.points[1].z == 0.0f);
}

TEST_CASE("input_gradient rejects a bad class index") {
    const Model model = small_random_model(6);
    CHECK_THROWS_AS(input_gradient(model, random_cloud(8, 7), 3), std::invalid_argument);
    CHECK_THROWS_AS(input_gradient(model, random_cloud(8, 7), -1), std::invalid_argument);
}

TEST_CASE("input_gradient matches 64-bit central differences") {
    const Model model = small_random_model(8);
    const PointCloud pc = random_cloud(32, 9);
    const int target = 1;
    const PointCloud analytic = input_gradient(model, pc, target);

    const oracle::DoubleModel dm = oracle::to_double_model(model);
    const std::vector<double> flat = oracle::cloud_to_flat(pc);
    const double h = 1e-3;

    SplitMix64 rng(10);
    int checked = 0;
    int attempts = 0;
    while (checked < 30 && attempts < 200) {
        ++attempts;
        const std::size_t coord = static_cast<std::size_t>(rng.next_below(flat.size()));
        std::vector<double> up = flat, down = flat;
        up[coord] += h;
        down[coord] -= h;
        oracle::ActivationPattern pat_up, pat_down;
        const double f_up = oracle::double_forward(dm, up, &pat_up)[target];
        const double f_down = oracle::double_forward(dm, down, &pat_down)[target];
        if (!(pat_up == pat_down)) continue; // interval crosses a kink/argmax flip
        const double fd = (f_up - f_down) / (2 * h);
        const std::size_t pt = coord / 3;
        const float g = coord % 3 == 0   ? analytic.points[pt].x
                        : coord % 3 == 1 ? analytic.points[pt].y
                                         : analytic.points[pt].z;
        CHECK(std::abs(g - fd) <= std::max(1e-3 * std::abs(fd), 1e-5));
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("input_gradient mass lands on the lower-index copies of a doubled cloud") {
    const Model model = small_random_model(11);
    const PointCloud pc = random_cloud(24, 12);
    const PointCloud doubled = set_union(pc, pc);

    const PointCloud single_grad = input_gradient(model, pc, 0);
    const PointCloud double_grad = input_gradient(model, doubled, 0);

    for (std::size_t i = 0; i < pc.count(); ++i) {
        CHECK(double_grad.points[i].x == single_grad.points[i].x);
        CHECK(double_grad.points[i].y == single_grad.points[i].y);
        CHECK(double_grad.points[i].z == single_grad.points[i].z);
        CHECK(double_grad.points[pc.count() + i].x == 0.0f);
        CHECK(double_grad.points[pc.count() + i].y == 0.0f);
        CHECK(double_grad.points[pc.count() + i].z == 0.0f);
    }
}

TEST_CASE("input_gradient is zero at points no pooled feature selected") {
    const Model model = small_random_model(13);
    const PointCloud pc = random_cloud(64, 14);
    const PointCloud grad = input_gradient(model, pc, 0);

    // Recompute the argmax set with the oracle and check the complement.
    oracle::ActivationPattern pattern;
    oracle::double_forward(oracle::to_double_model(model), oracle::cloud_to_flat(pc), &pattern);
    std::vector<bool> selected(pc.count(), false);
    for (std::size_t idx : pattern.argmax) selected[idx] = true;
    for (std::size_t i = 0; i < pc.count(); ++i) {
        if (!selected[i]) {
            CHECK(grad.points[i].x == 0.0f);
            CHECK(grad.points[i].y == 0.0f);
            CHECK(grad.points[i].z == 0.0f);
        }
    }
}

TEST_CASE("train separates a 2-class toy perfectly") {
    // Class 0 hugs the origin, class 1 sits near radius 5.
    std::vector<LabeledCloud> data;
    SplitMix64 rng(15);
    for (int i = 0; i < 24; ++i) {
        PointCloud pc;
        const bool far = i % 2 == 1;
        for (int p = 0; p < 16; ++p) {
            const double r = far ? 5.0 : 0.05;
            double x = rng.next_double() * 2 - 1, y = rng.next_double() * 2 - 1,
                   z = rng.next_double() * 2 - 1;
            const double n = std::sqrt(x * x + y * y + z * z) + 1e-9;
            pc.points.push_back({static_cast<float>(x / n * r), static_cast<float>(y / n * r),
                                 static_cast<float>(z / n * r)});
        }
        data.push_back({std::move(pc), far ? 1 : 0});
    }

    ModelConfig mcfg;
    mcfg.point_widths = {3, 8, 16};
    mcfg.head_widths = {16, 8, 2};
    mcfg.class_count = 2;
    TrainConfig tcfg;
    tcfg.epochs = 5;
    tcfg.batch_size = 8;
    const TrainResult result = train(data, mcfg, tcfg, {"near", "far"});
    REQUIRE(result.history.size() == 5);
    CHECK(result.history.back().accuracy == doctest::Approx(1.0));
}

TEST_CASE("epoch-0 loss starts near the uniform baseline ln(5)") {
    DatasetSpec spec;
    spec.per_class = 10;
    spec.points_per_cloud = 64;
    spec.seed = 16;
    const Dataset ds = build_dataset(spec);

    ModelConfig mcfg;
    mcfg.point_widths = {3, 16, 32};
    mcfg.head_widths = {32, 16, 5};
    mcfg.class_count = 5;
    TrainConfig tcfg;
    tcfg.epochs = 1;
    const TrainResult result = train(ds.train, mcfg, tcfg, ds.labels);
    CHECK(std::abs(result.history[0].loss - std::log(5.0)) <= 0.15);
}

TEST_CASE("train is bit-deterministic in its seeds") {
    DatasetSpec spec;
    spec.per_class = 6;
    spec.points_per_cloud = 48;
    spec.seed = 17;
    const Dataset ds = build_dataset(spec);

    ModelConfig mcfg;
    mcfg.point_widths = {3, 8, 16};
    mcfg.head_widths = {16, 8, 5};
    mcfg.class_count = 5;
    mcfg.init_seed = 3;
    TrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.seed = 4;

    const TrainResult a = train(ds.train, mcfg, tcfg, ds.labels);
    const TrainResult b = train(ds.train, mcfg, tcfg, ds.labels);
    REQUIRE(a.model.weights.size() == b.model.weights.size());
    for (std::size_t i = 0; i < a.model.weights.size(); ++i) {
        CHECK(a.model.weights[i].data == b.model.weights[i].data);
        CHECK(a.model.biases[i].data == b.model.biases[i].data);
    }
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].loss == b.history[e].loss);
        CHECK(a.history[e].accuracy == b.history[e].accuracy);
    }
}

TEST_CASE("train rejects out-of-range labels and bad configs") {
    std::vector<LabeledCloud> data{{random_cloud(8, 18), 7}};
    ModelConfig mcfg;
    TrainConfig tcfg;
    CHECK_THROWS_AS(train(data, mcfg, tcfg, numbered_labels(5)), std::invalid_argument);

    data[0].label = 0;
    tcfg.epochs = 0;
    CHECK_THROWS_AS(train(data, mcfg, tcfg, numbered_labels(5)), std::invalid_argument);
}

TEST_CASE("evaluate of a constant predictor scores the class share") {
    // All-zero parameters predict class 0 everywhere (ties to index 0).
    Model model = small_random_model(19);
    for (Tensor& w : model.weights) {
        for (float& v : w.data) v = 0.0f;
    }
    std::vector<LabeledCloud> data;
    for (int i = 0; i < 12; ++i) {
        data.push_back({random_cloud(8, 20 + i), i < 4 ? 0 : (i < 8 ? 1 : 2)});
    }
    const Evaluation eval = evaluate(model, data);
    CHECK(eval.accuracy == doctest::Approx(4.0 / 12.0));

    // Confusion rows sum to the per-class counts.
    for (int c = 0; c < 3; ++c) {
        std::size_t row_sum = 0;
        for (std::size_t p = 0; p < 3; ++p) row_sum += eval.confusion[c][p];
        CHECK(row_sum == 4);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    const Model model = small_random_model(21);
    const std::string bytes = save_checkpoint(model);
    const Model loaded = load_checkpoint(bytes);

    CHECK(loaded.labels == model.labels);
    CHECK(loaded.config.point_widths == model.config.point_widths);
    REQUIRE(loaded.weights.size() == model.weights.size());
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        CHECK(loaded.weights[i].data == model.weights[i].data);
        CHECK(loaded.biases[i].data == model.biases[i].data);
    }

    // Serialization itself is deterministic.
    CHECK(save_checkpoint(loaded) == bytes);
}

TEST_CASE("checkpoint load rejects corruption with distinct errors") {
    const Model model = small_random_model(22);
    const std::string bytes = save_checkpoint(model);

    SUBCASE("version mismatch") {
        std::string doctored = bytes;
        const auto pos = doctored.find("\"format_version\": 1");
        REQUIRE(pos != std::string::npos);
        doctored.replace(pos, 19, "\"format_version\": 9");
        CHECK_THROWS_WITH_AS(load_checkpoint(doctored), doctest::Contains("version"),
                             std::runtime_error);
    }

    SUBCASE("corrupted base64 payload") {
        std::string doctored = bytes;
        const auto pos = doctored.find("\"data\": \"");
        REQUIRE(pos != std::string::npos);
        doctored[pos + 9] = '!';
        CHECK_THROWS_WITH_AS(load_checkpoint(doctored), doctest::Contains("truncated data"),
                             std::runtime_error);
    }

    SUBCASE("truncated base64 payload") {
        std::string doctored = bytes;
        const auto pos = doctored.find("\"data\": \"");
        REQUIRE(pos != std::string::npos);
        doctored.erase(pos + 9, 8); // drop two quads from the first block
        CHECK_THROWS_WITH_AS(load_checkpoint(doctored), doctest::Contains("truncated data"),
                             std::runtime_error);
    }

    SUBCASE("shape mismatch names the tensor") {
        std::string doctored = bytes;
        const auto pos = doctored.find("[\n        3,\n        8\n      ]");
        if (pos != std::string::npos) {
            doctored.replace(pos, 30, "[\n        2,\n        8\n      ]");
            CHECK_THROWS_WITH_AS(load_checkpoint(doctored), doctest::Contains("point0.weight"),
                                 std::runtime_error);
        } else {
            // Formatting changed; fall back to a config-level mismatch.
            Model other = small_random_model(23, 4);
            CHECK_THROWS_AS(load_checkpoint(save_checkpoint(other) + "x"), std::runtime_error);
        }
    }

    SUBCASE("not json at all") {
        CHECK_THROWS_AS(load_checkpoint("definitely not json"), std::runtime_error);
    }
}
