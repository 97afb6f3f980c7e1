// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "panotrack/cli.hpp"

namespace {

using namespace panotrack;
namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <typename... Args>
std::string fmt(const char* format, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

const PanoramaRig& rig() {
    static const PanoramaRig r = PanoramaRig::four_view({960, 960, 960, 540}, 1920, 1080, 1.7);
    return r;
}

// Random point on the ground plane in front of one view, given as camera-frame
// (X, Z) with depth Z in [1, 50] and column inside the image.
struct GroundCase {
    int view_id;
    double x_cam, z_cam;
};

GroundCase random_case(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> view(0, 3);
    std::uniform_real_distribution<double> depth(1.0, 50.0);
    std::uniform_real_distribution<double> column(0.0, 1920.0);
    GroundCase c{view(rng), 0.0, depth(rng)};
    c.x_cam = (column(rng) - 960.0) * c.z_cam / 960.0;
    return c;
}

Eigen::Vector3d pano_point(const GroundCase& c, double y) {
    return rotation_y(rig().view(c.view_id).yaw_deg).transpose() * Eigen::Vector3d(c.x_cam, y, c.z_cam);
}

// Projects feet (camera height 1.5 below the optical axis) and head, then
// inverts with the same stature.
void geometry_round_trip() {
    std::mt19937_64 rng(1001);
    std::vector<GroundCase> cases;
    for (int i = 0; i < 10000; ++i) cases.push_back(random_case(rng));
    const auto start = Clock::now();
    double worst = 0.0;
    for (const GroundCase& c : cases) {
        const Eigen::Vector3d feet = pano_point(c, 1.5);
        const PixelPoint foot_px = project(rig(), c.view_id, feet);
        const PixelPoint head_px = project(rig(), c.view_id, pano_point(c, 1.5 - 1.7));
        const Location3D got = localize(rig(), c.view_id, foot_px.u, foot_px.v - head_px.v);
        worst = std::max(worst, std::hypot(got.x_m - feet.x(), got.z_m - feet.z()));
    }
    const double elapsed = seconds_since(start);
    report("geometry_round_trip", worst < 1e-9 && elapsed < 1.0,
           fmt("max error %.3e m (< 1e-9), %.3f s (< 1 s)", worst, elapsed));
}

void height_scaling() {
    std::mt19937_64 rng(1002);
    const PanoramaRig taller = rig().with_body_height(1.1 * 1.7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const GroundCase c = random_case(rng);
        const double u = 960.0 + 960.0 * c.x_cam / c.z_cam;
        const double h = 960.0 * 1.7 / c.z_cam;
        const Location3D got = localize(taller, c.view_id, u, h);
        const double depth =
            to_camera(rig().view(c.view_id), Eigen::Vector3d(got.x_m, 0.0, got.z_m)).z();
        worst = std::max(worst, std::abs(depth / (1.1 * c.z_cam) - 1.0));
    }
    report("height_prior_scaling", worst < 1e-9, fmt("max relative error %.3e (< 1e-9)", worst));
}

double brute_force_minimum(const CostMatrix& c) {
    const std::size_t rows = c.rows();
    const std::size_t cols = c.cols();
    const bool transpose = rows > cols;
    const std::size_t small = transpose ? cols : rows;
    const std::size_t large = transpose ? rows : cols;
    std::vector<std::size_t> perm(large);
    for (std::size_t i = 0; i < large; ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    // Every injection small -> large appears as a prefix of some permutation.
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < small; ++i) total += transpose ? c(perm[i], i) : c(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Entries are multiples of 1/1024 so every partial sum is exact and
// "equal" means bitwise equal.
void assignment_optimality() {
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<int> ticks(0, 10 * 1024);
    const auto start = Clock::now();
    int mismatches = 0;
    int total = 0;
    for (std::size_t r = 1; r <= 7; ++r) {
        for (std::size_t k = 1; k <= 7; ++k) {
            for (int trial = 0; trial < 500; ++trial) {
                CostMatrix c(r, k);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < k; ++j) c(i, j) = ticks(rng) / 1024.0;
                const Assignment a = solve_assignment(c);
                double chosen = 0.0;
                for (const auto& [i, j] : a.matches) chosen += c(i, j);
                if (a.matches.size() != std::min(r, k) || chosen != brute_force_minimum(c) ||
                    a.total_cost != chosen) {
                    ++mismatches;
                }
                ++total;
            }
        }
    }
    const double elapsed = seconds_since(start);
    report("assignment_optimality", mismatches == 0 && elapsed < 10.0,
           fmt("%d/%d matrices optimal (1x1..7x7), %.3f s (< 10 s)", total - mismatches, total, elapsed));
}

void kernel_values() {
    const double r = std::numbers::sqrt2 / 2.0;
    const std::vector<float> e1{1.0f, 0.0f}, e2{0.0f, 1.0f}, e3{0.3f, -0.7f};
    const std::vector<float> diag_f{static_cast<float>(r), static_cast<float>(r)};
    double worst = 0.0;
    worst = std::max(worst, std::abs(appearance_cost(e3, e3) - 0.0));
    worst = std::max(worst, std::abs(appearance_cost(e1, e2) - 1.0));
    worst = std::max(worst, std::abs(appearance_cost(e1, diag_f) - (1.0 - r)));
    worst = std::max(worst, std::abs(trajectory_cost({1.0, 2.0}, {1.0, 2.0}, 1.7) - 0.0));
    worst = std::max(worst, std::abs(trajectory_cost({0.0, 3.0}, {1.7, 3.0}, 1.7) - (1.0 - std::exp(-1.0))));
    worst = std::max(worst, std::abs(trajectory_cost({0.0, 0.0}, {0.0, 170.0}, 1.7) - 1.0));
    report("cost_kernel_values", worst < 1e-12, fmt("max deviation %.3e (< 1e-12)", worst));
}

void kalman_convergence() {
    const KalmanParams params;
    KalmanState s = kf_new({0, 0}, params);
    double error_at_10 = 0.0;
    for (int k = 1; k <= 10; ++k) {
        auto [pred, where] = kf_predict(s, params);
        error_at_10 = std::hypot(where.x_m - k, where.z_m);
        s = kf_update(pred, {static_cast<double>(k), 0.0}, params);
    }

    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> coord(-20, 20);
    std::uniform_real_distribution<double> unit(0, 1);
    int not_spd = 0;
    for (int seq = 0; seq < 1000; ++seq) {
        KalmanParams p;
        p.measurement_noise_std = 0.01 + unit(rng);
        p.process_accel_std = 0.01 + unit(rng);
        p.initial_velocity_std = 0.1 + 5.0 * unit(rng);
        KalmanState st = kf_new({coord(rng), coord(rng)}, p);
        for (int step = 0; step < 50; ++step) {
            st = kf_predict(st, p).first;
            if (unit(rng) < 0.7) st = kf_update(st, {coord(rng), coord(rng)}, p);
        }
        const bool symmetric = (st.covariance - st.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-9;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(st.covariance);
        if (!symmetric || !(solver.eigenvalues().minCoeff() > 0.0)) ++not_spd;
    }
    report("kalman_convergence", error_at_10 < 1e-6 && not_spd == 0,
           fmt("error at frame 10 %.3e m (< 1e-6), %d/1000 sequences SPD", error_at_10, 1000 - not_spd));
}

// One person walking along +x at z = 4, unobserved for `gap` frames after
// frame 10. Returns the distinct track ids emitted for observed frames.
std::vector<int> walk_with_gap(int gap) {
    TrackerConfig config;
    Tracker tracker(config, 1.7);
    std::vector<int> ids;
    const Embedding look{0.6f, 0.8f, 0.0f};
    for (int frame = 1; frame <= 10 + gap + 5; ++frame) {
        std::vector<Detection> dets;
        if (frame <= 10 || frame > 10 + gap) {
            Detection d;
            d.frame_id = frame;
            d.embedding = look;
            d.location = {0.05 * frame, 4.0};
            dets.push_back(d);
        }
        for (const TrackletRecord& r : tracker.step(dets, frame)) {
            if (!r.estimated && std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
        }
    }
    return ids;
}

void lifespan_semantics() {
    const std::vector<int> nine = walk_with_gap(9);
    const std::vector<int> ten = walk_with_gap(10);
    report("lifespan_semantics", nine.size() == 1 && ten.size() == 2,
           fmt("gap 9 -> %zu identity, gap 10 -> %zu identities", nine.size(), ten.size()));
}

struct ClosedLoop {
    EvalReport report;
    double seconds = 0.0;
};

ClosedLoop run_closed_loop(const SyntheticScene& scene, CostMode mode) {
    const auto start = Clock::now();
    TrackerConfig config;
    config.cost_mode = mode;
    const std::vector<Frame> frames = prepare_frames(rig(), scene.detections, config);
    const std::vector<TrackletRecord> out = run(config, frames, rig().body_height_m());
    EvalOptions options;
    options.dist_threshold_m = 1.0;
    ClosedLoop result{evaluate<GroundTruthRecord, TrackletRecord>(scene.ground_truth, out, options), 0.0};
    result.seconds = seconds_since(start);
    return result;
}

SceneConfig clean_config() {
    SceneConfig c;
    c.n_agents = 10;
    c.n_frames = 300;
    c.seed = 2024;
    return c;
}

SceneConfig stress_config() {
    SceneConfig c;
    c.n_agents = 20;
    c.n_frames = 600;
    c.keypoint_noise_px = 2.0;
    c.embedding_noise_std = 0.05;
    c.detection_dropout_prob = 0.05;
    c.occlusions = {{0, 50, 5}, {3, 150, 5}, {7, 250, 5}, {11, 350, 5}, {15, 450, 5}};
    c.seed = 2025;
    return c;
}

bool perfect(const EvalReport& r) {
    return r.mota == 1.0 && r.fp == 0 && r.fn == 0 && r.idsw == 0 && r.mt_fraction == 1.0 &&
           r.ml_fraction == 0.0 &&
           std::all_of(r.loc_precision.begin(), r.loc_precision.end(), [](const auto& p) { return p.second == 1.0; });
}

void closed_loop_regimes(bool& self_consistent) {
    const auto start = Clock::now();
    const SyntheticScene clean = generate_scene(clean_config(), rig());
    const double clean_synth = seconds_since(start);
    const ClosedLoop c = run_closed_loop(clean, CostMode::kTrajectoryAndAppearance);
    report("closed_loop_clean", c.report.mota >= 0.99 && c.report.idsw == 0 && c.seconds < 5.0,
           fmt("MOTA %.4f (>= 0.99), IDSW %d (= 0), track+eval %.2f s (< 5 s), synth %.2f s", c.report.mota,
               c.report.idsw, c.seconds, clean_synth));

    const auto stress_start = Clock::now();
    const SyntheticScene stress = generate_scene(stress_config(), rig());
    const double stress_synth = seconds_since(stress_start);
    const ClosedLoop s = run_closed_loop(stress, CostMode::kTrajectoryAndAppearance);
    const ClosedLoop ablation = run_closed_loop(stress, CostMode::kTrajectoryOnly);
    report("closed_loop_stress",
           s.report.mota >= 0.90 && s.report.mota >= ablation.report.mota && s.seconds < 30.0,
           fmt("MOTA %.4f (>= 0.90), trajectory-only %.4f (<= full), IDSW %d vs %d, track+eval %.2f s (< 30 s), "
               "synth %.2f s",
               s.report.mota, ablation.report.mota, s.report.idsw, ablation.report.idsw, s.seconds, stress_synth));

    EvalOptions options;
    for (const SyntheticScene* scene : {&clean, &stress}) {
        self_consistent = self_consistent &&
                          perfect(evaluate<GroundTruthRecord, GroundTruthRecord>(scene->ground_truth,
                                                                                 scene->ground_truth, options));
    }
}

void metrics_self_consistency(bool generated_ok) {
    using G = GroundTruthRecord;
    const std::vector<G> gt = {{1, 1, {0, 2}}, {1, 2, {5, 2}}, {2, 1, {0, 2.1}},
                               {2, 2, {5, 2.1}}, {3, 1, {0, 2.2}}, {3, 2, {5, 2.2}}};
    const std::vector<G> pred = {{1, 1, {0, 2}}, {1, 2, {5, 2}}, {2, 2, {5, 2.1}}, {3, 3, {0, 2.2}}, {3, 2, {5, 2.2}}};
    const EvalReport r = evaluate<G, G>(gt, pred, EvalOptions{});
    const double expected = 1.0 - 2.0 / 6.0;
    report("metrics_self_consistency", generated_ok && r.mota == expected && r.idsw == 1 && r.fn == 1,
           fmt("evaluate(gt, gt) perfect on generated scenes: %s; IDSW scenario MOTA %.6f (expect %.6f)",
               generated_ok ? "yes" : "no", r.mota, expected));
}

void pipeline_determinism() {
    const fs::path data = PANOTRACK_DATA_DIR;
    const fs::path root = fs::temp_directory_path() / "panotrack_acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    std::vector<std::string> artifacts[2];
    bool ok = true;
    for (int run_index = 0; run_index < 2; ++run_index) {
        const fs::path dir = root / std::to_string(run_index);
        ok = ok && cli::cmd_synth({data / "scene_default.json", data / "rig_4view.json", dir, 11}, sink) == 0;
        ok = ok && cli::cmd_track({data / "rig_4view.json", dir / "detections.jsonl", dir / "tracks.jsonl", {}},
                                  sink) == 0;
        cli::EvalArgs eval;
        eval.ground_truth = dir / "ground_truth.jsonl";
        eval.predictions = dir / "tracks.jsonl";
        eval.json_output = true;
        std::ostringstream out;
        ok = ok && cli::cmd_eval(eval, out, sink) == 0;
        io::write_file(dir / "report.json", out.str());
        for (const char* name : {"detections.jsonl", "ground_truth.jsonl", "tracks.jsonl", "report.json"}) {
            artifacts[run_index].push_back(io::read_file(dir / name));
        }
    }
    const bool identical = ok && artifacts[0] == artifacts[1];
    fs::remove_all(root);
    report("pipeline_determinism", identical,
           fmt("synth -> track -> eval twice: %s", identical ? "4/4 files byte-identical" : "outputs differ"));
}

}  // namespace

int main() {
    try {
        geometry_round_trip();
        height_scaling();
        assignment_optimality();
        kernel_values();
        kalman_convergence();
        lifespan_semantics();
        bool generated_ok = true;
        closed_loop_regimes(generated_ok);
        metrics_self_consistency(generated_ok);
        pipeline_determinism();
    } catch (const std::exception& e) {
        std::printf("FAIL  unexpected exception: %s\n", e.what());
        return 1;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
