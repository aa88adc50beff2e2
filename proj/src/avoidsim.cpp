#include "grudepth/avoidsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "grudepth/errors.hpp"

namespace fs = std::filesystem;

namespace grudepth {

Command policy_decide(const Gray8& depth, const PolicyParams& params) {
    const int H = depth.height, W = depth.width;
    const int row0 = H / 4, row1 = 3 * H / 4;
    const int col0 = W / 3, col1 = 2 * W / 3;

    int min_center = 255;
    for (int y = row0; y < row1; ++y)
        for (int x = col0; x < col1; ++x) min_center = std::min<int>(min_center, depth.at(y, x));
    if (min_center >= params.tau_stop) return Command::Forward;

    // image left is +yaw; larger mean depth picks the turn side
    double left = 0, right = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W / 2; ++x) left += depth.at(y, x);
        for (int x = W / 2; x < W; ++x) right += depth.at(y, x);
    }
    return left >= right ? Command::TurnLeft : Command::TurnRight;
}

VehicleState step_vehicle(const VehicleState& state, Command cmd, const VehicleParams& params) {
    if (state.status != VehicleStatus::Running)
        throw ConfigError("step_vehicle called on a terminal state");
    VehicleState next = state;
    switch (cmd) {
        case Command::Forward:
            next.speed = params.speed;
            next.x += params.speed * params.dt * std::cos(state.heading);
            next.y += params.speed * params.dt * std::sin(state.heading);
            break;
        case Command::TurnLeft:
            next.speed = 0;
            next.heading += params.turn_rate * params.dt;
            break;
        case Command::TurnRight:
            next.speed = 0;
            next.heading -= params.turn_rate * params.dt;
            break;
    }
    return next;
}

namespace {

// Distance from a point to a box footprint in the ground plane.
double footprint_distance(const Box& box, double x, double y) {
    const double dx = std::max({box.min.x - x, 0.0, x - box.max.x});
    const double dy = std::max({box.min.y - y, 0.0, y - box.max.y});
    return std::hypot(dx, dy);
}

Box car_box(double cx, double cy) {
    // car parked perpendicularly across the road: narrow along x, wide along y
    Box b;
    b.min = {cx - 0.9, cy - 2.25, 0};
    b.max = {cx + 0.9, cy + 2.25, 1.5};
    b.albedo = {0.75, 0.1, 0.1};
    return b;
}

}  // namespace

Gray8 NetworkDepthSource::depth_for(const Image8& rgb, const Gray8&) {
    return prediction_to_gray(forward_frame(net_, normalize_rgb(rgb)));
}

TrialResult run_trial(const Course& course, DepthSource& source, double start_x, double start_y,
                      double start_heading) {
    source.reset();
    VehicleState state;
    state.x = start_x;
    state.y = start_y;
    state.heading = start_heading;

    const VehicleParams& vp = course.vehicle;
    TrialResult result;
    result.trajectory.emplace_back(state.x, state.y);

    for (int step = 0; step < course.time_limit; ++step) {
        CameraPose pose;
        pose.position = {state.x, state.y, vp.cam_height};
        pose.yaw = state.heading;
        pose.pitch = vp.cam_pitch;
        pose.hfov = vp.cam_hfov;
        pose.image_h = vp.image_h;
        pose.image_w = vp.image_w;

        RenderedFrame frame = render_frame(course.scene, pose);
        const Gray8 depth = source.depth_for(frame.rgb, frame.quantized_depth(course.scene.max_range));
        const Command cmd = policy_decide(depth, course.policy);
        state = step_vehicle(state, cmd, vp);
        result.trajectory.emplace_back(state.x, state.y);
        result.steps_used = step + 1;

        double clearance = 1e30;
        for (const Box& box : course.scene.boxes)
            clearance = std::min(clearance, footprint_distance(box, state.x, state.y));
        result.min_clearance = std::min(result.min_clearance, clearance);

        if (clearance < vp.radius) {
            state.status = VehicleStatus::Crashed;
            result.outcome = TrialOutcome::Crash;
            return result;
        }
        if (state.x >= course.finish_x) {
            state.status = VehicleStatus::Finished;
            result.outcome = TrialOutcome::Finish;
            return result;
        }
    }
    result.outcome = TrialOutcome::Timeout;
    return result;
}

Course build_course() {
    Course course;
    course.scene.max_range = 50.0;
    course.scene.boxes = {car_box(15, 2.5), car_box(30, -2.5), car_box(45, 2.5)};
    course.finish_x = 55;

    // provisional generous limit for the validation sweep
    course.time_limit = 4000;
    OracleDepthSource oracle;
    int worst = 0;
    for (double sx : {0.0, 0.5, 1.0}) {
        for (double sy : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            TrialResult r = run_trial(course, oracle, sx, sy, 0.0);
            if (r.outcome != TrialOutcome::Finish)
                throw ConfigError("course validation failed: oracle did not finish from start (" +
                                  std::to_string(sx) + ", " + std::to_string(sy) + ")");
            worst = std::max(worst, r.steps_used);
        }
    }
    course.time_limit = 4 * worst;
    return course;
}

std::string SimSummary::to_json(std::uint64_t seed) const {
    nlohmann::json j;
    j["finishes"] = finishes;
    j["crashes"] = crashes;
    j["timeouts"] = timeouts;
    j["trials"] = total();
    j["seed"] = std::to_string(seed);
    nlohmann::json per = nlohmann::json::array();
    for (const auto& t : trials) {
        const char* name = t.outcome == TrialOutcome::Finish
                               ? "finish"
                               : (t.outcome == TrialOutcome::Crash ? "crash" : "timeout");
        per.push_back({{"outcome", name},
                       {"steps", t.steps_used},
                       {"min_clearance", t.min_clearance}});
    }
    j["per_trial"] = per;
    return j.dump(2);
}

SimSummary run_campaign(const Course& course, DepthSource& source, int n_trials,
                        std::uint64_t seed, const std::string& out_dir) {
    if (n_trials < 1) throw ConfigError("run_campaign requires n_trials >= 1");
    if (!out_dir.empty()) fs::create_directories(out_dir);

    Rng root(seed);
    SimSummary summary;
    for (int t = 0; t < n_trials; ++t) {
        Rng rng = root.fork(static_cast<std::uint64_t>(t));
        const double sx = rng.uniform(course.start_x_min, course.start_x_max);
        const double sy = rng.uniform(course.start_y_min, course.start_y_max);
        const double sh = rng.uniform(-course.start_heading_span, course.start_heading_span);
        TrialResult r = run_trial(course, source, sx, sy, sh);
        switch (r.outcome) {
            case TrialOutcome::Finish: ++summary.finishes; break;
            case TrialOutcome::Crash: ++summary.crashes; break;
            case TrialOutcome::Timeout: ++summary.timeouts; break;
        }
        if (!out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "traj_%03d.csv", t);
            std::ofstream out(fs::path(out_dir) / name);
            if (!out) throw IoError("cannot write trajectory CSV in " + out_dir);
            out << "x,y\n";
            out.precision(10);
            for (const auto& [x, y] : r.trajectory) out << x << ',' << y << '\n';
        }
        summary.trials.push_back(std::move(r));
    }
    return summary;
}

}  // namespace grudepth
