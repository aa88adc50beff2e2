#pragma once

#include <memory>
#include <string>
#include <vector>

#include "grudepth/image.hpp"
#include "grudepth/network.hpp"
#include "grudepth/rng.hpp"
#include "grudepth/scenegen.hpp"

namespace grudepth {

enum class Command { Forward, TurnLeft, TurnRight };

struct PolicyParams {
    int tau_stop = 40;  // pixel units; below this in the central window -> stop and turn
};

// Threshold-window policy: minimum depth over the central window (middle
// third horizontally, middle half vertically) decides forward vs stop;
// the turn goes toward the image half with the larger mean depth, ties
// break left.
Command policy_decide(const Gray8& depth, const PolicyParams& params);

enum class VehicleStatus { Running, Finished, Crashed, TimedOut };

struct VehicleParams {
    double speed = 2.0;       // m/s
    double dt = 0.25;         // s per control step
    double turn_rate = 0.6;   // rad/s while stopped
    double radius = 0.5;      // collision disk, meters
    double cam_height = 1.2;  // meters above ground
    double cam_pitch = 0.21;  // radians, slight upward tilt
    double cam_hfov = 1.0471975511965976;
    int image_h = 32;
    int image_w = 32;
};

struct VehicleState {
    double x = 0, y = 0;
    double heading = 0;
    double speed = 0;
    VehicleStatus status = VehicleStatus::Running;
};

// Pure kinematic step: forward advances speed*dt along the heading,
// stop-and-turn holds position and rotates. Terminal checks live in the
// trial loop, which knows the course.
VehicleState step_vehicle(const VehicleState& state, Command cmd, const VehicleParams& params);

struct Course {
    Scene scene;
    double start_x_min = 0, start_x_max = 1;
    double start_y_min = -2, start_y_max = 2;
    double start_heading_span = 0.15;  // +- radians
    double finish_x = 55;
    int time_limit = 0;  // steps; set by validation
    VehicleParams vehicle;
    PolicyParams policy;
};

// Road corridor with car-sized perpendicular boxes. Validated at
// construction: the ground-truth oracle policy finishes from a grid of
// starts, and the time limit is 4x the oracle's worst completion.
Course build_course();

enum class TrialOutcome { Finish, Crash, Timeout };

struct TrialResult {
    TrialOutcome outcome = TrialOutcome::Timeout;
    std::vector<std::pair<double, double>> trajectory;
    int steps_used = 0;
    double min_clearance = 1e30;
};

// Depth supplier for the policy: the simulator's quantized ground truth
// or a trained network running on the rendered camera frame.
class DepthSource {
public:
    virtual ~DepthSource() = default;
    virtual void reset() {}
    virtual Gray8 depth_for(const Image8& rgb, const Gray8& true_depth) = 0;
};

class OracleDepthSource : public DepthSource {
public:
    Gray8 depth_for(const Image8&, const Gray8& true_depth) override { return true_depth; }
};

class NetworkDepthSource : public DepthSource {
public:
    explicit NetworkDepthSource(DepthNet net) : net_(std::move(net)) {}
    void reset() override { net_.reset_state(); }
    Gray8 depth_for(const Image8& rgb, const Gray8&) override;

private:
    DepthNet net_;
};

TrialResult run_trial(const Course& course, DepthSource& source, double start_x, double start_y,
                      double start_heading);

struct SimSummary {
    int finishes = 0;
    int crashes = 0;
    int timeouts = 0;
    std::vector<TrialResult> trials;

    int total() const { return finishes + crashes + timeouts; }
    std::string to_json(std::uint64_t seed) const;
};

// n_trials independent randomized-start trials; trajectory CSVs go under
// out_dir when non-empty (one x,y file per trial).
SimSummary run_campaign(const Course& course, DepthSource& source, int n_trials,
                        std::uint64_t seed, const std::string& out_dir = "");

}  // namespace grudepth
