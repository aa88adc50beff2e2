#pragma once

#include <cstdint>
#include <vector>

#include "grudepth/image.hpp"
#include "grudepth/rng.hpp"

namespace grudepth {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

// Axis-aligned box obstacle. z is up; boxes rest on the ground plane z=0.
struct Box {
    Vec3 min, max;
    Vec3 albedo;  // [0,1] rgb
};

struct Scene {
    double ground_z = 0.0;
    Vec3 ground_albedo{0.45, 0.42, 0.38};
    Vec3 sky_color{0.55, 0.70, 0.95};
    Vec3 light_dir{-0.4, 0.3, -0.85};  // direction the light travels
    double max_range = 50.0;           // sensing range R in meters
    std::vector<Box> boxes;
};

struct CameraPose {
    Vec3 position;
    double yaw = 0;    // radians around z, 0 = +x
    double pitch = 0;  // radians, positive looks up
    double hfov = 1.0471975511965976;  // 60 degrees
    int image_h = 32;
    int image_w = 32;
};

// Matched RGB frame / metric depth buffer for one pose.
struct RenderedFrame {
    Image8 rgb;
    std::vector<double> depth_m;  // planar depth along the camera forward axis
    Gray8 quantized_depth(double max_range) const;
};

// 0 = at camera, 255 = at/beyond range; round half up.
std::uint8_t quantize_depth(double z_meters, double max_range);

// One ray per pixel through the pinhole model; nearest hit among boxes,
// ground and sky; Lambert-shaded albedo.
RenderedFrame render_frame(const Scene& scene, const CameraPose& pose);

// Camera trajectories with guaranteed motion parallax.
std::vector<CameraPose> straight_trajectory(CameraPose start, double speed, double dt, int n);
std::vector<CameraPose> arc_trajectory(CameraPose start, double speed, double yaw_rate, double dt,
                                       int n);
std::vector<CameraPose> yaw_walk_trajectory(CameraPose start, double speed, double dt, int n,
                                            Rng& rng);

// Random field of boxes around the origin for training scenes.
Scene random_scene(Rng& rng, int n_boxes = 8, double spread = 30.0);

struct Episode {
    int id = 0;
    std::vector<Image8> frames;
    std::vector<Gray8> depths;
    std::vector<CameraPose> poses;

    std::size_t size() const { return frames.size(); }
};

Episode generate_episode(const Scene& scene, const std::vector<CameraPose>& trajectory, int id);

// Desk-scale dataset defaults: 24 train + 6 test episodes of 96 frames
// at 32x32 within range 50 m.
struct GeneratorConfig {
    int train_episodes = 24;
    int test_episodes = 6;
    int frames_per_episode = 96;
    int image_h = 32;
    int image_w = 32;
    double max_range = 50.0;
    double cam_pitch = 0.21;  // radians; matches the avoidance vehicle camera
    std::uint64_t seed = 0;
};

struct GeneratedSet {
    std::vector<Episode> episodes;
    std::vector<bool> is_test;  // parallel to episodes
    GeneratorConfig config;
};

GeneratedSet generate_dataset(const GeneratorConfig& cfg);

}  // namespace grudepth
