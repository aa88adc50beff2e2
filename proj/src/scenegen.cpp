#include "grudepth/scenegen.hpp"

#include <algorithm>
#include <cmath>

#include "grudepth/errors.hpp"

namespace grudepth {

std::uint8_t quantize_depth(double z_meters, double max_range) {
    if (z_meters < 0) throw NumericError("negative depth");
    if (max_range <= 0) throw ConfigError("max_range must be positive");
    const double v = std::floor(255.0 * std::min(z_meters, max_range) / max_range + 0.5);
    return static_cast<std::uint8_t>(v);
}

Gray8 RenderedFrame::quantized_depth(double max_range) const {
    Gray8 g(rgb.height, rgb.width);
    for (std::size_t i = 0; i < depth_m.size(); ++i)
        g.data[i] = quantize_depth(depth_m[i], max_range);
    return g;
}

namespace {

struct Basis {
    Vec3 forward, right, up;
};

Basis camera_basis(const CameraPose& pose) {
    const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
    const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
    Basis b;
    b.forward = {cp * cy, cp * sy, sp};
    b.right = {sy, -cy, 0};
    // right x forward
    b.up = {b.right.y * b.forward.z - b.right.z * b.forward.y,
            b.right.z * b.forward.x - b.right.x * b.forward.z,
            b.right.x * b.forward.y - b.right.y * b.forward.x};
    return b;
}

struct Hit {
    double t = -1;  // planar depth along forward (ray param with unit forward component)
    Vec3 normal;
    Vec3 albedo;
    bool valid() const { return t > 0; }
};

// Slab intersection; the ray direction has forward component 1, so the
// parameter equals planar depth directly.
Hit intersect_box(const Vec3& origin, const Vec3& dir, const Box& box) {
    double tmin = 1e-9, tmax = 1e30;
    int axis = -1;
    double sign = 0;
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    const double lo[3] = {box.min.x, box.min.y, box.min.z};
    const double hi[3] = {box.max.x, box.max.y, box.max.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (o[a] < lo[a] || o[a] > hi[a]) return {};
            continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        double s = -1;
        if (t0 > t1) {
            std::swap(t0, t1);
            s = 1;
        }
        if (t0 > tmin) {
            tmin = t0;
            axis = a;
            sign = s;
        }
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return {};
    }
    if (axis < 0) return {};  // ray starts inside; treat as a miss
    Hit h;
    h.t = tmin;
    h.normal = {axis == 0 ? sign : 0.0, axis == 1 ? sign : 0.0, axis == 2 ? sign : 0.0};
    h.albedo = box.albedo;
    return h;
}

std::uint8_t shade_to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

}  // namespace

RenderedFrame render_frame(const Scene& scene, const CameraPose& pose) {
    if (!(pose.hfov > 0 && pose.hfov < M_PI)) throw ConfigError("camera FoV must lie in (0, pi)");
    const Basis b = camera_basis(pose);
    const int H = pose.image_h, W = pose.image_w;
    RenderedFrame out;
    out.rgb = Image8(H, W);
    out.depth_m.assign(static_cast<std::size_t>(H) * W, scene.max_range);

    const double tan_h = std::tan(pose.hfov / 2);
    const double tan_v = tan_h * static_cast<double>(H) / W;
    const Vec3 light = scene.light_dir.normalized() * -1.0;

    for (int y = 0; y < H; ++y) {
        const double v = 1.0 - 2.0 * (y + 0.5) / H;
        for (int x = 0; x < W; ++x) {
            const double u = 2.0 * (x + 0.5) / W - 1.0;
            const Vec3 dir = b.forward + b.right * (u * tan_h) + b.up * (v * tan_v);

            Hit best;
            for (const Box& box : scene.boxes) {
                Hit h = intersect_box(pose.position, dir, box);
                if (h.valid() && (!best.valid() || h.t < best.t)) best = h;
            }
            if (dir.z < -1e-12) {
                const double t = (scene.ground_z - pose.position.z) / dir.z;
                if (t > 0 && (!best.valid() || t < best.t)) {
                    best.t = t;
                    best.normal = {0, 0, 1};
                    best.albedo = scene.ground_albedo;
                }
            }

            Vec3 color;
            double depth;
            if (best.valid()) {
                const double lambert = std::max(0.0, best.normal.dot(light));
                color = best.albedo * (0.25 + 0.75 * lambert);
                depth = best.t;
            } else {
                color = scene.sky_color;
                depth = scene.max_range;
            }
            out.rgb.at(0, y, x) = shade_to_byte(color.x);
            out.rgb.at(1, y, x) = shade_to_byte(color.y);
            out.rgb.at(2, y, x) = shade_to_byte(color.z);
            out.depth_m[static_cast<std::size_t>(y) * W + x] = depth;
        }
    }
    return out;
}

std::vector<CameraPose> straight_trajectory(CameraPose start, double speed, double dt, int n) {
    std::vector<CameraPose> traj;
    traj.reserve(n);
    CameraPose p = start;
    for (int i = 0; i < n; ++i) {
        traj.push_back(p);
        p.position.x += speed * dt * std::cos(p.yaw);
        p.position.y += speed * dt * std::sin(p.yaw);
    }
    return traj;
}

std::vector<CameraPose> arc_trajectory(CameraPose start, double speed, double yaw_rate, double dt,
                                       int n) {
    std::vector<CameraPose> traj;
    traj.reserve(n);
    CameraPose p = start;
    for (int i = 0; i < n; ++i) {
        traj.push_back(p);
        p.position.x += speed * dt * std::cos(p.yaw);
        p.position.y += speed * dt * std::sin(p.yaw);
        p.yaw += yaw_rate * dt;
    }
    return traj;
}

std::vector<CameraPose> yaw_walk_trajectory(CameraPose start, double speed, double dt, int n,
                                            Rng& rng) {
    std::vector<CameraPose> traj;
    traj.reserve(n);
    CameraPose p = start;
    double yaw_rate = 0;
    for (int i = 0; i < n; ++i) {
        traj.push_back(p);
        // smooth random steering: low-pass filtered white noise
        yaw_rate = 0.9 * yaw_rate + 0.1 * rng.uniform(-1.2, 1.2);
        p.yaw += yaw_rate * dt;
        p.position.x += speed * dt * std::cos(p.yaw);
        p.position.y += speed * dt * std::sin(p.yaw);
    }
    return traj;
}

Scene random_scene(Rng& rng, int n_boxes, double spread) {
    Scene scene;
    for (int i = 0; i < n_boxes; ++i) {
        const double sx = rng.uniform(0.8, 4.0);
        const double sy = rng.uniform(0.8, 4.0);
        const double sz = rng.uniform(0.8, 3.0);
        // keep a clear bubble around the trajectory start at the origin
        double cx, cy;
        do {
            cx = rng.uniform(2.0, spread);
            cy = rng.uniform(-spread / 2, spread / 2);
        } while (std::abs(cy) < 2.5 && cx < 6.0);
        Box box;
        box.min = {cx - sx / 2, cy - sy / 2, 0};
        box.max = {cx + sx / 2, cy + sy / 2, sz};
        box.albedo = {rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9)};
        scene.boxes.push_back(box);
    }
    return scene;
}

Episode generate_episode(const Scene& scene, const std::vector<CameraPose>& trajectory, int id) {
    if (trajectory.empty()) throw ConfigError("trajectory must have at least one pose");
    Episode ep;
    ep.id = id;
    ep.poses = trajectory;
    ep.frames.reserve(trajectory.size());
    ep.depths.reserve(trajectory.size());
    for (const CameraPose& pose : trajectory) {
        RenderedFrame f = render_frame(scene, pose);
        ep.frames.push_back(std::move(f.rgb));
        ep.depths.push_back(f.quantized_depth(scene.max_range));
    }
    return ep;
}

GeneratedSet generate_dataset(const GeneratorConfig& cfg) {
    GeneratedSet set;
    set.config = cfg;
    Rng root(cfg.seed);
    const int total = cfg.train_episodes + cfg.test_episodes;
    for (int e = 0; e < total; ++e) {
        Rng rng = root.fork(static_cast<std::uint64_t>(e));
        Scene scene = random_scene(rng, 6 + static_cast<int>(rng.uniform_int(5)));
        scene.max_range = cfg.max_range;

        CameraPose start;
        start.position = {0, rng.uniform(-3.0, 3.0), 1.2};
        start.yaw = rng.uniform(-0.3, 0.3);
        start.pitch = cfg.cam_pitch;
        start.image_h = cfg.image_h;
        start.image_w = cfg.image_w;
        const double speed = rng.uniform(1.0, 2.5);
        const double dt = 0.2;

        std::vector<CameraPose> traj;
        switch (e % 3) {
            case 0:
                traj = straight_trajectory(start, speed, dt, cfg.frames_per_episode);
                break;
            case 1:
                traj = arc_trajectory(start, speed, rng.uniform(-0.25, 0.25), dt,
                                      cfg.frames_per_episode);
                break;
            default:
                traj = yaw_walk_trajectory(start, speed, dt, cfg.frames_per_episode, rng);
                break;
        }
        set.episodes.push_back(generate_episode(scene, traj, e));
        set.is_test.push_back(e >= cfg.train_episodes);
    }
    return set;
}

}  // namespace grudepth
