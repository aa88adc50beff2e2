#include "grudepth/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grudepth/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace grudepth {

namespace {

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.ppm", i);
    return buf;
}

std::string depth_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "depth_%05d.pgm", i);
    return buf;
}

std::string episode_dir(int id) { return "episode_" + std::to_string(id); }

void write_poses(const std::string& path, const std::vector<CameraPose>& poses) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "x,y,z,yaw,pitch,hfov\n";
    out.precision(17);
    for (const auto& p : poses)
        out << p.position.x << ',' << p.position.y << ',' << p.position.z << ',' << p.yaw << ','
            << p.pitch << ',' << p.hfov << '\n';
}

std::vector<CameraPose> read_poses(const std::string& path, int image_h, int image_w) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<CameraPose> poses;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CameraPose p;
        p.image_h = image_h;
        p.image_w = image_w;
        std::istringstream ss(line);
        char comma;
        if (!(ss >> p.position.x >> comma >> p.position.y >> comma >> p.position.z >> comma >>
              p.yaw >> comma >> p.pitch >> comma >> p.hfov))
            throw IoError(path + ": malformed pose row");
        poses.push_back(p);
    }
    return poses;
}

}  // namespace

void write_dataset(const GeneratedSet& set, const std::string& root) {
    fs::create_directories(root);

    json manifest;
    manifest["format_version"] = kDatasetFormatVersion;
    manifest["image_h"] = set.config.image_h;
    manifest["image_w"] = set.config.image_w;
    manifest["max_range"] = set.config.max_range;
    json eps = json::array();
    for (std::size_t i = 0; i < set.episodes.size(); ++i) {
        const Episode& ep = set.episodes[i];
        const fs::path dir = fs::path(root) / episode_dir(ep.id);
        fs::create_directories(dir);
        for (std::size_t f = 0; f < ep.size(); ++f) {
            write_ppm((dir / frame_name(static_cast<int>(f))).string(), ep.frames[f]);
            write_pgm((dir / depth_name(static_cast<int>(f))).string(), ep.depths[f]);
        }
        write_poses((dir / "poses.csv").string(), ep.poses);
        eps.push_back({{"id", ep.id},
                       {"dir", episode_dir(ep.id)},
                       {"frames", ep.size()},
                       {"split", set.is_test[i] ? "test" : "train"}});
    }
    manifest["episodes"] = eps;

    std::ofstream out(fs::path(root) / "manifest.json");
    if (!out) throw IoError("cannot write manifest under " + root);
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("manifest write failed under " + root);
}

Dataset read_dataset(const std::string& root) {
    const fs::path mpath = fs::path(root) / "manifest.json";
    std::ifstream in(mpath);
    if (!in) throw IoError("cannot open " + mpath.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError(mpath.string() + ": invalid JSON: " + e.what());
    }
    if (manifest.value("format_version", -1) != kDatasetFormatVersion)
        throw IoError(mpath.string() + ": unsupported format version");

    Dataset ds;
    ds.meta.image_h = manifest.at("image_h").get<int>();
    ds.meta.image_w = manifest.at("image_w").get<int>();
    ds.meta.max_range = manifest.at("max_range").get<double>();

    for (const auto& e : manifest.at("episodes")) {
        const int id = e.at("id").get<int>();
        const int frames = e.at("frames").get<int>();
        const fs::path dir = fs::path(root) / e.at("dir").get<std::string>();

        Episode ep;
        ep.id = id;
        for (int f = 0; f < frames; ++f) {
            const fs::path fpath = dir / frame_name(f);
            const fs::path dpath = dir / depth_name(f);
            if (!fs::exists(fpath) || !fs::exists(dpath))
                throw IoError("manifest integrity: missing file for episode " +
                              std::to_string(id) + " frame " + std::to_string(f));
            Image8 img = read_ppm(fpath.string());
            Gray8 dep = read_pgm(dpath.string());
            if (img.height != ds.meta.image_h || img.width != ds.meta.image_w ||
                dep.height != ds.meta.image_h || dep.width != ds.meta.image_w)
                throw IoError("size mismatch with manifest in " + fpath.string());
            ep.frames.push_back(std::move(img));
            ep.depths.push_back(std::move(dep));
        }
        // extra files beyond the manifest count are an integrity error too
        if (fs::exists(dir / frame_name(frames)))
            throw IoError("manifest integrity: more frames on disk than declared for episode " +
                          std::to_string(id));
        ep.poses = read_poses((dir / "poses.csv").string(), ds.meta.image_h, ds.meta.image_w);
        ds.episodes.push_back(std::move(ep));
        ds.meta.episode_ids.push_back(id);
        ds.meta.frame_counts.push_back(frames);
        ds.meta.is_test.push_back(e.at("split").get<std::string>() == "test");
    }
    return ds;
}

}  // namespace grudepth
