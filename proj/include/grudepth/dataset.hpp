#pragma once

#include <string>
#include <vector>

#include "grudepth/scenegen.hpp"

namespace grudepth {

// On-disk layout:
//   <root>/manifest.json
//   <root>/episode_<id>/frame_%05d.ppm   (binary P6)
//   <root>/episode_<id>/depth_%05d.pgm   (binary P5)
//   <root>/episode_<id>/poses.csv
// The manifest records image size, sensing range, format version and the
// episode-level train/test split.
inline constexpr int kDatasetFormatVersion = 1;

struct DatasetMeta {
    int image_h = 0;
    int image_w = 0;
    double max_range = 0;
    std::vector<int> episode_ids;
    std::vector<int> frame_counts;
    std::vector<bool> is_test;
};

class Dataset {
public:
    DatasetMeta meta;
    std::vector<Episode> episodes;

    std::vector<const Episode*> split(bool test) const {
        std::vector<const Episode*> out;
        for (std::size_t i = 0; i < episodes.size(); ++i)
            if (meta.is_test[i] == test) out.push_back(&episodes[i]);
        return out;
    }
};

void write_dataset(const GeneratedSet& set, const std::string& root);
Dataset read_dataset(const std::string& root);

}  // namespace grudepth
