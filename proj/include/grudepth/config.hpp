#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "grudepth/network.hpp"
#include "grudepth/training.hpp"

namespace grudepth {

// Flat dotted-key configuration. Sources, in priority order: built-in
// defaults, a `key = value` config file, command-line overrides. Unknown
// keys are rejected. Every command writes its effective config next to
// its outputs so runs are reproducible from artifacts alone.
class RunConfig {
public:
    static RunConfig defaults();

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    NetworkConfig network_config() const;
    TrainConfig train_config() const;

    std::string dump() const;
    void write_echo(const std::string& dir, const std::string& command) const;

private:
    std::map<std::string, std::string> values_;
};

// "1" or "3/4" -> (num, den)
std::pair<int, int> parse_width_scale(const std::string& text);

}  // namespace grudepth
