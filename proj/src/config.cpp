#include "grudepth/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grudepth/errors.hpp"

namespace grudepth {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.values_ = {
        {"seed", "0"},
        {"out.dir", "out"},
        {"dataset.path", "dataset"},
        // scene generator
        {"gen.train_episodes", "24"},
        {"gen.test_episodes", "6"},
        {"gen.frames_per_episode", "96"},
        {"gen.image_size", "32"},
        {"gen.max_range", "50"},
        {"gen.cam_pitch", "0.21"},
        // network
        {"net.width_scale", "1/8"},
        {"net.input_size", "32"},
        {"net.lrelu_alpha", "0.1"},
        {"net.lrelu_variant", "standard"},
        // training
        {"train.seq_len", "32"},
        {"train.burn_len", "32"},
        {"train.epochs", "10"},
        {"train.max_updates", "0"},
        {"train.batch_sequences", "1"},
        {"train.lr", "0.001"},
        {"train.lr_decay", "1.0"},
        {"train.lr_decay_every", "0"},
        {"train.val_interval", "50"},
        {"train.val_frames", "64"},
        {"train.checkpoint", "checkpoint.bin"},
        {"train.resume", ""},
        // evaluation
        {"eval.checkpoint", "checkpoint.bin"},
        {"eval.ablate_recurrence", "false"},
        // simulator
        {"sim.trials", "30"},
        {"sim.tau_stop", "40"},
        {"sim.oracle", "false"},
        {"sim.checkpoint", "checkpoint.bin"},
    };
    return c;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + get(key));
    }
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + get(key));
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an unsigned integer: " + get(key));
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + v);
}

std::pair<int, int> parse_width_scale(const std::string& text) {
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return {std::stoi(text), 1};
        return {std::stoi(text.substr(0, slash)), std::stoi(text.substr(slash + 1))};
    } catch (const std::exception&) {
        throw ConfigError("bad width_scale '" + text + "', expected N or N/D");
    }
}

NetworkConfig RunConfig::network_config() const {
    NetworkConfig cfg;
    const auto [num, den] = parse_width_scale(get("net.width_scale"));
    cfg.width_num = num;
    cfg.width_den = den;
    cfg.input_h = cfg.input_w = get_int("net.input_size");
    cfg.lrelu_alpha = get_double("net.lrelu_alpha");
    const std::string& variant = get("net.lrelu_variant");
    if (variant == "standard")
        cfg.lrelu_variant = LReluVariant::Standard;
    else if (variant == "paper_verbatim")
        cfg.lrelu_variant = LReluVariant::PaperVerbatim;
    else
        throw ConfigError("net.lrelu_variant must be standard or paper_verbatim");
    cfg.seed = get_u64("seed");
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.seq_len = get_int("train.seq_len");
    cfg.burn_len = get_int("train.burn_len");
    cfg.epochs = get_int("train.epochs");
    cfg.max_updates = get_int("train.max_updates");
    cfg.batch_sequences = get_int("train.batch_sequences");
    cfg.lr = get_double("train.lr");
    cfg.lr_decay = get_double("train.lr_decay");
    cfg.lr_decay_every = get_int("train.lr_decay_every");
    cfg.val_interval = get_int("train.val_interval");
    cfg.val_frames = get_int("train.val_frames");
    cfg.seed = get_u64("seed");
    if (cfg.seq_len < 1) throw ConfigError("train.seq_len must be >= 1");
    if (cfg.burn_len < 0) throw ConfigError("train.burn_len must be >= 0");
    return cfg;
}

std::string RunConfig::dump() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
}

void RunConfig::write_echo(const std::string& dir, const std::string& command) const {
    std::filesystem::create_directories(dir);
    const std::string path = (std::filesystem::path(dir) / "config.echo.txt").string();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config echo " + path);
    out << "# command: " << command << "\n" << dump();
}

}  // namespace grudepth
