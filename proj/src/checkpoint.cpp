#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "grudepth/errors.hpp"
#include "grudepth/training.hpp"

using nlohmann::json;

namespace grudepth {

namespace {

json network_config_json(const NetworkConfig& c) {
    return {{"width_num", c.width_num},   {"width_den", c.width_den},
            {"input_h", c.input_h},       {"input_w", c.input_w},
            {"lrelu_alpha", c.lrelu_alpha},
            {"lrelu_variant", c.lrelu_variant == LReluVariant::Standard ? "standard"
                                                                        : "paper_verbatim"},
            {"seed", std::to_string(c.seed)}};
}

NetworkConfig network_config_from_json(const json& j) {
    NetworkConfig c;
    c.width_num = j.at("width_num").get<int>();
    c.width_den = j.at("width_den").get<int>();
    c.input_h = j.at("input_h").get<int>();
    c.input_w = j.at("input_w").get<int>();
    c.lrelu_alpha = j.at("lrelu_alpha").get<double>();
    c.lrelu_variant = j.at("lrelu_variant").get<std::string>() == "paper_verbatim"
                          ? LReluVariant::PaperVerbatim
                          : LReluVariant::Standard;
    c.seed = std::stoull(j.at("seed").get<std::string>());
    return c;
}

json train_config_json(const TrainConfig& c) {
    return {{"seq_len", c.seq_len},
            {"burn_len", c.burn_len},
            {"epochs", c.epochs},
            {"max_updates", c.max_updates},
            {"batch_sequences", c.batch_sequences},
            {"lr", c.lr},
            {"lr_decay", c.lr_decay},
            {"lr_decay_every", c.lr_decay_every},
            {"val_interval", c.val_interval},
            {"val_frames", c.val_frames},
            {"seed", std::to_string(c.seed)}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.seq_len = j.at("seq_len").get<int>();
    c.burn_len = j.at("burn_len").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.max_updates = j.at("max_updates").get<int>();
    c.batch_sequences = j.at("batch_sequences").get<int>();
    c.lr = j.at("lr").get<double>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.lr_decay_every = j.at("lr_decay_every").get<int>();
    c.val_interval = j.at("val_interval").get<int>();
    c.val_frames = j.at("val_frames").get<int>();
    c.seed = std::stoull(j.at("seed").get<std::string>());
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const DepthNet& net, const AdamState<float>& adam,
                     const Rng& rng, const TrainConfig& cfg) {
    json manifest;
    manifest["format_version"] = kCheckpointFormatVersion;
    manifest["network"] = network_config_json(net.config);
    manifest["train"] = train_config_json(cfg);
    manifest["adam"] = {{"lr", adam.config.lr},
                        {"beta1", adam.config.beta1},
                        {"beta2", adam.config.beta2},
                        {"eps", adam.config.eps}};
    manifest["step"] = adam.step;
    json rng_state = json::array();
    for (auto word : rng.state()) rng_state.push_back(std::to_string(word));
    manifest["rng_state"] = rng_state;

    // parameters first, then Adam first and second moments
    json tensors = json::array();
    std::uint64_t offset = 0;
    auto describe = [&](const std::string& name, const Tensor& t) {
        tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
        offset += t.numel() * sizeof(float);
    };
    for (const auto& p : net.params) describe(p.name, p.value);
    for (std::size_t i = 0; i < net.params.size(); ++i)
        describe("adam.m." + net.params[i].name, adam.m[i]);
    for (std::size_t i = 0; i < net.params.size(); ++i)
        describe("adam.v." + net.params[i].name, adam.v[i]);
    manifest["tensors"] = tensors;
    manifest["payload_bytes"] = offset;

    const std::string header = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    auto dump = [&](const Tensor& t) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    };
    for (const auto& p : net.params) dump(p.value);
    for (const auto& t : adam.m) dump(t);
    for (const auto& t : adam.v) dump(t);
    if (!out) throw IoError("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (in.gcount() != sizeof len) throw IoError(path + ": truncated checkpoint header");
    // sanity-check against the file size before allocating
    std::error_code ec;
    const auto file_bytes = std::filesystem::file_size(path, ec);
    if (ec || len + sizeof len > file_bytes)
        throw IoError(path + ": corrupt checkpoint manifest length");
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len))
        throw IoError(path + ": truncated checkpoint header");

    json manifest;
    try {
        manifest = json::parse(header);
    } catch (const json::exception& e) {
        throw IoError(path + ": corrupt checkpoint manifest: " + e.what());
    }
    if (manifest.value("format_version", -1) != kCheckpointFormatVersion)
        throw IoError(path + ": checkpoint format version mismatch");

    LoadedCheckpoint ckpt;
    ckpt.train_config = train_config_from_json(manifest.at("train"));
    const NetworkConfig net_cfg = network_config_from_json(manifest.at("network"));
    ckpt.net = build_network<float>(net_cfg);
    ckpt.adam.config.lr = manifest.at("adam").at("lr").get<double>();
    ckpt.adam.config.beta1 = manifest.at("adam").at("beta1").get<double>();
    ckpt.adam.config.beta2 = manifest.at("adam").at("beta2").get<double>();
    ckpt.adam.config.eps = manifest.at("adam").at("eps").get<double>();
    ckpt.adam.step = manifest.at("step").get<long>();
    ckpt.adam.init(ckpt.net);

    std::array<std::uint64_t, 4> state{};
    const auto& rs = manifest.at("rng_state");
    for (std::size_t i = 0; i < 4; ++i) state[i] = std::stoull(rs.at(i).get<std::string>());
    ckpt.rng.set_state(state);

    // read the whole payload, then slice by manifest offsets
    const std::uint64_t payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    std::vector<char> payload(payload_bytes);
    in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
    if (in.gcount() != static_cast<std::streamsize>(payload_bytes))
        throw IoError(path + ": truncated checkpoint payload");

    auto fill = [&](const std::string& name, Tensor& t, const json& entry) {
        const auto shape = entry.at("shape").get<std::vector<int>>();
        if (shape != t.shape)
            throw IoError(path + ": tensor " + name + " shape mismatch with network config");
        const std::uint64_t off = entry.at("offset").get<std::uint64_t>();
        if (off + t.numel() * sizeof(float) > payload_bytes)
            throw IoError(path + ": tensor " + name + " extends past payload");
        std::memcpy(t.data.data(), payload.data() + off, t.numel() * sizeof(float));
    };

    std::size_t idx = 0;
    const auto& tensors = manifest.at("tensors");
    for (auto& p : ckpt.net.params) fill(p.name, p.value, tensors.at(idx++));
    for (std::size_t i = 0; i < ckpt.net.params.size(); ++i)
        fill("adam.m", ckpt.adam.m[i], tensors.at(idx++));
    for (std::size_t i = 0; i < ckpt.net.params.size(); ++i)
        fill("adam.v", ckpt.adam.v[i], tensors.at(idx++));
    return ckpt;
}

}  // namespace grudepth
