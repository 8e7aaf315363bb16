#include "motioncast/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace motioncast {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'M', 'C', 'C', 'K', 'P', 'T', '0', '1'};

void write_doubles(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
}

Tensor read_doubles(std::ifstream& in, std::vector<int> shape) {
  Tensor t(std::move(shape));
  in.read(reinterpret_cast<char*>(t.data().data()),
          static_cast<std::streamsize>(sizeof(double) * t.size()));
  if (!in) throw std::runtime_error("checkpoint: truncated tensor payload");
  return t;
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  json j;
  j["hidden_dim"] = cfg.hidden_dim;
  j["heads"] = cfg.heads;
  j["layers_stage1"] = cfg.layers_stage1;
  j["layers_stage2"] = cfg.layers_stage2;
  j["ff_mult"] = cfg.ff_mult;
  j["num_modes"] = cfg.num_modes;
  j["max_fps"] = cfg.max_fps;
  j["ln_eps"] = cfg.ln_eps;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.layers_stage1 = j.value("layers_stage1", cfg.layers_stage1);
  cfg.layers_stage2 = j.value("layers_stage2", cfg.layers_stage2);
  cfg.ff_mult = j.value("ff_mult", cfg.ff_mult);
  cfg.num_modes = j.value("num_modes", cfg.num_modes);
  cfg.max_fps = j.value("max_fps", cfg.max_fps);
  cfg.ln_eps = j.value("ln_eps", cfg.ln_eps);
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::string& path, const ModelState& state,
                     const json& meta,
                     const std::vector<std::pair<std::string, Tensor>>& extra) {
  json header;
  header["config"] = model_config_to_json(state.config);
  header["meta"] = meta;
  json dir = json::array();
  for (const auto& [name, t] : state.parameters()) {
    dir.push_back({{"name", name}, {"shape", t.shape()}});
  }
  header["params"] = std::move(dir);
  json xdir = json::array();
  for (const auto& [name, t] : extra) {
    xdir.push_back({{"name", name}, {"shape", t.shape()}});
  }
  header["extra"] = std::move(xdir);

  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = hs.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : state.parameters()) write_doubles(out, t);
  for (const auto& [name, t] : extra) write_doubles(out, t);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ModelState load_checkpoint(const std::string& path, json* meta,
                           std::vector<std::pair<std::string, Tensor>>* extra) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  const json header = json::parse(hs);

  const ModelConfig cfg = model_config_from_json(header.at("config"));
  ModelState state(cfg, /*seed=*/0);
  for (const json& entry : header.at("params")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor loaded = read_doubles(in, shape);
    Tensor& dst = state.param(name);
    if (dst.shape() != loaded.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    dst.data() = loaded.data();
  }
  if (meta) *meta = header.at("meta");
  if (extra) {
    extra->clear();
    for (const json& entry : header.at("extra")) {
      const std::string name = entry.at("name").get<std::string>();
      const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
      extra->emplace_back(name, read_doubles(in, shape));
    }
  }
  return state;
}

}  // namespace motioncast
