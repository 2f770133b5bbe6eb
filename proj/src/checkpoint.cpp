#include "wrvi/train/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace wrvi {

using ad::Tensor;
using nlohmann::json;

namespace {

void append_f64_le(std::string& buf, double x) {
  std::uint64_t u = 0;
  std::memcpy(&u, &x, sizeof(u));
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>(u & 0xffu));
    u >>= 8;
  }
}

double read_f64_le(const std::string& buf, std::size_t offset) {
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) {
    u = (u << 8) | static_cast<std::uint8_t>(buf[offset + static_cast<std::size_t>(i)]);
  }
  double x = 0.0;
  std::memcpy(&x, &u, sizeof(x));
  return x;
}

std::uint32_t blob_crc(const std::string& blob) {
  return static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(blob.data()), static_cast<uInt>(blob.size())));
}

std::string strip_json_ext(const std::string& path) {
  const std::string ext = ".json";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size());
  }
  return path;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + tmp + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return content;
}

json head_meta(const HeadParams& h) {
  return json{{"activation", ad::activation_to_string(h.trunk.activation)},
              {"lv_min", h.lv_min},
              {"lv_max", h.lv_max}};
}

}  // namespace

void save_checkpoint(const std::string& prefix, TrainState& state, const std::string& spec_hash) {
  auto params = named_params(state);

  std::string blob;
  json layout = json::array();
  auto append_tensor = [&](const std::string& name, const Tensor& t) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["offset"] = blob.size();
    layout.push_back(entry);
    for (std::size_t i = 0; i < t.size(); ++i) append_f64_le(blob, t[i]);
  };
  for (auto& [name, tensor] : params) append_tensor(name, *tensor);
  for (std::size_t k = 0; k < state.opt.m.size(); ++k) {
    append_tensor("adam.m." + std::to_string(k), state.opt.m[k]);
  }
  for (std::size_t k = 0; k < state.opt.v.size(); ++k) {
    append_tensor("adam.v." + std::to_string(k), state.opt.v[k]);
  }

  json manifest;
  manifest["version"] = 1;
  manifest["spec_hash"] = spec_hash;
  manifest["phase"] = state.phase == TrainPhase::solver_free ? "solver_free" : "observed";
  manifest["iteration"] = state.iteration;
  manifest["lr"] = state.lr;
  manifest["rng"] = state.rng.serialize();
  manifest["adam_updates"] = state.opt.updates;
  manifest["heads"]["alpha"] = head_meta(state.alpha);
  manifest["heads"]["beta"] = head_meta(state.beta);
  if (state.phi) manifest["heads"]["phi"] = head_meta(*state.phi);
  manifest["params"] = layout;
  manifest["blob_bytes"] = blob.size();
  char crc_hex[16];
  std::snprintf(crc_hex, sizeof(crc_hex), "%08x", blob_crc(blob));
  manifest["blob_crc32"] = crc_hex;
  const std::string base = prefix.substr(prefix.find_last_of('/') + 1);
  manifest["blob_file"] = base + ".bin";

  write_file_atomic(prefix + ".bin", blob);
  write_file_atomic(prefix + ".json", manifest.dump(2) + "\n");
}

namespace {

struct Segment {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
};

Tensor read_tensor(const std::string& blob, const Segment& seg) {
  std::size_t n = 1;
  for (auto d : seg.shape) n *= d;
  if (seg.offset + 8 * n > blob.size()) {
    throw ConfigError("checkpoint: segment '" + seg.name + "' overruns the blob");
  }
  Tensor t = Tensor::zeros(seg.shape);
  for (std::size_t i = 0; i < n; ++i) t[i] = read_f64_le(blob, seg.offset + 8 * i);
  return t;
}

HeadParams rebuild_head(const std::string& prefix, const std::vector<Segment>& segments,
                        const std::string& blob, const json& meta) {
  HeadParams h;
  h.trunk.activation = ad::activation_from_string(meta.at("activation").get<std::string>());
  h.lv_min = meta.at("lv_min").get<double>();
  h.lv_max = meta.at("lv_max").get<double>();
  auto find = [&](const std::string& name) -> const Segment* {
    for (const auto& s : segments) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };
  for (std::size_t k = 0;; ++k) {
    const Segment* w = find(prefix + ".trunk.w" + std::to_string(k));
    const Segment* b = find(prefix + ".trunk.b" + std::to_string(k));
    if (w == nullptr || b == nullptr) break;
    h.trunk.weights.push_back(read_tensor(blob, *w));
    h.trunk.biases.push_back(read_tensor(blob, *b));
  }
  const Segment* mw = find(prefix + ".mean_w");
  const Segment* mb = find(prefix + ".mean_b");
  const Segment* lw = find(prefix + ".logvar_w");
  const Segment* lb = find(prefix + ".logvar_b");
  if (h.trunk.weights.empty() || mw == nullptr || mb == nullptr || lw == nullptr ||
      lb == nullptr) {
    throw ConfigError("checkpoint: head '" + prefix + "' is incomplete");
  }
  h.mean_w = read_tensor(blob, *mw);
  h.mean_b = read_tensor(blob, *mb);
  h.logvar_w = read_tensor(blob, *lw);
  h.logvar_b = read_tensor(blob, *lb);
  h.validate();
  return h;
}

}  // namespace

TrainState load_checkpoint(const std::string& path, const std::string& expected_spec_hash) {
  const std::string prefix = strip_json_ext(path);
  json manifest;
  try {
    manifest = json::parse(read_file(prefix + ".json"));
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.at("version").get<int>() != 1) {
    throw ConfigError("checkpoint: unsupported version");
  }
  if (!expected_spec_hash.empty()) {
    const auto stored = manifest.at("spec_hash").get<std::string>();
    if (stored != expected_spec_hash) {
      throw ConfigError("checkpoint was trained against a different problem spec (hash " +
                        stored + " vs " + expected_spec_hash + ")");
    }
  }

  const std::string dir = prefix.find('/') == std::string::npos
                              ? ""
                              : prefix.substr(0, prefix.find_last_of('/') + 1);
  const std::string blob = read_file(dir + manifest.at("blob_file").get<std::string>());
  if (blob.size() != manifest.at("blob_bytes").get<std::size_t>()) {
    throw ConfigError("checkpoint: blob size does not match manifest");
  }
  char crc_hex[16];
  std::snprintf(crc_hex, sizeof(crc_hex), "%08x", blob_crc(blob));
  if (manifest.at("blob_crc32").get<std::string>() != crc_hex) {
    throw ConfigError("checkpoint: blob CRC32 mismatch, refusing corrupted file");
  }

  std::vector<Segment> segments;
  for (const auto& e : manifest.at("params")) {
    Segment s;
    s.name = e.at("name").get<std::string>();
    s.shape = e.at("shape").get<std::vector<std::size_t>>();
    s.offset = e.at("offset").get<std::size_t>();
    segments.push_back(std::move(s));
  }

  TrainState state;
  state.phase = manifest.at("phase").get<std::string>() == "observed" ? TrainPhase::observed
                                                                      : TrainPhase::solver_free;
  state.iteration = manifest.at("iteration").get<std::uint64_t>();
  state.lr = manifest.at("lr").get<double>();
  state.rng = RandomStream::deserialize(manifest.at("rng").get<std::string>());
  state.opt.updates = manifest.at("adam_updates").get<std::uint64_t>();

  const auto& heads = manifest.at("heads");
  state.alpha = rebuild_head("alpha", segments, blob, heads.at("alpha"));
  state.beta = rebuild_head("beta", segments, blob, heads.at("beta"));
  if (heads.contains("phi")) state.phi = rebuild_head("phi", segments, blob, heads.at("phi"));

  for (std::size_t k = 0;; ++k) {
    const std::string name = "adam.m." + std::to_string(k);
    const Segment* seg = nullptr;
    for (const auto& s : segments) {
      if (s.name == name) seg = &s;
    }
    if (seg == nullptr) break;
    state.opt.m.push_back(read_tensor(blob, *seg));
  }
  for (std::size_t k = 0;; ++k) {
    const std::string name = "adam.v." + std::to_string(k);
    const Segment* seg = nullptr;
    for (const auto& s : segments) {
      if (s.name == name) seg = &s;
    }
    if (seg == nullptr) break;
    state.opt.v.push_back(read_tensor(blob, *seg));
  }
  return state;
}

std::string checkpoint_spec_hash(const std::string& path) {
  const std::string prefix = strip_json_ext(path);
  json manifest = json::parse(read_file(prefix + ".json"));
  return manifest.value("spec_hash", "");
}

}  // namespace wrvi
