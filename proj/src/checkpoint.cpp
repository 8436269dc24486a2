#include "rdrn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rdrn/config.hpp"
#include "rdrn/error.hpp"

namespace rdrn {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native byte order");

namespace {

constexpr int kFormatVersion = 1;

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

Shape shape_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw CheckpointError("malformed tensor shape in manifest");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json index_tensors(const std::vector<NamedVar>& list, std::uint64_t& offset) {
  json arr = json::array();
  for (const auto& nv : list) {
    const Tensor& t = nv.var->value;
    arr.push_back({{"name", nv.name}, {"shape", shape_json(t.shape())}, {"offset", offset}});
    offset += t.numel();
  }
  return arr;
}

void write_blob(std::ofstream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw CheckpointError("cannot open " + (dir / "manifest.json").string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<float> read_floats(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw CheckpointError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(float) != 0) throw CheckpointError("truncated blob " + path.string());
  std::vector<float> data(bytes / sizeof(float));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  return data;
}

KeyValues kv_from_json(const json& j) {
  KeyValues kv;
  for (auto it = j.begin(); it != j.end(); ++it) kv[it.key()] = it.value().get<std::string>();
  return kv;
}

json kv_to_json(const KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

void fill_from(const json& index, const std::vector<NamedVar>& targets,
               const std::vector<float>& blob, const char* what) {
  if (index.size() != targets.size()) {
    // Report the first name present on one side only.
    const std::size_t common = std::min<std::size_t>(index.size(), targets.size());
    for (std::size_t i = 0; i < common; ++i) {
      if (index[i]["name"].get<std::string>() != targets[i].name) {
        throw CheckpointError(std::string(what) + " mismatch at tensor '" + targets[i].name + "'",
                              targets[i].name);
      }
    }
    const std::string name = index.size() > targets.size()
                                 ? index[common]["name"].get<std::string>()
                                 : targets[common].name;
    throw CheckpointError(std::string(what) + " count mismatch: checkpoint has " +
                              std::to_string(index.size()) + ", model has " +
                              std::to_string(targets.size()) + " (first unmatched '" + name + "')",
                          name);
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& entry = index[i];
    const std::string& name = targets[i].name;
    Tensor& dst = targets[i].var->value;
    if (entry["name"].get<std::string>() != name) {
      throw CheckpointError("tensor name mismatch: checkpoint has '" +
                                entry["name"].get<std::string>() + "', model expects '" + name +
                                "'",
                            name);
    }
    const Shape shape = shape_from(entry["shape"]);
    if (!(shape == dst.shape())) {
      throw CheckpointError("shape mismatch for '" + name + "': checkpoint " + shape.str() +
                                ", model " + dst.shape().str(),
                            name);
    }
    const auto offset = entry["offset"].get<std::uint64_t>();
    if (offset + dst.numel() > blob.size()) {
      throw CheckpointError("weights blob too short for '" + name + "'", name);
    }
    std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(offset), dst.numel(), dst.data());
  }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Rdrn& model, const CheckpointMeta& meta,
                     const AdamState* optimizer) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  const auto params = model.parameters(true);
  const auto buffers = model.buffers();
  std::uint64_t offset = 0;
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["dtype"] = "float32-le";
  manifest["stage"] = to_string(meta.stage);
  manifest["step"] = meta.step;
  manifest["model_config"] = kv_to_json(to_key_values(meta.model));
  manifest["train_config"] = kv_to_json(to_key_values(meta.train));
  manifest["tensors"] = index_tensors(params, offset);
  manifest["buffers"] = index_tensors(buffers, offset);
  manifest["has_optimizer"] = optimizer != nullptr;

  {
    std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "weights.bin").string());
    for (const auto& nv : params) write_blob(out, nv.var->value);
    for (const auto& nv : buffers) write_blob(out, nv.var->value);
    if (!out) throw IoError("write failed for " + (dir / "weights.bin").string());
  }
  if (optimizer) {
    if (optimizer->first_moment.size() != params.size() ||
        optimizer->second_moment.size() != params.size()) {
      throw InputError("optimizer state does not match the model's parameter list");
    }
    manifest["optimizer_step"] = optimizer->step;
    std::ofstream out(dir / "optimizer.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "optimizer.bin").string());
    for (const auto& t : optimizer->first_moment) write_blob(out, t);
    for (const auto& t : optimizer->second_moment) write_blob(out, t);
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

CheckpointMeta read_checkpoint_meta(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  CheckpointMeta meta;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version");
    }
    meta.model = model_config_from(kv_from_json(manifest.at("model_config")));
    meta.train = train_config_from(kv_from_json(manifest.at("train_config")));
    meta.stage = parse_stage(manifest.at("stage").get<std::string>());
    meta.step = manifest.at("step").get<long>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid config in manifest: ") + e.what());
  }
  return meta;
}

void load_weights(const fs::path& dir, const Rdrn& model) {
  const json manifest = read_manifest(dir);
  const std::vector<float> blob = read_floats(dir / "weights.bin");
  try {
    fill_from(manifest.at("tensors"), model.parameters(true), blob, "parameter");
    fill_from(manifest.at("buffers"), model.buffers(), blob, "buffer");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  CheckpointMeta meta = read_checkpoint_meta(dir);
  LoadedCheckpoint out{meta, Rdrn(meta.model), std::nullopt};
  load_weights(dir, out.model);

  const json manifest = read_manifest(dir);
  if (manifest.value("has_optimizer", false)) {
    const std::vector<float> blob = read_floats(dir / "optimizer.bin");
    const auto params = out.model.parameters(true);
    AdamState st;
    st.step = manifest.at("optimizer_step").get<long>();
    std::size_t pos = 0;
    for (int moment = 0; moment < 2; ++moment) {
      auto& dst = moment == 0 ? st.first_moment : st.second_moment;
      for (const auto& nv : params) {
        Tensor t(nv.var->value.shape());
        if (pos + t.numel() > blob.size()) throw CheckpointError("optimizer blob too short");
        std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(pos), t.numel(), t.data());
        pos += t.numel();
        dst.push_back(std::move(t));
      }
    }
    out.optimizer = std::move(st);
  }
  return out;
}

std::size_t manifest_tensor_count(const fs::path& dir) {
  return read_manifest(dir).at("tensors").size();
}

}  // namespace rdrn
