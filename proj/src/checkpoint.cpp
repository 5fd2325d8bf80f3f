#include "simstream/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "simstream/textio.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace simstream {

using nlohmann::json;

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["learning_rate"] = cfg.learning_rate;
  j["decay_rate"] = cfg.decay_rate;
  j["dropout"] = cfg.dropout;
  j["epochs"] = cfg.epochs;
  j["hidden_size"] = cfg.hidden_size;
  j["embed_size"] = cfg.embed_size;
  j["seed"] = cfg.seed;
  j["decay_start_epoch"] = cfg.decay_start_epoch;
  if (cfg.grad_clip)
    j["grad_clip"] = *cfg.grad_clip;
  else
    j["grad_clip"] = nullptr;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.decay_rate = j.at("decay_rate").get<double>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.hidden_size = j.at("hidden_size").get<int>();
  cfg.embed_size = j.at("embed_size").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.decay_start_epoch = j.at("decay_start_epoch").get<int>();
  if (j.contains("grad_clip") && !j.at("grad_clip").is_null())
    cfg.grad_clip = j.at("grad_clip").get<double>();
  else
    cfg.grad_clip = std::nullopt;
  return cfg;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  json manifest;
  manifest["version"] = cp.version;
  manifest["config"] = config_to_json(cp.config);
  manifest["vocab_src"] = cp.vocab_src.tokens();
  manifest["vocab_tgt"] = cp.vocab_tgt.tokens();

  json tensors = json::array();
  std::string payload;
  std::uint64_t offset = 0;
  cp.params.for_each_tensor([&](const char* name,
                                const std::vector<float>& v,
                                const std::vector<int>& shape) {
    const std::uint64_t bytes = v.size() * sizeof(float);
    tensors.push_back({{"name", name},
                       {"shape", shape},
                       {"offset", offset},
                       {"length", bytes}});
    const std::size_t pos = payload.size();
    payload.resize(pos + bytes);
    std::memcpy(payload.data() + pos, v.data(), bytes);
    offset += bytes;
  });
  manifest["tensors"] = std::move(tensors);

  const std::string mstr = manifest.dump();
  std::string out;
  out.reserve(8 + 4 + mstr.size() + payload.size());
  out.append(kCheckpointMagic, 8);
  const std::uint32_t mlen = static_cast<std::uint32_t>(mstr.size());
  char lenbuf[4];
  std::memcpy(lenbuf, &mlen, 4);
  out.append(lenbuf, 4);
  out += mstr;
  out += payload;
  atomic_write_file(path, out);
}

namespace {

struct TensorEntry {
  std::string name;
  std::vector<int> shape;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

std::vector<float> slice_floats(const std::string& payload,
                                const TensorEntry& e) {
  std::vector<float> v(e.length / sizeof(float));
  std::memcpy(v.data(), payload.data() + e.offset, e.length);
  return v;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw FormatError("magic", "file too short");
  if (bytes.compare(0, 8, kCheckpointMagic, 8) != 0)
    throw FormatError("magic", "bad magic bytes");
  std::uint32_t mlen = 0;
  std::memcpy(&mlen, bytes.data() + 8, 4);
  if (12 + static_cast<std::size_t>(mlen) > bytes.size())
    throw FormatError("manifest", "declared length exceeds file size");

  json manifest;
  try {
    manifest = json::parse(bytes.substr(12, mlen));
  } catch (const json::exception& e) {
    throw FormatError("manifest", std::string("not valid JSON: ") + e.what());
  }

  Checkpoint cp;
  try {
    cp.version = manifest.at("version").get<int>();
  } catch (const json::exception&) {
    throw FormatError("version", "missing or not an integer");
  }
  if (cp.version != kCheckpointVersion)
    throw FormatError("version",
                      "unsupported version " + std::to_string(cp.version));
  try {
    cp.config = config_from_json(manifest.at("config"));
  } catch (const json::exception& e) {
    throw FormatError("config", e.what());
  }
  try {
    cp.vocab_src = Vocabulary::from_tokens(
        manifest.at("vocab_src").get<std::vector<std::string>>());
  } catch (const std::exception& e) {
    throw FormatError("vocab_src", e.what());
  }
  try {
    cp.vocab_tgt = Vocabulary::from_tokens(
        manifest.at("vocab_tgt").get<std::vector<std::string>>());
  } catch (const std::exception& e) {
    throw FormatError("vocab_tgt", e.what());
  }

  std::vector<TensorEntry> entries;
  try {
    for (const auto& t : manifest.at("tensors")) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      e.shape = t.at("shape").get<std::vector<int>>();
      e.offset = t.at("offset").get<std::uint64_t>();
      e.length = t.at("length").get<std::uint64_t>();
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("tensors", e.what());
  }

  const std::string payload = bytes.substr(12 + mlen);
  std::uint64_t expected_offset = 0;
  for (const auto& e : entries) {
    if (e.offset != expected_offset)
      throw FormatError("tensors", "non-contiguous blob for " + e.name);
    if (e.length % sizeof(float) != 0)
      throw FormatError("tensors", "length of " + e.name +
                                       " is not a multiple of 4");
    std::uint64_t numel = 1;
    for (const int d : e.shape) {
      if (d <= 0) throw FormatError("tensors", "bad shape for " + e.name);
      numel *= static_cast<std::uint64_t>(d);
    }
    if (numel * sizeof(float) != e.length)
      throw FormatError("tensors", "shape/length mismatch for " + e.name);
    expected_offset += e.length;
  }
  if (expected_offset != payload.size())
    throw FormatError("payload",
                      "manifest declares " + std::to_string(expected_offset) +
                          " bytes but payload holds " +
                          std::to_string(payload.size()));

  // Rebuild parameters through the canonical tensor walk so the expected
  // name set, order and shapes are all enforced.
  Rng rng(0);
  cp.params = Seq2SeqParams<float>::init(
      cp.vocab_src.size(), cp.vocab_tgt.size(), cp.config.embed_size,
      cp.config.hidden_size, rng);
  std::size_t idx = 0;
  cp.params.for_each_tensor([&](const char* name, std::vector<float>& v,
                                const std::vector<int>& shape) {
    if (idx >= entries.size())
      throw FormatError("tensors", std::string("missing tensor ") + name);
    const TensorEntry& e = entries[idx++];
    if (e.name != name)
      throw FormatError("tensors", "expected tensor " + std::string(name) +
                                       " but found " + e.name);
    if (e.shape != shape)
      throw FormatError("tensors",
                        "unexpected shape for " + std::string(name));
    v = slice_floats(payload, e);
    if (!all_finite(v.data(), v.size()))
      throw FormatError("tensors",
                        "non-finite values in " + std::string(name));
  });
  if (idx != entries.size())
    throw FormatError("tensors", "manifest lists more tensors than expected");
  return cp;
}

}  // namespace simstream
