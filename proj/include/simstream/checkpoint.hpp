#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "simstream/model.hpp"
#include "simstream/train.hpp"
#include "simstream/vocab.hpp"

namespace simstream {

inline constexpr int kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[] = "SIMST001";  // 8 bytes on disk

// Raised when a checkpoint file is malformed; names the offending field.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& msg)
      : std::runtime_error("checkpoint " + field + ": " + msg),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  TrainConfig config;
  Vocabulary vocab_src;
  Vocabulary vocab_tgt;
  Seq2SeqParams<float> params;
};

// Layout: 8-byte magic, 4-byte little-endian manifest length, UTF-8 JSON
// manifest {version, config, vocab_src, vocab_tgt, tensors:[{name, shape,
// offset, length}]}, then the concatenated little-endian float32 payload.
// Offsets/lengths are bytes into the payload. Roundtrips are bitwise exact.
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace simstream
