#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace simstream {

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumReservedIds = 4;

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kBosToken = "<s>";
inline constexpr const char* kEosToken = "</s>";
inline constexpr const char* kUnkToken = "<unk>";

// Bidirectional token<->id map. Ids 0..3 are reserved control tokens and are
// never reassigned; unknown tokens map to <unk> on lookup.
class Vocabulary {
 public:
  Vocabulary();

  // Keeps the most frequent tokens up to max_size (reserved slots included);
  // frequency ties break lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                          std::size_t max_size);

  // Reconstructs a vocabulary from a full id-ordered token list (checkpoint
  // load path); validates reserved slots and uniqueness.
  static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

  int to_id(const std::string& token) const;
  const std::string& to_token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(const std::vector<std::string>& sentence) const;
  std::vector<std::string> to_tokens(const std::vector<int>& ids) const;

 private:
  void add(const std::string& token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace simstream
