#include "simstream/vocab.hpp"

#include <algorithm>
#include <stdexcept>

namespace simstream {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kBosToken);
  add(kEosToken);
  add(kUnkToken);
}

void Vocabulary::add(const std::string& token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& corpus,
    std::size_t max_size) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (max_size == 0)
    throw std::invalid_argument("build_vocab: max_size must be positive");
  Vocabulary v;
  std::unordered_map<std::string, long long> counts;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence)
      if (v.token_to_id_.find(tok) == v.token_to_id_.end()) ++counts[tok];
  std::vector<std::pair<std::string, long long>> ranked(counts.begin(),
                                                        counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t capacity =
      max_size > kNumReservedIds ? max_size - kNumReservedIds : 0;
  for (std::size_t i = 0; i < ranked.size() && i < capacity; ++i)
    v.add(ranked[i].first);
  return v;
}

Vocabulary Vocabulary::from_tokens(
    const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < kNumReservedIds)
    throw std::invalid_argument("vocabulary: missing reserved tokens");
  const char* reserved[kNumReservedIds] = {kPadToken, kBosToken, kEosToken,
                                           kUnkToken};
  for (int i = 0; i < kNumReservedIds; ++i)
    if (id_to_token[i] != reserved[i])
      throw std::invalid_argument("vocabulary: reserved slot " +
                                  std::to_string(i) + " is not " +
                                  reserved[i]);
  Vocabulary v;
  for (std::size_t i = kNumReservedIds; i < id_to_token.size(); ++i) {
    if (v.token_to_id_.count(id_to_token[i]))
      throw std::invalid_argument("vocabulary: duplicate token " +
                                  id_to_token[i]);
    v.add(id_to_token[i]);
  }
  return v;
}

int Vocabulary::to_id(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::to_token(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("vocabulary: id " + std::to_string(id) +
                            " out of range");
  return id_to_token_[id];
}

std::vector<int> Vocabulary::encode(
    const std::vector<std::string>& sentence) const {
  std::vector<int> ids;
  ids.reserve(sentence.size());
  for (const auto& tok : sentence) ids.push_back(to_id(tok));
  return ids;
}

std::vector<std::string> Vocabulary::to_tokens(
    const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const int id : ids) out.push_back(to_token(id));
  return out;
}

}  // namespace simstream
