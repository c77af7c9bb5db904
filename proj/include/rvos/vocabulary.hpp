#pragma once

#include <map>
#include <string>
#include <vector>

namespace rvos {

/// Closed whitespace-token vocabulary. Id 0 is the reserved unknown token.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  explicit Vocabulary(const std::vector<std::string>& words);

  /// Tokens used by the synthetic expression templates.
  static Vocabulary synthetic();

  int id(const std::string& word) const;
  std::vector<int> encode(const std::string& expression) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

std::vector<std::string> split_whitespace(const std::string& s);

}  // namespace rvos
