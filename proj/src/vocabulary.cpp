#include "rvos/vocabulary.hpp"

#include <sstream>

#include "rvos/errors.hpp"

namespace rvos {

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_.push_back(kUnknown);
  index_.emplace(kUnknown, 0);
  for (const auto& w : words) {
    if (index_.count(w)) continue;
    index_.emplace(w, static_cast<int>(words_.size()));
    words_.push_back(w);
  }
}

Vocabulary Vocabulary::synthetic() {
  return Vocabulary({"the", "objects", "moving", "left", "right", "up", "down", "that", "stays",
                     "stay", "still", "in", "a", "circle", "red", "green", "blue", "yellow",
                     "magenta", "cyan", "square", "triangle", "squares", "circles", "triangles"});
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& expression) const {
  const auto tokens = split_whitespace(expression);
  if (tokens.empty()) throw DomainError("empty expression");
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

}  // namespace rvos
