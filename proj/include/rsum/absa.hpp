#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rsum {

enum class Sentiment { positive, negative, neutral };

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view s);

// positive <-> negative; neutral has no opposite.
std::optional<Sentiment> opposite(Sentiment s);

// Aspect-based sentiment annotation of one sentence.
struct AbsaAnnotation {
  std::string aspect_category;
  Sentiment sentiment = Sentiment::neutral;
  std::vector<std::pair<std::string, std::string>> pairs;  // (noun, adjective)

  bool operator==(const AbsaAnnotation&) const = default;
};

}  // namespace rsum
