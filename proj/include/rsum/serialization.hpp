#pragma once

// JSON mappings for the persisted record types.

#include "json.hpp"
#include "rsum/absa.hpp"
#include "rsum/corpus.hpp"
#include "rsum/opinions.hpp"

namespace rsum {

void to_json(nlohmann::json& j, const AbsaAnnotation& a);
void from_json(const nlohmann::json& j, AbsaAnnotation& a);

void to_json(nlohmann::json& j, const SentenceUnit& u);
void from_json(const nlohmann::json& j, SentenceUnit& u);

void to_json(nlohmann::json& j, const Opinion& o);
void from_json(const nlohmann::json& j, Opinion& o);

}  // namespace rsum
