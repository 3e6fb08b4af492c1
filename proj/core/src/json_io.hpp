#pragma once

// nlohmann conversions for the wire/transcript types. Private to the library.

#include <corder/expert.hpp>

#include <json.hpp>

namespace corder::detail {

using json = nlohmann::ordered_json;

json to_json(const ExpertQuery& q);
ExpertQuery query_from_json(const json& j);

json to_json(const Verdict& v);
/// Interprets `j` according to the query kind.
Verdict verdict_from_json(const json& j, QueryKind kind);

json to_json(const TranscriptRecord& r);
TranscriptRecord record_from_json(const json& j);

}  // namespace corder::detail
