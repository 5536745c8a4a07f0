#include "reid/error.hpp"
#include "reid/ingest/event.hpp"

namespace reid::ingest {

IngestEvent event_from_json(const nlohmann::json& r) {
  auto malformed = [&](const std::string& why) {
    std::string id = r.is_object() && r.contains("id") && r["id"].is_string() ? r["id"].get<std::string>() : "?";
    return Error(ErrorCode::MalformedEvent, "event " + id + ": " + why);
  };
  if (!r.is_object()) throw malformed("record is not an object");
  IngestEvent e;
  if (!r.contains("id") || !r["id"].is_string() || r["id"].get<std::string>().empty()) {
    throw malformed("missing id");
  }
  e.external_id = r["id"].get<std::string>();
  if (!r.contains("event_type") || !r["event_type"].is_string()) throw malformed("missing event_type");
  e.event_type = r["event_type"].get<std::string>();
  if (!r.contains("time") || !r["time"].is_string()) throw malformed("missing time");
  auto t = parse_utc(r["time"].get<std::string>());
  if (!t) throw malformed("unparseable time '" + r["time"].get<std::string>() + "'");
  e.time = *t;

  if (r.contains("location") && !r["location"].is_null()) {
    const auto& loc = r["location"];
    if (!loc.is_object() || !loc.contains("latitude") || !loc.contains("longitude") ||
        !loc["latitude"].is_number() || !loc["longitude"].is_number()) {
      throw malformed("bad location");
    }
    e.location = GeoPoint{loc["latitude"].get<double>(), loc["longitude"].get<double>()};
  }
  if (r.contains("reported_by") && r["reported_by"].is_object()) {
    e.reporter = r["reported_by"].value("username", std::string{});
  }
  if (r.contains("event_details") && r["event_details"].is_object()) {
    const auto& d = r["event_details"];
    if (d.contains("group_size") && d["group_size"].is_number_integer()) e.group_size = d["group_size"].get<int>();
    if (d.contains("composition") && d["composition"].is_string()) e.composition = d["composition"].get<std::string>();
  }
  return e;
}

nlohmann::json event_to_json(const IngestEvent& e) {
  nlohmann::json j{{"id", e.external_id}, {"event_type", e.event_type}, {"time", format_utc(e.time)}};
  j["location"] = e.location ? nlohmann::json{{"latitude", e.location->latitude}, {"longitude", e.location->longitude}}
                             : nlohmann::json(nullptr);
  j["reported_by"] = {{"username", e.reporter}};
  nlohmann::json details = nlohmann::json::object();
  if (e.group_size) details["group_size"] = *e.group_size;
  if (!e.composition.empty()) details["composition"] = e.composition;
  j["event_details"] = details;
  return j;
}

}  // namespace reid::ingest
