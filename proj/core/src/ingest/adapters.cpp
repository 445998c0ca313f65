#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "rb/common/error.hpp"
#include "rb/ingest/ingest.hpp"

namespace rb::ingest {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumEventTypes> kEventTypeNames = {
    "Pass",  "Shot",      "Interception", "Dribble",      "FoulWon",        "FoulCommitted",
    "GoalkeeperAction", "Block", "Clearance", "BallRecovery", "CounterpressTag",
};

json parse_json(std::string_view bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
}

[[noreturn]] void structural(const std::string& what) {
  // The DOM does not retain offsets; structural problems are reported at file start
  // with enough context to locate the record.
  throw ParseError(what, 0);
}

// nlohmann type/range errors become ParseErrors so callers see one error family.
template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    structural(std::string(what) + ": " + e.what());
  }
}

std::string id_string(const json& v, const std::string& context) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  structural(context + ": id must be a string or integer");
}

const json& require(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object()) structural(context + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) structural(context + ": missing field '" + key + "'");
  return *it;
}

std::string nested_name(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_object()) return {};
  auto name = it->find("name");
  if (name == it->end() || !name->is_string()) return {};
  return name->get<std::string>();
}

bool truthy(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it != obj.end() && it->is_boolean() && it->get<bool>();
}

// ---------------------------------------------------------------------------
// native: {"match_id": ..., "events": [{"type", "player_id", "team_id",
//          "attributes": {...}, "xg", "index"}]}
// ---------------------------------------------------------------------------
class NativeAdapter final : public SourceAdapter {
 public:
  std::string_view name() const override { return "native"; }

  ParsedEvents parse_events(std::string_view bytes, const std::string& match_id) const override {
    return guarded("events", [&] { return parse_events_impl(bytes, match_id); });
  }

  MatchSheet parse_lineup(std::string_view bytes, const std::string& match_id,
                          const MatchMetadataIndex& metadata) const override {
    return guarded("lineup", [&] { return parse_lineup_impl(bytes, match_id, metadata); });
  }

 private:
  ParsedEvents parse_events_impl(std::string_view bytes, const std::string& match_id) const {
    const json doc = parse_json(bytes);
    if (!doc.is_object()) structural("native events: top level must be an object");
    std::string mid = match_id;
    if (auto it = doc.find("match_id"); it != doc.end()) mid = id_string(*it, "native events");
    const json& list = require(doc, "events", "native events");
    if (!list.is_array()) structural("native events: 'events' must be an array");

    struct Indexed {
      std::int64_t index;
      NormalizedEvent event;
    };
    std::vector<Indexed> kept;
    ParsedEvents out;
    std::int64_t position = 0;
    for (const json& e : list) {
      const std::string ctx = "native events[" + std::to_string(position) + "]";
      const std::int64_t index = e.is_object() && e.contains("index")
                                     ? e.at("index").get<std::int64_t>()
                                     : position;
      ++position;
      const json& type_field = require(e, "type", ctx);
      if (!type_field.is_string()) structural(ctx + ": 'type' must be a string");
      auto type = event_type_from_string(type_field.get<std::string>());
      if (!type) {
        ++out.dropped;
        continue;
      }
      NormalizedEvent ev;
      ev.match_id = mid;
      ev.type = *type;
      ev.player_id = id_string(require(e, "player_id", ctx), ctx);
      ev.team_id = id_string(require(e, "team_id", ctx), ctx);
      if (auto attrs = e.find("attributes"); attrs != e.end()) {
        if (!attrs->is_object()) structural(ctx + ": 'attributes' must be an object");
        for (auto it = attrs->begin(); it != attrs->end(); ++it) {
          if (it->is_boolean()) {
            ev.attributes[it.key()] = it->get<bool>() ? 1.0 : 0.0;
          } else if (it->is_number()) {
            ev.attributes[it.key()] = it->get<double>();
          } else {
            structural(ctx + ": attribute '" + it.key() + "' must be boolean or numeric");
          }
        }
      }
      if (auto xg = e.find("xg"); xg != e.end() && !xg->is_null()) {
        if (!xg->is_number()) structural(ctx + ": 'xg' must be numeric");
        ev.xg = xg->get<double>();
      }
      if ((ev.type == EventType::Shot) != ev.xg.has_value()) {
        structural(ctx + ": xg must be present exactly on Shot events");
      }
      if (ev.xg && *ev.xg < 0.0) structural(ctx + ": xg must be non-negative");
      if (ev.flag("own_goal") || ev.flag("penalty_shootout")) {
        ++out.dropped;
        continue;
      }
      kept.push_back({index, std::move(ev)});
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Indexed& a, const Indexed& b) { return a.index < b.index; });
    out.events.reserve(kept.size());
    for (auto& k : kept) out.events.push_back(std::move(k.event));
    return out;
  }

  MatchSheet parse_lineup_impl(std::string_view bytes, const std::string& match_id,
                               const MatchMetadataIndex& /*metadata*/) const {
    const json doc = parse_json(bytes);
    const std::string ctx = "native lineup";
    if (!doc.is_object()) structural(ctx + ": top level must be an object");
    MatchSheet sheet;
    sheet.match_id = doc.contains("match_id") ? id_string(doc.at("match_id"), ctx) : match_id;
    sheet.kickoff_date = require(doc, "kickoff_date", ctx).get<std::string>();
    sheet.league_id = id_string(require(doc, "league_id", ctx), ctx);
    sheet.home_team_id = id_string(require(doc, "home_team_id", ctx), ctx);
    sheet.away_team_id = id_string(require(doc, "away_team_id", ctx), ctx);
    const json& entries = require(doc, "entries", ctx);
    if (!entries.is_array()) structural(ctx + ": 'entries' must be an array");
    for (const json& e : entries) {
      SheetEntry entry;
      entry.player_id = id_string(require(e, "player_id", ctx), ctx);
      entry.team_id = id_string(require(e, "team_id", ctx), ctx);
      entry.position_id = require(e, "position_id", ctx).get<int>();
      entry.participated = require(e, "participated", ctx).get<bool>();
      sheet.entries.push_back(std::move(entry));
    }
    return sheet;
  }
};

// ---------------------------------------------------------------------------
// statsbomb: events/<match>.json is an array of event objects,
// lineups/<match>.json an array of two team objects, and match metadata comes
// from the competition/season match listings.
// ---------------------------------------------------------------------------
class StatsBombAdapter final : public SourceAdapter {
 public:
  std::string_view name() const override { return "statsbomb"; }

  ParsedEvents parse_events(std::string_view bytes, const std::string& match_id) const override {
    return guarded("events", [&] { return parse_events_impl(bytes, match_id); });
  }

  MatchSheet parse_lineup(std::string_view bytes, const std::string& match_id,
                          const MatchMetadataIndex& metadata) const override {
    return guarded("lineup", [&] { return parse_lineup_impl(bytes, match_id, metadata); });
  }

  MatchMetadataIndex parse_metadata(std::string_view bytes) const override {
    return guarded("metadata", [&] { return parse_metadata_impl(bytes); });
  }

 private:
  ParsedEvents parse_events_impl(std::string_view bytes, const std::string& match_id) const {
    const json doc = parse_json(bytes);
    if (!doc.is_array()) structural("statsbomb events: top level must be an array");

    struct Indexed {
      std::int64_t index;
      int order;  // base event before its counterpress tag
      NormalizedEvent event;
    };
    std::vector<Indexed> kept;
    ParsedEvents out;
    std::int64_t position = 0;
    for (const json& e : doc) {
      const std::string ctx = "statsbomb events[" + std::to_string(position) + "]";
      if (!e.is_object()) structural(ctx + ": expected an object");
      const std::int64_t index = e.value("index", position);
      ++position;
      if (e.value("period", 1) == 5) {  // penalty shootout
        ++out.dropped;
        continue;
      }
      const std::string type = nested_name(e, "type");
      const bool has_player = e.contains("player") && e.at("player").is_object();
      std::optional<NormalizedEvent> base;
      if (has_player) base = translate(e, type, match_id, ctx);
      if (base) {
        kept.push_back({index, 0, *base});
      } else {
        ++out.dropped;
      }
      if (has_player && truthy(e, "counterpress")) {
        NormalizedEvent tag;
        tag.match_id = match_id;
        tag.type = EventType::CounterpressTag;
        tag.player_id = id_string(require(e.at("player"), "id", ctx), ctx);
        tag.team_id = id_string(require(require(e, "team", ctx), "id", ctx), ctx);
        kept.push_back({index, 1, std::move(tag)});
      }
    }
    std::stable_sort(kept.begin(), kept.end(), [](const Indexed& a, const Indexed& b) {
      return a.index != b.index ? a.index < b.index : a.order < b.order;
    });
    out.events.reserve(kept.size());
    for (auto& k : kept) out.events.push_back(std::move(k.event));
    return out;
  }

  MatchSheet parse_lineup_impl(std::string_view bytes, const std::string& match_id,
                               const MatchMetadataIndex& metadata) const {
    const json doc = parse_json(bytes);
    const std::string ctx = "statsbomb lineup " + match_id;
    if (!doc.is_array()) structural(ctx + ": top level must be an array");
    auto meta = metadata.find(match_id);
    if (meta == metadata.end()) {
      throw IntegrityError("statsbomb: no match metadata for match " + match_id +
                           " (pass the matches directory)");
    }
    MatchSheet sheet;
    sheet.match_id = match_id;
    sheet.kickoff_date = meta->second.kickoff_date;
    sheet.league_id = meta->second.league_id;
    sheet.home_team_id = meta->second.home_team_id;
    sheet.away_team_id = meta->second.away_team_id;
    for (const std::string& side : {sheet.home_team_id, sheet.away_team_id}) {
      for (const json& team : doc) {
        if (id_string(require(team, "team_id", ctx), ctx) != side) continue;
        for (const json& p : require(team, "lineup", ctx)) {
          SheetEntry entry;
          entry.player_id = id_string(require(p, "player_id", ctx), ctx);
          entry.team_id = side;
          auto positions = p.find("positions");
          if (positions != p.end() && positions->is_array() && !positions->empty()) {
            entry.position_id = require(positions->front(), "position_id", ctx).get<int>();
            entry.participated = true;
          }
          sheet.entries.push_back(std::move(entry));
        }
      }
    }
    return sheet;
  }

  MatchMetadataIndex parse_metadata_impl(std::string_view bytes) const {
    const json doc = parse_json(bytes);
    if (!doc.is_array()) structural("statsbomb matches: top level must be an array");
    MatchMetadataIndex index;
    for (const json& m : doc) {
      const std::string ctx = "statsbomb matches";
      MatchMetadata md;
      md.kickoff_date = require(m, "match_date", ctx).get<std::string>();
      md.league_id = id_string(require(require(m, "competition", ctx), "competition_id", ctx), ctx);
      md.home_team_id = id_string(require(require(m, "home_team", ctx), "home_team_id", ctx), ctx);
      md.away_team_id = id_string(require(require(m, "away_team", ctx), "away_team_id", ctx), ctx);
      index.emplace(id_string(require(m, "match_id", ctx), ctx), std::move(md));
    }
    return index;
  }

  static std::optional<NormalizedEvent> translate(const json& e, const std::string& type,
                                                  const std::string& match_id,
                                                  const std::string& ctx) {
    NormalizedEvent ev;
    ev.match_id = match_id;
    ev.player_id = id_string(require(e.at("player"), "id", ctx), ctx);
    ev.team_id = id_string(require(require(e, "team", ctx), "id", ctx), ctx);
    auto set = [&ev](const char* key, bool on) {
      if (on) ev.attributes[key] = 1.0;
    };
    const json empty = json::object();
    auto sub = [&](const char* key) -> const json& {
      auto it = e.find(key);
      return it != e.end() && it->is_object() ? *it : empty;
    };

    if (type == "Pass") {
      ev.type = EventType::Pass;
      const json& p = sub("pass");
      const std::string outcome = nested_name(p, "outcome");
      set("cross", truthy(p, "cross"));
      set("cut_back", truthy(p, "cut_back"));
      set("shot_assist", truthy(p, "shot_assist"));
      set("goal_assist", truthy(p, "goal_assist"));
      set("no_touch", truthy(p, "no_touch"));
      set("interception", nested_name(p, "type") == "Interception");
      set("incomplete", outcome == "Incomplete" || outcome == "Out");
      set("offside", outcome == "Pass Offside");
      set("through_ball", truthy(p, "through_ball") || nested_name(p, "technique") == "Through Ball");
    } else if (type == "Shot") {
      ev.type = EventType::Shot;
      const json& s = sub("shot");
      const std::string kind = nested_name(s, "type");
      const std::string outcome = nested_name(s, "outcome");
      ev.xg = s.contains("statsbomb_xg") ? s.at("statsbomb_xg").get<double>() : 0.0;
      set("corner", kind == "Corner");
      set("free_kick", kind == "Free Kick");
      set("open_play", kind == "Open Play");
      set("penalty", kind == "Penalty");
      set("saved", outcome == "Saved" || outcome == "Saved To Post" || outcome == "Saved Off Target");
      set("off_target", outcome == "Off T" || outcome == "Wayward" || outcome == "Post");
      set("blocked", outcome == "Blocked");
      set("goal", outcome == "Goal");
    } else if (type == "Interception") {
      ev.type = EventType::Interception;
      const std::string outcome = nested_name(sub("interception"), "outcome");
      set("won", outcome == "Won" || outcome == "Success" || outcome == "Success In Play" ||
                     outcome == "Success Out");
    } else if (type == "Dribble") {
      ev.type = EventType::Dribble;
      set("complete", nested_name(sub("dribble"), "outcome") == "Complete");
    } else if (type == "Foul Won") {
      ev.type = EventType::FoulWon;
      set("penalty", truthy(sub("foul_won"), "penalty"));
    } else if (type == "Foul Committed") {
      ev.type = EventType::FoulCommitted;
      const json& f = sub("foul_committed");
      const std::string card = nested_name(f, "card");
      set("penalty", truthy(f, "penalty"));
      set("yellow_card", card == "Yellow Card" || card == "Second Yellow");
      set("red_card", card == "Red Card" || card == "Second Yellow");
    } else if (type == "Goal Keeper") {
      ev.type = EventType::GoalkeeperAction;
      const std::string kind = nested_name(sub("goalkeeper"), "type");
      set("goal_conceded", kind == "Goal Conceded" || kind == "Penalty Conceded");
      set("save", kind == "Shot Saved" || kind == "Save" || kind == "Penalty Saved" ||
                      kind == "Shot Saved Off Target" || kind == "Shot Saved to Post");
      set("shot_faced", kind == "Shot Faced");
    } else if (type == "Block") {
      ev.type = EventType::Block;
    } else if (type == "Clearance") {
      ev.type = EventType::Clearance;
    } else if (type == "Ball Recovery") {
      ev.type = EventType::BallRecovery;
    } else {
      return std::nullopt;
    }
    return ev;
  }
};

}  // namespace

std::string_view to_string(EventType t) { return kEventTypeNames.at(static_cast<std::size_t>(t)); }

std::optional<EventType> event_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kEventTypeNames.size(); ++i) {
    if (kEventTypeNames[i] == name) return static_cast<EventType>(i);
  }
  return std::nullopt;
}

MatchMetadataIndex SourceAdapter::parse_metadata(std::string_view /*bytes*/) const { return {}; }

const SourceAdapter& find_adapter(std::string_view name) {
  static const NativeAdapter native;
  static const StatsBombAdapter statsbomb;
  if (name == native.name()) return native;
  if (name == statsbomb.name()) return statsbomb;
  throw ConfigError("unknown source adapter '" + std::string(name) + "' (known: native, statsbomb)");
}

std::vector<std::string_view> adapter_names() { return {"native", "statsbomb"}; }

ParsedEvents parse_events(std::string_view bytes, std::string_view adapter,
                          const std::string& match_id) {
  return find_adapter(adapter).parse_events(bytes, match_id);
}

}  // namespace rb::ingest
