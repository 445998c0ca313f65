#include <algorithm>
#include <set>
#include <sstream>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/features/features.hpp"

namespace rb::features {

Vocabulary::Vocabulary(std::vector<std::string> player_ids, std::vector<std::string> team_ids)
    : player_ids_(std::move(player_ids)), team_ids_(std::move(team_ids)) {
  for (std::size_t i = 0; i < player_ids_.size(); ++i) {
    if (!player_lookup_.emplace(player_ids_[i], static_cast<int>(i)).second) {
      throw IntegrityError("vocabulary: duplicate player id " + player_ids_[i]);
    }
  }
  for (std::size_t i = 0; i < team_ids_.size(); ++i) {
    if (!team_lookup_.emplace(team_ids_[i], static_cast<int>(i)).second) {
      throw IntegrityError("vocabulary: duplicate team id " + team_ids_[i]);
    }
  }
}

int Vocabulary::player_index(const std::string& id) const {
  auto it = player_lookup_.find(id);
  if (it == player_lookup_.end()) throw IntegrityError("player " + id + " is not in the vocabulary");
  return it->second;
}

int Vocabulary::team_index(const std::string& id) const {
  auto it = team_lookup_.find(id);
  if (it == team_lookup_.end()) throw IntegrityError("team " + id + " is not in the vocabulary");
  return it->second;
}

int Vocabulary::position_index(int position_code) {
  if (position_code == ingest::kUnknownPositionCode) return kUnknownPositionIndex;
  if (position_code < 1 || position_code > static_cast<int>(kNumPositions)) {
    throw IntegrityError("position code " + std::to_string(position_code) + " outside 1..25");
  }
  return position_code - 1;
}

Vocabulary build_vocabulary(const ingest::Dataset& dataset) {
  if (dataset.sheets.empty()) throw IntegrityError("cannot build a vocabulary from an empty dataset");
  std::set<std::string> players;
  std::set<std::string> teams;
  for (const auto& sheet : dataset.sheets) {
    teams.insert(sheet.home_team_id);
    teams.insert(sheet.away_team_id);
    for (const auto& e : sheet.entries) {
      players.insert(e.player_id);
      teams.insert(e.team_id);
    }
  }
  return Vocabulary({players.begin(), players.end()}, {teams.begin(), teams.end()});
}

// Text layout:
//   risingballer-vocabulary 1
//   players <P>
//   <one id per line>
//   teams <T>
//   <one id per line>
//   reserved mask=<P> pad=<P+1> position_unknown=25 position_pad=26 team_pad=<T>
std::string serialize_vocabulary(const Vocabulary& vocab) {
  std::ostringstream out;
  out << "risingballer-vocabulary 1\n";
  out << "players " << vocab.num_players() << '\n';
  for (const auto& id : vocab.player_ids()) out << id << '\n';
  out << "teams " << vocab.num_teams() << '\n';
  for (const auto& id : vocab.team_ids()) out << id << '\n';
  out << "reserved mask=" << vocab.mask_index() << " pad=" << vocab.pad_index()
      << " position_unknown=" << Vocabulary::kUnknownPositionIndex
      << " position_pad=" << Vocabulary::kPadPositionIndex << " team_pad=" << vocab.pad_team_index()
      << '\n';
  return out.str();
}

Vocabulary parse_vocabulary(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(std::string("vocabulary: missing ") + what, text.size());
    return line;
  };
  if (next("header") != "risingballer-vocabulary 1") throw ParseError("vocabulary: bad header", 0);

  auto read_block = [&](const std::string& keyword) {
    std::istringstream head(next(keyword.c_str()));
    std::string kw;
    std::size_t n = 0;
    if (!(head >> kw >> n) || kw != keyword) {
      throw ParseError("vocabulary: expected '" + keyword + " <count>'", 0);
    }
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(next(keyword.c_str()));
    return ids;
  };
  auto players = read_block("players");
  auto teams = read_block("teams");
  Vocabulary vocab(std::move(players), std::move(teams));

  std::istringstream reserved(next("reserved"));
  std::string kw;
  reserved >> kw;
  if (kw != "reserved") throw ParseError("vocabulary: expected reserved line", 0);
  std::string kv;
  while (reserved >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("vocabulary: malformed reserved entry " + kv, 0);
    const std::string key = kv.substr(0, eq);
    const int value = std::stoi(kv.substr(eq + 1));
    const int expected = key == "mask"               ? vocab.mask_index()
                         : key == "pad"              ? vocab.pad_index()
                         : key == "position_unknown" ? Vocabulary::kUnknownPositionIndex
                         : key == "position_pad"     ? Vocabulary::kPadPositionIndex
                         : key == "team_pad"         ? vocab.pad_team_index()
                                                     : -1;
    if (expected != value) throw IntegrityError("vocabulary: reserved index mismatch for " + key);
  }
  return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  write_file(path, serialize_vocabulary(vocab));
}

Vocabulary load_vocabulary(const std::filesystem::path& path) { return parse_vocabulary(read_file(path)); }

}  // namespace rb::features
