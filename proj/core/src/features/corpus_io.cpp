#include "rb/features/corpus_io.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"

namespace rb::features {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormatName = "risingballer.corpus";

ordered_json header(const std::string& task, std::size_t stat_width, std::size_t n_train,
                    std::size_t n_validation) {
  ordered_json h;
  h["format"] = kFormatName;
  h["version"] = kCorpusFormatVersion;
  h["task"] = task;
  h["stat_width"] = stat_width;
  h["seq_len"] = kSequenceLength;
  h["n_train"] = n_train;
  h["n_validation"] = n_validation;
  return h;
}

void put_match(ordered_json& rec, const TokenizedMatch& tm) {
  rec["match_id"] = tm.match_id;
  rec["kickoff_order"] = tm.kickoff_order;
  rec["home_team"] = tm.home_team;
  rec["away_team"] = tm.away_team;
  rec["n_real"] = tm.n_real;
  // Only real tokens are stored; PAD rows are rebuilt from the "pad" triple on load.
  ordered_json tokens = json::array();
  ordered_json stats = json::array();
  for (std::size_t i = 0; i < tm.n_real; ++i) {
    const Token& t = tm.tokens[i];
    tokens.push_back({t.player, t.position, t.team, t.participated});
    auto row = tm.stat_row(i);
    stats.push_back(std::vector<double>(row.begin(), row.end()));
  }
  rec["tokens"] = std::move(tokens);
  rec["pad"] = {tm.tokens.empty() ? 0 : tm.tokens.back().player,
                tm.tokens.empty() ? 0 : tm.tokens.back().position,
                tm.tokens.empty() ? 0 : tm.tokens.back().team};
  rec["stats"] = std::move(stats);
}

TokenizedMatch get_match(const json& rec, std::size_t stat_width, std::size_t seq_len) {
  TokenizedMatch tm;
  tm.match_id = rec.at("match_id").get<std::string>();
  tm.kickoff_order = rec.at("kickoff_order").get<std::int64_t>();
  tm.home_team = rec.at("home_team").get<int>();
  tm.away_team = rec.at("away_team").get<int>();
  tm.n_real = rec.at("n_real").get<std::size_t>();
  tm.stat_width = stat_width;
  const json& tokens = rec.at("tokens");
  const json& stats = rec.at("stats");
  const json& pad = rec.at("pad");
  if (tm.n_real > seq_len || tokens.size() != tm.n_real || stats.size() != tm.n_real) {
    throw IntegrityError("corpus: match " + tm.match_id + " token count disagrees with n_real");
  }
  tm.tokens.assign(seq_len, Token{pad.at(0).get<int>(), pad.at(1).get<int>(), pad.at(2).get<int>(), true, false});
  tm.stats.assign(seq_len * stat_width, 0.0);
  for (std::size_t i = 0; i < tm.n_real; ++i) {
    const json& t = tokens[i];
    tm.tokens[i] = Token{t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>(), false, t.at(3).get<bool>()};
    const json& row = stats[i];
    if (row.size() != stat_width) {
      throw IntegrityError("corpus: match " + tm.match_id + " stat width " + std::to_string(row.size()) +
                           ", expected " + std::to_string(stat_width));
    }
    for (std::size_t j = 0; j < stat_width; ++j) tm.stats[i * stat_width + j] = row[j].get<double>();
  }
  return tm;
}

// Splits `text` into parsed JSON records, skipping blank lines.
template <class F>
void for_each_record(std::string_view text, F&& f) {
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(offset, end - offset);
    const std::size_t start = offset;
    offset = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what(),
                       start + (e.byte > 0 ? e.byte - 1 : 0));
    }
    try {
      f(rec, start);
    } catch (const json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what(), start);
    }
  }
}

struct Header {
  std::string task;
  std::size_t stat_width = 0;
  std::size_t seq_len = 0;
};

Header read_header(const json& rec, std::size_t start) {
  if (!rec.is_object() || rec.value("format", "") != kFormatName) {
    throw ParseError("corpus: missing header", start);
  }
  if (rec.at("version").get<int>() != kCorpusFormatVersion) {
    throw ParseError("corpus: unsupported version " + rec.at("version").dump(), start);
  }
  return {rec.at("task").get<std::string>(), rec.at("stat_width").get<std::size_t>(),
          rec.at("seq_len").get<std::size_t>()};
}

}  // namespace

void validate_mpp_samples(std::span<const MaskedMatch> samples) {
  for (const MaskedMatch& s : samples) {
    if (!s.base) throw IntegrityError("corpus: sample without a base match");
    const TokenizedMatch& tm = *s.base;
    if (s.masked_positions.empty()) {
      throw IntegrityError("corpus: sample of match " + tm.match_id + " has no masked position");
    }
    if (s.targets.size() != s.masked_positions.size()) {
      throw IntegrityError("corpus: sample of match " + tm.match_id + " has mismatched targets");
    }
    for (std::size_t j = 0; j < s.masked_positions.size(); ++j) {
      const int p = s.masked_positions[j];
      if (p < 0 || static_cast<std::size_t>(p) >= tm.n_real || tm.tokens[p].is_pad) {
        throw IntegrityError("corpus: sample of match " + tm.match_id + " masks a PAD or out-of-range token");
      }
      if (s.targets[j] != tm.tokens[p].player) {
        throw IntegrityError("corpus: sample of match " + tm.match_id + " target disagrees with its token");
      }
    }
  }
}

void validate_nmsp_examples(std::span<const NmspExample> examples) {
  for (const NmspExample& e : examples) {
    if (e.tokens.stat_width != kNmspFeatureWidth ||
        e.tokens.stats.size() != e.tokens.tokens.size() * kNmspFeatureWidth) {
      throw IntegrityError("corpus: example " + e.tokens.match_id + " has stat width " +
                           std::to_string(e.tokens.stat_width) + ", expected 234");
    }
  }
}

std::string serialize_mpp_corpus(const MppCorpus& corpus) {
  validate_mpp_samples(corpus.train);
  validate_mpp_samples(corpus.validation);
  const std::size_t width = corpus.matches.empty() ? kNumRawStats : corpus.matches.front()->stat_width;
  std::string out = header("mpp", width, corpus.train.size(), corpus.validation.size()).dump() + '\n';
  for (const auto& m : corpus.matches) {
    ordered_json rec;
    rec["record"] = "match";
    put_match(rec, *m);
    out += rec.dump() + '\n';
  }
  auto samples = [&](const std::vector<MaskedMatch>& v, const char* split) {
    for (const MaskedMatch& s : v) {
      ordered_json rec;
      rec["record"] = "sample";
      rec["match_id"] = s.base->match_id;
      rec["split"] = split;
      rec["masked_positions"] = s.masked_positions;
      rec["targets"] = s.targets;
      out += rec.dump() + '\n';
    }
  };
  samples(corpus.train, "train");
  samples(corpus.validation, "validation");
  return out;
}

MppCorpus parse_mpp_corpus(std::string_view text) {
  MppCorpus corpus;
  std::optional<Header> head;
  std::unordered_map<std::string, std::shared_ptr<const TokenizedMatch>> by_id;
  for_each_record(text, [&](const json& rec, std::size_t start) {
    if (!head) {
      head = read_header(rec, start);
      if (head->task != "mpp") throw IntegrityError("corpus: expected an mpp corpus, found " + head->task);
      return;
    }
    const std::string kind = rec.at("record").get<std::string>();
    if (kind == "match") {
      auto tm = std::make_shared<const TokenizedMatch>(get_match(rec, head->stat_width, head->seq_len));
      if (!by_id.emplace(tm->match_id, tm).second) {
        throw IntegrityError("corpus: duplicate match " + tm->match_id);
      }
      corpus.matches.push_back(std::move(tm));
    } else if (kind == "sample") {
      const std::string id = rec.at("match_id").get<std::string>();
      auto it = by_id.find(id);
      if (it == by_id.end()) throw IntegrityError("corpus: sample references unknown match " + id);
      MaskedMatch s{it->second, rec.at("masked_positions").get<std::vector<int>>(),
                    rec.at("targets").get<std::vector<int>>()};
      const std::string split = rec.at("split").get<std::string>();
      if (split == "train") {
        corpus.train.push_back(std::move(s));
      } else if (split == "validation") {
        corpus.validation.push_back(std::move(s));
      } else {
        throw ParseError("corpus: unknown split " + split, start);
      }
    } else {
      throw ParseError("corpus: unknown record kind " + kind, start);
    }
  });
  if (!head) throw ParseError("corpus: empty file, header missing", 0);
  validate_mpp_samples(corpus.train);
  validate_mpp_samples(corpus.validation);
  return corpus;
}

void write_mpp_corpus(const std::filesystem::path& path, const MppCorpus& corpus) {
  write_file(path, serialize_mpp_corpus(corpus));
}

MppCorpus read_mpp_corpus(const std::filesystem::path& path) { return parse_mpp_corpus(read_file(path)); }

std::string serialize_nmsp_corpus(const NmspCorpus& corpus) {
  validate_nmsp_examples(corpus.train);
  validate_nmsp_examples(corpus.validation);
  std::string out =
      header("nmsp", kNmspFeatureWidth, corpus.train.size(), corpus.validation.size()).dump() + '\n';
  auto examples = [&](const std::vector<NmspExample>& v, const char* split) {
    for (const NmspExample& e : v) {
      ordered_json rec;
      rec["record"] = "example";
      rec["split"] = split;
      put_match(rec, e.tokens);
      rec["target"] = e.target;
      rec["baseline"] = e.baseline ? ordered_json(*e.baseline) : ordered_json(nullptr);
      out += rec.dump() + '\n';
    }
  };
  examples(corpus.train, "train");
  examples(corpus.validation, "validation");
  return out;
}

NmspCorpus parse_nmsp_corpus(std::string_view text) {
  NmspCorpus corpus;
  std::optional<Header> head;
  for_each_record(text, [&](const json& rec, std::size_t start) {
    if (!head) {
      head = read_header(rec, start);
      if (head->task != "nmsp") throw IntegrityError("corpus: expected an nmsp corpus, found " + head->task);
      if (head->stat_width != kNmspFeatureWidth) {
        throw IntegrityError("corpus: nmsp stat width " + std::to_string(head->stat_width) + ", expected 234");
      }
      return;
    }
    if (rec.at("record").get<std::string>() != "example") throw ParseError("corpus: expected example record", start);
    NmspExample e;
    e.tokens = get_match(rec, head->stat_width, head->seq_len);
    const json& target = rec.at("target");
    if (target.size() != kNmspTargetWidth) {
      throw IntegrityError("corpus: example " + e.tokens.match_id + " target width " +
                           std::to_string(target.size()) + ", expected 36");
    }
    for (std::size_t j = 0; j < kNmspTargetWidth; ++j) e.target[j] = target[j].get<double>();
    const json& baseline = rec.at("baseline");
    if (!baseline.is_null()) {
      if (baseline.size() != kNmspTargetWidth) throw IntegrityError("corpus: baseline width mismatch");
      std::array<double, kNmspTargetWidth> b{};
      for (std::size_t j = 0; j < kNmspTargetWidth; ++j) b[j] = baseline[j].get<double>();
      e.baseline = b;
    }
    const std::string split = rec.at("split").get<std::string>();
    if (split == "train") {
      corpus.train.push_back(std::move(e));
    } else if (split == "validation") {
      corpus.validation.push_back(std::move(e));
    } else {
      throw ParseError("corpus: unknown split " + split, start);
    }
  });
  if (!head) throw ParseError("corpus: empty file, header missing", 0);
  validate_nmsp_examples(corpus.train);
  validate_nmsp_examples(corpus.validation);
  return corpus;
}

void write_nmsp_corpus(const std::filesystem::path& path, const NmspCorpus& corpus) {
  write_file(path, serialize_nmsp_corpus(corpus));
}

NmspCorpus read_nmsp_corpus(const std::filesystem::path& path) { return parse_nmsp_corpus(read_file(path)); }

std::string corpus_task(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const std::string_view first(text.data(), std::min(text.find('\n'), text.size()));
  try {
    return read_header(json::parse(first), 0).task;
  } catch (const json::exception& e) {
    throw ParseError(std::string("corpus header: ") + e.what(), 0);
  }
}

MppCorpus build_mpp_corpus(const ingest::Dataset& dataset, const Vocabulary& vocab, const MppCorpusOptions& options) {
  if (options.augment < 1) throw ConfigError("augment must be at least 1");
  if (!(options.mask_rate > 0.0 && options.mask_rate <= 1.0)) throw ConfigError("mask rate must lie in (0, 1]");
  MppCorpus corpus;
  corpus.matches = tokenize_dataset(dataset, vocab);
  std::vector<MaskedMatch> samples;
  const std::uint64_t aug_seed = derive_seed(options.seed, "augment");
  for (const auto& tm : corpus.matches) {
    auto copies = augment_mpp(tm, options.augment, options.mask_rate, aug_seed, options.eligibility);
    for (auto& c : copies) samples.push_back(std::move(c));
  }
  std::vector<std::int64_t> orders;
  orders.reserve(samples.size());
  for (const MaskedMatch& s : samples) orders.push_back(s.base->kickoff_order);
  const SplitIndices split = split_dataset(orders, options.split_ratio, options.split_mode, options.seed);
  for (std::size_t i : split.train) corpus.train.push_back(samples[i]);
  for (std::size_t i : split.validation) corpus.validation.push_back(samples[i]);
  return corpus;
}

NmspCorpus build_nmsp_corpus(const ingest::Dataset& dataset, const Vocabulary& vocab, const NmspCorpusOptions& options) {
  std::vector<NmspExample> examples = build_nmsp_examples(dataset, vocab, options.build);
  std::vector<std::int64_t> orders;
  orders.reserve(examples.size());
  for (const NmspExample& e : examples) orders.push_back(e.tokens.kickoff_order);
  const SplitIndices split = split_dataset(orders, options.split_ratio, options.split_mode, options.seed);
  NmspCorpus corpus;
  for (std::size_t i : split.train) corpus.train.push_back(examples[i]);
  for (std::size_t i : split.validation) corpus.validation.push_back(examples[i]);
  return corpus;
}

}  // namespace rb::features
