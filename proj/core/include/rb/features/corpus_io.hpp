#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rb/features/features.hpp"

namespace rb::features {

inline constexpr int kCorpusFormatVersion = 1;

struct MppCorpus {
  std::vector<std::shared_ptr<const TokenizedMatch>> matches;
  std::vector<MaskedMatch> train;
  std::vector<MaskedMatch> validation;
};

struct NmspCorpus {
  std::vector<NmspExample> train;
  std::vector<NmspExample> validation;
};

struct MppCorpusOptions {
  int augment = 10;
  double mask_rate = 0.25;
  MaskEligibility eligibility = MaskEligibility::AnyRealToken;
  double split_ratio = 0.8;
  SplitMode split_mode = SplitMode::Random;
  std::uint64_t seed = 0;
};

/// Tokenizes every match, draws `augment` masked copies of each and splits the
/// samples (not the matches) at `split_ratio`.
MppCorpus build_mpp_corpus(const ingest::Dataset& dataset, const Vocabulary& vocab, const MppCorpusOptions& options);

struct NmspCorpusOptions {
  NmspBuildOptions build;
  double split_ratio = 0.8;
  SplitMode split_mode = SplitMode::Chronological;
  std::uint64_t seed = 0;
};

NmspCorpus build_nmsp_corpus(const ingest::Dataset& dataset, const Vocabulary& vocab, const NmspCorpusOptions& options);

/// Throws IntegrityError when a sample has no masked position, masks a PAD or
/// out-of-range token, or its targets disagree with the base tokens.
void validate_mpp_samples(std::span<const MaskedMatch> samples);

/// Throws IntegrityError when an example's stat width is not 234 or its target not 36 wide.
void validate_nmsp_examples(std::span<const NmspExample> examples);

// Line-delimited records with a version header. MPP corpora store each match
// once ("match" records) and each masked copy as a "sample" record referencing it.
std::string serialize_mpp_corpus(const MppCorpus& corpus);
MppCorpus parse_mpp_corpus(std::string_view text);
void write_mpp_corpus(const std::filesystem::path& path, const MppCorpus& corpus);
MppCorpus read_mpp_corpus(const std::filesystem::path& path);

std::string serialize_nmsp_corpus(const NmspCorpus& corpus);
NmspCorpus parse_nmsp_corpus(std::string_view text);
void write_nmsp_corpus(const std::filesystem::path& path, const NmspCorpus& corpus);
NmspCorpus read_nmsp_corpus(const std::filesystem::path& path);

/// Reads the "task" field of a corpus header ("mpp" or "nmsp").
std::string corpus_task(const std::filesystem::path& path);

}  // namespace rb::features
