#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evasion/featurespace/feature.hpp"
#include "evasion/featurespace/feature_vector.hpp"

namespace evasion {

struct ParsedFeatures {
  FeatureSet features;
  /// Lines skipped because of an unrecognized prefix (lenient mode only).
  std::size_t skipped_unknown = 0;
};

/// Parses `prefix::name` lines. Blank lines and `#` comments are ignored,
/// trailing whitespace is trimmed. Throws ParseError on a line without
/// `::`, and in strict mode on an unknown prefix.
ParsedFeatures parse_feature_file(std::string_view text, bool strict = true);

/// One `prefix::name` line per feature, (category, name) order.
std::string serialize_feature_set(const FeatureSet& features);

FeatureSet read_feature_file(const std::filesystem::path& path,
                             bool strict = true);
void write_feature_file(const std::filesystem::path& path,
                        const FeatureSet& features);

struct ManifestEntry {
  std::string app_id;
  std::filesystem::path path;  // as written in the manifest
  Label label = Label::Benign;
};

/// CSV `app_id,path,label` with header. Relative paths resolve against
/// the manifest's directory when loading.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

struct CorpusEntry {
  std::string app_id;
  FeatureSet features;
  Label label = Label::Benign;
};

/// Reads a manifest and every feature file it names.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& manifest,
                                     bool strict = true);

Dataset vectorize_corpus(const std::vector<CorpusEntry>& corpus,
                         const Vocabulary& vocab);

}  // namespace evasion
