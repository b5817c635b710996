#include "evasion/featurespace/feature_file.hpp"

#include <fstream>
#include <sstream>

#include "evasion/error.hpp"
#include "evasion/featurespace/csv.hpp"

namespace evasion {
namespace {

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  return s;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

ParsedFeatures parse_feature_file(std::string_view text, bool strict) {
  ParsedFeatures out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = rtrim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;

    if (ltrim(line).empty() || ltrim(line).front() == '#') continue;
    const std::size_t sep = line.find("::");
    if (sep == std::string_view::npos) {
      throw ParseError("malformed feature line (missing '::')", line_no);
    }
    const std::string_view prefix = line.substr(0, sep);
    const std::string_view name = line.substr(sep + 2);
    auto cat = category_from_prefix(prefix);
    if (!cat) {
      if (strict) {
        throw ParseError("unknown feature prefix '" + std::string(prefix) + "'",
                         line_no);
      }
      ++out.skipped_unknown;
      continue;
    }
    if (name.empty()) throw ParseError("empty feature name", line_no);
    out.features.insert(Feature{*cat, std::string(name)});
  }
  return out;
}

std::string serialize_feature_set(const FeatureSet& features) {
  std::string out;
  for (const auto& f : features) {
    out += canonical_prefix(f.category);
    out += "::";
    out += f.name;
    out += '\n';
  }
  return out;
}

FeatureSet read_feature_file(const std::filesystem::path& path, bool strict) {
  try {
    return parse_feature_file(read_text(path), strict).features;
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_feature_file(const std::filesystem::path& path,
                        const FeatureSet& features) {
  write_text(path, serialize_feature_set(features));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("app_id,", 0) == 0) continue;
    auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError(path.string() + ": manifest row needs 3 fields",
                       line_no);
    }
    Label label;
    if (fields[2] == "0") {
      label = Label::Benign;
    } else if (fields[2] == "1") {
      label = Label::Malware;
    } else {
      throw ParseError(path.string() + ": label must be 0 or 1", line_no);
    }
    entries.push_back({fields[0], fields[1], label});
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
  std::string text = "app_id,path,label\n";
  for (const auto& e : entries) {
    text += csv::escape(e.app_id) + ',' + csv::escape(e.path.generic_string()) +
            ',' + (e.label == Label::Malware ? "1" : "0") + '\n';
  }
  write_text(path, text);
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& manifest,
                                     bool strict) {
  const auto base = manifest.parent_path();
  std::vector<CorpusEntry> corpus;
  for (auto& e : read_manifest(manifest)) {
    const auto p = e.path.is_absolute() ? e.path : base / e.path;
    corpus.push_back({e.app_id, read_feature_file(p, strict), e.label});
  }
  return corpus;
}

Dataset vectorize_corpus(const std::vector<CorpusEntry>& corpus,
                         const Vocabulary& vocab) {
  Dataset ds;
  for (const auto& e : corpus) {
    ds.add(e.app_id, vectorize(e.features, vocab, e.label));
  }
  return ds;
}

}  // namespace evasion
