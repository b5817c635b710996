#include "evasion/featurespace/vocabulary.hpp"

#include <algorithm>
#include <sstream>

#include "evasion/error.hpp"
#include "evasion/featurespace/csv.hpp"
#include "evasion/random.hpp"

namespace evasion {

Vocabulary Vocabulary::from_features(const FeatureSet& features) {
  Vocabulary v;
  // FeatureSet is already ordered by (category, name).
  v.entries_.assign(features.begin(), features.end());
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    v.index_.emplace(v.entries_[i], i);
  }
  std::size_t pos = 0;
  for (Category c : kAllCategories) {
    IndexRange r{pos, pos};
    while (pos < v.entries_.size() && v.entries_[pos].category == c) ++pos;
    r.end = pos;
    v.ranges_[index_of(c)] = r;
  }
  return v;
}

std::optional<std::size_t> Vocabulary::find(const Feature& f) const {
  auto it = index_.find(f);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BitVector Vocabulary::mask(std::span<const Category> categories) const {
  BitVector m(size());
  for (Category c : categories) {
    const IndexRange r = range(c);
    for (std::size_t i = r.begin; i < r.end; ++i) m.set(i);
  }
  return m;
}

std::string Vocabulary::to_csv() const {
  std::ostringstream out;
  out << "index,category,name\n";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out << i << ',' << category_code(entries_[i].category) << ','
        << csv::escape(entries_[i].name) << '\n';
  }
  return out.str();
}

Vocabulary Vocabulary::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  FeatureSet features;
  std::vector<Feature> rows;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("index,", 0) == 0) continue;
    auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ParseError("vocabulary row needs 3 fields", line_no);
    }
    std::size_t idx = 0;
    try {
      idx = std::stoul(fields[0]);
    } catch (const std::exception&) {
      throw ParseError("bad vocabulary index '" + fields[0] + "'", line_no);
    }
    if (idx != expected) {
      throw ParseError("vocabulary indices must be 0..N-1 in order", line_no);
    }
    ++expected;
    auto cat = category_from_code(fields[1]);
    if (!cat) throw ParseError("unknown category '" + fields[1] + "'", line_no);
    rows.push_back(Feature{*cat, fields[2]});
    if (!features.insert(rows.back()).second) {
      throw ParseError("duplicate vocabulary entry '" + fields[2] + "'",
                       line_no);
    }
  }
  Vocabulary v = from_features(features);
  // Rows must already be in canonical order, otherwise indices would shift.
  if (v.entries_ != rows) {
    throw ParseError("vocabulary rows are not in canonical order");
  }
  return v;
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(to_csv()); }

Vocabulary build_vocabulary(std::span<const FeatureSet> corpus,
                            std::span<const Category> categories) {
  if (corpus.empty()) throw PreconditionError("corpus is empty");
  FeatureSet all;
  for (const auto& app : corpus) {
    for (const auto& f : app) {
      if (std::find(categories.begin(), categories.end(), f.category) !=
          categories.end()) {
        all.insert(f);
      }
    }
  }
  if (all.empty()) {
    throw PreconditionError("no features in selected categories");
  }
  return Vocabulary::from_features(all);
}

}  // namespace evasion
