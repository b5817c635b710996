#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "evasion/error.hpp"
#include "evasion/featurespace.hpp"
#include "evasion/random.hpp"

namespace evasion {
namespace {

FeatureSet set_of(std::initializer_list<Feature> fs) { return FeatureSet(fs); }

TEST(ParseFeatureFile, CanonicalPrefixes) {
  auto p = parse_feature_file(
      "feature::android.hardware.camera\npermission::android.permission.SEND_SMS");
  EXPECT_EQ(p.features,
            set_of({{Category::S1, "android.hardware.camera"},
                    {Category::S2, "android.permission.SEND_SMS"}}));
  EXPECT_EQ(p.skipped_unknown, 0u);
}

TEST(ParseFeatureFile, EmptyInput) {
  EXPECT_TRUE(parse_feature_file("").features.empty());
}

TEST(ParseFeatureFile, DuplicatesCollapse) {
  auto p = parse_feature_file(
      "permission::android.permission.INTERNET\n"
      "permission::android.permission.INTERNET\n"
      "permission::android.permission.INTERNET\n");
  EXPECT_EQ(p.features.size(), 1u);
}

TEST(ParseFeatureFile, AllPrefixes) {
  auto p = parse_feature_file(
      "# comment\n\n"
      "feature::a\npermission::b\nactivity::c\nservice_receiver::d\n"
      "provider::e\nintent::f\napi_call::g\nreal_permission::h\ncall::i\n"
      "url::j   \n");
  std::vector<Category> cats;
  for (const auto& f : p.features) cats.push_back(f.category);
  EXPECT_EQ(cats, (std::vector<Category>{Category::S1, Category::S2, Category::S3,
                                         Category::S3, Category::S3, Category::S4,
                                         Category::S5, Category::S6, Category::S7,
                                         Category::S8}));
  EXPECT_TRUE(p.features.count({Category::S8, "j"}));
}

TEST(ParseFeatureFile, MalformedLineReportsLineNumber) {
  try {
    parse_feature_file("feature::a\nno separator here\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseFeatureFile, UnknownPrefixStrictVersusLenient) {
  const char* text = "bogus::x\npermission::y\n";
  try {
    parse_feature_file(text, true);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  auto p = parse_feature_file(text, false);
  EXPECT_EQ(p.skipped_unknown, 1u);
  EXPECT_EQ(p.features.size(), 1u);
}

TEST(BuildVocabulary, SortedWithinCategory) {
  std::vector<FeatureSet> corpus{set_of({{Category::S1, "b"}}),
                                 set_of({{Category::S1, "a"}})};
  const Category cats[] = {Category::S1};
  auto v = build_vocabulary(corpus, cats);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.entry(0), (Feature{Category::S1, "a"}));
  EXPECT_EQ(v.entry(1), (Feature{Category::S1, "b"}));
  EXPECT_EQ(*v.find({Category::S1, "b"}), 1u);
}

TEST(BuildVocabulary, CategoryFilter) {
  std::vector<FeatureSet> corpus{
      set_of({{Category::S1, "a"}, {Category::S3, "c"}, {Category::S2, "p"}})};
  const Category cats[] = {Category::S1, Category::S2};
  auto v = build_vocabulary(corpus, cats);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_FALSE(v.find({Category::S3, "c"}));
  EXPECT_EQ(v.range(Category::S1), (IndexRange{0, 1}));
  EXPECT_EQ(v.range(Category::S2), (IndexRange{1, 2}));
}

TEST(BuildVocabulary, PermutedCorpusGivesIdenticalVocabulary) {
  std::vector<FeatureSet> a{set_of({{Category::S2, "x"}, {Category::S1, "z"}}),
                            set_of({{Category::S2, "a"}}),
                            set_of({{Category::S5, "q"}})};
  std::vector<FeatureSet> b{a[2], a[0], a[1]};
  auto va = build_vocabulary(a, kAllCategories);
  auto vb = build_vocabulary(b, kAllCategories);
  EXPECT_EQ(va.to_csv(), vb.to_csv());
  EXPECT_EQ(va.hash(), vb.hash());
}

TEST(BuildVocabulary, EmptyUnionThrows) {
  std::vector<FeatureSet> corpus{set_of({{Category::S3, "c"}})};
  const Category cats[] = {Category::S1};
  EXPECT_THROW(build_vocabulary(corpus, cats), PreconditionError);
}

TEST(Vocabulary, CsvRoundTrip) {
  auto v = Vocabulary::from_features(
      set_of({{Category::S1, "a,b"}, {Category::S2, "p\"q"}, {Category::S8, "u"}}));
  auto back = Vocabulary::from_csv(v.to_csv());
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
}

TEST(Vocabulary, MaskCoversCategoryRange) {
  auto v = Vocabulary::from_features(set_of(
      {{Category::S1, "a"}, {Category::S2, "p"}, {Category::S2, "q"}, {Category::S4, "i"}}));
  const Category cats[] = {Category::S2};
  EXPECT_EQ(v.mask(cats).to_string(), "0110");
}

TEST(Vectorize, Examples) {
  auto v = Vocabulary::from_features(set_of({{Category::S1, "a"}, {Category::S1, "b"}}));
  EXPECT_EQ(vectorize({}, v).bits.to_string(), "00");
  EXPECT_EQ(vectorize(set_of({{Category::S1, "a"}, {Category::S1, "b"}}), v).bits.to_string(),
            "11");
  EXPECT_EQ(vectorize(set_of({{Category::S1, "b"}}), v).bits.to_string(), "01");
  // Unseen features are dropped.
  EXPECT_EQ(vectorize(set_of({{Category::S2, "zz"}}), v).bits.to_string(), "00");
}

TEST(ApplyPerturbation, Examples) {
  FeatureVector x{BitVector::from_string("100"), Label::Malware};
  auto r = apply_perturbation(x, Perturbation(BitVector::from_string("010")));
  EXPECT_EQ(r.bits.to_string(), "110");
  EXPECT_EQ(apply_perturbation(x, Perturbation(3)).bits, x.bits);

  FeatureVector y{BitVector::from_string("10"), Label::Malware};
  EXPECT_THROW(apply_perturbation(y, Perturbation(BitVector::from_string("10"))),
               InvariantError);
  EXPECT_THROW(apply_perturbation(y, Perturbation(3)), InvariantError);
}

TEST(ApplyPerturbation, OutsideAllowedMaskThrows) {
  FeatureVector x{BitVector::from_string("1000"), Label::Malware};
  const auto allowed = BitVector::from_string("0110");
  EXPECT_NO_THROW(apply_perturbation(x, Perturbation(BitVector::from_string("0100")), allowed));
  EXPECT_THROW(apply_perturbation(x, Perturbation(BitVector::from_string("0001")), allowed),
               InvariantError);
}

TEST(BitVector, LexLessOrdersByFirstDifferingBit) {
  EXPECT_TRUE(lex_less(BitVector::from_string("0100"), BitVector::from_string("1000")));
  EXPECT_FALSE(lex_less(BitVector::from_string("1000"), BitVector::from_string("0100")));
  EXPECT_FALSE(lex_less(BitVector::from_string("0110"), BitVector::from_string("0110")));
}

BitVector random_bits(std::size_t n, double p, Rng& rng) {
  BitVector b(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bernoulli(rng, p)) b.set(i);
  }
  return b;
}

// Properties over random vectors.

TEST(FeaturespaceProperty, ApplyIsMonotoneAndAdditive) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 200);
    FeatureVector x{random_bits(n, 0.2, rng), Label::Malware};
    BitVector d1 = random_bits(n, 0.1, rng);
    BitVector d2 = random_bits(n, 0.1, rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (x.bits.test(i)) {
        d1.reset(i);
        d2.reset(i);
      }
      if (d1.test(i)) d2.reset(i);
    }
    const auto r = apply_perturbation(x, Perturbation(d1));
    EXPECT_TRUE(x.bits.subset_of(r.bits));
    EXPECT_EQ(r.bits.count(), x.bits.count() + d1.count());
    EXPECT_EQ(Perturbation(d1 | d2).num(),
              Perturbation(d1).num() + Perturbation(d2).num());
  }
}

TEST(FeaturespaceProperty, SerializeParseRoundTrip) {
  FeatureSet all;
  const char* names[] = {"alpha", "beta", "gamma", "delta", "eps"};
  for (Category c : kAllCategories) {
    for (const char* n : names) all.insert({c, n});
  }
  const auto vocab = Vocabulary::from_features(all);
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    FeatureSet s;
    for (const auto& f : vocab.entries()) {
      if (bernoulli(rng, 0.3)) s.insert(f);
    }
    const auto parsed = parse_feature_file(serialize_feature_set(s)).features;
    EXPECT_EQ(vectorize(parsed, vocab).bits, vectorize(s, vocab).bits);
    EXPECT_EQ(devectorize(vectorize(s, vocab).bits, vocab), s);
  }
}

TEST(FeaturespaceProperty, VocabularyBuildIsByteStable) {
  Rng rng(3);
  std::vector<FeatureSet> corpus(50);
  for (auto& s : corpus) {
    for (int k = 0; k < 10; ++k) {
      s.insert({kAllCategories[uniform_index(rng, kNumCategories)],
                "f" + std::to_string(uniform_index(rng, 40))});
    }
  }
  EXPECT_EQ(build_vocabulary(corpus, kAllCategories).to_csv(),
            build_vocabulary(corpus, kAllCategories).to_csv());
}

}  // namespace
}  // namespace evasion
