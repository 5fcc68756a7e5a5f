#include <catch2/catch_amalgamated.hpp>

#include "antilm/corpus.hpp"
#include "antilm/vocab.hpp"

using namespace antilm;

namespace {
std::vector<std::string> lines(std::initializer_list<const char*> ls) {
  return std::vector<std::string>(ls.begin(), ls.end());
}
}  // namespace

TEST_CASE("reserved ids occupy the first three slots", "[vocab]") {
  Vocabulary v = build_vocabulary(lines({"a b"}), 1);
  CHECK(v.decode(kUnkId) == kUnkToken);
  CHECK(v.decode(kStartId) == kStartToken);
  CHECK(v.decode(kEndId) == kEndToken);
  CHECK(v.size() == 5);
}

TEST_CASE("vocabulary orders by frequency then lexicographically", "[vocab]") {
  // counts: b=3, a=2, c=2, d=1
  Vocabulary v = build_vocabulary(lines({"b c a b", "a b c d"}), 1);
  CHECK(v.decode(3) == "b");
  CHECK(v.decode(4) == "a");  // ties broken alphabetically
  CHECK(v.decode(5) == "c");
  CHECK(v.decode(6) == "d");
  CHECK(v.encode("b") == 3);
  CHECK(v.encode("zzz") == kUnkId);
}

TEST_CASE("min_count filters rare tokens into unk", "[vocab]") {
  Vocabulary v = build_vocabulary(lines({"a a b"}), 2);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.encode("b") == kUnkId);
  CHECK(v.size() == 4);
}

TEST_CASE("reserved surface forms in text do not enter twice", "[vocab]") {
  Vocabulary v = build_vocabulary(lines({"<s> a </s> <unk> a"}), 1);
  // only "a" and the literal "<unk>" count as regular candidates; the
  // reserved spellings are dropped during counting
  CHECK(v.size() == 4);
  CHECK(v.encode("a") == 3);
  CHECK(v.encode(kStartToken) == kUnkId);
  CHECK(v.encode(kEndToken) == kUnkId);
  CHECK(v.encode(kUnkToken) == kUnkId);
}

TEST_CASE("empty corpus is rejected", "[vocab]") {
  CHECK_THROWS_AS(build_vocabulary(lines({"", "   "}), 1), std::runtime_error);
}

TEST_CASE("duplicate tokens are rejected at construction", "[vocab]") {
  CHECK_THROWS_AS(Vocabulary({"x", "x"}), std::invalid_argument);
}

TEST_CASE("decode range checks", "[vocab]") {
  Vocabulary v = build_vocabulary(lines({"a"}), 1);
  CHECK_THROWS_AS(v.decode(-1), std::out_of_range);
  CHECK_THROWS_AS(v.decode(v.size()), std::out_of_range);
}

TEST_CASE("fingerprint separates token boundaries", "[vocab]") {
  Vocabulary ab_c({"ab", "c"});
  Vocabulary a_bc({"a", "bc"});
  CHECK(ab_c.fingerprint() != a_bc.fingerprint());
  Vocabulary again({"ab", "c"});
  CHECK(ab_c.fingerprint() == again.fingerprint());
}

TEST_CASE("corpus encoding appends the end id and skips blank lines", "[corpus]") {
  Vocabulary v = build_vocabulary(lines({"a b"}), 1);
  std::size_t skipped = 0;
  Corpus c = encode_corpus(lines({"a b", "", "b zzz", "  "}), v, Split::dev, &skipped);
  CHECK(skipped == 2);
  REQUIRE(c.sentences.size() == 2);
  CHECK(c.sentences[0].ids == std::vector<std::int32_t>{3, 4, kEndId});
  CHECK(c.sentences[1].ids == std::vector<std::int32_t>{4, kUnkId, kEndId});
  CHECK(c.split_label == Split::dev);
  CHECK(c.vocab_fingerprint == v.fingerprint());
  CHECK(c.token_count() == 6);
}

TEST_CASE("corpus text round trip drops only the terminal boundary", "[corpus]") {
  Vocabulary v = build_vocabulary(lines({"a b c"}), 1);
  Corpus c = encode_corpus(lines({"a c b", "b"}), v, Split::train);
  CHECK(corpus_to_text(c, v) == "a c b\nb\n");
}

TEST_CASE("sentence validation", "[corpus]") {
  Sentence ok{{3, 4, kEndId}};
  CHECK_NOTHROW(ok.validate());
  Sentence no_end{{3, 4}};
  CHECK_THROWS_AS(no_end.validate(), std::runtime_error);
  Sentence interior{{3, kEndId, kEndId}};
  CHECK_THROWS_AS(interior.validate(), std::runtime_error);
  Sentence start_inside{{kStartId, 3, kEndId}};
  CHECK_THROWS_AS(start_inside.validate(), std::runtime_error);
  Sentence empty{{}};
  CHECK_THROWS_AS(empty.validate(), std::runtime_error);
}

TEST_CASE("split labels round trip through their names", "[corpus]") {
  for (Split s : {Split::train, Split::dev, Split::test, Split::negative_dev})
    CHECK(split_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(split_from_string("bogus"), std::runtime_error);
}

TEST_CASE("agreement rows parse and encode both variants", "[corpus]") {
  Vocabulary v = build_vocabulary(lines({"the dog near cats runs run"}), 1);
  std::vector<std::string> rows = {
      "# comment",
      "",
      "the dog near cats runs\tthe dog near cats run\t4\t1",
  };
  AgreementLoadResult r = load_agreement_rows(rows, v);
  CHECK(r.rejected.empty());
  REQUIRE(r.instances.size() == 1);
  const auto& inst = r.instances[0];
  CHECK(inst.verb_position == 4);
  CHECK(inst.n_attractors == 1);
  CHECK_FALSE(inst.verb_oov);
  CHECK(inst.grammatical.ids.size() == 6);  // five tokens plus terminal
  CHECK(inst.grammatical.ids.back() == kEndId);
  CHECK(inst.grammatical.ids[4] != inst.ungrammatical.ids[4]);
  CHECK(inst.grammatical.ids[0] == inst.ungrammatical.ids[0]);
}

TEST_CASE("agreement rows reject malformed input with reasons", "[corpus]") {
  Vocabulary v = build_vocabulary(lines({"a b c d"}), 1);
  std::vector<std::string> rows = {
      "a b\ta b",                 // too few columns
      "a b\ta c\tx\t0",           // bad integer
      "a b\ta b c\t0\t0",         // length mismatch
      "a b\ta c\t5\t0",           // verb position out of range
      "a b\ta c\t1\t-1",          // negative attractors
      "a b\ta b\t1\t0",           // variants identical
      "a b c\td b a\t1\t0",       // differs in more than one place
      "a b c\ta d c\t0\t0",       // differs away from the verb position
  };
  AgreementLoadResult r = load_agreement_rows(rows, v);
  CHECK(r.instances.empty());
  REQUIRE(r.rejected.size() == rows.size());
  CHECK(r.rejected[0].find("4 tab-separated") != std::string::npos);
  CHECK(r.rejected[2].find("length") != std::string::npos);
  CHECK(r.rejected[3].find("out of range") != std::string::npos);
  CHECK(r.rejected[4].find("negative attractor") != std::string::npos);
  CHECK(r.rejected[5].find("exactly at the verb") != std::string::npos);
}

TEST_CASE("out of vocabulary verbs are flagged", "[corpus]") {
  Vocabulary v = build_vocabulary(lines({"a b c"}), 1);
  std::vector<std::string> rows = {"a b\ta zzz\t1\t0"};
  AgreementLoadResult r = load_agreement_rows(rows, v);
  REQUIRE(r.instances.size() == 1);
  CHECK(r.instances[0].verb_oov);
}

TEST_CASE("attractor buckets overflow at six", "[corpus]") {
  CHECK(attractor_bucket(0) == 0);
  CHECK(attractor_bucket(5) == 5);
  CHECK(attractor_bucket(6) == kOverflowBucket);
  CHECK(attractor_bucket(42) == kOverflowBucket);

  std::vector<AgreementInstance> insts(5);
  insts[0].n_attractors = 0;
  insts[1].n_attractors = 1;
  insts[2].n_attractors = 6;
  insts[3].n_attractors = 9;
  insts[4].n_attractors = 1;
  auto buckets = bucket_by_attractors(insts);
  CHECK(buckets[0] == std::vector<std::size_t>{0});
  CHECK(buckets[1] == std::vector<std::size_t>{1, 4});
  CHECK(buckets[kOverflowBucket] == std::vector<std::size_t>{2, 3});
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  CHECK(total == insts.size());
}
