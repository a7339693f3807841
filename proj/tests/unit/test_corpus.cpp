#include <doctest.h>

#include <cmath>

#include "netsumm/corpus.hpp"
#include "netsumm/errors.hpp"
#include "netsumm/eval.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace netsumm;
namespace fs = std::filesystem;

namespace {

Corpus two_docs() {
  return Corpus::from_documents({{"d1", "cat dog", std::nullopt}, {"d2", "dog fish", std::nullopt}});
}

std::map<std::string, double> as_map(const Corpus& corpus, const TermVector& v) {
  std::map<std::string, double> m;
  for (const auto& e : v.entries) m[corpus.term(e.term)] = e.weight;
  return m;
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits on non-alphanumerics and drops short tokens and stopwords") {
  CHECK(tokenize("The Cat-dog, a FISH!") == std::vector<std::string>{"cat", "dog", "fish"});
  TokenizerOptions keep;
  keep.drop_stopwords = false;
  CHECK(tokenize("The cat", keep) == std::vector<std::string>{"the", "cat"});
  CHECK(tokenize("x y zz") == std::vector<std::string>{"zz"});
}

TEST_CASE("plain directory corpus") {
  TempDir dir;
  dir.write("a.txt", "cat dog");
  dir.write("b.txt", "dog fish");
  const auto corpus = load_corpus(dir.path(), CorpusFormat::kPlainDir);
  CHECK(corpus.size() == 2);
  CHECK(corpus.ids() == std::vector<std::string>{"a", "b"});
  auto vocab = corpus.vocabulary();
  std::sort(vocab.begin(), vocab.end());
  CHECK(vocab == std::vector<std::string>{"cat", "dog", "fish"});
}

TEST_CASE("empty directory reports no documents") {
  TempDir dir;
  CHECK_THROWS_WITH_AS(load_corpus(dir.path(), CorpusFormat::kPlainDir), doctest::Contains("no documents found"),
                       InputError);
}

TEST_CASE("missing path is an error") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/netsumm/corpus", CorpusFormat::kJsonl), Error);
}

TEST_CASE("jsonl duplicate id names the id") {
  const std::string text = R"({"id":"d1","text":"cat"})" "\n" R"({"id":"d1","text":"dog"})" "\n";
  CHECK_THROWS_WITH_AS(parse_jsonl_corpus(text), doctest::Contains("\"d1\""), InputError);
}

TEST_CASE("malformed jsonl reports the line number") {
  const std::string text = R"({"id":"d1","text":"cat"})" "\n" "{not json\n";
  CHECK_THROWS_WITH_AS(parse_jsonl_corpus(text, "x.jsonl"), doctest::Contains("x.jsonl:2"), InputError);
}

TEST_CASE("empty document body is rejected") {
  CHECK_THROWS_AS(Corpus::from_documents({{"d1", "   \n", std::nullopt}}), InputError);
}

TEST_CASE("documents are ordered by id and jsonl round-trips") {
  const auto corpus = Corpus::from_documents(
      {{"b", "zebra stripes", true}, {"a", "apple pie", false}, {"c", "cherry tart", std::nullopt}});
  CHECK(corpus.ids() == std::vector<std::string>{"a", "b", "c"});
  const auto again = parse_jsonl_corpus(to_jsonl(corpus));
  CHECK(again.ids() == corpus.ids());
  CHECK(again.documents()[1].relevant == std::optional<bool>(true));
  CHECK(again.documents()[2].relevant == std::nullopt);
  CHECK(to_jsonl(again) == to_jsonl(corpus));
}

TEST_CASE("single-document corpus has empty vectors") {
  const auto corpus = Corpus::from_documents({{"only", "cat dog fish", std::nullopt}});
  const auto v = tfidf(corpus);
  REQUIRE(v.size() == 1);
  CHECK(v[0].entries.empty());
}

TEST_CASE("two-document tfidf drops the shared term") {
  const auto corpus = two_docs();
  const auto v = tfidf(corpus);
  CHECK(as_map(corpus, v[0]) == std::map<std::string, double>{{"cat", std::log(2.0)}});
  CHECK(as_map(corpus, v[1]) == std::map<std::string, double>{{"fish", std::log(2.0)}});
}

TEST_CASE("tfidf matches a brute-force recount") {
  Rng rng(11);
  SyntheticParams params;
  params.n_relevant = 2;
  params.n_irrelevant = 2;
  params.doc_length = 25;
  const auto syn = generate_synthetic_corpus(params, rng);
  std::vector<std::vector<std::string>> tokens;
  for (const auto& d : syn.corpus.documents()) tokens.push_back(tokenize(d.text));
  const auto expected = oracle::tfidf(tokens);
  const auto actual = tfidf(syn.corpus);
  REQUIRE(actual.size() == 4);
  for (std::size_t d = 0; d < 4; ++d) {
    const auto got = as_map(syn.corpus, actual[d]);
    REQUIRE(got.size() == expected[d].size());
    for (const auto& [term, w] : expected[d]) {
      REQUIRE(got.count(term) == 1);
      CHECK(got.at(term) == doctest::Approx(w).epsilon(1e-12));
    }
    for (const auto& e : actual[d].entries) CHECK(e.weight > 0.0);
  }
}

TEST_CASE("top terms: tie-break, single member, brute-force aggregation") {
  const auto corpus = two_docs();
  const auto top = top_terms(corpus, {"d1", "d2"}, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].first == "cat");
  const auto single = top_terms(corpus, {"d2"}, 5);
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == "fish");
  CHECK(single[0].second == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(top_terms(corpus, {"nope"}, 1), NotFoundError);

  Rng rng(5);
  SyntheticParams params;
  params.n_relevant = 3;
  params.n_irrelevant = 3;
  const auto syn = generate_synthetic_corpus(params, rng);
  std::vector<std::vector<std::string>> tokens;
  for (const auto& d : syn.corpus.documents()) tokens.push_back(tokenize(d.text));
  const auto expected_vectors = oracle::tfidf(tokens);
  std::map<std::string, double> sums;
  std::set<std::string> members;
  for (std::size_t d = 0; d < syn.corpus.size(); ++d) {
    members.insert(syn.corpus.ids()[d]);
    for (const auto& [t, w] : expected_vectors[d]) sums[t] += w;
  }
  std::vector<std::pair<std::string, double>> ranked(sums.begin(), sums.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto got = top_terms(syn.corpus, members, 3);
  REQUIRE(got.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(got[i].first == ranked[i].first);
    CHECK(got[i].second == doctest::Approx(ranked[i].second).epsilon(1e-12));
  }
}

TEST_CASE("tfidf is deterministic for identical bytes") {
  const auto a = tfidf(parse_jsonl_corpus(to_jsonl(two_docs())));
  const auto b = tfidf(parse_jsonl_corpus(to_jsonl(two_docs())));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].entries == b[i].entries);
}
