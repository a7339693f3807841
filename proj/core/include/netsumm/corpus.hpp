#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace netsumm {

struct Document {
  std::string id;
  std::string text;
  std::optional<bool> relevant;  // ground truth, evaluation only
};

using TermId = std::uint32_t;

struct TermWeight {
  TermId term;
  double weight;

  friend bool operator==(const TermWeight&, const TermWeight&) = default;
};

/// Sparse TF-IDF vector, sorted by term id, no stored zeros.
struct TermVector {
  std::vector<TermWeight> entries;

  double norm() const;
  double dot(const TermVector& other) const;
};

struct TokenizerOptions {
  bool drop_stopwords = true;
  std::size_t min_token_length = 2;
};

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

enum class CorpusFormat { kPlainDir, kJsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

/// Documents in lexicographic id order plus the vocabulary they induce.
class Corpus {
 public:
  struct TermCount {
    TermId term;
    std::uint32_t count;
  };

  /// Validates ids and bodies, sorts by id and tokenizes.
  static Corpus from_documents(std::vector<Document> documents, const TokenizerOptions& options = {});

  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  std::vector<std::string> ids() const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  const std::vector<std::string>& vocabulary() const { return terms_; }
  std::optional<TermId> term_id(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }

  /// Raw term counts of document i, sorted by term id.
  const std::vector<TermCount>& counts(std::size_t i) const { return counts_.at(i); }

 private:
  std::vector<Document> documents_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_index_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::vector<std::vector<TermCount>> counts_;
};

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const TokenizerOptions& options = {});

/// Parses jsonl text; `source` names the input in error messages.
Corpus parse_jsonl_corpus(std::string_view text, std::string_view source = "<jsonl>",
                          const TokenizerOptions& options = {});

std::string to_jsonl(const Corpus& corpus);

/// tf = raw count, idf = ln(N / df). Terms present in every document drop out.
std::vector<TermVector> tfidf(const Corpus& corpus);

/// Highest summed TF-IDF weight over the members; ties go to the smaller term.
std::vector<std::pair<std::string, double>> top_terms(const Corpus& corpus,
                                                      const std::vector<TermVector>& vectors,
                                                      const std::set<std::string>& member_ids,
                                                      std::size_t m);

std::vector<std::pair<std::string, double>> top_terms(const Corpus& corpus,
                                                      const std::set<std::string>& member_ids,
                                                      std::size_t m);

}  // namespace netsumm
