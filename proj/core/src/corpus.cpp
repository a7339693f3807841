#include "netsumm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"

namespace netsumm {
namespace {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "about", "after", "again", "all",   "also",  "am",    "an",    "and",   "any",   "are",
      "as",    "at",    "be",    "been",  "before", "being", "but",   "by",    "can",   "could",
      "did",   "do",    "does",  "for",   "from",  "had",   "has",   "have",  "he",    "her",
      "him",   "his",   "how",   "if",    "in",    "into",  "is",    "it",    "its",   "me",
      "more",  "most",  "my",    "no",    "not",   "of",    "on",    "or",    "our",   "out",
      "over",  "she",   "so",    "some",  "such",  "than",  "that",  "the",   "their", "them",
      "then",  "there", "these", "they",  "this",  "those", "to",    "too",   "under", "up",
      "us",    "very",  "was",   "we",    "were",  "what",  "when",  "where", "which", "while",
      "who",   "why",   "will",  "with",  "would", "you",   "your"};
  return words;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

double TermVector::norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight * e.weight;
  return std::sqrt(s);
}

double TermVector::dot(const TermVector& other) const {
  double s = 0.0;
  auto a = entries.begin();
  auto b = other.entries.begin();
  while (a != entries.end() && b != other.entries.end()) {
    if (a->term < b->term) {
      ++a;
    } else if (b->term < a->term) {
      ++b;
    } else {
      s += a->weight * b->weight;
      ++a;
      ++b;
    }
  }
  return s;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= options.min_token_length &&
        !(options.drop_stopwords && stopwords().contains(cur))) {
      tokens.push_back(cur);
    }
    cur.clear();
  };
  for (unsigned char c : text) {
    if (c < 128 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (name == "plain-dir") return CorpusFormat::kPlainDir;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  return std::nullopt;
}

Corpus Corpus::from_documents(std::vector<Document> documents, const TokenizerOptions& options) {
  if (documents.empty()) throw InputError("no documents found");
  std::sort(documents.begin(), documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].id.empty()) throw InputError("document with empty id");
    if (i > 0 && documents[i].id == documents[i - 1].id) {
      throw InputError("duplicate document id \"" + documents[i].id + "\"");
    }
    if (blank(documents[i].text)) {
      throw InputError("empty document body for id \"" + documents[i].id + "\"");
    }
  }

  Corpus corpus;
  std::vector<std::map<std::string, std::uint32_t>> raw(documents.size());
  std::set<std::string> vocab;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    for (auto& tok : tokenize(documents[i].text, options)) {
      ++raw[i][tok];
      vocab.insert(std::move(tok));
    }
  }
  corpus.terms_.assign(vocab.begin(), vocab.end());
  for (TermId t = 0; t < corpus.terms_.size(); ++t) corpus.term_index_.emplace(corpus.terms_[t], t);
  corpus.counts_.resize(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    // std::map iterates lexicographically, matching term-id order.
    for (const auto& [tok, count] : raw[i]) {
      corpus.counts_[i].push_back({corpus.term_index_.at(tok), count});
    }
    corpus.doc_index_.emplace(documents[i].id, i);
  }
  corpus.documents_ = std::move(documents);
  return corpus;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(documents_.size());
  for (const auto& d : documents_) out.push_back(d.id);
  return out;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = doc_index_.find(std::string(id));
  if (it == doc_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TermId> Corpus::term_id(std::string_view term) const {
  auto it = term_index_.find(std::string(term));
  if (it == term_index_.end()) return std::nullopt;
  return it->second;
}

Corpus parse_jsonl_corpus(std::string_view text, std::string_view source,
                          const TokenizerOptions& options) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (blank(line)) continue;
    auto where = std::string(source) + ":" + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw InputError("malformed jsonl at " + where + ": not valid JSON");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("text") || !obj["text"].is_string()) {
      throw InputError("malformed jsonl at " + where + ": expected string fields \"id\" and \"text\"");
    }
    Document doc{obj["id"].get<std::string>(), obj["text"].get<std::string>(), std::nullopt};
    if (obj.contains("relevant")) {
      if (!obj["relevant"].is_boolean()) {
        throw InputError("malformed jsonl at " + where + ": \"relevant\" must be boolean");
      }
      doc.relevant = obj["relevant"].get<bool>();
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) throw InputError("no documents found in " + std::string(source));
  return Corpus::from_documents(std::move(docs), options);
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const TokenizerOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw InputError("corpus path does not exist: " + path.string());
  if (format == CorpusFormat::kJsonl) {
    if (!fs::is_regular_file(path)) throw InputError("jsonl corpus must be a file: " + path.string());
    return parse_jsonl_corpus(read_file(path), path.string(), options);
  }
  if (!fs::is_directory(path)) throw InputError("plain-dir corpus must be a directory: " + path.string());
  std::vector<Document> docs;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    docs.push_back({entry.path().stem().string(), read_file(entry.path()), std::nullopt});
  }
  if (docs.empty()) throw InputError("no documents found in " + path.string());
  return Corpus::from_documents(std::move(docs), options);
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    nlohmann::json obj = {{"id", d.id}, {"text", d.text}};
    if (d.relevant) obj["relevant"] = *d.relevant;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<TermVector> tfidf(const Corpus& corpus) {
  const auto n_docs = corpus.size();
  std::vector<std::uint32_t> df(corpus.vocabulary().size(), 0);
  for (std::size_t i = 0; i < n_docs; ++i) {
    for (const auto& tc : corpus.counts(i)) ++df[tc.term];
  }
  std::vector<TermVector> vectors(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) {
    for (const auto& tc : corpus.counts(i)) {
      if (df[tc.term] == n_docs) continue;
      const double idf = std::log(static_cast<double>(n_docs) / df[tc.term]);
      vectors[i].entries.push_back({tc.term, tc.count * idf});
    }
  }
  return vectors;
}

std::vector<std::pair<std::string, double>> top_terms(const Corpus& corpus,
                                                      const std::vector<TermVector>& vectors,
                                                      const std::set<std::string>& member_ids,
                                                      std::size_t m) {
  if (m == 0) throw InputError("top_terms: m must be positive");
  std::map<TermId, double> sums;
  for (const auto& id : member_ids) {
    auto idx = corpus.index_of(id);
    if (!idx) throw NotFoundError("unknown document id \"" + id + "\"");
    for (const auto& e : vectors.at(*idx).entries) sums[e.term] += e.weight;
  }
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(sums.size());
  for (const auto& [t, w] : sums) ranked.emplace_back(corpus.term(t), w);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > m) ranked.resize(m);
  return ranked;
}

std::vector<std::pair<std::string, double>> top_terms(const Corpus& corpus,
                                                      const std::set<std::string>& member_ids,
                                                      std::size_t m) {
  return top_terms(corpus, tfidf(corpus), member_ids, m);
}

}  // namespace netsumm
