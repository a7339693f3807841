#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsumm/corpus.hpp"
#include "netsumm/feedback.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/qlearn.hpp"
#include "netsumm/rng.hpp"

namespace netsumm {

struct GroundTruth {
  std::set<std::string> relevant;

  /// Documents flagged relevant in the corpus; unflagged count as irrelevant.
  static GroundTruth from_corpus(const Corpus& corpus);
};

/// Mean relevant fraction over groups holding at least one relevant document.
/// Throws InputError when no document in `ids` is relevant.
double purity_rho(const Assignment& assignment, const std::vector<std::string>& ids, const GroundTruth& truth);

/// ceil(p_pos * C(r, 2)) relevant-relevant pairs and ceil(p_neg * r * i)
/// relevant-irrelevant pairs, drawn without replacement.
FeedbackGraphs sample_feedback(const GroundTruth& truth, const std::vector<std::string>& ids, double p_pos,
                               double p_neg, Rng& rng);

struct OracleResult {
  Assignment best;
  double f_prob = 0.0;
  bool satisfying = true;  // false: no assignment satisfies all feedback
  std::size_t satisfied = 0;
  std::size_t enumerated = 0;
};

/// Number of partitions of n items into at most k blocks, saturating.
std::uint64_t partition_count(std::size_t n, int k);

/// Exhaustive search over partitions into at most k blocks (labels up to
/// permutation). Throws InputError above `limit` partitions.
OracleResult brute_force_oracle(const DocumentGraph& graph, const PairConstraints& feedback, int k,
                                std::uint64_t limit = 1'000'000);

struct SpectralOptions {
  std::size_t max_iterations = 20000;
  double tolerance = 1e-10;
  std::size_t kmeans_restarts = 10;
};

struct EigenResult {
  std::vector<double> values;   // ascending eigenvalues of the normalized Laplacian
  std::vector<double> vectors;  // n x k row-major, column j pairs with values[j]
  std::size_t iterations = 0;
};

/// k smallest eigenpairs of I - D^-1/2 W D^-1/2 by orthogonal iteration.
/// Throws NumericalError if the iteration cap is hit.
EigenResult laplacian_eigenvectors(const DocumentGraph& graph, int k, std::uint64_t seed,
                                   const SpectralOptions& options = {});

/// Feedback-blind normalized spectral clustering.
Assignment spectral_baseline(const DocumentGraph& graph, int k, std::uint64_t seed,
                             const SpectralOptions& options = {});

Assignment random_baseline(std::size_t n, int k, Rng& rng);

struct SyntheticParams {
  std::size_t n_relevant = 10;
  std::size_t n_irrelevant = 20;
  std::size_t n_topics = 2;
  std::size_t topic_vocabulary = 30;
  std::size_t story_vocabulary = 15;
  std::size_t background_vocabulary = 60;
  std::size_t doc_length = 40;
  double topic_weight = 0.35;  // share of words from the document's topic pool
  double story_weight = 0.35;  // share of words from the story pool (relevant only)

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticParams from_json(const nlohmann::json& j);
};

struct SyntheticCorpus {
  Corpus corpus;
  GroundTruth truth;
  std::vector<std::size_t> topic;  // per document, corpus order
};

/// Planted-story corpus: relevant documents mix a shared story vocabulary
/// into their topic; irrelevant ones draw from topic and background only.
SyntheticCorpus generate_synthetic_corpus(const SyntheticParams& params, Rng& rng);

enum class Method { kLearned, kSpectral, kRandom };
const char* to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct ExperimentConfig {
  std::vector<Method> methods{Method::kLearned, Method::kSpectral, Method::kRandom};
  std::vector<int> targets{2, 4, 8, 16};
  std::vector<std::uint64_t> seeds{1};
  double p_pos = 0.10;
  double p_neg = 0.01;
  SyntheticParams corpus;
  Hyperparameters hyperparameters;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ExperimentRow {
  Method method = Method::kLearned;
  int target = 2;
  std::uint64_t seed = 0;
  double rho = 0.0;
  double satisfied_ratio = 0.0;
  double f_prob = 0.0;
  double runtime_ms = 0.0;
  std::size_t feedback_pairs = 0;
  std::string error;  // non-empty when the cell failed
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ExperimentRow> rows;  // seed, method, target order

  /// Deterministic for a fixed config; runtimes are left out.
  nlohmann::json to_json() const;
  std::string to_csv() const;
  /// Mean satisfied ratio and rho per (target, method).
  std::string satisfied_plot_csv() const;
  std::string rho_plot_csv() const;
};

/// Assignment a method produces for one experiment cell.
Assignment run_method(Method method, const DocumentGraph& graph, const FeedbackGraphs& fb, int target,
                      const Hyperparameters& hp, std::uint64_t seed);

ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace netsumm
