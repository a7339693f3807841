#pragma once

// Straight-line reference computations used as test oracles. They only read
// inputs through plain accessors and never call the functions under test.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netsumm/corpus.hpp"
#include "netsumm/netgraph.hpp"
#include "netsumm/rng.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;
using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Term -> weight, recounted from the tokenizer output.
std::vector<std::map<std::string, double>> tfidf(const std::vector<std::vector<std::string>>& docs);

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

Matrix dense(const netsumm::DocumentGraph& graph);

/// Eq. 1 in indicator-vector form: sum_i (y_i^T W y_i) / (y_i^T D y_i),
/// zero-degree groups contributing 0.
double f_prob(const Matrix& w, const std::vector<int>& labels, int k);

/// Matrix form of the feedback constraint: with symmetric 0/1 adjacency
/// A+ and A-, sum_i y_i^T A+ y_i - sum_i y_i^T A- y_i == sum(A+).
bool matrix_constraint_holds(std::size_t n, const PairList& positive, const PairList& negative,
                             const std::vector<int>& labels, int k);

/// Every label vector in {0..k-1}^n (odometer order, node 0 fastest).
std::vector<std::vector<int>> all_labelings(std::size_t n, int k);

struct Best {
  std::vector<int> labels;
  double f_prob = -1.0;
  bool found = false;
};

/// Max f_prob over all k^n labelings that co-group every positive pair and
/// split every negative pair.
Best constrained_optimum(const Matrix& w, const PairList& positive, const PairList& negative, int k);

/// Random symmetric graph; with `blocks` > 1 node i belongs to block
/// i % blocks and within-block weights dominate.
netsumm::DocumentGraph random_graph(std::size_t n, netsumm::Rng& rng, std::size_t blocks = 1,
                                    double sparsity = 0.0);

/// Random assignment with every label drawn uniformly from [0, k).
netsumm::Assignment random_assignment(std::size_t n, int k, netsumm::Rng& rng);

}  // namespace oracle
