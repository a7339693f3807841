#include "netsumm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "netsumm/errors.hpp"
#include "netsumm/summarizer.hpp"

namespace netsumm {
namespace {

// Guards ceil() against products like 0.1 * 30 = 3.0000000000000004.
std::size_t ceil_count(double p, std::size_t total) {
  return static_cast<std::size_t>(std::ceil(p * static_cast<double>(total) - 1e-9));
}

template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t count, Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

// Cyclic Jacobi on a small symmetric matrix. Returns eigenvalues, and
// eigenvectors as columns of `vecs` (row-major m x m).
std::vector<double> jacobi_eigen(std::vector<double> a, std::size_t m, std::vector<double>& vecs) {
  vecs.assign(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) vecs[i * m + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) off += a[p * m + q] * a[p * m + q];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = a[p * m + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < m; ++r) {
          const double arp = a[r * m + p], arq = a[r * m + q];
          a[r * m + p] = c * arp - s * arq;
          a[r * m + q] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < m; ++r) {
          const double apr = a[p * m + r], aqr = a[q * m + r];
          a[p * m + r] = c * apr - s * aqr;
          a[q * m + r] = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < m; ++r) {
          const double vrp = vecs[r * m + p], vrq = vecs[r * m + q];
          vecs[r * m + p] = c * vrp - s * vrq;
          vecs[r * m + q] = s * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<double> values(m);
  for (std::size_t i = 0; i < m; ++i) values[i] = a[i * m + i];
  return values;
}

// Modified Gram-Schmidt on the columns of an n x k row-major matrix.
// Columns that collapse are replaced with fresh random directions.
void orthonormalize(std::vector<double>& x, std::size_t n, std::size_t k, Rng& rng) {
  for (std::size_t j = 0; j < k; ++j) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      for (std::size_t p = 0; p < j; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += x[i * k + j] * x[i * k + p];
        for (std::size_t i = 0; i < n; ++i) x[i * k + j] -= dot * x[i * k + p];
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += x[i * k + j] * x[i * k + j];
      norm = std::sqrt(norm);
      if (norm > 1e-12) {
        for (std::size_t i = 0; i < n; ++i) x[i * k + j] /= norm;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) x[i * k + j] = rng.uniform(-1.0, 1.0);
    }
  }
}

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Lloyd iterations from k-means++ seeds; best of several restarts.
std::vector<int> kmeans(const std::vector<double>& pts, std::size_t n, std::size_t dim, std::size_t k, Rng& rng,
                        std::size_t restarts) {
  std::vector<int> best_labels(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    std::vector<double> centres;
    centres.reserve(k * dim);
    const auto first = rng.uniform_index(n);
    centres.insert(centres.end(), pts.begin() + static_cast<std::ptrdiff_t>(first * dim),
                   pts.begin() + static_cast<std::ptrdiff_t>((first + 1) * dim));
    std::vector<double> d2(n);
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < c; ++q) d2[i] = std::min(d2[i], sq_dist(&pts[i * dim], &centres[q * dim], dim));
        total += d2[i];
      }
      std::size_t pick = 0;
      if (total > 0.0) {
        double u = rng.uniform01() * total;
        for (pick = 0; pick + 1 < n; ++pick) {
          if (d2[pick] > 0.0 && u < d2[pick]) break;
          u -= d2[pick];
        }
        while (d2[pick] == 0.0 && pick > 0) --pick;
      } else {
        pick = rng.uniform_index(n);
      }
      centres.insert(centres.end(), pts.begin() + static_cast<std::ptrdiff_t>(pick * dim),
                     pts.begin() + static_cast<std::ptrdiff_t>((pick + 1) * dim));
    }

    std::vector<int> labels(n, -1);
    double inertia = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          const double dd = sq_dist(&pts[i * dim], &centres[c * dim], dim);
          if (dd < bd) {
            bd = dd;
            best = static_cast<int>(c);
          }
        }
        inertia += bd;
        if (labels[i] != best) {
          labels[i] = best;
          changed = true;
        }
      }
      std::vector<double> sums(k * dim, 0.0);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++counts[c];
        for (std::size_t t = 0; t < dim; ++t) sums[c * dim + t] += pts[i * dim + t];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          // Empty cluster: take over the point farthest from its centre.
          std::size_t far = 0;
          double fd = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const auto li = static_cast<std::size_t>(labels[i]);
            if (counts[li] <= 1) continue;
            const double dd = sq_dist(&pts[i * dim], &centres[li * dim], dim);
            if (dd > fd) {
              fd = dd;
              far = i;
            }
          }
          if (fd < 0.0) continue;
          --counts[static_cast<std::size_t>(labels[far])];
          labels[far] = static_cast<int>(c);
          counts[c] = 1;
          std::copy_n(&pts[far * dim], dim, &centres[c * dim]);
          changed = true;
          continue;
        }
        for (std::size_t t = 0; t < dim; ++t) centres[c * dim + t] = sums[c * dim + t] / static_cast<double>(counts[c]);
      }
      if (!changed) break;
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

}  // namespace

GroundTruth GroundTruth::from_corpus(const Corpus& corpus) {
  GroundTruth t;
  for (const auto& d : corpus.documents()) {
    if (d.relevant.value_or(false)) t.relevant.insert(d.id);
  }
  return t;
}

double purity_rho(const Assignment& assignment, const std::vector<std::string>& ids, const GroundTruth& truth) {
  if (assignment.size() != ids.size()) throw DimensionError("assignment length does not match id space");
  assignment.validate();
  const auto k = static_cast<std::size_t>(assignment.k);
  std::vector<std::size_t> members(k, 0), relevant(k, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto g = static_cast<std::size_t>(assignment.labels[i]);
    ++members[g];
    if (truth.relevant.contains(ids[i])) ++relevant[g];
  }
  double sum = 0.0;
  std::size_t groups = 0;
  for (std::size_t g = 0; g < k; ++g) {
    if (relevant[g] == 0) continue;
    sum += static_cast<double>(relevant[g]) / static_cast<double>(members[g]);
    ++groups;
  }
  if (groups == 0) throw InputError("purity is undefined without relevant documents");
  return sum / static_cast<double>(groups);
}

FeedbackGraphs sample_feedback(const GroundTruth& truth, const std::vector<std::string>& ids, double p_pos,
                               double p_neg, Rng& rng) {
  if (!(p_pos >= 0.0 && p_pos <= 1.0) || !(p_neg >= 0.0 && p_neg <= 1.0)) {
    throw InputError("feedback fractions must be in [0, 1]");
  }
  std::vector<std::string> rel, irr;
  for (const auto& id : ids) (truth.relevant.contains(id) ? rel : irr).push_back(id);
  if (rel.size() < 2) throw InputError("sampling feedback needs at least 2 relevant documents");

  std::vector<std::pair<std::size_t, std::size_t>> pos_pool, neg_pool;
  for (std::size_t a = 0; a < rel.size(); ++a) {
    for (std::size_t b = a + 1; b < rel.size(); ++b) pos_pool.emplace_back(a, b);
  }
  for (std::size_t a = 0; a < rel.size(); ++a) {
    for (std::size_t b = 0; b < irr.size(); ++b) neg_pool.emplace_back(a, b);
  }
  const auto n_pos = ceil_count(p_pos, pos_pool.size());
  const auto n_neg = ceil_count(p_neg, neg_pool.size());
  FeedbackGraphs fb;
  for (const auto& [a, b] : sample_without_replacement(std::move(pos_pool), n_pos, rng)) {
    fb.add(Sign::kPositive, DocPair::make(rel[a], rel[b]));
  }
  for (const auto& [a, b] : sample_without_replacement(std::move(neg_pool), n_neg, rng)) {
    fb.add(Sign::kNegative, DocPair::make(rel[a], irr[b]));
  }
  return fb;
}

std::uint64_t partition_count(std::size_t n, int k) {
  // Stirling numbers of the second kind, S(i, j) = j S(i-1, j) + S(i-1, j-1).
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max() / 4;
  const auto kk = static_cast<std::size_t>(std::max(k, 0));
  std::vector<std::uint64_t> s(kk + 1, 0);
  s[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, kk); j >= 1; --j) s[j] = std::min(kMax, j * s[j] + s[j - 1]);
    s[0] = 0;
  }
  std::uint64_t total = 0;
  for (std::size_t j = 1; j <= kk; ++j) total = std::min(kMax, total + s[j]);
  return total;
}

OracleResult brute_force_oracle(const DocumentGraph& graph, const PairConstraints& feedback, int k,
                                std::uint64_t limit) {
  const std::size_t n = graph.size();
  if (k < 1) throw InputError("oracle needs k >= 1");
  if (n == 0) throw InputError("oracle needs a non-empty graph");
  if (partition_count(n, k) > limit) {
    throw InputError("instance too large for exhaustive search (" + std::to_string(partition_count(n, k)) +
                     " partitions)");
  }
  OracleResult out;
  out.satisfying = false;
  bool have = false;
  // Restricted growth strings: labels[i] <= 1 + max(labels[0..i)).
  std::vector<int> labels(n, 0), prefix_max(n, 0);
  while (true) {
    Assignment a{labels, k};
    const std::size_t sat = feedback.count_satisfied(labels);
    const bool full = sat == feedback.size();
    const double fp = f_prob(graph, a);
    ++out.enumerated;
    const bool better = !have || (full && !out.satisfying) ||
                        (full == out.satisfying && (sat > out.satisfied || (sat == out.satisfied && fp > out.f_prob)));
    if (better) {
      have = true;
      out.best = a;
      out.f_prob = fp;
      out.satisfying = full;
      out.satisfied = sat;
    }
    // Advance to the next string; position 0 is always label 0.
    bool advanced = false;
    for (std::size_t i = n; i-- > 1;) {
      const int cap = std::min(prefix_max[i - 1] + 1, k - 1);
      if (labels[i] < cap) {
        ++labels[i];
        prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
          labels[j] = 0;
          prefix_max[j] = prefix_max[i];
        }
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
  }
  return out;
}

EigenResult laplacian_eigenvectors(const DocumentGraph& graph, int k, std::uint64_t seed,
                                   const SpectralOptions& options) {
  const std::size_t n = graph.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) throw InputError("spectral embedding needs 1 <= k <= n");
  const auto kk = static_cast<std::size_t>(k);
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.degree(i) > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(graph.degree(i));
  }
  // M = I + D^-1/2 W D^-1/2 has spectrum 2 - spec(L) >= 0, so its top-k
  // invariant subspace is the bottom-k subspace of L.
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = inv_sqrt[i] * graph.weight(i, j) * inv_sqrt[j];
    m[i * n + i] += 1.0;
  }
  auto multiply = [&](const std::vector<double>& x) {
    std::vector<double> y(n * kk, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double mij = m[i * n + j];
        if (mij == 0.0) continue;
        for (std::size_t c = 0; c < kk; ++c) y[i * kk + c] += mij * x[j * kk + c];
      }
    }
    return y;
  };

  Rng rng(seed);
  std::vector<double> x(n * kk);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  orthonormalize(x, n, kk, rng);

  EigenResult out;
  std::vector<double> ritz(kk), rot;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    auto y = multiply(x);
    orthonormalize(y, n, kk, rng);
    // Rayleigh-Ritz inside the current subspace.
    auto my = multiply(y);
    std::vector<double> t(kk * kk, 0.0);
    for (std::size_t a = 0; a < kk; ++a) {
      for (std::size_t b = 0; b < kk; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += y[i * kk + a] * my[i * kk + b];
        t[a * kk + b] = s;
      }
    }
    for (std::size_t a = 0; a < kk; ++a) {
      for (std::size_t b = a + 1; b < kk; ++b) t[a * kk + b] = t[b * kk + a] = 0.5 * (t[a * kk + b] + t[b * kk + a]);
    }
    ritz = jacobi_eigen(t, kk, rot);
    x.assign(n * kk, 0.0);
    std::vector<double> mx(n * kk, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kk; ++c) {
        double sx = 0.0, smx = 0.0;
        for (std::size_t a = 0; a < kk; ++a) {
          sx += y[i * kk + a] * rot[a * kk + c];
          smx += my[i * kk + a] * rot[a * kk + c];
        }
        x[i * kk + c] = sx;
        mx[i * kk + c] = smx;
      }
    }
    double residual = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = mx[i * kk + c] - ritz[c] * x[i * kk + c];
        r += d * d;
      }
      residual = std::max(residual, std::sqrt(r));
    }
    if (residual < options.tolerance) {
      out.iterations = it;
      std::vector<std::size_t> order(kk);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ritz[a] > ritz[b]; });
      out.values.resize(kk);
      out.vectors.resize(n * kk);
      for (std::size_t c = 0; c < kk; ++c) {
        out.values[c] = 2.0 - ritz[order[c]];
        for (std::size_t i = 0; i < n; ++i) out.vectors[i * kk + c] = x[i * kk + order[c]];
      }
      return out;
    }
  }
  throw NumericalError("spectral eigensolver did not converge within " + std::to_string(options.max_iterations) +
                       " iterations");
}

Assignment spectral_baseline(const DocumentGraph& graph, int k, std::uint64_t seed, const SpectralOptions& options) {
  const std::size_t n = graph.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) throw InputError("spectral baseline needs 1 <= k <= n");
  if (k == 1) return Assignment::trivial(n);
  const auto kk = static_cast<std::size_t>(k);
  auto eig = laplacian_eigenvectors(graph, k, derive_seed(seed, "eigen"), options);
  auto& u = eig.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < kk; ++c) norm += u[i * kk + c] * u[i * kk + c];
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t c = 0; c < kk; ++c) u[i * kk + c] /= norm;
    }
  }
  Rng rng(derive_seed(seed, "kmeans"));
  return {kmeans(u, n, kk, kk, rng, options.kmeans_restarts), k};
}

Assignment random_baseline(std::size_t n, int k, Rng& rng) { return random_assignment(n, k, rng); }

void SyntheticParams::validate() const {
  if (n_relevant < 1 || n_irrelevant < 1 || n_topics < 1 || topic_vocabulary < 1 || story_vocabulary < 1 ||
      background_vocabulary < 1 || doc_length < 1) {
    throw InputError("synthetic corpus sizes must be >= 1");
  }
  if (!(topic_weight >= 0.0) || !(story_weight >= 0.0) || topic_weight + story_weight > 1.0) {
    throw InputError("synthetic corpus weights must be non-negative and sum to at most 1");
  }
}

nlohmann::json SyntheticParams::to_json() const {
  return {{"n_relevant", n_relevant},
          {"n_irrelevant", n_irrelevant},
          {"n_topics", n_topics},
          {"topic_vocabulary", topic_vocabulary},
          {"story_vocabulary", story_vocabulary},
          {"background_vocabulary", background_vocabulary},
          {"doc_length", doc_length},
          {"topic_weight", topic_weight},
          {"story_weight", story_weight}};
}

SyntheticParams SyntheticParams::from_json(const nlohmann::json& j) {
  SyntheticParams p;
  try {
    p.n_relevant = j.value("n_relevant", p.n_relevant);
    p.n_irrelevant = j.value("n_irrelevant", p.n_irrelevant);
    p.n_topics = j.value("n_topics", p.n_topics);
    p.topic_vocabulary = j.value("topic_vocabulary", p.topic_vocabulary);
    p.story_vocabulary = j.value("story_vocabulary", p.story_vocabulary);
    p.background_vocabulary = j.value("background_vocabulary", p.background_vocabulary);
    p.doc_length = j.value("doc_length", p.doc_length);
    p.topic_weight = j.value("topic_weight", p.topic_weight);
    p.story_weight = j.value("story_weight", p.story_weight);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad corpus parameters: ") + e.what());
  }
  p.validate();
  return p;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticParams& params, Rng& rng) {
  params.validate();
  const std::size_t n = params.n_relevant + params.n_irrelevant;
  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  for (auto s : sample_without_replacement(slots, params.n_relevant, rng)) relevant[s] = true;

  // Topics round-robin within the relevant and the irrelevant documents, so
  // both spread evenly over topics.
  std::vector<std::size_t> topic(n);
  std::size_t r = 0, q = 0;
  for (std::size_t i = 0; i < n; ++i) topic[i] = (relevant[i] ? r++ : q++) % params.n_topics;

  char buf[48];
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (std::size_t w = 0; w < params.doc_length; ++w) {
      const double u = rng.uniform01();
      const double story = relevant[i] ? params.story_weight : 0.0;
      if (u < story) {
        std::snprintf(buf, sizeof buf, "story%zu", rng.uniform_index(params.story_vocabulary));
      } else if (u < story + params.topic_weight) {
        std::snprintf(buf, sizeof buf, "topic%zuterm%zu", topic[i], rng.uniform_index(params.topic_vocabulary));
      } else {
        std::snprintf(buf, sizeof buf, "common%zu", rng.uniform_index(params.background_vocabulary));
      }
      if (!text.empty()) text += ' ';
      text += buf;
    }
    std::snprintf(buf, sizeof buf, "doc%03zu", i);
    docs.push_back({buf, std::move(text), relevant[i]});
  }
  SyntheticCorpus out{Corpus::from_documents(std::move(docs)), {}, topic};
  out.truth = GroundTruth::from_corpus(out.corpus);
  return out;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kLearned: return "netreact";
    case Method::kSpectral: return "spectral";
    case Method::kRandom: return "random";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::kLearned, Method::kSpectral, Method::kRandom}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  for (int t : targets) {
    if (t != 2 && t != 4 && t != 8 && t != 16) throw InputError("experiment targets must be in {2, 4, 8, 16}");
  }
  if (!(p_pos >= 0.0 && p_pos <= 1.0) || !(p_neg >= 0.0 && p_neg <= 1.0)) {
    throw InputError("feedback fractions must be in [0, 1]");
  }
  corpus.validate();
  hyperparameters.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  auto ms = nlohmann::json::array();
  for (auto m : methods) ms.push_back(to_string(m));
  return {{"methods", ms},
          {"targets", targets},
          {"seeds", seeds},
          {"p_pos", p_pos},
          {"p_neg", p_neg},
          {"corpus", corpus.to_json()},
          {"hyperparameters", hyperparameters.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) {
        auto parsed = parse_method(m.get<std::string>());
        if (!parsed) throw InputError("unknown method \"" + m.get<std::string>() + "\"");
        c.methods.push_back(*parsed);
      }
    }
    if (j.contains("targets")) c.targets = j["targets"].get<std::vector<int>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.p_pos = j.value("p_pos", c.p_pos);
    c.p_neg = j.value("p_neg", c.p_neg);
    if (j.contains("corpus")) c.corpus = SyntheticParams::from_json(j["corpus"]);
    if (j.contains("hyperparameters")) c.hyperparameters = Hyperparameters::from_json(j["hyperparameters"]);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentReport::to_json() const {
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"method", to_string(r.method)},
                          {"K", r.target},
                          {"seed", r.seed},
                          {"rho", r.rho},
                          {"satisfied_ratio", r.satisfied_ratio},
                          {"f_prob", r.f_prob},
                          {"feedback_pairs", r.feedback_pairs}};
    if (!r.error.empty()) row["error"] = r.error;
    rows_json.push_back(row);
  }
  return {{"v", 1}, {"config", config.to_json()}, {"rows", rows_json}};
}

std::string ExperimentReport::to_csv() const {
  std::string out = "method,K,seed,rho,satisfied_ratio,f_prob,runtime_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%llu,%.17g,%.17g,%.17g,%.3f\n", to_string(r.method), r.target,
                  static_cast<unsigned long long>(r.seed), r.rho, r.satisfied_ratio, r.f_prob, r.runtime_ms);
    out += buf;
  }
  return out;
}

namespace {

std::string plot_csv(const std::vector<ExperimentRow>& rows, const char* column, double ExperimentRow::*field) {
  std::map<std::pair<int, std::string>, std::pair<double, std::size_t>> acc;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    auto& [sum, count] = acc[{r.target, to_string(r.method)}];
    sum += r.*field;
    ++count;
  }
  std::string out = std::string("K,method,") + column + ",runs\n";
  char buf[160];
  for (const auto& [key, v] : acc) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%zu\n", key.first, key.second.c_str(),
                  v.first / static_cast<double>(v.second), v.second);
    out += buf;
  }
  return out;
}

}  // namespace

std::string ExperimentReport::satisfied_plot_csv() const {
  return plot_csv(rows, "mean_satisfied_ratio", &ExperimentRow::satisfied_ratio);
}

std::string ExperimentReport::rho_plot_csv() const { return plot_csv(rows, "mean_rho", &ExperimentRow::rho); }

Assignment run_method(Method method, const DocumentGraph& graph, const FeedbackGraphs& fb, int target,
                      const Hyperparameters& hp, std::uint64_t seed) {
  switch (method) {
    case Method::kLearned:
      return hierarchical_summarize(graph, fb, target, hp, seed).levels.back().assignment;
    case Method::kSpectral:
      return spectral_baseline(graph, target, seed);
    case Method::kRandom: {
      Rng rng(derive_seed(seed, "random-baseline"));
      return random_baseline(graph.size(), target, rng);
    }
  }
  throw InputError("unknown method");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  for (auto seed : config.seeds) {
    Rng corpus_rng(derive_seed(seed, "corpus"));
    const auto synthetic = generate_synthetic_corpus(config.corpus, corpus_rng);
    const auto graph = build_document_graph(synthetic.corpus);
    Rng fb_rng(derive_seed(seed, "feedback"));
    const auto fb = sample_feedback(synthetic.truth, graph.ids(), config.p_pos, config.p_neg, fb_rng);
    for (auto method : config.methods) {
      for (int target : config.targets) {
        ExperimentRow row;
        row.method = method;
        row.target = target;
        row.seed = seed;
        row.feedback_pairs = fb.size();
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto a = run_method(method, graph, fb, target, config.hyperparameters, seed);
          row.rho = purity_rho(a, graph.ids(), synthetic.truth);
          row.satisfied_ratio = satisfaction(fb, graph.ids(), a).ratio();
          row.f_prob = f_prob(graph, a);
        } catch (const Error& e) {
          row.error = e.what();
        }
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace netsumm
