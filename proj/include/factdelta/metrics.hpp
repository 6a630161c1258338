#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace factdelta {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
struct EmptyContinuation : MetricsError {
  EmptyContinuation() : MetricsError("continuation has no token") {}
};
struct MissingCandidate : MetricsError {
  explicit MissingCandidate(const std::string& c) : MetricsError("missing candidate '" + c + "'") {}
};
struct EmptySet : MetricsError {
  explicit EmptySet(const std::string& what) : MetricsError("empty set: " + what) {}
};
struct TooFewSamples : MetricsError {
  TooFewSamples() : MetricsError("aggregation needs at least two samples") {}
};

enum class SequenceMode {
  GeometricMean,  // exp(mean log p)
  FullSequence,   // exp(sum log p)
};

double sequence_probability(std::span<const double> token_probs);
// Same, from natural-log token probabilities.
double sequence_probability_from_logprobs(std::span<const double> logprobs,
                                          SequenceMode mode = SequenceMode::GeometricMean);

struct DiffSuccess {
  double diff = 0;
  double success = 0;
};

// Candidate probabilities on one prompt.
using CandidateProbs = std::map<std::string, double>;
double probability_of(const CandidateProbs& probs, const std::string& candidate);

DiffSuccess efficacy(double p_new, double p_old);
DiffSuccess efficacy(const CandidateProbs& probs, const std::string& new_object, const std::string& old_object);

// Mean of per-cloze efficacies.
DiffSuccess generalization(std::span<const DiffSuccess> per_cloze);

struct NeighborProbs {
  double pre = 0;
  double post = 0;
};
// max(P - P*, 0) for one neighbor.
double neighbor_bleedover(const NeighborProbs& p);
double bleedover(std::span<const NeighborProbs> neighbors);

// Whitespace tokens; fewer than n tokens gives 0.
double ngram_entropy(const std::string& text, std::size_t n);
// Mean over generations of (2/3) H2 + (4/3) H3.
double fluency(std::span<const std::string> generations);

struct UpdateCaseResult {
  double efficacy_diff = 0;
  double efficacy_success = 0;
  double gen_diff = 0;
  double gen_success = 0;
  double bleedover_random = 0;
  double bleedover_knn = 0;
  double fluency = 0;
};

struct MetricSummary {
  double mean = 0;
  double half_width = 0;
  std::size_t n = 0;
};

// Mean and 1.96 * sample sd / sqrt(n).
MetricSummary aggregate(std::span<const double> values);

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{"Efficacy-D",       "Efficacy-S",    "Gen.-D",  "Gen.-S",
                                             "Bleedover-Random", "Bleedover-KNN", "Fluency", "seconds/update"};
  return cols;
}

struct AggregateRow {
  std::string algorithm;
  std::map<std::string, MetricSummary> metrics;  // keyed by report column
  std::optional<double> seconds_per_update;
};

// Probability-scale metrics are scaled by 100; fluency is left in bits.
AggregateRow aggregate_results(const std::string& algorithm, std::span<const UpdateCaseResult> results,
                               std::optional<double> seconds_per_update = std::nullopt);

std::string format_report_tsv(std::span<const AggregateRow> rows);

// --- Popularity / similarity bleedover matrix ---------------------------------

struct NeighborBleedRecord {
  std::string algorithm;
  double bleedover = 0;
  double popularity = 0;
  double similarity = 0;
};

struct BleedoverMatrix {
  std::string algorithm;
  std::vector<double> popularity_edges;  // bins - 1 lower edges
  std::vector<double> similarity_edges;
  // [popularity bin][similarity bin]; nullopt for an empty cell.
  std::vector<std::vector<std::optional<double>>> cells;
};

// Bleedover is z-scored within each algorithm; quantile edges are computed
// over all records so every algorithm shares the same grid.
std::vector<BleedoverMatrix> bleedover_bins(std::span<const NeighborBleedRecord> records, std::size_t bins);

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins);
std::size_t bin_of(double value, const std::vector<double>& edges);

// Seeded uniform sample without replacement of min(m, |eligible|) indices
// from [0, population), skipping indices for which `excluded` is true.
// Returned in draw order.
std::vector<std::size_t> sample_random_indices(std::size_t population, std::size_t m, std::uint64_t seed,
                                               const std::vector<bool>& excluded = {});

}  // namespace factdelta
