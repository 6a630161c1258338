#include "factdelta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <sstream>

#include "factdelta/hashing.hpp"

namespace factdelta {

double sequence_probability(std::span<const double> token_probs) {
  if (token_probs.empty()) throw EmptyContinuation();
  double sum = 0;
  for (double p : token_probs) {
    if (!(p > 0 && p <= 1)) throw MetricsError("token probability out of (0, 1]");
    sum += std::log(p);
  }
  return std::exp(sum / static_cast<double>(token_probs.size()));
}

double sequence_probability_from_logprobs(std::span<const double> logprobs, SequenceMode mode) {
  if (logprobs.empty()) throw EmptyContinuation();
  double sum = 0;
  for (double lp : logprobs) {
    if (!(lp <= 0) || std::isnan(lp)) throw MetricsError("log probability above 0");
    sum += lp;
  }
  if (mode == SequenceMode::FullSequence) return std::exp(sum);
  return std::exp(sum / static_cast<double>(logprobs.size()));
}

double probability_of(const CandidateProbs& probs, const std::string& candidate) {
  auto it = probs.find(candidate);
  if (it == probs.end()) throw MissingCandidate(candidate);
  return it->second;
}

DiffSuccess efficacy(double p_new, double p_old) { return {p_new - p_old, p_new > p_old ? 1.0 : 0.0}; }

DiffSuccess efficacy(const CandidateProbs& probs, const std::string& new_object, const std::string& old_object) {
  return efficacy(probability_of(probs, new_object), probability_of(probs, old_object));
}

DiffSuccess generalization(std::span<const DiffSuccess> per_cloze) {
  if (per_cloze.empty()) throw EmptySet("generalization clozes");
  DiffSuccess out;
  for (const auto& d : per_cloze) {
    out.diff += d.diff;
    out.success += d.success;
  }
  const double n = static_cast<double>(per_cloze.size());
  out.diff /= n;
  out.success /= n;
  return out;
}

double neighbor_bleedover(const NeighborProbs& p) { return -std::min(p.post - p.pre, 0.0); }

double bleedover(std::span<const NeighborProbs> neighbors) {
  if (neighbors.empty()) throw EmptySet("bleedover neighbors");
  double sum = 0;
  for (const auto& p : neighbors) sum += neighbor_bleedover(p);
  return sum / static_cast<double>(neighbors.size());
}

double ngram_entropy(const std::string& text, std::size_t n) {
  std::istringstream in(text);
  std::vector<std::string> tokens{std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
  if (n == 0 || tokens.size() < n) return 0;
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  const double total = static_cast<double>(tokens.size() - n + 1);
  double h = 0;
  for (const auto& [gram, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double fluency(std::span<const std::string> generations) {
  if (generations.empty()) throw EmptySet("fluency generations");
  double sum = 0;
  for (const auto& g : generations) sum += (2.0 / 3.0) * ngram_entropy(g, 2) + (4.0 / 3.0) * ngram_entropy(g, 3);
  return sum / static_cast<double>(generations.size());
}

MetricSummary aggregate(std::span<const double> values) {
  if (values.size() < 2) throw TooFewSamples();
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  return {mean, 1.96 * sd / std::sqrt(n), values.size()};
}

AggregateRow aggregate_results(const std::string& algorithm, std::span<const UpdateCaseResult> results,
                               std::optional<double> seconds_per_update) {
  AggregateRow row{algorithm, {}, seconds_per_update};
  auto column = [&](const std::string& name, double UpdateCaseResult::*field, double scale) {
    std::vector<double> v;
    v.reserve(results.size());
    for (const auto& r : results) v.push_back(r.*field * scale);
    row.metrics[name] = aggregate(v);
  };
  column("Efficacy-D", &UpdateCaseResult::efficacy_diff, 100);
  column("Efficacy-S", &UpdateCaseResult::efficacy_success, 100);
  column("Gen.-D", &UpdateCaseResult::gen_diff, 100);
  column("Gen.-S", &UpdateCaseResult::gen_success, 100);
  column("Bleedover-Random", &UpdateCaseResult::bleedover_random, 100);
  column("Bleedover-KNN", &UpdateCaseResult::bleedover_knn, 100);
  column("Fluency", &UpdateCaseResult::fluency, 1);
  return row;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

std::string format_report_tsv(std::span<const AggregateRow> rows) {
  std::string out = "Algorithm";
  for (const auto& c : report_columns()) out += "\t" + c;
  out += "\n";
  for (const auto& row : rows) {
    out += row.algorithm;
    for (const auto& c : report_columns()) {
      out += "\t";
      if (c == "seconds/update") {
        out += row.seconds_per_update ? fixed(*row.seconds_per_update, 2) : "NA";
      } else if (auto it = row.metrics.find(c); it != row.metrics.end()) {
        out += fixed(it->second.mean, 1) + " ± " + fixed(it->second.half_width, 1);
      } else {
        out += "NA";
      }
    }
    out += "\n";
  }
  return out;
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  std::vector<double> edges;
  if (values.empty() || bins < 2) return edges;
  std::sort(values.begin(), values.end());
  for (std::size_t j = 1; j < bins; ++j) edges.push_back(values[j * values.size() / bins]);
  return edges;
}

std::size_t bin_of(double value, const std::vector<double>& edges) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

std::vector<BleedoverMatrix> bleedover_bins(std::span<const NeighborBleedRecord> records, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  std::vector<double> pops, sims;
  for (const auto& r : records) {
    pops.push_back(r.popularity);
    sims.push_back(r.similarity);
  }
  const auto pop_edges = quantile_edges(pops, bins);
  const auto sim_edges = quantile_edges(sims, bins);

  std::map<std::string, std::vector<const NeighborBleedRecord*>> by_algo;
  for (const auto& r : records) by_algo[r.algorithm].push_back(&r);

  std::vector<BleedoverMatrix> out;
  for (const auto& [algo, recs] : by_algo) {
    double mean = 0;
    for (const auto* r : recs) mean += r->bleedover;
    mean /= static_cast<double>(recs.size());
    double ss = 0;
    for (const auto* r : recs) ss += (r->bleedover - mean) * (r->bleedover - mean);
    double sd = recs.size() > 1 ? std::sqrt(ss / static_cast<double>(recs.size() - 1)) : 0.0;
    // Rounding leaves a residual spread on constant input.
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) sd = 0;

    std::vector<std::vector<double>> sum(bins, std::vector<double>(bins, 0.0));
    std::vector<std::vector<std::size_t>> count(bins, std::vector<std::size_t>(bins, 0));
    for (const auto* r : recs) {
      const double z = sd > 0 ? (r->bleedover - mean) / sd : 0.0;
      const auto pb = bin_of(r->popularity, pop_edges);
      const auto sb = bin_of(r->similarity, sim_edges);
      sum[pb][sb] += z;
      ++count[pb][sb];
    }
    BleedoverMatrix m{algo, pop_edges, sim_edges, {}};
    m.cells.assign(bins, std::vector<std::optional<double>>(bins));
    for (std::size_t i = 0; i < bins; ++i)
      for (std::size_t j = 0; j < bins; ++j)
        if (count[i][j] > 0) m.cells[i][j] = sum[i][j] / static_cast<double>(count[i][j]);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::size_t> sample_random_indices(std::size_t population, std::size_t m, std::uint64_t seed,
                                               const std::vector<bool>& excluded) {
  std::vector<std::size_t> eligible;
  eligible.reserve(population);
  for (std::size_t i = 0; i < population; ++i)
    if (i >= excluded.size() || !excluded[i]) eligible.push_back(i);
  const std::size_t take = std::min(m, eligible.size());
  PortableRng rng(seed);
  // Partial Fisher-Yates from the front.
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(take);
  return eligible;
}

}  // namespace factdelta
