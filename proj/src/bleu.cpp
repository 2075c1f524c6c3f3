#include <cmath>
#include <map>

#include "postedit/error.hpp"
#include "postedit/metrics.hpp"

namespace postedit::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

BleuStats bleu_stats(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                     const BleuConfig& config) {
  if (hypotheses.size() != references.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses vs " +
                                               std::to_string(references.size()) + " references");
  }
  if (config.max_n == 0) throw Error(ErrorCode::InvalidArgument, "BLEU max_n must be positive");
  BleuStats stats;
  stats.matches.assign(config.max_n, 0);
  stats.totals.assign(config.max_n, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const Tokens& hyp = hypotheses[s];
    const Tokens& ref = references[s];
    stats.hyp_length += hyp.size();
    stats.ref_length += ref.size();
    for (std::size_t n = 1; n <= config.max_n; ++n) {
      const NgramCounts hyp_counts = count_ngrams(hyp, n);
      const NgramCounts ref_counts = count_ngrams(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        stats.totals[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) stats.matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats, const BleuConfig& config) {
  if (stats.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= stats.totals.size(); ++n) {
    double matches = static_cast<double>(stats.matches[n - 1]);
    double total = static_cast<double>(stats.totals[n - 1]);
    if (stats.totals[n - 1] == 0) continue;
    if (config.smoothing && n >= 2) {
      matches += 1.0;
      total += 1.0;
    }
    if (matches == 0.0) return 0.0;
    log_sum += std::log(matches / total);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double c = static_cast<double>(stats.hyp_length);
  const double r = static_cast<double>(stats.ref_length);
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * brevity * std::exp(log_sum / static_cast<double>(orders));
}

double bleu_corpus(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                   const BleuConfig& config) {
  return bleu_from_stats(bleu_stats(hypotheses, references, config), config);
}

}  // namespace postedit::metrics
