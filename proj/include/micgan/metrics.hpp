#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "json.hpp"
#include "micgan/matrix.hpp"
#include "micgan/mixture.hpp"

namespace micgan::metrics {

struct ModePurity {
  std::size_t mode = 0;
  int majority_label = -1;  // -1 for an empty mode
  std::size_t hits = 0;     // members carrying the majority label
  std::size_t members = 0;
};

struct PurityReport {
  double purity = 0.0;
  std::vector<std::size_t> top_n;  // selected modes, descending beta
  std::vector<ModePurity> per_mode;
  std::size_t denominator = 0;
};

enum class PurityNormalizer {
  selected_members,  // members of the selected modes (default)
  all_data,          // every datum, including those outside the selection
};

// Purity over the top-n modes by weight. Majority ties go to the lowest label.
PurityReport purity(std::span<const std::uint32_t> assignments, std::span<const int> labels,
                    const mixture::ModeWeights& weights, std::size_t n,
                    PurityNormalizer norm = PurityNormalizer::selected_members);
// Throws ArgumentError when `labels` is empty (dataset carries no labels).
PurityReport purity(const mixture::AssignmentState& state, const std::vector<int>* labels,
                    std::size_t n, PurityNormalizer norm = PurityNormalizer::selected_members);

struct CoverageReport {
  std::size_t modes_hit = 0;
  double high_quality_fraction = 0.0;
  std::vector<std::size_t> per_mode_counts;  // high-quality points claimed per true mode
};

// A point is high quality when it lies within 3 sigma of some true center; it
// is claimed by the qualifying center with the smallest distance / sigma.
CoverageReport mode_coverage(const Matrix& generated, const std::vector<std::vector<double>>& centers,
                             std::span<const double> sigmas, std::size_t count_threshold);

// Natural-log Jensen-Shannon divergence of two histograms (normalized here).
double jensen_shannon(std::span<const double> p, std::span<const double> q);

// Minimum-cost assignment. Returns, per row, the matched column or npos when
// there are more rows than columns.
inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
std::vector<std::size_t> hungarian(const Matrix& cost);

// Histogram around `center`. In 2-D: a bins x bins grid over
// center +- half_width plus one overflow bin. Otherwise: `bins` radial shells
// over [0, half_width] plus overflow.
std::vector<double> histogram(const Matrix& points, std::span<const double> center,
                              double half_width, std::size_t bins);

// JSD between matched histogram pairs; equal-length inputs required.
std::vector<double> per_mode_jsd(const std::vector<std::vector<double>>& generated_hists,
                                 const std::vector<std::vector<double>>& true_hists);

struct JsdReport {
  std::vector<double> per_true_mode;            // log 2 when unmatched
  std::vector<std::size_t> matched_generator_code;  // npos when unmatched
  double mean = 0.0;
};

// Groups `generated` by generator code, matches non-empty groups to true
// modes by center distance, and bins each matched pair on the true mode's
// grid (half-width `width_sigmas` * sigma).
JsdReport matched_jsd(const Matrix& generated, std::span<const std::uint32_t> codes,
                      const std::vector<Matrix>& true_by_mode,
                      const std::vector<std::vector<double>>& true_centers,
                      std::span<const double> true_sigmas, std::size_t bins = 10,
                      double width_sigmas = 4.0);

nlohmann::json to_json(const PurityReport& r);
nlohmann::json to_json(const CoverageReport& r);
nlohmann::json to_json(const JsdReport& r);

// CSV tables: mode,majority_label,hits,members / true_mode,count / true_mode,code,jsd
void write_purity_csv(std::ostream& os, const PurityReport& r);
void write_coverage_csv(std::ostream& os, const CoverageReport& r);
void write_jsd_csv(std::ostream& os, const JsdReport& r);

}  // namespace micgan::metrics
