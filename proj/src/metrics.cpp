#include "micgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "micgan/error.hpp"

namespace micgan::metrics {

PurityReport purity(std::span<const std::uint32_t> assignments, std::span<const int> labels,
                    const mixture::ModeWeights& weights, std::size_t n, PurityNormalizer norm) {
  if (labels.empty() && !assignments.empty())
    throw ArgumentError("purity: ground-truth labels are required");
  if (labels.size() != assignments.size())
    throw ShapeError("purity: label count does not match assignment count");
  const std::size_t K = weights.order.size();
  if (n > K) throw ArgumentError("purity: n exceeds the number of modes");

  PurityReport rep;
  rep.top_n.assign(weights.order.begin(), weights.order.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<int> slot(K, -1);
  for (std::size_t r = 0; r < n; ++r) slot[rep.top_n[r]] = static_cast<int>(r);

  std::vector<std::map<int, std::size_t>> tallies(n);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= K) throw IndexError("purity: assignment index out of range");
    const int s = slot[assignments[i]];
    if (s >= 0) ++tallies[static_cast<std::size_t>(s)][labels[i]];
  }
  std::size_t hits = 0, members = 0;
  for (std::size_t r = 0; r < n; ++r) {
    ModePurity mp;
    mp.mode = rep.top_n[r];
    for (const auto& [label, c] : tallies[r]) {
      mp.members += c;
      if (c > mp.hits) {  // map order makes ties go to the lowest label
        mp.hits = c;
        mp.majority_label = label;
      }
    }
    hits += mp.hits;
    members += mp.members;
    rep.per_mode.push_back(mp);
  }
  rep.denominator = norm == PurityNormalizer::selected_members ? members : assignments.size();
  rep.purity = rep.denominator ? static_cast<double>(hits) / static_cast<double>(rep.denominator) : 0.0;
  return rep;
}

PurityReport purity(const mixture::AssignmentState& state, const std::vector<int>* labels,
                    std::size_t n, PurityNormalizer norm) {
  if (!labels) throw ArgumentError("purity: ground-truth labels are required");
  return purity(state.modes(), *labels, mixture::mode_weights(state.counts()), n, norm);
}

CoverageReport mode_coverage(const Matrix& generated, const std::vector<std::vector<double>>& centers,
                             std::span<const double> sigmas, std::size_t count_threshold) {
  if (generated.rows() == 0) throw ArgumentError("mode_coverage: generated set is empty");
  if (sigmas.size() != centers.size()) throw ShapeError("mode_coverage: one sigma per center required");
  const std::size_t M = centers.size(), d = generated.cols();
  for (const auto& c : centers)
    if (c.size() != d) throw ShapeError("mode_coverage: center dimension mismatch");

  CoverageReport rep;
  rep.per_mode_counts.assign(M, 0);
  std::size_t hq = 0;
  for (std::size_t i = 0; i < generated.rows(); ++i) {
    auto x = generated.row(i);
    std::size_t best = npos;
    double best_ratio = 3.0;
    for (std::size_t m = 0; m < M; ++m) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) d2 += (x[j] - centers[m][j]) * (x[j] - centers[m][j]);
      const double ratio = std::sqrt(d2) / sigmas[m];
      if (ratio <= best_ratio) {
        if (best == npos || ratio < best_ratio) best = m;
        best_ratio = ratio;
      }
    }
    if (best != npos) {
      ++hq;
      ++rep.per_mode_counts[best];
    }
  }
  for (auto c : rep.per_mode_counts)
    if (c >= count_threshold && c > 0) ++rep.modes_hit;
  rep.high_quality_fraction = static_cast<double>(hq) / static_cast<double>(generated.rows());
  return rep;
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("jensen_shannon: histogram length mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw ArgumentError("jensen_shannon: negative bin");
    sp += p[i];
    sq += q[i];
  }
  if (!(sp > 0.0) || !(sq > 0.0)) throw ArgumentError("jensen_shannon: empty histogram");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] / sp, b = q[i] / sq, m = 0.5 * (a + b);
    if (a > 0.0) js += 0.5 * a * std::log(a / m);
    if (b > 0.0) js += 0.5 * b * std::log(b / m);
  }
  return std::clamp(js, 0.0, std::numbers::ln2);
}

std::vector<std::size_t> hungarian(const Matrix& cost) {
  const std::size_t R = cost.rows(), C = cost.cols();
  if (R == 0) return {};
  if (!cost.all_finite()) throw NumericError("hungarian: non-finite cost");
  if (R > C) {
    Matrix t(C, R);
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < C; ++j) t(j, i) = cost(i, j);
    const auto col_of_row = hungarian(t);
    std::vector<std::size_t> out(R, npos);
    for (std::size_t j = 0; j < C; ++j) out[col_of_row[j]] = j;
    return out;
  }
  // Potentials method, rows 1..R against columns 1..C (R <= C).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(R + 1, 0.0), v(C + 1, 0.0);
  std::vector<std::size_t> p(C + 1, 0), way(C + 1, 0);
  for (std::size_t i = 1; i <= R; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(C + 1, inf);
    std::vector<char> used(C + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= C; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= C; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> out(R, npos);
  for (std::size_t j = 1; j <= C; ++j)
    if (p[j] != 0) out[p[j] - 1] = j - 1;
  return out;
}

std::vector<double> histogram(const Matrix& points, std::span<const double> center,
                              double half_width, std::size_t bins) {
  if (bins == 0) throw ArgumentError("histogram: bins must be positive");
  if (!(half_width > 0.0)) throw ArgumentError("histogram: half_width must be positive");
  if (center.size() != points.cols()) throw ShapeError("histogram: center dimension mismatch");
  const std::size_t d = points.cols();
  const double width = 2.0 * half_width / static_cast<double>(bins);
  std::vector<double> h;
  if (d == 2) {
    h.assign(bins * bins + 1, 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const double fx = (points(i, 0) - center[0] + half_width) / width;
      const double fy = (points(i, 1) - center[1] + half_width) / width;
      if (fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(bins) && fy < static_cast<double>(bins))
        h[static_cast<std::size_t>(fy) * bins + static_cast<std::size_t>(fx)] += 1.0;
      else
        h.back() += 1.0;
    }
  } else {
    h.assign(bins + 1, 0.0);
    const double shell = half_width / static_cast<double>(bins);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      double r2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) r2 += (points(i, j) - center[j]) * (points(i, j) - center[j]);
      const double f = std::sqrt(r2) / shell;
      if (f < static_cast<double>(bins))
        h[static_cast<std::size_t>(f)] += 1.0;
      else
        h.back() += 1.0;
    }
  }
  return h;
}

std::vector<double> per_mode_jsd(const std::vector<std::vector<double>>& generated_hists,
                                 const std::vector<std::vector<double>>& true_hists) {
  if (generated_hists.size() != true_hists.size())
    throw ShapeError("per_mode_jsd: histogram list length mismatch");
  std::vector<double> out;
  out.reserve(true_hists.size());
  for (std::size_t m = 0; m < true_hists.size(); ++m)
    out.push_back(jensen_shannon(generated_hists[m], true_hists[m]));
  return out;
}

JsdReport matched_jsd(const Matrix& generated, std::span<const std::uint32_t> codes,
                      const std::vector<Matrix>& true_by_mode,
                      const std::vector<std::vector<double>>& true_centers,
                      std::span<const double> true_sigmas, std::size_t bins, double width_sigmas) {
  if (codes.size() != generated.rows()) throw ShapeError("matched_jsd: one code per generated row");
  const std::size_t M = true_centers.size();
  if (true_by_mode.size() != M || true_sigmas.size() != M)
    throw ShapeError("matched_jsd: true-mode inputs disagree in length");
  const std::size_t d = generated.cols();

  // Non-empty generator groups, in ascending code order.
  std::size_t K = 0;
  for (auto c : codes) K = std::max<std::size_t>(K, c + 1);
  std::vector<std::vector<std::size_t>> rows_of(K);
  for (std::size_t i = 0; i < codes.size(); ++i) rows_of[codes[i]].push_back(i);
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < K; ++k)
    if (!rows_of[k].empty()) live.push_back(k);

  std::vector<Matrix> groups;
  Matrix cost(M, live.size());
  for (std::size_t g = 0; g < live.size(); ++g) {
    const auto& rows = rows_of[live[g]];
    Matrix pts(rows.size(), d);
    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) {
        pts(r, j) = generated(rows[r], j);
        mean[j] += pts(r, j);
      }
    for (auto& v : mean) v /= static_cast<double>(rows.size());
    for (std::size_t m = 0; m < M; ++m) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) d2 += (mean[j] - true_centers[m][j]) * (mean[j] - true_centers[m][j]);
      cost(m, g) = std::sqrt(d2);
    }
    groups.push_back(std::move(pts));
  }

  JsdReport rep;
  rep.per_true_mode.assign(M, std::numbers::ln2);
  rep.matched_generator_code.assign(M, npos);
  const auto match = live.empty() ? std::vector<std::size_t>(M, npos) : hungarian(cost);
  for (std::size_t m = 0; m < M; ++m) {
    if (match[m] == npos) continue;
    const double hw = width_sigmas * true_sigmas[m];
    const auto hg = histogram(groups[match[m]], true_centers[m], hw, bins);
    const auto ht = histogram(true_by_mode[m], true_centers[m], hw, bins);
    rep.per_true_mode[m] = jensen_shannon(hg, ht);
    rep.matched_generator_code[m] = live[match[m]];
  }
  double s = 0.0;
  for (double v : rep.per_true_mode) s += v;
  rep.mean = M ? s / static_cast<double>(M) : 0.0;
  return rep;
}

nlohmann::json to_json(const PurityReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : r.per_mode)
    per.push_back({{"mode", m.mode}, {"majority_label", m.majority_label}, {"hits", m.hits},
                   {"members", m.members}});
  return {{"purity", r.purity}, {"top_n", r.top_n}, {"denominator", r.denominator}, {"per_mode", per}};
}

nlohmann::json to_json(const CoverageReport& r) {
  return {{"modes_hit", r.modes_hit},
          {"high_quality_fraction", r.high_quality_fraction},
          {"per_mode_counts", r.per_mode_counts}};
}

nlohmann::json to_json(const JsdReport& r) {
  nlohmann::json codes = nlohmann::json::array();
  for (auto c : r.matched_generator_code) {
    if (c == npos)
      codes.push_back(nullptr);
    else
      codes.push_back(c);
  }
  return {{"mean", r.mean}, {"per_true_mode", r.per_true_mode}, {"matched_generator_code", codes}};
}

void write_purity_csv(std::ostream& os, const PurityReport& r) {
  os << "mode,majority_label,hits,members\n";
  for (const auto& m : r.per_mode)
    os << m.mode << ',' << m.majority_label << ',' << m.hits << ',' << m.members << '\n';
}

void write_coverage_csv(std::ostream& os, const CoverageReport& r) {
  os << "true_mode,count\n";
  for (std::size_t m = 0; m < r.per_mode_counts.size(); ++m) os << m << ',' << r.per_mode_counts[m] << '\n';
}

void write_jsd_csv(std::ostream& os, const JsdReport& r) {
  os << "true_mode,code,jsd\n";
  char buf[64];
  for (std::size_t m = 0; m < r.per_true_mode.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%.17g", r.per_true_mode[m]);
    os << m << ',';
    if (r.matched_generator_code[m] != npos) os << r.matched_generator_code[m];
    os << ',' << buf << '\n';
  }
}

}  // namespace micgan::metrics
