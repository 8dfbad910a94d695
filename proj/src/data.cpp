#include "micgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace micgan::data {

void Dataset::validate() const {
  if (labels && labels->size() != samples.rows())
    throw ArgumentError("Dataset: label count " + std::to_string(labels->size()) +
                        " != sample count " + std::to_string(samples.rows()));
  if (!samples.all_finite()) throw NumericError("Dataset: non-finite sample value");
}

const char* to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::ring: return "ring";
    case SyntheticKind::grid: return "grid";
    case SyntheticKind::unbalanced_mixture: return "unbalanced";
  }
  return "?";
}

SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "ring") return SyntheticKind::ring;
  if (s == "grid") return SyntheticKind::grid;
  if (s == "unbalanced" || s == "unbalanced_mixture") return SyntheticKind::unbalanced_mixture;
  throw ArgumentError("unknown synthetic dataset kind '" + s + "'");
}

double SyntheticSpec::sigma_of(std::size_t m) const {
  return sigma.size() == 1 ? sigma.front() : sigma.at(m);
}

std::size_t SyntheticSpec::count_of(std::size_t m) const {
  return counts.size() == 1 ? counts.front() : counts.at(m);
}

std::size_t SyntheticSpec::total() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < n_modes; ++m) n += count_of(m);
  return n;
}

void SyntheticSpec::validate() const {
  if (n_modes < 1) throw ArgumentError("SyntheticSpec: n_modes must be >= 1");
  if (sigma.empty() || (sigma.size() != 1 && sigma.size() != n_modes))
    throw ArgumentError("SyntheticSpec: sigma needs 1 or n_modes values");
  if (counts.empty() || (counts.size() != 1 && counts.size() != n_modes))
    throw ArgumentError("SyntheticSpec: counts need 1 or n_modes values");
  for (double s : sigma)
    if (!(s > 0.0)) throw ArgumentError("SyntheticSpec: sigma must be positive");
  for (auto c : counts)
    if (c < 1) throw ArgumentError("SyntheticSpec: counts must be >= 1");
  if (kind == SyntheticKind::grid) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n_modes))));
    if (side * side != n_modes) throw ArgumentError("SyntheticSpec: grid needs a square mode count");
  }
  if (kind == SyntheticKind::unbalanced_mixture) {
    const auto [smin, smax] = std::minmax_element(sigma.begin(), sigma.end());
    const auto [cmin, cmax] = std::minmax_element(counts.begin(), counts.end());
    if (*smax > 10.0 * *smin) throw ArgumentError("SyntheticSpec: sigmas differ by more than 10x");
    if (*cmax > 10 * *cmin) throw ArgumentError("SyntheticSpec: counts differ by more than 10x");
  }
}

std::vector<std::vector<double>> mode_centers(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::vector<double>> centers;
  const std::size_t M = spec.n_modes;
  if (spec.kind == SyntheticKind::grid) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(M))));
    const double mid = 0.5 * static_cast<double>(side - 1);
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c)
        centers.push_back({(static_cast<double>(c) - mid) * spec.spacing,
                           (static_cast<double>(r) - mid) * spec.spacing});
  } else {
    for (std::size_t m = 0; m < M; ++m) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(M);
      centers.push_back({spec.radius * std::cos(a), spec.radius * std::sin(a)});
    }
  }
  return centers;
}

namespace {

Dataset sample_isotropic(const SyntheticSpec& spec, Rng& rng) {
  const auto centers = mode_centers(spec);
  Dataset ds;
  ds.samples = Matrix(spec.total(), 2);
  ds.labels.emplace();
  ds.labels->reserve(spec.total());
  std::size_t row = 0;
  for (std::size_t m = 0; m < spec.n_modes; ++m) {
    const double s = spec.sigma_of(m);
    for (std::size_t i = 0; i < spec.count_of(m); ++i, ++row) {
      ds.samples(row, 0) = centers[m][0] + s * rng.normal();
      ds.samples(row, 1) = centers[m][1] + s * rng.normal();
      ds.labels->push_back(static_cast<int>(m));
    }
  }
  ds.provenance = std::string("synthetic:") + to_string(spec.kind);
  return ds;
}

}  // namespace

Dataset gen_ring(const SyntheticSpec& spec, Rng& rng) {
  if (spec.kind != SyntheticKind::ring) throw ArgumentError("gen_ring: spec kind is not ring");
  return sample_isotropic(spec, rng);
}

Dataset gen_grid(const SyntheticSpec& spec, Rng& rng) {
  if (spec.kind != SyntheticKind::grid) throw ArgumentError("gen_grid: spec kind is not grid");
  return sample_isotropic(spec, rng);
}

Dataset gen_unbalanced(const SyntheticSpec& spec, Rng& rng) {
  if (spec.kind != SyntheticKind::unbalanced_mixture)
    throw ArgumentError("gen_unbalanced: spec kind is not unbalanced");
  return sample_isotropic(spec, rng);
}

Dataset generate(const SyntheticSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case SyntheticKind::ring: return gen_ring(spec, rng);
    case SyntheticKind::grid: return gen_grid(spec, rng);
    case SyntheticKind::unbalanced_mixture: return gen_unbalanced(spec, rng);
  }
  throw ArgumentError("generate: unknown kind");
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::istream& is, const char* what) {
  const auto offset = static_cast<long long>(is.tellg());
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4)
    throw FormatError(std::string(what) + ": truncated header at byte offset " +
                      std::to_string(offset));
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::vector<unsigned char> read_payload(std::istream& is, std::size_t n, const char* what) {
  const auto offset = static_cast<long long>(is.tellg());
  std::vector<unsigned char> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw FormatError(std::string(what) + ": truncated payload, expected " + std::to_string(n) +
                      " bytes from byte offset " + std::to_string(offset) + ", got " +
                      std::to_string(is.gcount()));
  return buf;
}

}  // namespace

Dataset parse_idx(std::istream& images, std::istream* labels) {
  const std::uint32_t magic = read_be32(images, "IDX images");
  if (magic != 0x00000803u) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08x", magic);
    throw FormatError(std::string("IDX images: bad magic ") + hex + " at byte offset 0");
  }
  const std::uint32_t n = read_be32(images, "IDX images");
  const std::uint32_t rows = read_be32(images, "IDX images");
  const std::uint32_t cols = read_be32(images, "IDX images");
  const std::size_t pixels = std::size_t{rows} * cols;
  if (pixels == 0) throw FormatError("IDX images: zero image size at byte offset 8");
  const auto raw = read_payload(images, std::size_t{n} * pixels, "IDX images");

  Dataset ds;
  ds.samples = Matrix(n, pixels);
  for (std::size_t i = 0; i < raw.size(); ++i)
    ds.samples.data()[i] = static_cast<double>(raw[i]) / 127.5 - 1.0;
  ds.image_rows = rows;
  ds.image_cols = cols;
  ds.provenance = "idx";

  if (labels) {
    const std::uint32_t lmagic = read_be32(*labels, "IDX labels");
    if (lmagic != 0x00000801u) {
      char hex[16];
      std::snprintf(hex, sizeof hex, "0x%08x", lmagic);
      throw FormatError(std::string("IDX labels: bad magic ") + hex + " at byte offset 0");
    }
    const std::uint32_t ln = read_be32(*labels, "IDX labels");
    if (ln != n)
      throw FormatError("IDX labels: count " + std::to_string(ln) + " != image count " +
                        std::to_string(n) + " (byte offset 4)");
    const auto lraw = read_payload(*labels, ln, "IDX labels");
    ds.labels.emplace(lraw.begin(), lraw.end());
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw IoError("cannot open " + images.string());
  std::ifstream lab;
  if (labels) {
    lab.open(*labels, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels->string());
  }
  auto ds = parse_idx(img, labels ? &lab : nullptr);
  ds.provenance = "idx:" + images.filename().string();
  return ds;
}

// ---------------------------------------------------------------------------

Dataset normalize(Dataset ds) {
  ds.validate();
  const std::size_t N = ds.size(), d = ds.dim();
  if (N == 0) return ds;
  for (std::size_t j = 0; j < d; ++j) {
    double lo = ds.samples(0, j), hi = lo;
    for (std::size_t i = 1; i < N; ++i) {
      lo = std::min(lo, ds.samples(i, j));
      hi = std::max(hi, ds.samples(i, j));
    }
    if (lo == -1.0 && hi == 1.0) continue;
    if (lo == hi) {
      for (std::size_t i = 0; i < N; ++i) ds.samples(i, j) = 0.0;
      continue;
    }
    const double scale = 2.0 / (hi - lo);
    for (std::size_t i = 0; i < N; ++i) {
      const double v = ds.samples(i, j);
      // Extremes are pinned so the result spans exactly [-1, 1].
      ds.samples(i, j) = v == lo ? -1.0 : v == hi ? 1.0 : std::clamp((v - lo) * scale - 1.0, -1.0, 1.0);
    }
  }
  return ds;
}

void write_csv(std::ostream& os, const Dataset& ds) {
  ds.validate();
  for (std::size_t j = 0; j < ds.dim(); ++j) os << "x_" << (j + 1) << ',';
  os << "label\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.samples.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf << ',';
    }
    if (ds.labels) os << (*ds.labels)[i];
    os << '\n';
  }
}

Dataset read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("dataset CSV: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label")
    throw FormatError("dataset CSV: header must be x_1..x_d,label");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "x_" + std::to_string(j + 1))
      throw FormatError("dataset CSV: unexpected header column '" + header[j] + "'");

  std::vector<double> values;
  std::vector<int> labels;
  bool any_label = false, any_missing = false;
  std::size_t n = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) != d)
      throw FormatError("dataset CSV: expected " + std::to_string(d + 1) + " fields on line " +
                        std::to_string(line_no));
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::getline(ss, cell, ','))
        throw FormatError("dataset CSV: too few fields on line " + std::to_string(line_no));
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("dataset CSV: bad number '" + cell + "' on line " +
                          std::to_string(line_no));
      }
    }
    cell.clear();
    std::getline(ss, cell);
    if (cell.empty()) {
      any_missing = true;
    } else {
      any_label = true;
      try {
        labels.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw FormatError("dataset CSV: bad label '" + cell + "' on line " +
                          std::to_string(line_no));
      }
    }
    ++n;
  }
  if (any_label && any_missing) throw FormatError("dataset CSV: labels present on some rows only");
  Dataset ds;
  ds.samples = Matrix(n, d, std::move(values));
  if (any_label) ds.labels = std::move(labels);
  ds.provenance = "csv";
  ds.validate();
  return ds;
}

LabelStats label_statistics(const Dataset& ds) {
  if (!ds.labels) throw ArgumentError("label_statistics: dataset has no labels");
  const auto& labels = *ds.labels;
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw ArgumentError("label_statistics: negative label");
    max_label = std::max(max_label, l);
  }
  const std::size_t M = static_cast<std::size_t>(max_label + 1), d = ds.dim();
  LabelStats st;
  st.centers.assign(M, std::vector<double>(d, 0.0));
  st.sigmas.assign(M, 0.0);
  st.counts.assign(M, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto m = static_cast<std::size_t>(labels[i]);
    ++st.counts[m];
    for (std::size_t j = 0; j < d; ++j) st.centers[m][j] += ds.samples(i, j);
  }
  for (std::size_t m = 0; m < M; ++m)
    if (st.counts[m] > 0)
      for (auto& v : st.centers[m]) v /= static_cast<double>(st.counts[m]);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto m = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double r = ds.samples(i, j) - st.centers[m][j];
      st.sigmas[m] += r * r;
    }
  }
  for (std::size_t m = 0; m < M; ++m)
    if (st.counts[m] > 0)
      st.sigmas[m] = std::sqrt(st.sigmas[m] / static_cast<double>(st.counts[m] * d));
  return st;
}

}  // namespace micgan::data
