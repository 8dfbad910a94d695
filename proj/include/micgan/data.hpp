#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "micgan/matrix.hpp"
#include "micgan/rng.hpp"

namespace micgan::data {

// Samples plus optional ground-truth labels. Labels are only ever read by
// evaluation code.
struct Dataset {
  Matrix samples;  // N x d
  std::optional<std::vector<int>> labels;
  std::string provenance;
  std::size_t image_rows = 0;  // nonzero for image data
  std::size_t image_cols = 0;

  std::size_t size() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  void validate() const;
};

enum class SyntheticKind { ring, grid, unbalanced_mixture };

const char* to_string(SyntheticKind k);
SyntheticKind synthetic_kind_from_string(const std::string& s);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::ring;
  std::size_t n_modes = 8;
  std::vector<double> sigma{0.05};      // one value, or one per mode
  std::vector<std::size_t> counts{1000};  // one value, or one per mode
  double radius = 2.0;   // ring / unbalanced
  double spacing = 2.0;  // grid

  double sigma_of(std::size_t m) const;
  std::size_t count_of(std::size_t m) const;
  std::size_t total() const;
  void validate() const;
};

// Mode centers in label order.
std::vector<std::vector<double>> mode_centers(const SyntheticSpec& spec);

// Mode m at radius * (cos 2 pi m / M, sin 2 pi m / M).
Dataset gen_ring(const SyntheticSpec& spec, Rng& rng);
// sqrt(M) x sqrt(M) lattice centred on the origin.
Dataset gen_grid(const SyntheticSpec& spec, Rng& rng);
// Ring-placed modes with per-mode counts and spreads (up to 10x apart).
Dataset gen_unbalanced(const SyntheticSpec& spec, Rng& rng);
Dataset generate(const SyntheticSpec& spec, Rng& rng);

// Big-endian IDX: images 0x00000803 (n, rows, cols, u8 pixels), labels
// 0x00000801 (n, u8 labels). Pixels map to [-1, 1].
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);
Dataset parse_idx(std::istream& images, std::istream* labels);

// Per-coordinate affine map onto [-1, 1]; constant coordinates become 0 and
// coordinates already spanning exactly [-1, 1] are left untouched.
Dataset normalize(Dataset ds);

// CSV with header x_1..x_d,label (label empty when absent).
void write_csv(std::ostream& os, const Dataset& ds);
Dataset read_csv(std::istream& is);

// Per-label sample means and spreads (root mean per-coordinate variance),
// indexed by label value 0..max_label.
struct LabelStats {
  std::vector<std::vector<double>> centers;
  std::vector<double> sigmas;
  std::vector<std::size_t> counts;
};
LabelStats label_statistics(const Dataset& ds);

}  // namespace micgan::data
