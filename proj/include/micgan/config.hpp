#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>

#include "micgan/acrp.hpp"
#include "micgan/data.hpp"

// Run configuration: an INI-style file (`[section]` headers, `key = value`),
// overridden by MICGAN_<SECTION>_<KEY> environment variables, overridden in
// turn by command-line flags.
namespace micgan::config {

enum class SourceKind { synthetic, csv, idx };

struct DataSource {
  SourceKind kind = SourceKind::synthetic;
  data::SyntheticSpec synthetic;
  std::filesystem::path path;                   // csv file or idx images
  std::optional<std::filesystem::path> labels;  // idx labels
  bool normalize = false;
};

struct RunConfig {
  acrp::TrainConfig train;
  DataSource data;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "out";
};

// Returns the variable's value or nullopt.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

// Throws ArgumentError on syntax errors, unknown keys or bad values.
// Relative data paths resolve against `base_dir`.
RunConfig parse(std::istream& is, const EnvLookup& env, const std::filesystem::path& base_dir = {});

// Loads `path` (or defaults when empty), applies env then flags, requires a
// seed and checks that referenced input files exist (IoError otherwise).
RunConfig load(const std::filesystem::path& path, const EnvLookup& env, const Overrides& flags);

// Every recognised `section.key`, for documentation and env scanning.
std::vector<std::string> known_keys();

data::Dataset load_dataset(const DataSource& src, std::uint64_t seed);
nlohmann::json to_json(const DataSource& src);

}  // namespace micgan::config
