#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace procrecon {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamKind { Continuous, Discrete };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double min = 0.0;
  double max = 1.0;
  double step = 1.0;
  std::string description;

  bool is_discrete() const { return kind == ParamKind::Discrete; }
  double midpoint() const;
  /// Nearest grid point (round half up), clamped into [min, max].
  double snap(double value) const;
  std::size_t grid_size() const;
};

ParamSpec continuous(std::string name, double min, double max, std::string description = {});
ParamSpec discrete(std::string name, double min, double max, double step = 1.0,
                   std::string description = {});

using ParamSpecList = std::vector<ParamSpec>;

/// Throws ValidationError when a spec entry is malformed.
void check_specs(const ParamSpecList& specs);

class ParameterVector {
 public:
  ParameterVector() = default;
  /// Validates values against specs; throws ValidationError listing every offending parameter.
  ParameterVector(ParamSpecList specs, std::vector<double> values);

  static ParameterVector midpoint(const ParamSpecList& specs);

  const ParamSpecList& specs() const { return specs_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t index_of(const std::string& name) const;
  double get(const std::string& name) const { return values_[index_of(name)]; }
  /// Returns a copy with one value replaced (and re-validated).
  ParameterVector with(const std::string& name, double value) const;

 private:
  ParamSpecList specs_;
  std::vector<double> values_;
};

/// Lists problems of `values` against `specs`; empty when valid.
std::vector<std::string> validation_problems(const ParamSpecList& specs,
                                             const std::vector<double>& values);

std::vector<double> to_genes(const ParameterVector& v);
ParameterVector from_genes(const std::vector<double>& genes, const ParamSpecList& specs);
ParameterVector clamp(const ParamSpecList& specs, const std::vector<double>& values);
inline ParameterVector clamp(const ParameterVector& v) { return clamp(v.specs(), v.values()); }

/// True for every slot whose spec is Discrete.
std::vector<bool> discrete_mask(const ParamSpecList& specs);

struct Preset {
  std::string name;
  std::string generator_id;
  ParameterVector vector;
};

// Preset JSON: {"name": str, "generator": str, "values": {paramName: number, ...}}.
// Unknown names are an error, missing names take the spec midpoint.
Preset preset_from_json(const std::string& text, const ParamSpecList& specs);
std::string preset_to_json(const Preset& preset);
Preset load_preset(const std::filesystem::path& path, const ParamSpecList& specs);
void save_preset(const std::filesystem::path& path, const Preset& preset);
/// Loads every *.json preset in `dir`, sorted by file name.
std::vector<Preset> load_presets(const std::filesystem::path& dir, const ParamSpecList& specs);

}  // namespace procrecon
