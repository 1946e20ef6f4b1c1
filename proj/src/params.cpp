#include "procrecon/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace procrecon {

namespace {

bool on_grid(const ParamSpec& s, double v) {
  return std::abs(s.snap(v) - v) <= 1e-9 * std::max(1.0, std::abs(v));
}

}  // namespace

double ParamSpec::midpoint() const { return snap(0.5 * (min + max)); }

double ParamSpec::snap(double value) const {
  double v = std::clamp(value, min, max);
  if (!is_discrete()) return v;
  double k = std::floor((v - min) / step + 0.5);
  return std::clamp(min + k * step, min, max);
}

std::size_t ParamSpec::grid_size() const {
  if (!is_discrete()) return 0;
  return static_cast<std::size_t>(std::llround((max - min) / step)) + 1;
}

ParamSpec continuous(std::string name, double min, double max, std::string description) {
  return ParamSpec{std::move(name), ParamKind::Continuous, min, max, 1.0, std::move(description)};
}

ParamSpec discrete(std::string name, double min, double max, double step, std::string description) {
  return ParamSpec{std::move(name), ParamKind::Discrete, min, max, step, std::move(description)};
}

void check_specs(const ParamSpecList& specs) {
  for (const auto& s : specs) {
    if (!(s.min < s.max)) throw ValidationError("parameter '" + s.name + "': min must be < max");
    if (s.is_discrete()) {
      if (!(s.step > 0)) throw ValidationError("parameter '" + s.name + "': step must be positive");
      double n = (s.max - s.min) / s.step;
      if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
        throw ValidationError("parameter '" + s.name + "': range is not a multiple of step");
    }
  }
}

std::vector<std::string> validation_problems(const ParamSpecList& specs,
                                             const std::vector<double>& values) {
  std::vector<std::string> problems;
  if (specs.size() != values.size()) {
    problems.push_back("expected " + std::to_string(specs.size()) + " values, got " +
                       std::to_string(values.size()));
    return problems;
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    double v = values[i];
    std::ostringstream msg;
    if (!std::isfinite(v)) {
      msg << s.name << " is not finite";
    } else if (v < s.min || v > s.max) {
      msg << s.name << "=" << v << " outside [" << s.min << ", " << s.max << "]";
    } else if (s.is_discrete() && !on_grid(s, v)) {
      msg << s.name << "=" << v << " is off the step grid (step " << s.step << ")";
    } else {
      continue;
    }
    problems.push_back(msg.str());
  }
  return problems;
}

ParameterVector::ParameterVector(ParamSpecList specs, std::vector<double> values)
    : specs_(std::move(specs)), values_(std::move(values)) {
  check_specs(specs_);
  auto problems = validation_problems(specs_, values_);
  if (!problems.empty()) {
    std::string msg = "invalid parameters:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
  // Snap exactly onto the grid so equal discrete values compare equal.
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].is_discrete()) values_[i] = specs_[i].snap(values_[i]);
}

ParameterVector ParameterVector::midpoint(const ParamSpecList& specs) {
  std::vector<double> values;
  values.reserve(specs.size());
  for (const auto& s : specs) values.push_back(s.midpoint());
  return ParameterVector(specs, std::move(values));
}

std::size_t ParameterVector::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return i;
  throw std::out_of_range("unknown parameter '" + name + "'");
}

ParameterVector ParameterVector::with(const std::string& name, double value) const {
  auto values = values_;
  values[index_of(name)] = value;
  return ParameterVector(specs_, std::move(values));
}

std::vector<double> to_genes(const ParameterVector& v) {
  std::vector<double> genes(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& s = v.specs()[i];
    genes[i] = std::clamp((v[i] - s.min) / (s.max - s.min), 0.0, 1.0);
  }
  return genes;
}

ParameterVector from_genes(const std::vector<double>& genes, const ParamSpecList& specs) {
  if (genes.size() != specs.size())
    throw std::out_of_range("gene count " + std::to_string(genes.size()) + " does not match " +
                            std::to_string(specs.size()) + " parameters");
  std::vector<double> values(genes.size());
  for (std::size_t i = 0; i < genes.size(); ++i) {
    double g = genes[i];
    if (!(g >= 0.0 && g <= 1.0))
      throw std::out_of_range("gene " + std::to_string(i) + " (" + specs[i].name +
                              ") outside [0,1]: " + std::to_string(g));
    const auto& s = specs[i];
    values[i] = s.snap(s.min + g * (s.max - s.min));
  }
  return ParameterVector(specs, std::move(values));
}

ParameterVector clamp(const ParamSpecList& specs, const std::vector<double>& values) {
  if (values.size() != specs.size()) throw ValidationError("value count does not match spec");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = std::isfinite(values[i]) ? values[i] : specs[i].midpoint();
    out[i] = specs[i].snap(v);
  }
  return ParameterVector(specs, std::move(out));
}

std::vector<bool> discrete_mask(const ParamSpecList& specs) {
  std::vector<bool> mask(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) mask[i] = specs[i].is_discrete();
  return mask;
}

Preset preset_from_json(const std::string& text, const ParamSpecList& specs) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("preset is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("values") || !j["values"].is_object())
    throw ValidationError("preset must be an object with a 'values' object");

  std::vector<double> values;
  for (const auto& s : specs) values.push_back(0.5 * (s.min + s.max));
  std::vector<bool> given(specs.size(), false);
  for (const auto& [key, val] : j["values"].items()) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const ParamSpec& s) { return s.name == key; });
    if (it == specs.end()) throw ValidationError("unknown parameter '" + key + "' in preset");
    if (!val.is_number()) throw ValidationError("parameter '" + key + "' must be a number");
    auto idx = static_cast<std::size_t>(it - specs.begin());
    values[idx] = val.get<double>();
    given[idx] = true;
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (!given[i]) values[i] = specs[i].midpoint();

  Preset p;
  p.name = j.value("name", std::string{});
  p.generator_id = j.value("generator", std::string{});
  p.vector = ParameterVector(specs, std::move(values));
  return p;
}

std::string preset_to_json(const Preset& preset) {
  nlohmann::ordered_json j;
  j["name"] = preset.name;
  j["generator"] = preset.generator_id;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < preset.vector.size(); ++i)
    values[preset.vector.specs()[i].name] = preset.vector[i];
  j["values"] = values;
  return j.dump(2) + "\n";
}

Preset load_preset(const std::filesystem::path& path, const ParamSpecList& specs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open preset " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return preset_from_json(ss.str(), specs);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_preset(const std::filesystem::path& path, const Preset& preset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << preset_to_json(preset);
}

std::vector<Preset> load_presets(const std::filesystem::path& dir, const ParamSpecList& specs) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Preset> presets;
  for (const auto& f : files) presets.push_back(load_preset(f, specs));
  return presets;
}

}  // namespace procrecon
