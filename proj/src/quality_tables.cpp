#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "procrecon/optim.hpp"
#include "procrecon/params.hpp"
#include "procrecon/parallel.hpp"

namespace procrecon {

namespace {

constexpr double kRatioClamp = 10.0;

double q_value(double p, double p0) {
  if (p == p0) return 0.0;
  const double sign = p > p0 ? 1.0 : -1.0;
  const double lo = std::min(p, p0), hi = std::max(p, p0);
  return sign * (lo == 0.0 ? kRatioClamp : std::min(kRatioClamp, hi / lo));
}

}  // namespace

int gene_bin(double g, int bins) {
  return std::clamp(static_cast<int>(std::floor(g * bins)), 0, bins - 1);
}

double genome_quality(std::span<const double> genes, const QualityTables& t) {
  if (genes.size() != t.gene_count)
    throw ValidationError("genome_quality: genome has " + std::to_string(genes.size()) + " genes, tables have " +
                          std::to_string(t.gene_count));
  double q = 0.0;
  for (std::size_t i = 0; i < genes.size(); ++i) q += t.Q[i][gene_bin(genes[i], t.bins)];
  return q;
}

QualityTables QualityTables::uniform(std::size_t gene_count, int bins) {
  if (bins < 2) throw ValidationError("quality tables need at least 2 bins");
  QualityTables t;
  t.gene_count = gene_count;
  t.bins = bins;
  t.V.assign(gene_count, 1.0);
  t.P.assign(gene_count, std::vector<double>(bins, 0.5));
  t.P0 = 0.5;
  t.Q.assign(gene_count, std::vector<double>(bins, 0.0));
  return t;
}

bool QualityTables::q_all_zero() const {
  for (const auto& row : Q)
    for (double q : row)
      if (q != 0.0) return false;
  return true;
}

QualityTables collect_quality_tables(const ObjectiveFamily& family, std::size_t family_size, std::size_t gene_count,
                                     const QualityConfig& cfg) {
  if (family_size == 0) throw ValidationError("collect_quality_tables: empty objective family");
  if (cfg.sample_count == 0) throw ValidationError("collect_quality_tables: sample_count must be positive");
  if (cfg.bins < 2) throw ValidationError("collect_quality_tables: need at least 2 bins");
  if (!(cfg.h > 0.0 && cfg.h < 1.0)) throw ValidationError("collect_quality_tables: h must be in (0,1)");

  std::vector<Objective> members(family_size);
  for (std::size_t i = 0; i < family_size; ++i) members[i] = family(i);

  const std::size_t S = cfg.sample_count, N = gene_count;
  std::vector<std::vector<double>> xs(S, std::vector<double>(N));
  SplitMix64 rng(cfg.seed);
  for (auto& x : xs)
    for (double& g : x) g = uniform01(rng);

  std::vector<double> f(S);
  std::vector<std::vector<double>> rate(S, std::vector<double>(N));
  parallel_for(S, [&](std::size_t s) {
    const Objective& obj = members[s % family_size];
    const auto& x = xs[s];
    f[s] = obj(x);
    for (std::size_t k = 0; k < N; ++k) {
      std::vector<double> probe = x;
      // Step backwards where a forward probe would leave the unit cube.
      const double step = x[k] + cfg.h <= 1.0 ? cfg.h : -cfg.h;
      probe[k] += step;
      rate[s][k] = std::abs(obj(probe) - f[s]) / cfg.h;
    }
  });

  QualityTables t;
  t.gene_count = N;
  t.bins = cfg.bins;
  t.sample_count = S;
  t.V.assign(N, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t k = 0; k < N; ++k) t.V[k] += rate[s][k] / static_cast<double>(S);

  if (cfg.epsilon) {
    t.epsilon = *cfg.epsilon;
  } else {
    std::vector<double> sorted = f;
    std::sort(sorted.begin(), sorted.end());
    // Nearest-rank 75th percentile.
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(S)));
    t.epsilon = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  t.degenerate = *lo == *hi;

  std::size_t above = 0;
  for (double v : f) above += v > t.epsilon;
  t.P0 = static_cast<double>(above) / static_cast<double>(S);

  t.P.assign(N, std::vector<double>(cfg.bins, 0.0));
  t.Q.assign(N, std::vector<double>(cfg.bins, 0.0));
  if (t.degenerate) {
    for (auto& row : t.P) std::fill(row.begin(), row.end(), t.P0);
    return t;
  }
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<std::size_t> hits(cfg.bins, 0), total(cfg.bins, 0);
    for (std::size_t s = 0; s < S; ++s) {
      const int b = gene_bin(xs[s][i], cfg.bins);
      ++total[b];
      hits[b] += f[s] > t.epsilon;
    }
    for (int b = 0; b < cfg.bins; ++b) {
      // An unseen bin carries no evidence either way.
      t.P[i][b] = total[b] == 0 ? t.P0 : static_cast<double>(hits[b]) / static_cast<double>(total[b]);
      t.Q[i][b] = q_value(t.P[i][b], t.P0);
    }
  }
  return t;
}

std::string QualityTables::to_json() const {
  nlohmann::ordered_json j;
  j["gene_count"] = gene_count;
  j["bins"] = bins;
  j["sample_count"] = sample_count;
  j["epsilon"] = epsilon;
  j["degenerate"] = degenerate;
  j["V"] = V;
  j["P0"] = P0;
  j["P"] = P;
  j["Q"] = Q;
  return j.dump(2);
}

QualityTables QualityTables::from_json(const std::string& text) {
  QualityTables t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.gene_count = j.at("gene_count").get<std::size_t>();
    t.bins = j.at("bins").get<int>();
    t.sample_count = j.value("sample_count", std::size_t{0});
    t.epsilon = j.value("epsilon", 0.0);
    t.degenerate = j.value("degenerate", false);
    t.V = j.at("V").get<std::vector<double>>();
    t.P0 = j.at("P0").get<double>();
    t.P = j.at("P").get<std::vector<std::vector<double>>>();
    t.Q = j.at("Q").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("quality tables: ") + e.what());
  }
  if (t.bins < 2 || t.V.size() != t.gene_count || t.P.size() != t.gene_count || t.Q.size() != t.gene_count)
    throw ValidationError("quality tables: inconsistent shapes");
  for (std::size_t i = 0; i < t.gene_count; ++i)
    if (t.P[i].size() != static_cast<std::size_t>(t.bins) || t.Q[i].size() != static_cast<std::size_t>(t.bins))
      throw ValidationError("quality tables: row " + std::to_string(i) + " has the wrong bin count");
  return t;
}

void QualityTables::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json() << '\n';
}

QualityTables QualityTables::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace procrecon
