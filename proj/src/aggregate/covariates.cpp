#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "exmap/aggregate.hpp"

namespace exmap {

std::vector<double> standardize_covariate(std::span<const double> values) {
  const std::set<double> distinct(values.begin(), values.end());
  if (distinct.size() < 2)
    throw std::invalid_argument("standardize_covariate: need at least two distinct values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

std::map<std::string, double> standardized_covariate(std::span<const InstitutionAggregate> aggregates,
                                                     const CovariateTable& table,
                                                     const std::string& name) {
  std::map<std::string, double> raw;
  for (const auto& a : aggregates) {
    auto c = table.find(a.country);
    if (c == table.end()) continue;
    auto v = c->second.find(name);
    if (v == c->second.end()) continue;
    raw.emplace(a.institution_id, v->second);
  }
  std::vector<double> values;
  values.reserve(raw.size());
  for (const auto& [id, v] : raw) values.push_back(v);
  auto z = standardize_covariate(values);
  std::map<std::string, double> out;
  std::size_t i = 0;
  for (const auto& [id, v] : raw) out.emplace(id, z[i++]);
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> f;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) f.push_back(cur);
  if (!line.empty() && line.back() == sep) f.emplace_back();
  for (auto& s : f) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  }
  return f;
}

std::ifstream open_or_throw(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " file " + path.string());
  return in;
}

}  // namespace

CovariateTable read_covariates(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "covariate");
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty covariate file " + path.string());
  const auto header = split_fields(line);
  CovariateTable out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.empty()) continue;
    auto& row = out[f[0]];
    for (std::size_t c = 1; c < f.size() && c < header.size(); ++c) {
      if (f[c].empty()) continue;
      try {
        row[header[c]] = std::stod(f[c]);
      } catch (const std::exception&) {
        throw InputError("covariate file line " + std::to_string(lineno) + ": bad number '" + f[c] + "'");
      }
    }
  }
  return out;
}

GeoTable read_geo(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "geo");
  std::string line;
  std::getline(in, line);
  GeoTable out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() < 3) throw InputError("geo file line " + std::to_string(lineno) + ": too few fields");
    GeoRow g{f[0], f[1], f[2], std::nullopt, std::nullopt};
    if (f.size() > 4 && !f[3].empty() && !f[4].empty()) {
      g.lat = std::stod(f[3]);
      g.lon = std::stod(f[4]);
    }
    out.emplace(g.institution_id, std::move(g));
  }
  return out;
}

}  // namespace exmap
