#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "exmap/glmm/design.hpp"
#include "exmap/rng.hpp"

namespace exmap::glmm {

std::string_view to_string(FixedLayout layout) {
  switch (layout) {
    case FixedLayout::Main: return "main";
    case FixedLayout::Interaction: return "interaction";
    case FixedLayout::Intercept: return "intercept";
  }
  return "main";
}

std::size_t StackedDesign::num_rows() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.rows.size();
  return n;
}

void StackedDesign::fixed_row(const Cluster& c, int k, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto kk = static_cast<std::size_t>(k);
  switch (layout) {
    case FixedLayout::Main:
      out[kk] = 1.0;
      break;
    case FixedLayout::Interaction:
      out[kk] = 1.0;
      out[K + kk] = c.x;
      break;
    case FixedLayout::Intercept:
      out[0] = 1.0;
      if (K > 1) {
        if (kk + 1 < K)
          out[kk + 1] = 1.0;
        else
          for (std::size_t l = 1; l < K; ++l) out[l] = -1.0;
      }
      break;
  }
}

std::vector<std::string> StackedDesign::fixed_names() const {
  std::vector<std::string> names;
  switch (layout) {
    case FixedLayout::Main:
      names = indicator_names;
      break;
    case FixedLayout::Interaction:
      names = indicator_names;
      for (const auto& n : indicator_names) names.push_back("x*" + n);
      break;
    case FixedLayout::Intercept:
      names.push_back("intercept");
      for (std::size_t l = 0; l + 1 < K; ++l) names.push_back("effect:" + indicator_names[l]);
      break;
  }
  return names;
}

StackedDesign build_design(std::span<const InstitutionAggregate> aggregates,
                           std::span<const Indicator> indicators,
                           const std::map<std::string, double>* covariate,
                           std::vector<Diagnostic>* diag) {
  StackedDesign d;
  d.K = indicators.size();
  if (d.K == 0) throw std::invalid_argument("build_design: no indicators");
  d.layout = covariate ? FixedLayout::Interaction : FixedLayout::Main;
  for (Indicator ind : indicators) d.indicator_names.emplace_back(to_string(ind));

  std::vector<const InstitutionAggregate*> sorted;
  for (const auto& a : aggregates) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->institution_id < b->institution_id; });

  for (const auto* a : sorted) {
    Cluster c;
    c.id = a->institution_id;
    if (covariate) {
      auto it = covariate->find(a->institution_id);
      if (it == covariate->end()) {
        if (diag) diag->push_back({0, "cluster " + c.id + " has no covariate value; dropped"});
        continue;
      }
      c.x = it->second;
    }
    for (std::size_t k = 0; k < d.K; ++k) {
      const auto idx = index_of(indicators[k]);
      if (a->n <= 0) {
        if (diag)
          diag->push_back({0, "cluster " + c.id + " has zero trials for " + d.indicator_names[k] +
                                  "; row dropped"});
        continue;
      }
      c.rows.push_back({static_cast<int>(k), a->y[idx], a->n});
    }
    if (!c.rows.empty()) d.clusters.push_back(std::move(c));
  }
  if (d.clusters.size() < 2) throw std::invalid_argument("build_design: fewer than two clusters");
  return d;
}

StackedDesign with_layout(StackedDesign design, FixedLayout layout) {
  design.layout = layout;
  return design;
}

StackedDesign select_indicators(const StackedDesign& design, std::span<const int> keep) {
  StackedDesign out;
  out.K = keep.size();
  out.layout = design.layout;
  for (int k : keep) out.indicator_names.push_back(design.indicator_names.at(static_cast<std::size_t>(k)));
  for (const auto& c : design.clusters) {
    Cluster nc{c.id, c.x, {}};
    for (std::size_t j = 0; j < keep.size(); ++j)
      for (const auto& r : c.rows)
        if (r.k == keep[j]) nc.rows.push_back({static_cast<int>(j), r.y, r.n});
    std::sort(nc.rows.begin(), nc.rows.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
    if (!nc.rows.empty()) out.clusters.push_back(std::move(nc));
  }
  return out;
}

std::uint64_t design_hash(const StackedDesign& d) {
  std::uint64_t h = fnv1a64("stacked-design-v1");
  auto mix = [&h](std::string_view s) { h = fnv1a64(s, h); };
  auto mix_num = [&](auto v) {
    char buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    mix(std::string_view(buf, sizeof(v)));
  };
  mix_num(static_cast<std::uint64_t>(d.K));
  mix(to_string(d.layout));
  for (const auto& n : d.indicator_names) mix(n);
  for (const auto& c : d.clusters) {
    mix(c.id);
    mix_num(c.x);
    for (const auto& r : c.rows) {
      mix_num(r.k);
      mix_num(r.y);
      mix_num(r.n);
    }
  }
  return h;
}

}  // namespace exmap::glmm
