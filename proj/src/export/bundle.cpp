#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exmap/export.hpp"
#include "exmap/glmm/stats.hpp"

namespace exmap {

using nlohmann::json;

std::string_view to_string(Measure m) { return m == Measure::HighlyCited ? "highly_cited" : "highly_bookmarked"; }

std::optional<Measure> measure_from_string(std::string_view s) {
  if (s == "highly_cited") return Measure::HighlyCited;
  if (s == "highly_bookmarked") return Measure::HighlyBookmarked;
  return std::nullopt;
}

namespace {

std::size_t indicator_position(const glmm::FitResult& fit, Indicator ind) {
  const auto it = std::find(fit.indicator_names.begin(), fit.indicator_names.end(), to_string(ind));
  if (it == fit.indicator_names.end())
    throw std::invalid_argument("fit lacks indicator " + std::string(to_string(ind)));
  return static_cast<std::size_t>(it - fit.indicator_names.begin());
}

struct Scored {
  std::string id;
  glmm::GoldsteinInterval interval;
  std::map<std::string, double> siblings;
};

// EB probabilities of one indicator for every cluster of `fit`.
std::vector<Scored> score(const glmm::FitResult& fit, Indicator ind) {
  const std::size_t k = indicator_position(fit, ind);
  std::vector<std::size_t> sib;
  for (Sector s : kAllSectors) sib.push_back(indicator_position(fit, indicator_for(s)));
  std::vector<Scored> out;
  for (std::size_t j = 0; j < fit.eb.size(); ++j) {
    Scored s{fit.eb[j].id, glmm::eb_probability(fit, j, k), {}};
    for (std::size_t i = 0; i < kSectorCount; ++i)
      s.siblings[std::string(to_string(kAllSectors[i]))] = glmm::eb_probability(fit, j, sib[i]).adjusted.point;
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, int> ranks_of(const std::vector<Scored>& scored, const std::vector<std::string>* subset) {
  std::vector<std::pair<std::string, double>> v;
  for (const auto& s : scored)
    if (!subset || std::binary_search(subset->begin(), subset->end(), s.id))
      v.emplace_back(s.id, s.interval.adjusted.point);
  return assign_ranks(v);
}

}  // namespace

std::vector<ExportBundle> build_bundles(const SubjectFits& fits, std::span<const InstitutionAggregate> aggregates,
                                        const GeoTable& geo, std::vector<Diagnostic>* diag) {
  std::map<std::string, const InstitutionAggregate*> agg;
  for (const auto& a : aggregates)
    if (a.subject == fits.subject) agg[a.institution_id] = &a;

  struct Target {
    Measure measure;
    std::optional<Sector> audience;
    Indicator indicator;
  };
  std::vector<Target> targets{{Measure::HighlyCited, std::nullopt, Indicator::Citations}};
  for (Sector s : kAllSectors) targets.push_back({Measure::HighlyBookmarked, s, indicator_for(s)});

  std::vector<ExportBundle> out;
  auto emit = [&](const glmm::FitResult& fit, const std::optional<std::string>& covariate, const Target& t) {
    const auto scored = score(fit, t.indicator);
    ExportBundle b;
    b.subject = fits.subject;
    b.measure = t.measure;
    b.audience = t.audience;
    b.covariate = covariate;
    b.grand_mean_probability = t.measure == Measure::HighlyCited
                                   ? glmm::logistic(fits.base.params.beta[indicator_position(fits.base, t.indicator)])
                                   : fits.bookmarked_grand_mean;
    if (t.audience) {
      const auto it = fits.low_threshold.find(*t.audience);
      b.low_threshold = it != fits.low_threshold.end() && it->second;
    }
    const auto ranks = ranks_of(scored, nullptr);
    std::map<std::string, int> deltas;
    if (covariate) {
      std::vector<std::string> ids;
      for (const auto& s : scored) ids.push_back(s.id);
      std::sort(ids.begin(), ids.end());
      deltas = rank_delta(ranks, ranks_of(score(fits.base, t.indicator), &ids));
    }
    for (const auto& s : scored) {
      BundleEntry e;
      e.id = s.id;
      const auto g = geo.find(s.id);
      if (g != geo.end()) {
        e.name = g->second.name;
        e.country = g->second.country;
        e.lat = g->second.lat;
        e.lon = g->second.lon;
      } else if (covariate == std::nullopt && t.measure == Measure::HighlyCited) {
        if (diag) diag->push_back({0, "no geo row for institution " + s.id + " in " + fits.subject});
      }
      if (const auto a = agg.find(s.id); a != agg.end()) {
        e.papers = a->second->n;
        if (e.country.empty()) e.country = a->second->country;
      }
      e.probability = s.interval.adjusted.point;
      e.lo = s.interval.adjusted.lo;
      e.hi = s.interval.adjusted.hi;
      e.rank = ranks.at(s.id);
      if (covariate) e.rank_delta = deltas.at(s.id);
      const auto sig = significance_flags(e.lo, e.hi, b.grand_mean_probability);
      e.above_mean = sig == Significance::Above;
      e.below_mean = sig == Significance::Below;
      e.siblings = s.siblings;
      b.entries.push_back(std::move(e));
    }
    std::sort(b.entries.begin(), b.entries.end(), [](const auto& x, const auto& y) { return x.rank < y.rank; });
    out.push_back(std::move(b));
  };

  for (const auto& t : targets) emit(fits.base, std::nullopt, t);
  for (const auto& [name, fit] : fits.with_covariate)
    for (const auto& t : targets) emit(fit, name, t);
  return out;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const ExportBundle& b) {
  json j;
  j["schema_version"] = b.schema_version;
  j["subject"] = b.subject;
  j["measure"] = std::string(to_string(b.measure));
  j["audience"] = b.audience ? json(std::string(to_string(*b.audience))) : json(nullptr);
  j["covariate"] = b.covariate ? json(*b.covariate) : json(nullptr);
  j["grand_mean_probability"] = b.grand_mean_probability;
  j["low_threshold"] = b.low_threshold;
  j["entries"] = json::array();
  for (const auto& e : b.entries) {
    json je = {{"id", e.id},
               {"name", e.name},
               {"country", e.country},
               {"lat", opt(e.lat)},
               {"lon", opt(e.lon)},
               {"papers", e.papers},
               {"probability", e.probability},
               {"lo", e.lo},
               {"hi", e.hi},
               {"rank", e.rank},
               {"rank_delta", e.rank_delta ? json(*e.rank_delta) : json(nullptr)},
               {"above_mean", e.above_mean},
               {"below_mean", e.below_mean},
               {"siblings", e.siblings}};
    j["entries"].push_back(std::move(je));
  }
  return j;
}

std::vector<std::string> validate_bundle(const json& j) {
  std::vector<std::string> errs;
  auto need = [&](const json& o, const char* key, auto pred, const char* type) {
    if (!o.is_object() || !o.contains(key)) {
      errs.push_back(std::string("missing field ") + key);
      return false;
    }
    if (!pred(o.at(key))) {
      errs.push_back(std::string("field ") + key + " must be " + type);
      return false;
    }
    return true;
  };
  const auto is_num = [](const json& v) { return v.is_number(); };
  const auto is_int = [](const json& v) { return v.is_number_integer(); };
  const auto is_str = [](const json& v) { return v.is_string(); };
  const auto is_bool = [](const json& v) { return v.is_boolean(); };
  const auto str_or_null = [](const json& v) { return v.is_string() || v.is_null(); };
  const auto num_or_null = [](const json& v) { return v.is_number() || v.is_null(); };
  const auto int_or_null = [](const json& v) { return v.is_number_integer() || v.is_null(); };

  if (!j.is_object()) return {"bundle must be an object"};
  if (need(j, "schema_version", is_int, "an integer") && j.at("schema_version").get<int>() != kBundleSchemaVersion)
    errs.push_back("unsupported schema_version");
  need(j, "subject", is_str, "a string");
  if (need(j, "measure", is_str, "a string") && !measure_from_string(j.at("measure").get<std::string>()))
    errs.push_back("unknown measure");
  if (need(j, "audience", str_or_null, "a string or null")) {
    const auto& a = j.at("audience");
    if (a.is_string() && !sector_from_string(a.get<std::string>())) errs.push_back("unknown audience");
    if (j.contains("measure") && j.at("measure").is_string()) {
      const bool bookmarked = j.at("measure") == "highly_bookmarked";
      if (bookmarked != a.is_string()) errs.push_back("audience must be set iff measure is highly_bookmarked");
    }
  }
  const bool has_cov = need(j, "covariate", str_or_null, "a string or null") && j.at("covariate").is_string();
  if (need(j, "grand_mean_probability", is_num, "a number")) {
    const double g = j.at("grand_mean_probability").get<double>();
    if (!(g > 0.0 && g < 1.0)) errs.push_back("grand_mean_probability outside (0, 1)");
  }
  need(j, "low_threshold", is_bool, "a boolean");
  if (!need(j, "entries", [](const json& v) { return v.is_array(); }, "an array")) return errs;

  const auto& entries = j.at("entries");
  std::vector<char> seen(entries.size() + 1, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto before = errs.size();
    need(e, "id", is_str, "a string");
    need(e, "name", is_str, "a string");
    need(e, "country", is_str, "a string");
    need(e, "lat", num_or_null, "a number or null");
    need(e, "lon", num_or_null, "a number or null");
    need(e, "papers", is_int, "an integer");
    need(e, "probability", is_num, "a number");
    need(e, "lo", is_num, "a number");
    need(e, "hi", is_num, "a number");
    need(e, "rank", is_int, "an integer");
    need(e, "rank_delta", int_or_null, "an integer or null");
    need(e, "above_mean", is_bool, "a boolean");
    need(e, "below_mean", is_bool, "a boolean");
    need(e, "siblings", [](const json& v) { return v.is_object(); }, "an object");
    if (errs.size() != before) {
      errs.push_back("entry " + std::to_string(i) + " is malformed");
      continue;
    }
    const auto rank = e.at("rank").get<long long>();
    if (rank < 1 || rank > static_cast<long long>(entries.size()) || seen[static_cast<std::size_t>(rank)]++)
      errs.push_back("ranks are not a permutation of 1..n");
    if (e.at("rank_delta").is_null() == has_cov) errs.push_back("rank_delta must be present iff covariate is set");
    const double p = e.at("probability").get<double>(), lo = e.at("lo").get<double>(), hi = e.at("hi").get<double>();
    if (!(lo <= p && p <= hi)) errs.push_back("entry " + std::to_string(i) + ": probability outside its interval");
    if (e.at("above_mean").get<bool>() && e.at("below_mean").get<bool>())
      errs.push_back("entry " + std::to_string(i) + ": both above and below the mean");
    for (const auto& [k, v] : e.at("siblings").items())
      if (!sector_from_string(k) || !v.is_number()) errs.push_back("entry " + std::to_string(i) + ": bad sibling " + k);
  }
  return errs;
}

ExportBundle bundle_from_json(const json& j) {
  const auto errs = validate_bundle(j);
  if (!errs.empty()) throw std::invalid_argument("invalid bundle: " + errs.front());
  ExportBundle b;
  b.schema_version = j.at("schema_version").get<int>();
  b.subject = j.at("subject").get<std::string>();
  b.measure = *measure_from_string(j.at("measure").get<std::string>());
  if (j.at("audience").is_string()) b.audience = sector_from_string(j.at("audience").get<std::string>());
  if (j.at("covariate").is_string()) b.covariate = j.at("covariate").get<std::string>();
  b.grand_mean_probability = j.at("grand_mean_probability").get<double>();
  b.low_threshold = j.at("low_threshold").get<bool>();
  for (const auto& je : j.at("entries")) {
    BundleEntry e;
    e.id = je.at("id").get<std::string>();
    e.name = je.at("name").get<std::string>();
    e.country = je.at("country").get<std::string>();
    if (!je.at("lat").is_null()) e.lat = je.at("lat").get<double>();
    if (!je.at("lon").is_null()) e.lon = je.at("lon").get<double>();
    e.papers = je.at("papers").get<std::int64_t>();
    e.probability = je.at("probability").get<double>();
    e.lo = je.at("lo").get<double>();
    e.hi = je.at("hi").get<double>();
    e.rank = je.at("rank").get<int>();
    if (!je.at("rank_delta").is_null()) e.rank_delta = je.at("rank_delta").get<int>();
    e.above_mean = je.at("above_mean").get<bool>();
    e.below_mean = je.at("below_mean").get<bool>();
    e.siblings = je.at("siblings").get<std::map<std::string, double>>();
    b.entries.push_back(std::move(e));
  }
  return b;
}

std::string bundle_file_name(const ExportBundle& b) {
  std::string subject = b.subject == kAllSubjects ? "all" : b.subject;
  std::replace(subject.begin(), subject.end(), ' ', '_');
  return subject + "__" + std::string(to_string(b.measure)) + "__" +
         (b.audience ? std::string(to_string(*b.audience)) : "all") + "__" + b.covariate.value_or("none") + ".json";
}

}  // namespace exmap
