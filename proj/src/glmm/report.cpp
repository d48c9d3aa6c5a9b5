#include "exmap/glmm/report.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace exmap::glmm {

using nlohmann::json;

namespace {

json estimate_json(const ParameterEstimate& e) {
  return {{"name", e.name}, {"estimate", e.estimate}, {"se", e.se},       {"stat", e.stat},
          {"p", e.p_value}, {"ci_lo", e.ci_lo},       {"ci_hi", e.ci_hi}};
}

ParameterEstimate estimate_from(const json& j) {
  return {j.at("name").get<std::string>(), j.at("estimate").get<double>(), j.at("se").get<double>(),
          j.at("stat").get<double>(),      j.at("p").get<double>(),        j.at("ci_lo").get<double>(),
          j.at("ci_hi").get<double>()};
}

FixedLayout layout_from(const std::string& s) {
  for (auto l : {FixedLayout::Main, FixedLayout::Interaction, FixedLayout::Intercept})
    if (to_string(l) == s) return l;
  throw std::invalid_argument("unknown fixed layout: " + s);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

json to_json(const FitResult& fit) {
  json j;
  j["K"] = fit.K;
  j["layout"] = std::string(to_string(fit.layout));
  j["indicators"] = fit.indicator_names;
  j["params"] = {{"beta", fit.params.beta}, {"sigma2", fit.params.sigma2}, {"rho", fit.params.rho}};
  j["fixed"] = json::array();
  for (const auto& e : fit.fixed) j["fixed"].push_back(estimate_json(e));
  j["variances"] = json::array();
  for (const auto& e : fit.variances) j["variances"].push_back(estimate_json(e));
  j["rho"] = fit.rho ? estimate_json(*fit.rho) : json(nullptr);
  j["log_likelihood"] = fit.log_likelihood;
  j["method"] = std::string(to_string(fit.method));
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_norm"] = fit.gradient_norm;
  j["diagnostics"] = fit.diagnostics;
  j["eb"] = json::array();
  for (const auto& e : fit.eb) j["eb"].push_back({{"id", e.id}, {"u", e.u}, {"se", e.se}});
  return j;
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.K = j.at("K").get<std::size_t>();
  f.layout = layout_from(j.at("layout").get<std::string>());
  f.indicator_names = j.at("indicators").get<std::vector<std::string>>();
  const auto& p = j.at("params");
  f.params.beta = p.at("beta").get<std::vector<double>>();
  f.params.sigma2 = p.at("sigma2").get<std::vector<double>>();
  f.params.rho = p.at("rho").get<double>();
  for (const auto& e : j.at("fixed")) f.fixed.push_back(estimate_from(e));
  for (const auto& e : j.at("variances")) f.variances.push_back(estimate_from(e));
  if (!j.at("rho").is_null()) f.rho = estimate_from(j.at("rho"));
  f.log_likelihood = j.at("log_likelihood").get<double>();
  const auto m = j.at("method").get<std::string>();
  f.method = m == "quadrature" ? EstimationMethod::Quadrature : EstimationMethod::PseudoLikelihood;
  f.converged = j.at("converged").get<bool>();
  f.iterations = j.at("iterations").get<int>();
  f.gradient_norm = j.at("gradient_norm").get<double>();
  f.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  for (const auto& e : j.at("eb"))
    f.eb.push_back({e.at("id").get<std::string>(), e.at("u").get<std::vector<double>>(),
                    e.at("se").get<std::vector<double>>()});
  if (f.params.sigma2.size() != f.K || f.variances.size() != f.K)
    throw std::invalid_argument("fit json: variance count does not match K");
  return f;
}

void write_fit_report(std::ostream& out, const FitResult& fit, const FitResult* base) {
  out << "method: " << to_string(fit.method) << "  layout: " << to_string(fit.layout)
      << "  log-likelihood: " << fmt("%.4f", fit.log_likelihood) << "  iterations: " << fit.iterations
      << (fit.converged ? "" : "  (not converged)") << "\n\n";
  out << "fixed effects\n";
  out << "name\testimate\tse\tt\tci_lo\tci_hi\tprobability\n";
  for (const auto& e : fit.fixed) {
    out << e.name << '\t' << fmt("%.4f", e.estimate) << '\t' << fmt("%.4f", e.se) << '\t' << fmt("%.2f", e.stat)
        << '\t' << fmt("%.4f", e.ci_lo) << '\t' << fmt("%.4f", e.ci_hi) << '\t';
    // Only pure indicator terms translate to a probability.
    const bool is_indicator = fit.layout != FixedLayout::Intercept && e.name.rfind("x*", 0) != 0;
    out << (is_indicator ? fmt("%.4f", logistic(e.estimate)) : std::string("")) << '\n';
  }
  out << "\nvariance components\n";
  out << "indicator\tsigma2\tse\twald_z\tp\ticc" << (base ? "\tr2" : "") << '\n';
  std::vector<Diagnostic> diag;
  for (std::size_t k = 0; k < fit.variances.size(); ++k) {
    const auto& e = fit.variances[k];
    out << fit.indicator_names[k] << '\t' << fmt("%.4f", e.estimate) << '\t' << fmt("%.4f", e.se) << '\t'
        << fmt("%.2f", e.stat) << '\t' << fmt("%.4f", e.p_value) << '\t' << fmt("%.4f", icc(e.estimate));
    if (base) {
      const double b = k < base->variances.size() ? base->variances[k].estimate : 0.0;
      out << '\t' << (b > 0 ? fmt("%.4f", r_squared(b, e.estimate, &diag)) : std::string("NA"));
    }
    out << '\n';
  }
  if (fit.rho)
    out << "\nrho\t" << fmt("%.4f", fit.rho->estimate) << "\tse\t" << fmt("%.4f", fit.rho->se) << '\n';
  for (const auto& d : diag) out << "note: " << d.message << '\n';
  for (const auto& d : fit.diagnostics) out << "note: " << d << '\n';
}

json to_json(const FitConfig& c) {
  json j = {{"nodes", c.nodes},
            {"grad_tol", c.grad_tol},
            {"step_tol", c.step_tol},
            {"max_iterations", c.max_iterations},
            {"method", std::string(to_string(c.method))},
            {"start_sigma2", c.start_sigma2},
            {"start_rho", c.start_rho},
            {"pql_max_iterations", c.pql_max_iterations},
            {"pql_tol", c.pql_tol}};
  j["fixed_rho"] = c.fixed_rho ? json(*c.fixed_rho) : json(nullptr);
  return j;
}

FitConfig fit_config_from_json(const json& j, FitConfig c) {
  c.nodes = j.value("nodes", c.nodes);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.step_tol = j.value("step_tol", c.step_tol);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  if (j.contains("method")) {
    const auto m = method_from_string(j.at("method").get<std::string>());
    if (!m) throw std::invalid_argument("unknown method: " + j.at("method").get<std::string>());
    c.method = *m;
  }
  c.start_sigma2 = j.value("start_sigma2", c.start_sigma2);
  c.start_rho = j.value("start_rho", c.start_rho);
  c.pql_max_iterations = j.value("pql_max_iterations", c.pql_max_iterations);
  c.pql_tol = j.value("pql_tol", c.pql_tol);
  if (j.contains("fixed_rho") && !j.at("fixed_rho").is_null()) c.fixed_rho = j.at("fixed_rho").get<double>();
  if (c.nodes < 1) throw std::invalid_argument("nodes must be >= 1");
  return c;
}

}  // namespace exmap::glmm
