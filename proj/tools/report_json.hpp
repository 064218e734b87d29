#pragma once

// JSON and CSV rendering of the pipeline reports. Every document carries the
// same top-level keys so downstream scripts can rely on the shape.

#include <sstream>
#include <string>

#include <json.hpp>

#include "nhbraid/report.hpp"

namespace nhbraid::io {

using nlohmann::json;

inline json cjson(cplx z) { return json::array({z.real(), z.imag()}); }
inline json pjson(const Point2& p) { return json::array({p[0], p[1]}); }

inline json skeleton(const std::string& command, json config) {
  config["command"] = command;
  return json{{"version", kVersion},     {"config", std::move(config)}, {"series", json::object()},
              {"events", json::array()}, {"braid", json::object()},     {"eps", json::array()},
              {"diagnostics", json::object()}};
}

inline json series_json(const Series& s) {
  json cols = json::object();
  for (std::size_t c = 0; c < s.columns.size(); ++c)
    cols[s.columns[c]] = c < s.data.size() ? json(s.data[c]) : json::array();
  return cols;
}

inline const char* to_string(Equivalence e) {
  switch (e) {
    case Equivalence::Equal: return "equal";
    case Equivalence::Different: return "different";
    case Equivalence::Inconclusive: return "inconclusive";
  }
  return "?";
}

inline json ep_json(const EpRecord& ep) {
  json j{{"alpha", ep.alpha}, {"k", pjson(ep.position)}, {"residual", ep.residual}, {"order", ep.order}};
  j["charge"] = ep.charge ? json(*ep.charge) : json(nullptr);
  j["pair"] = ep.pair_label();
  return j;
}

inline json order_json(const OrderReport& o) {
  json f = json::array();
  for (int i = 0; i < 3; ++i) f.push_back({o.fidelity(i, 0), o.fidelity(i, 1), o.fidelity(i, 2)});
  json e = json::array();
  for (const auto& z : o.eigenvalues) e.push_back(cjson(z));
  json j{{"order", o.order}, {"fidelity", f}, {"eigenvalues", e}, {"k", pjson(o.position)}, {"residual", o.residual}};
  j["pair"] = o.pair ? json::array({(*o.pair)[0], (*o.pair)[1]}) : json(nullptr);
  return j;
}

inline json event_json(const EpEvent& e, const std::string& label) {
  return {{"kind", to_string(e.kind)}, {"alpha", e.alpha}, {"k", pjson(e.position)}, {"label", label}};
}

inline json to_json(const BraidScanReport& rep) {
  const auto& c = rep.config;
  json doc = skeleton("braid-scan", {{"alpha", c.alpha}, {"r", c.r}, {"center", pjson(c.center)}, {"n_samples", c.n_samples}});
  Series bands{"bands", {"theta", "re1", "im1", "re2", "im2", "re3", "im3"}, {}};
  for (std::size_t j = 0; j < rep.path.size(); ++j) {
    const Triple e = rep.path.at(j);
    bands.add_row({rep.path.thetas[j], e[0].real(), e[0].imag(), e[1].real(), e[1].imag(), e[2].real(), e[2].imag()});
  }
  Series phases{"phases", {"theta", "phi12", "phi23", "phi31"}, {}};
  for (std::size_t j = 0; j < rep.phases.thetas.size(); ++j)
    phases.add_row({rep.phases.thetas[j], rep.phases.series[0][j], rep.phases.series[1][j], rep.phases.series[2][j]});
  doc["series"]["bands"] = series_json(bands);
  doc["series"]["phases"] = series_json(phases);
  for (const auto& x : rep.crossings)
    doc["events"].push_back({{"kind", "crossing"},
                             {"theta", x.theta},
                             {"tau", "t" + std::to_string(x.i) + std::to_string(x.j)}});
  doc["braid"] = {{"word", format_word(rep.word)},
                  {"reduced", format_word(rep.reduced)},
                  {"permutation", rep.permutation.images},
                  {"exponent_sum", rep.exponent_sum},
                  {"identity", to_string(rep.identity)},
                  {"crossings", rep.crossings.size()}};
  for (const auto& ep : rep.enclosed) doc["eps"].push_back(ep_json(ep));
  doc["diagnostics"] = {{"theta_points", rep.path.size()}, {"notes", rep.notes}};
  doc["diagnostics"]["enclosed_charge"] = rep.enclosed_charge ? json(*rep.enclosed_charge) : json(nullptr);
  return doc;
}

inline json to_json(const EpAtlasReport& rep) {
  const auto& c = rep.config;
  json cfg{{"alpha_range", {c.alpha_min, c.alpha_max}}, {"step", c.step}, {"trace", c.trace}};
  cfg["order_at"] = json::array();
  for (const auto& q : c.order_at) cfg["order_at"].push_back({{"alpha", q.alpha}, {"k", pjson(q.point)}});
  cfg["charge_at"] = json::array();
  for (const auto& q : c.charge_at)
    cfg["charge_at"].push_back({{"alpha", q.alpha}, {"k", pjson(q.point)}, {"radius", q.radius}});
  json doc = skeleton("ep-atlas", cfg);
  json traj = json::array();
  for (const auto& t : rep.trajectories) {
    Series s{t.label, {"alpha", "k1", "k2"}, {}};
    for (const auto& p : t.samples) s.add_row({p.alpha, p.position[0], p.position[1]});
    doc["series"][t.label] = series_json(s);
    for (const auto& e : t.events) doc["events"].push_back(event_json(e, t.label));
    traj.push_back({{"label", t.label}, {"charge", t.charge}, {"samples", t.samples.size()}});
  }
  doc["eps"] = json::array();
  for (const auto& o : rep.orders) {
    json j = order_json(o.report);
    j["query"] = {{"alpha", o.query.alpha}, {"k", pjson(o.query.point)}};
    doc["eps"].push_back(j);
  }
  for (const auto& q : rep.charges)
    doc["eps"].push_back({{"query", {{"alpha", q.query.alpha}, {"k", pjson(q.query.point)}, {"radius", q.query.radius}}},
                          {"charge", q.charge}});
  doc["diagnostics"] = {{"trajectories", traj}};
  return doc;
}

inline json to_json(const TransitionReport& rep) {
  const auto& c = rep.config;
  json doc = skeleton("transition", {{"r", c.r}, {"alpha_max", c.alpha_max}, {"step", c.step}});
  doc["series"][rep.radius.name] = series_json(rep.radius);
  for (const auto& e : rep.events) doc["events"].push_back(event_json(e, "U"));
  doc["events"].push_back({{"kind", "transition"}, {"alpha", rep.alpha0}, {"r", c.r}});
  doc["diagnostics"] = {{"alpha0", rep.alpha0}};
  return doc;
}

inline json to_json(const DilateReport& rep) {
  const auto& c = rep.config;
  json psi = json::array();
  for (int i = 0; i < 3; ++i) psi.push_back(cjson(c.psi0(i)));
  json cfg{{"alpha", c.alpha}, {"k", pjson(c.k)}, {"T", c.T}, {"steps", c.steps}, {"scale", c.scale}, {"m0", c.m0}, {"psi0", psi}};
  cfg["gamma"] = c.gamma ? json(*c.gamma) : json("auto");
  json doc = skeleton("dilate-verify", cfg);
  doc["series"][rep.margin.name] = series_json(rep.margin);
  doc["diagnostics"] = {{"gamma", rep.gamma},
                        {"min_margin", rep.min_margin},
                        {"max_antihermitian", rep.max_antihermitian},
                        {"residual", rep.embedding.residual},
                        {"max_angle", rep.embedding.max_angle},
                        {"rk4_steps", rep.embedding.rk4_steps}};
  return doc;
}

inline json triple_json(const EigenTriple& e) { return json::array({cjson(e[0]), cjson(e[1]), cjson(e[2])}); }

inline json to_json(const ReconstructReport& rep) {
  const auto& c = rep.config;
  json cfg{{"alpha", c.alpha}, {"r", c.r}, {"center", pjson(c.center)}, {"theta", c.theta},
           {"noise", c.noise}, {"trials", c.trials}, {"prior", c.use_prior}};
  cfg["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  json doc = skeleton("reconstruct-demo", cfg);
  if (!rep.trials.columns.empty()) doc["series"]["trials"] = series_json(rep.trials);
  json cands = json::array();
  for (const auto& s : rep.clean.candidates) cands.push_back({{"eigenvalues", triple_json(s.eigenvalues)}, {"residual", s.residual}});
  doc["diagnostics"] = {
      {"k", {rep.point.k1, rep.point.k2}},
      {"truth", triple_json(rep.truth)},
      {"which", {rep.ratios.which[0] + 1, rep.ratios.which[1] + 1}},
      {"ratios", {{"a", rep.ratios.a}, {"b", rep.ratios.b}}},
      {"status", to_string(rep.clean.status)},
      {"recovered", triple_json(rep.clean.best.eigenvalues)},
      {"residual", rep.clean.best.residual},
      {"error", rep.clean_error},
      {"candidates", cands}};
  if (rep.stats) {
    json st = json::array();
    for (const auto& s : *rep.stats) st.push_back({{"mean", cjson(s.mean)}, {"sd", {s.sd_re, s.sd_im}}});
    doc["diagnostics"]["monte_carlo"] = {{"eigenvalues", st},
                                         {"within_0.1", rep.within_tol},
                                         {"failed", rep.failed_trials}};
  }
  return doc;
}

/// Long-format CSV of the `series` block: series,row,column,value.
inline std::string series_csv(const json& doc) {
  std::ostringstream out;
  out.precision(17);
  out << "series,row,column,value\n";
  for (const auto& [name, cols] : doc.at("series").items())
    for (const auto& [col, values] : cols.items())
      for (std::size_t r = 0; r < values.size(); ++r) out << name << ',' << r << ',' << col << ',' << values[r].get<double>() << '\n';
  return out.str();
}

}  // namespace nhbraid::io
