#pragma once

// JSON (and CSV) encodings for the library's artifact types. Every writer
// stamps the top-level object with schema "dieroll/1"; every loader checks
// it. Complex scalars are encoded as [re, im] pairs, vectors as arrays of
// pairs, matrices as row-major arrays of arrays of pairs.

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <dieroll/balancing.hpp>
#include <dieroll/bounds.hpp>
#include <dieroll/cheating.hpp>
#include <dieroll/protocol.hpp>

namespace dieroll {

using Json = nlohmann::json;

inline constexpr const char* kSchemaTag = "dieroll/1";

namespace detail {

inline void check_schema(const Json& j, const char* who) {
  if (!j.is_object())
    throw std::invalid_argument(std::string(who) + ": expected a JSON object");
  if (!j.contains("schema") || j.at("schema") != kSchemaTag)
    throw std::invalid_argument(std::string(who) + ": missing or unsupported "
                                "schema tag (want \"" +
                                kSchemaTag + "\")");
}

inline const Json& field(const Json& j, const char* name, const char* who) {
  if (!j.contains(name))
    throw std::invalid_argument(std::string(who) + ": missing field \"" +
                                name + "\"");
  return j.at(name);
}

inline Json complex_to_json(const Complex& z) {
  return Json::array({z.real(), z.imag()});
}

inline Complex complex_from_json(const Json& j, const char* who) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument(std::string(who) +
                                ": complex entries must be [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(complex_to_json(v(i)));
  return out;
}

inline CVector vector_from_json(const Json& j, const char* who) {
  if (!j.is_array())
    throw std::invalid_argument(std::string(who) + ": expected an array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], who);
  return v;
}

inline Json matrix_to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(complex_to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline CMatrix matrix_from_json(const Json& j, const char* who) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string(who) +
                                ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0)
    throw std::invalid_argument(std::string(who) + ": empty matrix row");
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::invalid_argument(std::string(who) + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          complex_from_json(j[r][c], who);
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Protocols

inline Json protocol_to_json(const DricProtocol& p) {
  Json j;
  j["schema"] = kSchemaTag;
  j["D"] = p.d;
  j["dimA"] = p.dims.dim_a;
  j["dimB"] = p.dims.dim_b;
  j["label"] = p.label;
  Json states = Json::array();
  for (const auto& psi : p.states) states.push_back(detail::vector_to_json(psi));
  j["states"] = std::move(states);
  return j;
}

inline DricProtocol protocol_from_json(const Json& j) {
  const char* who = "protocol_from_json";
  detail::check_schema(j, who);
  DricProtocol p;
  p.d = detail::field(j, "D", who).get<int>();
  p.dims.dim_a = detail::field(j, "dimA", who).get<int>();
  p.dims.dim_b = detail::field(j, "dimB", who).get<int>();
  p.label = detail::field(j, "label", who).get<std::string>();
  for (const auto& st : detail::field(j, "states", who))
    p.states.push_back(detail::vector_from_json(st, who));
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Certificates

inline Json certificate_to_json(const BobCertificate& cert) {
  Json j;
  j["schema"] = kSchemaTag;
  j["party"] = "bob";
  j["matrices"] = Json::array({detail::matrix_to_json(cert.x)});
  return j;
}

inline Json certificate_to_json(const AliceCertificate& cert) {
  Json j;
  j["schema"] = kSchemaTag;
  j["party"] = "alice";
  j["form"] =
      cert.form == CertificateForm::inverse_form ? "inverse" : "operator";
  j["s"] = cert.s;
  if (cert.form == CertificateForm::inverse_form) j["eps"] = cert.eps;
  Json mats = Json::array();
  for (const auto& z : cert.z) mats.push_back(detail::matrix_to_json(z));
  j["matrices"] = std::move(mats);
  return j;
}

inline std::string certificate_party(const Json& j) {
  detail::check_schema(j, "certificate_party");
  return detail::field(j, "party", "certificate_party").get<std::string>();
}

inline BobCertificate bob_certificate_from_json(const Json& j) {
  const char* who = "bob_certificate_from_json";
  detail::check_schema(j, who);
  if (detail::field(j, "party", who) != "bob")
    throw std::invalid_argument(std::string(who) + ": party is not \"bob\"");
  const Json& mats = detail::field(j, "matrices", who);
  if (!mats.is_array() || mats.size() != 1)
    throw std::invalid_argument(std::string(who) +
                                ": expected exactly one matrix");
  BobCertificate cert;
  cert.x = detail::matrix_from_json(mats[0], who);
  return cert;
}

inline AliceCertificate alice_certificate_from_json(const Json& j) {
  const char* who = "alice_certificate_from_json";
  detail::check_schema(j, who);
  if (detail::field(j, "party", who) != "alice")
    throw std::invalid_argument(std::string(who) + ": party is not \"alice\"");
  AliceCertificate cert;
  const std::string form = detail::field(j, "form", who).get<std::string>();
  if (form == "inverse") {
    cert.form = CertificateForm::inverse_form;
  } else if (form == "operator") {
    cert.form = CertificateForm::operator_form;
  } else {
    throw std::invalid_argument(std::string(who) + ": unknown form \"" + form +
                                "\"");
  }
  cert.s = detail::field(j, "s", who).get<double>();
  cert.eps = j.contains("eps") ? j.at("eps").get<double>() : 0.0;
  for (const auto& mat : detail::field(j, "matrices", who))
    cert.z.push_back(detail::matrix_from_json(mat, who));
  if (cert.z.empty())
    throw std::invalid_argument(std::string(who) + ": no matrices");
  return cert;
}

// ---------------------------------------------------------------------------
// Discrimination ensembles

inline Json ensemble_to_json(const QsdEnsemble& e) {
  Json j;
  j["schema"] = kSchemaTag;
  Json states = Json::array();
  for (const auto& rho : e.states)
    states.push_back(detail::matrix_to_json(rho));
  j["states"] = std::move(states);
  j["priors"] = e.priors;
  return j;
}

inline QsdEnsemble ensemble_from_json(const Json& j) {
  const char* who = "ensemble_from_json";
  detail::check_schema(j, who);
  QsdEnsemble e;
  for (const auto& st : detail::field(j, "states", who))
    e.states.push_back(detail::matrix_from_json(st, who));
  e.priors = detail::field(j, "priors", who).get<std::vector<double>>();
  e.validate();
  return e;
}

// ---------------------------------------------------------------------------
// Analysis reports. Strategies are deliberately not serialized: their
// achieved values are recorded in the bounds, and the certificate matrices
// are the artifacts a reader can re-verify.

inline Json cheat_report_to_json(const CheatReport& rep) {
  Json j;
  j["schema"] = kSchemaTag;
  j["label"] = rep.label;
  j["D"] = rep.d;
  j["closed_form_used"] = rep.closed_form_used;
  j["solver_used"] = rep.solver_used;
  j["p_alice_lower"] = rep.p_alice_lower;
  j["p_alice_upper"] = rep.p_alice_upper;
  j["p_bob_lower"] = rep.p_bob_lower;
  j["p_bob_upper"] = rep.p_bob_upper;
  j["kitaev_product"] = rep.kitaev_product;
  j["bob_certificate_ok"] = rep.bob_certificate_ok;
  j["alice_certificate_ok"] = rep.alice_certificate_ok;
  j["bob_certificate"] = certificate_to_json(rep.bob_certificate);
  j["alice_certificate"] = certificate_to_json(rep.alice_certificate);
  j["bob_solver_primal"] =
      rep.bob_solver_primal ? Json(*rep.bob_solver_primal) : Json(nullptr);
  j["bob_solver_dual"] =
      rep.bob_solver_dual ? Json(*rep.bob_solver_dual) : Json(nullptr);
  j["alice_solver_primal"] =
      rep.alice_solver_primal ? Json(*rep.alice_solver_primal) : Json(nullptr);
  j["alice_solver_dual"] =
      rep.alice_solver_dual ? Json(*rep.alice_solver_dual) : Json(nullptr);
  j["notes"] = rep.notes;
  return j;
}

/// Rebuilds everything except the strategy objects (see note above).
inline CheatReport cheat_report_from_json(const Json& j) {
  const char* who = "cheat_report_from_json";
  detail::check_schema(j, who);
  CheatReport rep;
  rep.label = detail::field(j, "label", who).get<std::string>();
  rep.d = detail::field(j, "D", who).get<int>();
  rep.closed_form_used = detail::field(j, "closed_form_used", who).get<bool>();
  rep.solver_used = detail::field(j, "solver_used", who).get<bool>();
  rep.p_alice_lower = detail::field(j, "p_alice_lower", who).get<double>();
  rep.p_alice_upper = detail::field(j, "p_alice_upper", who).get<double>();
  rep.p_bob_lower = detail::field(j, "p_bob_lower", who).get<double>();
  rep.p_bob_upper = detail::field(j, "p_bob_upper", who).get<double>();
  rep.kitaev_product = detail::field(j, "kitaev_product", who).get<double>();
  rep.bob_certificate_ok =
      detail::field(j, "bob_certificate_ok", who).get<bool>();
  rep.alice_certificate_ok =
      detail::field(j, "alice_certificate_ok", who).get<bool>();
  rep.bob_certificate =
      bob_certificate_from_json(detail::field(j, "bob_certificate", who));
  rep.alice_certificate =
      alice_certificate_from_json(detail::field(j, "alice_certificate", who));
  auto opt_real = [&](const char* name) -> std::optional<double> {
    const Json& v = detail::field(j, name, who);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  rep.bob_solver_primal = opt_real("bob_solver_primal");
  rep.bob_solver_dual = opt_real("bob_solver_dual");
  rep.alice_solver_primal = opt_real("alice_solver_primal");
  rep.alice_solver_dual = opt_real("alice_solver_dual");
  rep.notes = detail::field(j, "notes", who).get<std::string>();
  return rep;
}

inline Json balance_result_to_json(const BalanceResult& res) {
  Json j;
  j["schema"] = kSchemaTag;
  j["t"] = res.t;
  j["direction"] =
      res.direction ? Json(to_string(*res.direction)) : Json(nullptr);
  j["alpha"] = res.alpha;
  j["beta"] = res.beta;
  j["bound"] = res.bound;
  j["source_m"] = res.source_m;
  j["transformed"] = protocol_to_json(res.transformed);
  j["certificates"] = Json{
      {"bob", certificate_to_json(res.certificates.bob)},
      {"alice", certificate_to_json(res.certificates.alice)},
  };
  return j;
}

inline BalanceResult balance_result_from_json(const Json& j) {
  const char* who = "balance_result_from_json";
  detail::check_schema(j, who);
  BalanceResult res;
  res.t = detail::field(j, "t", who).get<double>();
  const Json& dir = detail::field(j, "direction", who);
  if (!dir.is_null()) {
    const std::string name = dir.get<std::string>();
    if (name == "reduce_bob") {
      res.direction = Direction::reduce_bob;
    } else if (name == "reduce_alice") {
      res.direction = Direction::reduce_alice;
    } else {
      throw std::invalid_argument(std::string(who) + ": unknown direction \"" +
                                  name + "\"");
    }
  }
  res.alpha = detail::field(j, "alpha", who).get<double>();
  res.beta = detail::field(j, "beta", who).get<double>();
  res.bound = detail::field(j, "bound", who).get<double>();
  res.source_m = detail::field(j, "source_m", who).get<int>();
  res.transformed = protocol_from_json(detail::field(j, "transformed", who));
  const Json& certs = detail::field(j, "certificates", who);
  res.certificates.bob =
      bob_certificate_from_json(detail::field(certs, "bob", who));
  res.certificates.alice =
      alice_certificate_from_json(detail::field(certs, "alice", who));
  return res;
}

// ---------------------------------------------------------------------------
// Certificate verification reports (the `verify` command's output)

struct VerifyReport {
  std::string party;  // "bob" or "alice"
  bool ok = false;
  double value = 0.0;             // certified upper bound (Tr X, or s)
  double min_margin = 0.0;        // bob: worst eigenvalue margin
  double sum_margin = 0.0;        // alice: margin of s*I - sum_a Z_a
  double pointwise_margin = 0.0;  // alice: worst per-outcome margin
};

inline Json verify_report_to_json(const VerifyReport& rep) {
  Json j;
  j["schema"] = kSchemaTag;
  j["party"] = rep.party;
  j["ok"] = rep.ok;
  j["value"] = rep.value;
  j["min_margin"] = rep.min_margin;
  j["sum_margin"] = rep.sum_margin;
  j["pointwise_margin"] = rep.pointwise_margin;
  return j;
}

inline VerifyReport verify_report_from_json(const Json& j) {
  const char* who = "verify_report_from_json";
  detail::check_schema(j, who);
  VerifyReport rep;
  rep.party = detail::field(j, "party", who).get<std::string>();
  rep.ok = detail::field(j, "ok", who).get<bool>();
  rep.value = detail::field(j, "value", who).get<double>();
  rep.min_margin = detail::field(j, "min_margin", who).get<double>();
  rep.sum_margin = detail::field(j, "sum_margin", who).get<double>();
  rep.pointwise_margin =
      detail::field(j, "pointwise_margin", who).get<double>();
  return rep;
}

// ---------------------------------------------------------------------------
// Bounds table rows: JSON keys mirror the CSV columns exactly.

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline Rational rational_from_string(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)),
                    std::stoll(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("rational_from_string: cannot parse \"" + s +
                                "\"");
  }
}

inline Json bounds_row_to_json(const BoundsRow& row) {
  Json j;
  j["schema"] = kSchemaTag;
  j["D"] = row.d;
  j["classical_exact"] = to_string(row.classical);
  j["classical_pct"] = row.classical_pct;
  j["quantum_exact"] = to_string(row.quantum);
  j["quantum_pct"] = row.quantum_pct;
  j["kitaev"] = row.kitaev;
  j["kitaev_pct"] = row.kitaev_pct;
  j["as10_exact"] = to_string(row.as10);
  j["as10_pct"] = row.as10_pct;
  return j;
}

inline BoundsRow bounds_row_from_json(const Json& j) {
  const char* who = "bounds_row_from_json";
  detail::check_schema(j, who);
  BoundsRow row;
  row.d = detail::field(j, "D", who).get<int>();
  row.classical = rational_from_string(
      detail::field(j, "classical_exact", who).get<std::string>());
  row.classical_pct = detail::field(j, "classical_pct", who).get<int>();
  row.quantum = rational_from_string(
      detail::field(j, "quantum_exact", who).get<std::string>());
  row.quantum_pct = detail::field(j, "quantum_pct", who).get<int>();
  row.kitaev = detail::field(j, "kitaev", who).get<double>();
  row.kitaev_pct = detail::field(j, "kitaev_pct", who).get<int>();
  row.as10 = rational_from_string(
      detail::field(j, "as10_exact", who).get<std::string>());
  row.as10_pct = detail::field(j, "as10_pct", who).get<int>();
  return row;
}

inline constexpr const char* kBoundsCsvHeader =
    "D,classical_exact,classical_pct,quantum_exact,quantum_pct,kitaev,"
    "kitaev_pct,as10_exact,as10_pct";

inline std::string bounds_table_csv(const std::vector<BoundsRow>& rows) {
  std::string out = kBoundsCsvHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += std::to_string(row.d);
    out += ',';
    out += to_string(row.classical);
    out += ',';
    out += std::to_string(row.classical_pct);
    out += ',';
    out += to_string(row.quantum);
    out += ',';
    out += std::to_string(row.quantum_pct);
    out += ',';
    out += format_real(row.kitaev);
    out += ',';
    out += std::to_string(row.kitaev_pct);
    out += ',';
    out += to_string(row.as10);
    out += ',';
    out += std::to_string(row.as10_pct);
    out += '\n';
  }
  return out;
}

}  // namespace dieroll
