#pragma once

#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "behavior.hpp"
#include "control.hpp"
#include "errors.hpp"
#include "qdf.hpp"
#include "stability.hpp"

namespace ab::io {

using Json = nlohmann::ordered_json;

struct SystemFile {
  std::string name;
  OffsetKernelRep rep;
};

namespace detail {
inline const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + ": expected a number");
  return j.get<double>();
}

inline std::size_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw InputError(where + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}
}  // namespace detail

inline Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

inline Json roots_to_json(const std::vector<std::complex<double>>& rs) {
  Json out = Json::array();
  for (const auto& z : rs) out.push_back(Json::array({z.real(), z.imag()}));
  return out;
}

inline Eigen::VectorXd vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::number(j[i], where);
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array of rows");
  const std::size_t cols = j.empty() ? 0 : (j[0].is_array() ? j[0].size() : 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd r = vector_from_json(j[i], where);
    if (static_cast<std::size_t>(r.size()) != cols) throw InputError(where + ": ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

/// rows x cols x ascending coefficients.
inline Json poly_matrix_to_json(const PolyMatrix& r) {
  Json out = Json::array();
  for (std::size_t i = 0; i < r.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < r.cols(); ++j) row.push_back(r(i, j).coeffs());
    out.push_back(std::move(row));
  }
  return out;
}

inline PolyMatrix poly_matrix_from_json(const Json& j, std::size_t cols, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": R must be an array of rows");
  PolyMatrix r(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& row = j[i];
    if (!row.is_array() || row.size() != cols)
      throw InputError(where + ": row " + std::to_string(i) + " of R must have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      const Json& e = row[c];
      if (!e.is_array()) throw InputError(where + ": R[" + std::to_string(i) + "][" + std::to_string(c) + "] must be a coefficient array");
      std::vector<double> co;
      for (const Json& x : e) co.push_back(detail::number(x, where));
      r(i, c) = Poly(std::move(co));
    }
  }
  return r;
}

inline Json system_to_json(const OffsetKernelRep& b, const std::string& name = {}) {
  Json out;
  if (!name.empty()) out["name"] = name;
  out["q"] = b.q;
  out["k"] = b.k;
  out["R"] = poly_matrix_to_json(b.R);
  out["c"] = to_json(b.c);
  return out;
}

inline SystemFile system_from_json(const Json& j, const std::string& where = "system") {
  SystemFile out;
  if (j.is_object() && j.contains("name")) {
    if (!j["name"].is_string()) throw InputError(where + ": name must be a string");
    out.name = j["name"].get<std::string>();
  }
  const std::size_t q = detail::count(detail::member(j, "q", where), where + ".q");
  const std::size_t k = detail::count(detail::member(j, "k", where), where + ".k");
  const PolyMatrix r = poly_matrix_from_json(detail::member(j, "R", where), q + k, where);
  const Eigen::VectorXd c = vector_from_json(detail::member(j, "c", where), where + ".c");
  if (static_cast<std::size_t>(c.size()) != r.rows())
    throw InputError(where + ": c has " + std::to_string(c.size()) + " entries, R has " + std::to_string(r.rows()) + " rows");
  out.rep = OffsetKernelRep(r, c, q, k);
  return out;
}

inline Json parse(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // byte offset to line/column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(where + ": JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

inline Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

inline void write_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot write file");
  out << j.dump(2) << '\n';
}

inline Json form_check_to_json(const FormCheck& f) {
  Json out;
  out["passed"] = f.passed;
  out["nonnegative"] = f.nonnegative;
  out["nonincreasing"] = f.nonincreasing;
  out["strict"] = f.strict;
  out["phi_min_eig"] = f.phi_min_eig;
  out["increment_max_eig"] = f.increment_max_eig;
  out["restricted_increment"] = matrix_to_json(f.restricted_increment);
  out["restricted_increment_eigenvalues"] = to_json(f.restricted_increment_eigenvalues);
  out["reason"] = f.reason;
  return out;
}

inline Json psi_check_to_json(const PsiCheck& p) {
  Json out;
  out["passed"] = p.passed;
  out["phi_psd"] = p.phi_psd;
  out["nonpositive"] = p.nonpositive;
  out["equality_at_wbar"] = p.equality_at_wbar;
  out["unique_equality"] = p.unique_equality;
  out["max_value"] = p.max_value;
  out["reason"] = p.reason;
  return out;
}

inline Json certificate_to_json(const ContractionCertificate& c) {
  Json out;
  out["q"] = c.phi.q;
  out["W"] = c.phi.W;
  out["phi"] = matrix_to_json(c.phi.phi);
  out["wbar"] = to_json(c.wbar);
  out["psi"] = matrix_to_json(c.psi);
  out["lyapunov_P"] = matrix_to_json(c.lyapunov_P);
  out["diagnostics"] = {{"contraction_form", form_check_to_json(c.form)},
                        {"lyapunov", form_check_to_json(c.lyapunov)},
                        {"psi", psi_check_to_json(c.psi_check)}};
  return out;
}

/// The stored matrices only; diagnostics are recomputed by the verifiers.
struct CertificateFile {
  Qdf phi;
  Eigen::VectorXd wbar;
  Eigen::MatrixXd psi;
};

inline CertificateFile certificate_from_json(const Json& j, const std::string& where = "certificate") {
  const std::size_t q = detail::count(detail::member(j, "q", where), where + ".q");
  CertificateFile out;
  out.phi = Qdf(matrix_from_json(detail::member(j, "phi", where), where + ".phi"), q);
  out.wbar = vector_from_json(detail::member(j, "wbar", where), where + ".wbar");
  out.psi = matrix_from_json(detail::member(j, "psi", where), where + ".psi");
  return out;
}

inline Json stability_to_json(const StabilityReport& r) {
  Json out;
  out["contractive"] = r.contractive;
  out["offset_stable"] = r.offset_stable;
  out["wbar"] = r.wbar ? to_json(*r.wbar) : Json();
  out["det_roots"] = roots_to_json(r.det_roots);
  out["margin"] = r.margin;
  return out;
}

inline Json exterior_rank_to_json(const ExteriorRank& e) {
  return {{"generic_rank", e.generic_rank}, {"constant_outside_disk", e.constant}, {"drop_roots", roots_to_json(e.drop_roots)}};
}

inline Json detectability_to_json(const DetectabilityReport& r) {
  Json out;
  out["detectable"] = r.detectable;
  out["offset_stabilizable"] = r.offset_stabilizable;
  out["wbar"] = r.wbar ? to_json(*r.wbar) : Json();
  out["w_columns"] = exterior_rank_to_json(r.w_columns);
  out["block_form"] = {{"k", r.k},
                       {"R12", exterior_rank_to_json(r.r12)},
                       {"R21", exterior_rank_to_json(r.r21)},
                       {"detectable", r.block_detectable},
                       {"stabilizable", r.block_stabilizable}};
  out["disagreement"] = r.disagreement;
  out["diagnostic"] = r.diagnostic;
  return out;
}

inline Json implementability_to_json(const ImplementabilityVerdict& v) {
  return {{"implementable", v.implementable},
          {"within_projection", v.within_projection},
          {"contains_slice", v.contains_slice},
          {"reason", v.reason}};
}

inline Json regularity_to_json(const RegularityCheck& r) {
  return {{"regular", r.regular}, {"m_join", r.m_join}, {"m_plant", r.m_plant}, {"p_controller", r.p_controller}};
}

}  // namespace ab::io
