// affine-behaviors: analysis, certification and controller synthesis for
// affine kernel representations stored as JSON system files.

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affine_behaviors/affine_behaviors.hpp"

namespace {

using ab::io::Json;

enum Exit : int { kOk = 0, kFailure = 1, kInput = 2, kEmpty = 3, kPrecondition = 4 };

struct Common {
  bool json = false;
  ab::Tolerances tol;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_flag("--json", c.json, "Machine-readable JSON on stdout");
  cmd->add_option("--tol-zero", c.tol.zero, "Coefficient zero threshold (relative)");
  cmd->add_option("--tol-rank", c.tol.rank, "Singular-value rank threshold (relative)");
  cmd->add_option("--schur-margin", c.tol.schur_margin, "Roots with modulus >= 1 - margin count as unstable");
  cmd->add_option("--tol-form", c.tol.form, "Eigenvalue threshold for restricted quadratic forms");
  cmd->add_option("--tol-residual", c.tol.residual, "Residual threshold for linear consistency checks");
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

std::string fmt(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
  return s + "]";
}

std::string fmt(const std::vector<std::complex<double>>& rs) {
  std::string s;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (i) s += ", ";
    s += fmt(rs[i].real());
    if (rs[i].imag() != 0.0) s += (rs[i].imag() > 0 ? "+" : "-") + fmt(std::abs(rs[i].imag())) + "i";
  }
  return s;
}

std::string yes(bool b) { return b ? "true" : "false"; }

ab::io::SystemFile load_system(const std::string& path) { return ab::io::system_from_json(ab::io::read_file(path), path); }

std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + suffix)).string();
}

void emit(const Common& c, const Json& j, const std::string& text) {
  if (c.json) std::cout << j.dump(2) << '\n';
  else std::cout << text;
}

int cmd_analyze(const std::string& file, const Common& c) {
  const auto sys = load_system(file);
  if (sys.rep.k == 0) {
    const ab::StabilityReport r = ab::is_contractive(sys.rep, c.tol);
    std::string t = "contractive: " + yes(r.contractive) + "\noffset_stable: " + yes(r.offset_stable) + "\n";
    if (r.wbar) t += "wbar: " + fmt(*r.wbar) + "\n";
    t += "roots: " + fmt(r.det_roots) + "\nmargin: " + fmt(r.margin) + "\n";
    emit(c, Json{{"system", sys.name}, {"kind", "autonomous"}, {"report", ab::io::stability_to_json(r)}}, t);
  } else {
    const ab::DetectabilityReport r = ab::detectability_stabilizability_report(sys.rep, c.tol);
    std::string t = "detectable: " + yes(r.detectable) + "\noffset_stabilizable (pi_w): " + yes(r.offset_stabilizable) + "\n";
    t += "block form: rank R12 = k outside disk: " + yes(r.block_detectable) +
         ", rank R21 constant outside disk: " + yes(r.block_stabilizable) + "\n";
    if (r.disagreement) t += "note: " + r.diagnostic + "\n";
    emit(c, Json{{"system", sys.name}, {"kind", "controlled"}, {"report", ab::io::detectability_to_json(r)}}, t);
  }
  return kOk;
}

struct Verified {
  ab::FormCheck form, lyapunov;
  ab::PsiCheck psi;
  bool passed() const { return form.passed && lyapunov.passed && psi.passed; }
};

Verified reverify(const ab::OffsetKernelRep& b, const std::string& cert_path, const ab::Tolerances& tol) {
  const auto f = ab::io::certificate_from_json(ab::io::read_file(cert_path), cert_path);
  Verified v;
  v.form = ab::verify_contraction_form(b, f.phi, tol);
  v.lyapunov = ab::verify_lyapunov(ab::difference_behavior(b, tol), f.phi, tol);
  v.psi = ab::verify_psi_certificate(b, f.psi, f.phi, tol);
  return v;
}

int cmd_certify(const std::string& file, const std::string& out, const Common& c) {
  const auto sys = load_system(file);
  if (sys.rep.k != 0) throw ab::PreconditionError("certify: system has control variables; certify a closed loop instead");
  const auto cert = ab::synthesize_contraction_form(sys.rep, c.tol);
  ab::io::write_file(out, ab::io::certificate_to_json(cert));
  const Verified v = reverify(sys.rep, out, c.tol);
  if (!v.passed()) {
    std::cerr << "error: re-read certificate failed verification: " << v.form.reason << v.lyapunov.reason << v.psi.reason
              << '\n';
    return kFailure;
  }
  std::string t = "certificate written to " + out + "\nW: " + std::to_string(cert.phi.W) + "\nwbar: " + fmt(cert.wbar) +
                  "\ncontraction form: passed\nlyapunov: passed\npsi: passed\n";
  emit(c, Json{{"system", sys.name}, {"certificate", out}, {"verified", true}}, t);
  return kOk;
}

int cmd_check(const std::string& plant, const std::string& ref, const Common& c) {
  const auto b = load_system(plant);
  const auto r = load_system(ref);
  if (r.rep.k != 0 || r.rep.q != b.rep.q)
    throw ab::DimensionError("reference must have q = " + std::to_string(b.rep.q) + " and k = 0");
  const auto v = ab::is_implementable(b.rep, r.rep, c.tol);
  std::string t = "implementable: " + yes(v.implementable) + "\n";
  if (!v.implementable) {
    if (!v.within_projection) t += "failed: R is not contained in pi_w(B)\n";
    if (!v.contains_slice) t += "failed: dif(B)||0 is not contained in dif(R)\n";
  }
  emit(c, ab::io::implementability_to_json(v), t);
  return kOk;
}

int cmd_synthesize(const std::string& plant, const std::string& ref, bool stabilize, const std::vector<double>& target,
                   const std::string& out, const Common& c) {
  const auto b = load_system(plant);
  if (ref.empty() == !stabilize) throw ab::InputError("synthesize: give exactly one of --reference or --stabilize");
  if (!target.empty() && !stabilize) throw ab::InputError("synthesize: --target requires --stabilize");

  ab::OffsetKernelRep ctrl, closed;
  std::optional<ab::ContractionCertificate> cert;
  bool regular = false;
  if (stabilize) {
    std::optional<Eigen::VectorXd> tgt;
    if (!target.empty()) tgt = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
    if (tgt && tgt->size() != static_cast<Eigen::Index>(b.rep.q))
      throw ab::InputError("synthesize: --target needs " + std::to_string(b.rep.q) + " values");
    const auto s = ab::synthesize_stabilizing_controller(b.rep, tgt, c.tol);
    ctrl = s.controller.rep;
    closed = s.closed_loop;
    cert = s.certificate;
    regular = s.regular;
  } else {
    const auto r = load_system(ref);
    if (r.rep.k != 0 || r.rep.q != b.rep.q)
      throw ab::DimensionError("reference must have q = " + std::to_string(b.rep.q) + " and k = 0");
    ctrl = ab::synthesize_controller(b.rep, r.rep, c.tol).rep;
    closed = ab::interconnect_project(b.rep, ctrl, c.tol);
    regular = ab::is_regular(b.rep, ctrl, c.tol).regular;
    if (closed.vars() > 0 && ab::is_autonomous(closed, c.tol) && ab::is_contractive(closed, c.tol).contractive)
      cert = ab::synthesize_contraction_form(closed, c.tol);
  }

  const std::string closed_path = sibling(out, ".closed_loop.json");
  const std::string cert_path = sibling(out, ".certificate.json");
  ab::io::write_file(out, ab::io::system_to_json(ctrl, b.name.empty() ? "controller" : b.name + " controller"));
  ab::io::write_file(closed_path, ab::io::system_to_json(closed, b.name.empty() ? "closed loop" : b.name + " closed loop"));
  if (cert) {
    ab::io::write_file(cert_path, ab::io::certificate_to_json(*cert));
    if (!reverify(closed, cert_path, c.tol).passed()) {
      std::cerr << "error: re-read certificate failed verification\n";
      return kFailure;
    }
  }
  // the written controller must reproduce the written closed loop
  const auto ctrl_back = ab::io::system_from_json(ab::io::read_file(out), out).rep;
  if (!ab::same_behavior(ab::interconnect_project(b.rep, ctrl_back, c.tol), closed, c.tol)) {
    std::cerr << "error: re-read controller does not reproduce the closed loop\n";
    return kFailure;
  }

  const bool linear = ctrl.is_linear();
  std::string t = "controller: " + out + " (" + (linear ? "linear" : "affine") + ")\nclosed loop: " + closed_path +
                  "\nregular: " + yes(regular) + "\n";
  Json j{{"controller", out}, {"linear", linear}, {"closed_loop", closed_path}, {"regular", regular}};
  if (cert) {
    t += "certificate: " + cert_path + "\nwbar: " + fmt(cert->wbar) + "\n";
    j["certificate"] = cert_path;
    j["wbar"] = ab::io::to_json(cert->wbar);
  }
  emit(c, j, t);
  return kOk;
}

int cmd_simulate(const std::string& file, const std::vector<double>& init, int steps, int runs,
                 const std::string& csv, bool long_format, const Common& c) {
  const auto sys = load_system(file);
  if (sys.rep.k != 0) throw ab::PreconditionError("simulate: system has control variables");
  if (steps < 0) throw ab::InputError("simulate: --steps must be nonnegative");
  const ab::OffsetKernelRep mb = ab::minimize(sys.rep, c.tol);
  if (!ab::is_autonomous(mb, c.tol)) throw ab::PreconditionError("simulate: behavior is not autonomous");
  const int l = ab::lag(mb, c.tol);
  const auto q = static_cast<Eigen::Index>(mb.vars());

  std::vector<ab::SimRun> results;
  if (!init.empty() || (runs <= 1 && l == 0)) {
    if (static_cast<Eigen::Index>(init.size()) != q * l)
      throw ab::InputError("simulate: --init needs q*lag = " + std::to_string(q * l) + " values, got " +
                           std::to_string(init.size()));
    ab::TrajectorySegment s;
    for (int t = 0; t < l; ++t) s.samples.push_back(Eigen::Map<const Eigen::VectorXd>(init.data() + t * q, q));
    results.push_back(ab::simulate(mb, s, steps, c.tol));
  } else {
    std::mt19937_64 rng(ab::seed_from_env());
    for (int r = 0; r < std::max(runs, 1); ++r) results.push_back(ab::simulate(mb, ab::random_init(mb, rng, c.tol), steps, c.tol));
  }
  std::vector<ab::TrajectorySegment> trajs;
  for (const auto& r : results) trajs.push_back(r.trajectories.front());
  if (!csv.empty()) {
    if (long_format || trajs.size() == 1) {
      std::ofstream os(csv);
      if (!os) throw ab::InputError(csv + ": cannot write file");
      ab::write_csv(os, trajs, long_format);
    } else {
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        const std::string path = sibling(csv, "_" + std::to_string(i) + ".csv");
        std::ofstream os(path);
        if (!os) throw ab::InputError(path + ": cannot write file");
        ab::write_csv(os, {trajs[i]}, false);
      }
    }
  }
  Json runs_json = Json::array();
  std::string t;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const Eigen::VectorXd last = trajs[i].samples.empty() ? Eigen::VectorXd(0) : trajs[i].samples.back();
    double worst = 0.0;
    for (double x : r.residuals) worst = std::max(worst, x);
    runs_json.push_back({{"converged", r.converged},
                         {"limit", r.limit ? ab::io::to_json(*r.limit) : Json()},
                         {"final", ab::io::to_json(last)},
                         {"max_residual", worst}});
    t += "run " + std::to_string(i) + ": final " + fmt(last) + ", converged " + yes(r.converged) + "\n";
  }
  emit(c, Json{{"system", sys.name}, {"lag", l}, {"steps", steps}, {"runs", runs_json}}, t);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contraction analysis and controller synthesis for affine behaviors"};
  app.require_subcommand(1);

  Common common;
  std::string file, plant, ref, out, csv;
  std::vector<double> target, init;
  bool stabilize = false, long_format = false;
  int steps = 100, runs = 1;

  auto* analyze = app.add_subcommand("analyze", "Contraction or detectability/stabilizability verdicts");
  analyze->add_option("system", file, "System JSON file")->required();
  add_common(analyze, common);

  auto* certify = app.add_subcommand("certify", "Synthesize and verify a contraction certificate");
  certify->add_option("system", file, "System JSON file")->required();
  certify->add_option("--out", out, "Certificate output file")->required();
  add_common(certify, common);

  auto* check = app.add_subcommand("check-implementable", "Test whether a reference is implementable");
  check->add_option("plant", plant, "Plant system file")->required();
  check->add_option("reference", ref, "Reference system file")->required();
  add_common(check, common);

  auto* synth = app.add_subcommand("synthesize", "Controller for a reference, or a regular stabilizing controller");
  synth->add_option("plant", plant, "Plant system file")->required();
  auto* ref_opt = synth->add_option("--reference", ref, "Reference system file");
  auto* stab_opt = synth->add_flag("--stabilize", stabilize, "Regular stabilizing synthesis");
  synth->add_option("--target", target, "Equilibrium for the to-be-controlled variables")->needs(stab_opt);
  ref_opt->excludes(stab_opt);
  synth->add_option("--out", out, "Controller output file")->required();
  add_common(synth, common);

  auto* sim = app.add_subcommand("simulate", "Forward recursion with CSV output");
  sim->add_option("system", file, "System JSON file")->required();
  sim->add_option("--init", init, "Initial window, q*lag values, time-major")->delimiter(',');
  sim->add_option("--steps", steps, "Number of recursion steps");
  sim->add_option("--runs", runs, "Random initial windows (seed from AB_SEED)");
  sim->add_option("--csv", csv, "CSV output file");
  sim->add_flag("--long", long_format, "Single long-format CSV with a traj_id column");
  add_common(sim, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*analyze) return cmd_analyze(file, common);
    if (*certify) return cmd_certify(file, out, common);
    if (*check) return cmd_check(plant, ref, common);
    if (*synth) return cmd_synthesize(plant, ref, stabilize, target, out, common);
    if (*sim) return cmd_simulate(file, init, steps, runs, csv, long_format, common);
  } catch (const ab::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ab::DimensionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ab::EmptyBehaviorError& e) {
    std::cerr << "empty behavior: " << e.what() << '\n';
    return kEmpty;
  } catch (const ab::NotContractiveError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kPrecondition;
  } catch (const ab::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
