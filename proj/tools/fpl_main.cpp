// Command-line front end: parameter entry, experiment orchestration,
// reproducible seeded output.  All randomness flows from --seed; there is no
// wall-clock entropy anywhere, so identical configurations reproduce
// identical output bytes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpl/dirichlet.hpp"
#include "fpl/errors.hpp"
#include "fpl/fields.hpp"
#include "fpl/io.hpp"
#include "fpl/liouville.hpp"
#include "fpl/params.hpp"
#include "fpl/pvop.hpp"
#include "fpl/quad.hpp"
#include "fpl/weakform.hpp"

namespace {

struct CommonOpts {
  int n = 1;
  double s = 0.5;
  double p = 2.0;
  double q = -1.0;      // negative = absent
  double sigma = -1.0;  // negative = absent
  std::uint64_t seed = 12345;
  long mc_budget = 1000000;
  double rel_tol = 1e-3;
  int threads = 1;
  std::string out;
  std::string format = "json";
  std::string config;

  CLI::Option* opt_n = nullptr;
  CLI::Option* opt_s = nullptr;
  CLI::Option* opt_p = nullptr;
  CLI::Option* opt_q = nullptr;
  CLI::Option* opt_sigma = nullptr;
  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_budget = nullptr;
  CLI::Option* opt_rel = nullptr;
  CLI::Option* opt_threads = nullptr;

  void attach(CLI::App* cmd) {
    opt_n = cmd->add_option("--n", n, "space dimension");
    opt_s = cmd->add_option("--s", s, "fractional order, in (0,1)");
    opt_p = cmd->add_option("--p", p, "nonlinearity exponent, > 1");
    opt_q = cmd->add_option("--q", q, "right-hand-side exponent");
    opt_sigma = cmd->add_option("--sigma", sigma, "perturbation exponent");
    opt_seed = cmd->add_option("--seed", seed, "RNG seed");
    opt_budget =
        cmd->add_option("--mc-budget", mc_budget, "Monte Carlo sample budget");
    opt_rel = cmd->add_option("--rel-tol", rel_tol, "relative tolerance");
    opt_threads = cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--out", out, "output file (default stdout)");
    cmd->add_option("--format", format, "output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--config", config,
                    "JSON config file mirroring the flags; flags win");
  }

  // precedence: flags > config file > defaults
  void merge_config() {
    if (config.empty()) return;
    std::ifstream is(config);
    if (!is) throw fpl::DomainError("cannot open config file: " + config);
    fpl::Json cfg = fpl::Json::parse(is);
    auto mi = [&](CLI::Option* o, const char* key, auto& tgt) {
      if (o && o->count() == 0 && cfg.contains(key))
        tgt = cfg[key].get<std::decay_t<decltype(tgt)>>();
    };
    mi(opt_n, "n", n);
    mi(opt_s, "s", s);
    mi(opt_p, "p", p);
    mi(opt_q, "q", q);
    mi(opt_sigma, "sigma", sigma);
    mi(opt_seed, "seed", seed);
    mi(opt_budget, "mc-budget", mc_budget);
    mi(opt_rel, "rel-tol", rel_tol);
    mi(opt_threads, "threads", threads);
  }

  fpl::Params params() const {
    return fpl::Params(n, s, p,
                       q > 0 ? std::optional<double>(q) : std::nullopt,
                       sigma > 0 ? std::optional<double>(sigma) : std::nullopt);
  }
  fpl::QuadSpec spec() const {
    fpl::QuadSpec sp;
    sp.seed = seed;
    sp.mc_budget = mc_budget;
    sp.rel_tol = rel_tol;
    sp.threads = threads;
    return sp;
  }

  void emit(const fpl::Json& record) const {
    std::string text;
    if (format == "csv")
      text = fpl::record_csv_header() + "\n" + fpl::record_to_csv(record) + "\n";
    else
      text = record.dump(2) + "\n";
    if (out.empty())
      std::cout << text;
    else
      fpl::write_text(out, text);
  }
};

int run(int argc, char** argv) {
  CLI::App app{
      "numerical laboratory for the fractional p-Laplace operator\n"
      "record CSV columns: op,n,s,p,q,sigma,seed,value,error,evals"};
  app.require_subcommand(1);

  CommonOpts classify_o, constant_o, apply_o, bracket_o, super_o, dir_o,
      scan_o;

  auto* cmd_classify =
      app.add_subcommand("classify", "regime against the critical exponent");
  classify_o.attach(cmd_classify);

  auto* cmd_constant =
      app.add_subcommand("constant", "fundamental-solution constant estimate");
  constant_o.attach(cmd_constant);

  auto* cmd_apply = app.add_subcommand(
      "apply", "pointwise operator value on a named profile");
  apply_o.attach(cmd_apply);
  std::string apply_profile = "perturbed";
  double apply_r = 1.0;
  std::string apply_x;
  double apply_extra = 1.0;
  cmd_apply->add_option("--profile", apply_profile,
                        "profile kind: fundamental|log|perturbed|cutoff|bump|"
                        "power|constant");
  cmd_apply->add_option("--extra", apply_extra,
                        "profile parameter (radius/width/exponent)");
  cmd_apply->add_option("--r", apply_r, "radius for the radial fast path");
  cmd_apply->add_option("--x", apply_x,
                        "comma-separated point for the full evaluator");

  auto* cmd_bracket = app.add_subcommand(
      "bracket", "weak pairing of the fundamental solution with a bump");
  bracket_o.attach(cmd_bracket);
  double bump_center = 0.0, bump_width = 0.5;
  bool normalize = false;
  cmd_bracket->add_option("--bump-center", bump_center, "bump center (axis 1)");
  cmd_bracket->add_option("--bump-width", bump_width, "bump plateau radius");
  cmd_bracket->add_flag("--normalize", normalize,
                        "normalize the fundamental solution by the estimated "
                        "constant first");

  auto* cmd_super = app.add_subcommand(
      "supersolution", "construct and verify the supercritical supersolution");
  super_o.attach(cmd_super);

  auto* cmd_dir =
      app.add_subcommand("dirichlet", "discrete nonlocal Dirichlet solve");
  dir_o.attach(cmd_dir);
  int dir_dim = 1, dir_nodes = 32;
  double dir_L = 1.0, dir_gconst = 0.0;
  std::string dir_gfile, dir_gkind = "const";
  cmd_dir->add_option("--dim", dir_dim, "grid dimension, 1 or 2");
  cmd_dir->add_option("--N", dir_nodes, "nodes per side");
  cmd_dir->add_option("--L", dir_L, "grid extent, nodes fill [-L,L]^dim");
  cmd_dir->add_option("--g-kind", dir_gkind, "collar data: const|random|file");
  cmd_dir->add_option("--g-const", dir_gconst, "constant collar value");
  cmd_dir->add_option("--g-file", dir_gfile, "CSV with one value per node");

  auto* cmd_scan = app.add_subcommand(
      "scan-q", "sweep q across the critical exponent");
  scan_o.attach(cmd_scan);
  double q_from = 1.0, q_to = 4.0;
  int q_steps = 7;
  cmd_scan->add_option("--q-from", q_from, "sweep start");
  cmd_scan->add_option("--q-to", q_to, "sweep end");
  cmd_scan->add_option("--steps", q_steps, "number of samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_classify->parsed()) {
    classify_o.merge_config();
    if (classify_o.q <= 0)
      throw fpl::MissingParameter("classify: --q is required");
    fpl::Params prm = classify_o.params();
    fpl::Regime reg = fpl::classify(prm);
    fpl::Json j = fpl::make_record("classify", prm, fpl::Estimate{},
                                   classify_o.spec());
    j.erase("value");
    j.erase("error");
    j.erase("evals");
    j.erase("method");
    j["regime"] = fpl::to_string(reg.kind);
    if (reg.q_star) j["q_star"] = *reg.q_star;
    classify_o.emit(j);
    return 0;
  }

  if (cmd_constant->parsed()) {
    constant_o.merge_config();
    fpl::Params prm = constant_o.params();
    fpl::QuadSpec spec = constant_o.spec();
    fpl::Estimate c = fpl::fundamental_constant(prm, spec);
    constant_o.emit(fpl::make_record("constant", prm, c, spec));
    return 0;
  }

  if (cmd_apply->parsed()) {
    apply_o.merge_config();
    fpl::Params prm = apply_o.params();
    fpl::QuadSpec spec = apply_o.spec();
    fpl::RadialProfile prof;
    if (apply_profile == "fundamental")
      prof = fpl::fundamental_power(prm);
    else if (apply_profile == "log")
      prof = fpl::fundamental_log(prm);
    else if (apply_profile == "perturbed")
      prof = fpl::perturbed_power(prm, fpl::resolve_sigma(prm));
    else if (apply_profile == "cutoff")
      prof = fpl::smooth_cutoff(apply_extra);
    else if (apply_profile == "bump")
      prof = fpl::gaussian_bump(apply_extra);
    else if (apply_profile == "power")
      prof = fpl::homogeneous_power(apply_extra);
    else if (apply_profile == "constant")
      prof = fpl::constant_profile(apply_extra);
    else
      throw fpl::DomainError("apply: unknown profile " + apply_profile);
    fpl::Estimate est;
    fpl::Json extras;
    if (!apply_x.empty()) {
      fpl::Vec x(prm.n);
      std::stringstream ss(apply_x);
      std::string tok;
      int i = 0;
      while (std::getline(ss, tok, ',') && i < prm.n) x[i++] = std::stod(tok);
      est = fpl::pv_apply({fpl::make_field(prof, prm.n), x, prm, spec});
      extras["x"] = apply_x;
    } else {
      est = fpl::pv_apply_radial(prof, apply_r, prm, spec);
      extras["r"] = apply_r;
    }
    fpl::Json j = fpl::make_record("apply", prm, est, spec);
    j["profile"] = apply_profile;
    j.update(extras);
    apply_o.emit(j);
    return 0;
  }

  if (cmd_bracket->parsed()) {
    bracket_o.merge_config();
    fpl::Params prm = bracket_o.params();
    fpl::QuadSpec spec = bracket_o.spec();
    fpl::ScalarField u = fpl::make_field(fpl::fundamental_power(prm), prm.n);
    double cstar = 0.0, cstar_err = 0.0;
    if (normalize) {
      fpl::Estimate c = fpl::fundamental_constant(prm, spec);
      cstar = c.value;
      cstar_err = c.error;
      u = fpl::normalize_fundamental(c.value, prm, c.error);
    }
    fpl::Vec center(prm.n);
    center[0] = bump_center;
    fpl::ScalarField phi = fpl::translate_field(
        fpl::cutoff_field(bump_width, prm.n), center);
    fpl::Estimate b = fpl::bracket({u, phi, prm, spec.with_seed(spec.seed + 1)});
    fpl::Json j = fpl::make_record("bracket", prm, b, spec);
    j["bump_center"] = bump_center;
    j["bump_width"] = bump_width;
    if (normalize) {
      j["c_star"] = cstar;
      j["c_star_error"] = cstar_err;
      j["phi_at_origin"] = phi.evaluate(fpl::Vec(prm.n));
    }
    bracket_o.emit(j);
    return 0;
  }

  if (cmd_super->parsed()) {
    super_o.merge_config();
    fpl::Params prm = super_o.params();
    fpl::QuadSpec spec = super_o.spec();
    fpl::SupersolutionReport rep;
    try {
      rep = fpl::build_supersolution(prm, spec);
    } catch (const fpl::VerificationFailure& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
    if (super_o.format == "csv") {
      std::string text = fpl::ratio_samples_csv(rep);
      if (super_o.out.empty())
        std::cout << text;
      else
        fpl::write_text(super_o.out, text);
    } else {
      fpl::Json j = fpl::supersolution_report_to_json(rep, prm, spec);
      if (super_o.out.empty())
        std::cout << j.dump(2) << "\n";
      else
        fpl::write_text(super_o.out, j.dump(2) + "\n");
    }
    return 0;
  }

  if (cmd_dir->parsed()) {
    dir_o.merge_config();
    fpl::Params prm = dir_o.params();
    if (prm.n != dir_dim)
      prm = fpl::Params(dir_dim, dir_o.s, dir_o.p);
    fpl::Grid grid = fpl::Grid::make(dir_dim, dir_nodes, dir_L);
    fpl::DiscreteField g = fpl::DiscreteField::constant(grid, dir_gconst);
    if (dir_gkind == "random") {
      fpl::CounterRng rng(dir_o.seed, 0, 0);
      for (int i : grid.collar_idx) g.values[i] = rng.uniform();
    } else if (dir_gkind == "file" || !dir_gfile.empty()) {
      std::ifstream is(dir_gfile);
      if (!is) throw fpl::DomainError("cannot open " + dir_gfile);
      for (std::size_t k = 0; k < grid.size() && is; ++k) is >> g.values[k];
    }
    fpl::SolveOptions opts;
    fpl::SolveResult res = fpl::solve_dirichlet(g, grid, prm, opts);
    std::string csv = fpl::grid_to_csv(grid, res.u);
    fpl::Json hdr = fpl::grid_header_json(grid, prm);
    hdr["energy"] = fpl::discrete_energy(res.u, grid, prm);
    hdr["iters"] = res.iters;
    hdr["converged"] = res.converged;
    hdr["seed"] = dir_o.seed;
    hdr["version"] = fpl::kVersionTag;
    if (dir_o.out.empty()) {
      std::cout << hdr.dump(2) << "\n" << csv;
    } else {
      fpl::write_text(dir_o.out, csv);
      std::cout << hdr.dump(2) << "\n";
    }
    return res.converged ? 0 : 1;
  }

  if (cmd_scan->parsed()) {
    scan_o.merge_config();
    fpl::Json rows = fpl::Json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "q,regime,q_star,sigma_lo,sigma_hi,supersolution_feasible\n";
    for (int i = 0; i < q_steps; ++i) {
      double q = q_from + (q_to - q_from) * (q_steps == 1 ? 0.0 : double(i) / (q_steps - 1));
      fpl::Params prm(scan_o.n, scan_o.s, scan_o.p, q);
      fpl::Regime reg = fpl::classify(prm);
      fpl::Json row;
      row["q"] = q;
      row["regime"] = fpl::to_string(reg.kind);
      bool feasible = reg.kind == fpl::RegimeKind::SupercriticalQ;
      double lo = 0, hi = 0;
      if (feasible) std::tie(lo, hi) = fpl::feasible_sigma_interval(prm);
      if (reg.q_star) row["q_star"] = *reg.q_star;
      row["sigma_interval"] = {lo, hi};
      row["supersolution_feasible"] = feasible;
      rows.push_back(row);
      csv << q << "," << fpl::to_string(reg.kind) << ","
          << (reg.q_star ? *reg.q_star : 0.0) << "," << lo << "," << hi << ","
          << (feasible ? 1 : 0) << "\n";
    }
    fpl::Json j;
    j["op"] = "scan-q";
    j["rows"] = rows;
    j["seed"] = scan_o.seed;
    j["version"] = fpl::kVersionTag;
    std::string text = scan_o.format == "csv" ? csv.str() : j.dump(2) + "\n";
    if (scan_o.out.empty())
      std::cout << text;
    else
      fpl::write_text(scan_o.out, text);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fpl::MissingParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fpl::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fpl::RegimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fpl::VerificationFailure& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    return 1;
  } catch (const fpl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
