#include "hkq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "hkq/deform.hpp"

namespace hkq {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_digest(const json& config) {
  const std::string bytes = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

namespace {

double jget(const json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}
long jgetl(const json& j, const char* key, long dflt) {
  return j.contains(key) ? j.at(key).get<long>() : dflt;
}
std::string jgets(const json& j, const char* key, const std::string& dflt) {
  return j.contains(key) ? j.at(key).get<std::string>() : dflt;
}

void parallel_for(long n, int jobs, const std::function<void(long)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

Rng sample_rng(std::uint64_t seed, long sample) {
  return Rng(seed, static_cast<std::uint64_t>(sample) << 20);
}

AlgebraElement random_skew(const GroupSpec& g, Rng& rng, bool traceless,
                           double target_norm) {
  AlgebraElement u = zero_algebra(g);
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    require(fa.kind == FactorKind::Unitary, "random_skew: unitary factors only");
    Mat m = rng.gaussian_matrix(fa.n, fa.n);
    Mat s = 0.5 * (m - m.adjoint());
    if (traceless) s -= (s.trace() / static_cast<double>(fa.n)) * Mat::Identity(fa.n, fa.n);
    u.blocks[static_cast<size_t>(f)] = s;
  }
  const double n = norm(u);
  if (n > 0) u = scale(u, target_norm / n);
  return u;
}

// central element (iI, iI, ...) across all unitary factors
AlgebraElement central_identity(const GroupSpec& g) {
  AlgebraElement u = zero_algebra(g);
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    if (fa.kind == FactorKind::Unitary)
      u.blocks[static_cast<size_t>(f)] = kI * Mat::Identity(fa.n, fa.n);
    else
      u.blocks[static_cast<size_t>(f)].setConstant(kI);
  }
  return u;
}

const char* class_name(StabilityClass c) {
  switch (c) {
    case StabilityClass::Stable: return "stable";
    case StabilityClass::Polystable: return "polystable";
    case StabilityClass::Unstable: return "unstable";
    default: return "inconclusive";
  }
}

// --- nahm-roundtrip -------------------------------------------------------------

void run_nahm_roundtrip(const json& cfg, std::uint64_t seed, int jobs,
                        std::vector<Record>& recs) {
  const long samples = jgetl(cfg, "samples", 20);
  const int grid = static_cast<int>(jgetl(cfg, "grid", 400));
  const std::string check = jgets(cfg, "check", "nu-consistency");
  const double tol = jget(cfg, "tolerance", 1e-6);
  const double amp = jget(cfg, "amplitude", 0.2);
  const int energy_grid = static_cast<int>(jgetl(cfg, "energy_grid", 64));
  const double energy_tol = jget(cfg, "energy_tolerance", 0.01);

  std::vector<std::vector<Record>> slots(static_cast<size_t>(samples));
  parallel_for(samples, jobs, [&](long i) {
    Rng rng = sample_rng(seed, i);
    GroupSpec g = GroupSpec::unitary(2);
    const bool su = (i % 2 == 0);
    std::array<AlgebraElement, 3> t0 = {random_skew(g, rng, su, amp),
                                        random_skew(g, rng, su, amp),
                                        random_skew(g, rng, su, amp)};
    AlgebraElement z = zero_algebra(g);
    NahmPath path = nahm_integrate(t0, [&](double) { return z; }, grid);
    auto& out = slots[static_cast<size_t>(i)];

    if (check == "nu-consistency") {
      CotangentPoint cot = holomorphic_coords(path);
      MomentValue nc = nu_complex(cot);
      MomentValue nm = nu_moment(path);
      const double resid = (nc.c - nm.c).norm();
      out.push_back({i, "nu-consistency", resid, tol, resid < tol, su ? "su2" : "u2"});
    } else if (check == "gauge") {
      AlgebraElement x1 = random_skew(g, rng, false, 0.5);
      AlgebraElement x2 = random_skew(g, rng, false, 0.5);
      const double pi = 3.14159265358979323846;
      GaugePath gp = gauge_from_generators(
          g, grid, x1, [=](double s) { return std::sin(pi * s); },
          [=](double s) { return pi * std::cos(pi * s); }, x2,
          [=](double s) { return std::sin(2 * pi * s); },
          [=](double s) { return 2 * pi * std::cos(2 * pi * s); });
      NahmPath gauged = gauge_act(gp, path);
      MomentValue n0 = nu_moment(path);
      MomentValue n1 = nu_moment(gauged, 10.0);  // residual checked separately
      const double resid = (n0.re - n1.re).norm() + (n0.c - n1.c).norm();
      out.push_back({i, "gauge-nu-invariance", resid, tol, resid < tol, ""});
      const double r1 = nahm_residual(gauged);
      out.push_back({i, "gauge-residual", r1, 1e-4, r1 < 1e-4, ""});
    } else if (check == "energy") {
      const double e1 = energy(path);
      CotangentPoint cot = holomorphic_coords(path);
      PathEnergyOptions opt;
      opt.grid = energy_grid;
      const double e2 = energy_potential(cot, opt);
      const double rel = std::abs(e2 - e1) / std::max(std::abs(e1), 1e-12);
      out.push_back({i, "energy-calibration", rel, energy_tol, rel < energy_tol, ""});
    } else {
      throw Error("nahm-roundtrip: unknown check '" + check + "'");
    }
  });
  for (auto& s : slots)
    for (auto& r : s) recs.push_back(std::move(r));
}

// --- kn-classify -----------------------------------------------------------------

void run_kn_classify(const json& cfg, std::uint64_t seed, int jobs,
                     std::vector<Record>& recs) {
  const long samples = jgetl(cfg, "samples", 10);
  const int k = static_cast<int>(jgetl(cfg, "k", 2));
  const std::string mode = jgets(cfg, "mode", "converge");
  const double tol = jget(cfg, "tolerance", 1e-8);
  std::vector<double> ts = cfg.contains("zeta_t")
                               ? cfg.at("zeta_t").get<std::vector<double>>()
                               : std::vector<double>{0.5, 1.0};
  ActionSpec spec = hilbert_preset(k);
  const VecR central = project(spec.hrho, central_identity(spec.H));

  if (mode == "converge") {
    const long total = samples * static_cast<long>(ts.size());
    std::vector<std::vector<Record>> slots(static_cast<size_t>(total));
    parallel_for(total, jobs, [&](long idx) {
      const double t = ts[static_cast<size_t>(idx / samples)];
      Rng rng = sample_rng(seed, idx);
      Point x = random_point(spec, rng);
      KNProblem pr = make_kn_problem(spec, spec.hrho, x, VecR(t * central));
      KNOptions opt;
      opt.tol = tol;
      KNResult res = kn_minimize(pr, opt);
      auto& out = slots[static_cast<size_t>(idx)];
      const bool crit = res.status == KNResult::Status::Critical;
      out.push_back({idx, "moment-residual", res.grad_norm, tol, crit && res.grad_norm < tol,
                     "t=" + format_double(t)});
      const double conv = convexity_probe(pr, rng, 10);
      out.push_back({idx, "convexity-min-2nd-diff", conv, -1e-8, conv >= -1e-8, ""});
    });
    for (auto& s : slots)
      for (auto& r : s) recs.push_back(std::move(r));
  } else if (mode == "scaling") {
    std::vector<double> scales = cfg.contains("scales")
                                     ? cfg.at("scales").get<std::vector<double>>()
                                     : std::vector<double>{0.5, 2.0, 10.0};
    std::vector<std::vector<Record>> slots(static_cast<size_t>(samples));
    parallel_for(samples, jobs, [&](long i) {
      Rng rng = sample_rng(seed, i);
      auto& out = slots[static_cast<size_t>(i)];
      const bool unstable_probe = (i % 4 == 3);
      const double t = ts[static_cast<size_t>(i) % ts.size()];
      Point x = unstable_probe ? zero_point(spec) : random_point(spec, rng);
      KNProblem pr = make_kn_problem(spec, spec.hrho, x, VecR(t * central));
      StabilityResult base = stability_classify(pr);
      if (unstable_probe) {
        const bool ok = base.cls == StabilityClass::Unstable && base.kn.slope <= tol &&
                        std::abs(base.kn.xi.norm() - 1.0) < 1e-8;
        out.push_back({i, "unstable-certificate", base.kn.slope, tol, ok, class_name(base.cls)});
      } else {
        out.push_back({i, "base-class", static_cast<double>(base.stabilizer_dim), 0.5,
                       base.cls == StabilityClass::Stable, class_name(base.cls)});
        for (double s : scales) {
          const bool same = scale_check(pr, base, s);
          out.push_back({i, "scale-" + format_double(s), same ? 0.0 : 1.0, 0.5, same,
                         class_name(base.cls)});
        }
      }
    });
    for (auto& s : slots)
      for (auto& r : s) recs.push_back(std::move(r));
  } else {
    throw Error("kn-classify: unknown mode '" + mode + "'");
  }
}

// --- deform-correspond --------------------------------------------------------------

// x on the complex level set mu_C^{-1}(0) by acting with H_rho^C on seed
// points with commuting data.
Point level_sample(const ActionSpec& spec, Rng& rng, int family) {
  const int k = spec.hilbert_k;
  Point x = zero_point(spec);
  VecC da(k), db(k);
  for (int j = 0; j < k; ++j) {
    da(j) = rng.cnormal();
    db(j) = rng.cnormal();
  }
  x.z[0] = da.asDiagonal();
  x.w[0] = db.asDiagonal();
  if (family == 0) {
    x.z[1] = rng.gaussian_matrix(k, 1);  // p free, q = 0
  } else if (family == 1) {
    x.w[0].setZero();                    // B = 0
    x.w[1] = rng.gaussian_matrix(1, k);  // q free, p = 0
  }
  // family 2: p = q = 0 diagonal (kept as is)
  const int d = spec.hrho.dim();
  VecC c(d);
  for (int j = 0; j < d; ++j) c(j) = 0.4 * rng.cnormal();
  GroupElement g = exp_of(embed_c(spec.hrho, c));
  return act(spec, g, x);
}

void run_deform_correspond(const json& cfg, std::uint64_t seed, int jobs,
                           std::vector<Record>& recs) {
  const long samples = jgetl(cfg, "samples", 20);
  std::vector<long> ks = cfg.contains("ks") ? cfg.at("ks").get<std::vector<long>>()
                                            : std::vector<long>{1, 2};
  const double sigma_tol = jget(cfg, "sigma_tolerance", 1e-10);
  const double zeta_t = jget(cfg, "zeta_t", 0.7);

  std::vector<std::vector<Record>> slots(static_cast<size_t>(samples));
  parallel_for(samples, jobs, [&](long i) {
    Rng rng = sample_rng(seed, i);
    const int k = static_cast<int>(ks[static_cast<size_t>(i) % ks.size()]);
    ActionSpec spec = hilbert_preset(k);
    const int family = static_cast<int>(i / ks.size()) % 4;
    auto& out = slots[static_cast<size_t>(i)];

    Point x = family == 3 ? zero_point(spec) : level_sample(spec, rng, family);
    const double t = family == 2 ? 0.0 : zeta_t;
    MomentValue zeta = zero_moment(spec.H.dim(), "H");
    zeta.re = t * coords(central_identity(spec.H));

    DeformPair dp = psi_hat(spec, x, zeta);
    MomentValue sig = sigma_moment(spec, x, nu_complex(dp.image));
    const double sres = (sig.c - zeta.c).norm();
    out.push_back({i, "sigmaC-residual", sres, sigma_tol, sres < sigma_tol,
                   "k=" + std::to_string(k)});

    // stability transfer
    KNProblem pr_rho = make_kn_problem(spec, spec.hrho, x,
                                       VecR(spec.hrho.basis.transpose() * zeta.re));
    KNOptions orho;
    orho.tol = 1e-8;
    StabilityResult cls_rho = stability_classify(pr_rho, orho);

    KNProblem pr_h = make_kn_problem(spec, SubAlgebra::full(spec.H), x, zeta.re,
                                     KNPotential::FlatPlusE, dp.image);
    pr_h.energy_opt.grid = 16;
    KNOptions oh;
    oh.tol = k == 1 ? 1e-8 : 1e-5;
    StabilityResult cls_h = stability_classify(pr_h, oh);

    const bool agree = cls_rho.cls == cls_h.cls && cls_rho.cls != StabilityClass::Inconclusive;
    out.push_back({i, "stability-transfer", agree ? 0.0 : 1.0, 0.5, agree,
                   std::string(class_name(cls_rho.cls)) + "/" + class_name(cls_h.cls)});

    // stabilizer dimension transfer, Stab(x)^C vs Stab(psi_hat(x))^C
    StabilizerData sd = stabilizer_data(spec, spec.hrho, x);
    const int dim_x = static_cast<int>(sd.stab_c.cols());
    const int dim_psi = psihat_stab_dim_c(spec, x, dp.image.eta);
    out.push_back({i, "stabilizer-dim-transfer", static_cast<double>(dim_psi - dim_x), 0.5,
                   dim_x == dim_psi,
                   std::to_string(dim_x) + "/" + std::to_string(dim_psi)});
  });
  for (auto& s : slots)
    for (auto& r : s) recs.push_back(std::move(r));
}

// --- taubnut-metric --------------------------------------------------------------------

void run_taubnut_metric(const json& cfg, std::uint64_t seed, int jobs,
                        std::vector<Record>& recs) {
  const long n_radii = jgetl(cfg, "radii", 10);
  const double r_min = jget(cfg, "r_min", 0.2);
  const double r_max = jget(cfg, "r_max", 5.0);
  const double fit_tol = jget(cfg, "fit_tolerance", 1e-4);
  const double s1_tol = jget(cfg, "s1_tolerance", 1e-8);
  const double flat_tol = jget(cfg, "flat_tolerance", 1e-10);
  const bool forms = cfg.contains("check_forms") && cfg.at("check_forms").get<bool>();
  const long n_pairs = jgetl(cfg, "form_pairs", 5);

  ActionSpec spec = hilbert_preset(1);

  if (!forms) {
    std::vector<GHSample> gh(static_cast<size_t>(n_radii));
    std::vector<std::vector<Record>> slots(static_cast<size_t>(n_radii));
    parallel_for(n_radii, jobs, [&](long i) {
      Rng rng = sample_rng(seed, i);
      const double r = r_min * std::pow(r_max / r_min,
                                        static_cast<double>(i) / (n_radii - 1));
      const double psi = 0.2 + 1.1 * rng.uniform();
      const double pa = 6.283185307179586 * rng.uniform();
      const double pb = 6.283185307179586 * rng.uniform();
      const cxd a = std::sqrt(r) * std::cos(psi) * std::exp(kI * pa);
      const cxd b = std::sqrt(r) * std::sin(psi) * std::exp(kI * pb);
      gh[static_cast<size_t>(i)] = taubnut_sample(spec, a, b);
      auto& out = slots[static_cast<size_t>(i)];
      // S^1 invariance: rotated phase and shifted fiber angle
      GHSample rot = taubnut_sample(spec, a * std::exp(kI * 0.7), b * std::exp(-kI * 0.7), 0.45);
      const double inv = std::abs(rot.V - gh[static_cast<size_t>(i)].V) +
                         std::abs(rot.r - gh[static_cast<size_t>(i)].r);
      out.push_back({i, "s1-invariance", inv, s1_tol, inv < s1_tol, ""});
      // conformal-flat base shape
      const double sh = gh[static_cast<size_t>(i)].shape_resid;
      out.push_back({i, "gh-base-shape", sh, fit_tol, sh < fit_tol, ""});
      // flat contrast at the matched point: ambient-restricted metric is 2 I
      ChartPoint flat;
      flat.x = zero_point(spec);
      flat.x.z[0](0, 0) = a;
      flat.x.w[0](0, 0) = b;
      flat.active_pairs = {0};
      QuotientChart qc = quotient_metric_at(spec, spec.hrho, flat);
      const double fres = (qc.gram - 2.0 * MatR::Identity(qc.gram.rows(), qc.gram.cols())).norm();
      out.push_back({i, "flat-contrast", fres, flat_tol, fres < flat_tol, ""});
    });
    GHFit fit = fit_gibbons_hawking(gh[0], gh[1]);
    for (long i = 0; i < n_radii; ++i) {
      auto& out = slots[static_cast<size_t>(i)];
      if (i >= 2) {
        const double rel = std::abs(gh[static_cast<size_t>(i)].V - fit.eval(gh[static_cast<size_t>(i)].r)) /
                           gh[static_cast<size_t>(i)].V;
        out.push_back({i, "gh-fit-relative-error", rel, fit_tol, rel < fit_tol,
                       "lambda=" + format_double(fit.lambda) + ",m=" + format_double(fit.m)});
      }
      for (auto& r : out) recs.push_back(std::move(r));
    }
    return;
  }

  // holomorphic-symplectic transfer at matched pairs
  std::vector<std::vector<Record>> slots(static_cast<size_t>(n_pairs));
  parallel_for(n_pairs, jobs, [&](long i) {
    Rng rng = sample_rng(seed, 4096 + i);
    const cxd a = rng.cnormal();
    const cxd b = 0.5 * rng.cnormal();
    const double h = 1e-5;
    ChartPoint base = psi_match_k1(spec, a, b);

    // numerical differential of the matched-point map over (Re a, Im a, Re b, Im b)
    auto eval = [&](int dir, double eps) {
      cxd aa = a, bb = b;
      if (dir == 0) aa += eps;
      if (dir == 1) aa += kI * eps;
      if (dir == 2) bb += eps;
      if (dir == 3) bb += kI * eps;
      return psi_match_k1(spec, aa, bb);
    };
    std::vector<ChartTangent> push(4);
    for (int d = 0; d < 4; ++d) {
      ChartPoint pp = eval(d, h), pm = eval(d, -h);
      ChartTangent t;
      t.X = scale_point(add(pp.x, scale_point(pm.x, -1.0)), 1.0 / (2 * h));
      t.dalpha = (pp.alpha - pm.alpha) / (2 * h);
      t.dy1 = (pp.y1 - pm.y1) / (2 * h);
      t.dy2 = (pp.y2 - pm.y2) / (2 * h);
      t.dy3 = (pp.y3 - pm.y3) / (2 * h);
      push[static_cast<size_t>(d)] = t;
    }
    // source tangents: d/d(Re a) etc. on the (a, b) plane
    auto src_tangent = [&](int d) {
      Point X = zero_point(spec);
      if (d == 0) X.z[0](0, 0) = 1;
      if (d == 1) X.z[0](0, 0) = kI;
      if (d == 2) X.w[0](0, 0) = 1;
      if (d == 3) X.w[0](0, 0) = kI;
      return X;
    };
    double worst = 0;
    for (int u = 0; u < 4; ++u)
      for (int v = u + 1; v < 4; ++v) {
        const cxd src = symplectic_c(src_tangent(u), src_tangent(v));
        const cxd dst = chart_form_c(base, push[static_cast<size_t>(u)], push[static_cast<size_t>(v)]);
        worst = std::max(worst, std::abs(src - dst));
      }
    slots[static_cast<size_t>(i)].push_back(
        {i, "form-transfer", worst, jget(cfg, "form_tolerance", 1e-6),
         worst < jget(cfg, "form_tolerance", 1e-6), ""});
  });
  for (auto& s : slots)
    for (auto& r : s) recs.push_back(std::move(r));
}

// --- toric-demo --------------------------------------------------------------------------

void run_toric_demo(const json& cfg, std::uint64_t seed, int,
                    std::vector<Record>& recs) {
  Eigen::MatrixXi kz(1, 2);
  kz << 1, 1;
  if (cfg.contains("kz")) {
    auto rows = cfg.at("kz").get<std::vector<std::vector<int>>>();
    kz.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < rows[i].size(); ++j)
        kz(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  ActionSpec spec = toric_preset(kz);
  Rng rng(seed);

  const double hom = rho_homomorphism_defect(spec);
  recs.push_back({0, "rho-homomorphism", hom, 1e-12, hom < 1e-12, ""});
  const int hdim = spec.hrho.dim();
  recs.push_back({0, "hrho-dim", static_cast<double>(hdim), 0.5,
                  hdim == expected_hrho_dim(spec), ""});
  const int rank = rho_bar_rank(spec);
  recs.push_back({0, "rho-bar-rank", static_cast<double>(rank), 0.5,
                  rank == spec.G.dim(), ""});

  Point x = random_point(spec, rng);
  // finite-difference moment identity
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    AlgebraElement xi = from_coords(spec.H, VecR::NullaryExpr(spec.H.dim(), [&](Eigen::Index) {
                          return rng.normal();
                        }));
    Point dx = random_point(spec, rng, 0.3);
    const double h = 1e-5;
    MomentValue mp = moment_hat(spec, add(x, scale_point(dx, h)));
    MomentValue mm = moment_hat(spec, add(x, scale_point(dx, -h)));
    const double d1 = (pair_re(mp, coords(xi)) - pair_re(mm, coords(xi))) / (2 * h);
    const double w1 = symplectic_form(1, inf_act(spec, xi, x), dx);
    worst = std::max(worst, std::abs(d1 - w1) / std::max(1.0, std::abs(w1)));
  }
  recs.push_back({0, "moment-fd-identity", worst, 1e-6, worst < 1e-6, ""});

  // abelian equivariance: moment map constant along orbits
  GroupElement h = identity_element(spec.H);
  for (int a = 0; a < spec.H.dim(); ++a) h.blocks[0](a, 0) = rng.normal();
  MomentValue m0 = moment_hat(spec, x);
  MomentValue m1 = moment_hat(spec, act(spec, h, x));
  const double eq = (m0.re - m1.re).norm() + (m0.c - m1.c).norm();
  recs.push_back({0, "orbit-invariance", eq, 1e-10, eq < 1e-10, ""});

  // torus model chart round trip through the Nahm integrator machinery
  const int dg = spec.G.dim();
  VecR alpha(dg), y1(dg), y2(dg), y3(dg);
  for (int j = 0; j < dg; ++j) {
    alpha(j) = rng.normal();
    y1(j) = rng.normal();
    y2(j) = rng.normal();
    y3(j) = rng.normal();
  }
  NahmPath model = torus_model_path(spec.G, alpha, y1, y2, y3, 64);
  DsChart chart = ds_chart(model);
  double rt = (chart.theta.blocks[0].real() - alpha).norm();
  rt += (coords(chart.y[0]) - y1).norm() + (coords(chart.y[1]) - y2).norm() +
        (coords(chart.y[2]) - y3).norm();
  recs.push_back({0, "ds-chart-roundtrip", rt, 1e-8, rt < 1e-8, ""});
  MomentValue nu1 = nu_moment(model);
  MomentValue nu2 = nu_torus_chart(spec.G, y1, y2, y3);
  const double nud = (nu1.re - nu2.re).norm() + (nu1.c - nu2.c).norm();
  recs.push_back({0, "nu-chart-consistency", nud, 1e-10, nud < 1e-10, ""});
}

// --- quiver-demo -------------------------------------------------------------------------

void run_quiver_demo(const json& cfg, std::uint64_t seed, int,
                     std::vector<Record>& recs) {
  (void)cfg;
  // two base vertices, v = (2, 1); the first vertex splits into two copies
  QuiverInput in;
  in.num_vertices = 2;
  in.vdim = {2, 1};
  in.pi = {0, 0, 1};
  in.edges = {{0, 2}, {2, 1}};
  ActionSpec spec = quiver_preset(in);
  Rng rng(seed);

  const double hom = rho_homomorphism_defect(spec);
  recs.push_back({0, "rho-homomorphism", hom, 1e-12, hom < 1e-12, ""});
  recs.push_back({0, "hrho-dim", static_cast<double>(spec.hrho.dim()), 0.5,
                  spec.hrho.dim() == expected_hrho_dim(spec), ""});
  recs.push_back({0, "rho-bar-rank", static_cast<double>(rho_bar_rank(spec)), 0.5,
                  rho_bar_rank(spec) == spec.G.dim(), ""});
  recs.push_back({0, "g-factors", static_cast<double>(spec.G.factor_count()), 0.5,
                  spec.G.factor_count() == 1, ""});

  // equivariance of the moment map
  Point x = random_point(spec, rng);
  AlgebraElement xi = random_skew(spec.H, rng, false, 0.8);
  GroupElement h = exp_of(xi);
  MomentValue lhs = moment_hat(spec, act(spec, h, x));
  MomentValue rhs = coadjoint(inverse(h), moment_hat(spec, x));
  const double eq = (lhs.re - rhs.re).norm() + (lhs.c - rhs.c).norm();
  recs.push_back({0, "equivariance", eq, 1e-10, eq < 1e-10, ""});

  // eta solve on a complex level point: B-blocks zero stay on mu_C^{-1}(0)
  Point x0 = zero_point(spec);
  x0.z[0] = rng.gaussian_matrix(1, 2);
  x0.z[1] = rng.gaussian_matrix(2, 1);
  const int d = spec.hrho.dim();
  VecC c(d);
  for (int j = 0; j < d; ++j) c(j) = 0.3 * rng.cnormal();
  Point xs = act(spec, exp_of(embed_c(spec.hrho, c)), x0);
  MomentValue zeta = zero_moment(spec.H.dim(), "H");
  DeformPair dp = psi_hat(spec, xs, zeta);
  MomentValue sig = sigma_moment(spec, xs, nu_complex(dp.image));
  const double sres = (sig.c - zeta.c).norm();
  recs.push_back({0, "sigmaC-residual", sres, 1e-10, sres < 1e-10, ""});

  // psi_hat equivariance under H_rho^C
  VecC c2(d);
  for (int j = 0; j < d; ++j) c2(j) = 0.3 * rng.cnormal();
  GroupElement g = exp_of(embed_c(spec.hrho, c2));
  auto [g0, g1] = rho_group(spec, g);
  DeformPair dp2 = psi_hat(spec, act(spec, g, xs), zeta);
  AlgebraElement expect = Ad(g0, dp.image.eta);
  const double eres = norm(add(complexify(dp2.image.eta), scale(expect, -1.0)));
  recs.push_back({0, "psi-equivariance", eres, 1e-10, eres < 1e-10, ""});
}

// --- dispatch -------------------------------------------------------------------------------

void write_csv(const std::string& path, const std::vector<Record>& recs) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot write " + path);
  f << "sample,key,value,threshold,pass,extra\n";
  for (const auto& r : recs)
    f << r.sample << ',' << r.key << ',' << format_double(r.value) << ','
      << format_double(r.threshold) << ',' << (r.pass ? 1 : 0) << ',' << r.extra << '\n';
}

}  // namespace

RunOutput run_experiment(const json& config, const std::string& out_dir_override,
                         std::optional<std::uint64_t> seed_override, int jobs) {
  require(config.contains("experiment"), "config: missing 'experiment'");
  RunOutput out;
  out.experiment = config.at("experiment").get<std::string>();
  out.label = jgets(config, "label", out.experiment);
  const std::uint64_t seed =
      seed_override.value_or(static_cast<std::uint64_t>(jgetl(config, "seed", 1)));

  json canonical = config;
  canonical["seed"] = seed;
  out.digest = config_digest(canonical);

  if (out.experiment == "nahm-roundtrip")
    run_nahm_roundtrip(config, seed, jobs, out.records);
  else if (out.experiment == "kn-classify")
    run_kn_classify(config, seed, jobs, out.records);
  else if (out.experiment == "deform-correspond")
    run_deform_correspond(config, seed, jobs, out.records);
  else if (out.experiment == "taubnut-metric")
    run_taubnut_metric(config, seed, jobs, out.records);
  else if (out.experiment == "toric-demo")
    run_toric_demo(config, seed, jobs, out.records);
  else if (out.experiment == "quiver-demo")
    run_quiver_demo(config, seed, jobs, out.records);
  else
    throw Error("unknown experiment '" + out.experiment + "'");

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const Record& a, const Record& b) {
                     if (a.sample != b.sample) return a.sample < b.sample;
                     return a.key < b.key;
                   });
  for (const auto& r : out.records) out.all_pass = out.all_pass && r.pass;

  std::string out_dir = out_dir_override;
  if (out_dir.empty()) out_dir = jgets(config, "out_dir", "");
  if (out_dir.empty()) {
    const char* env = std::getenv("HKQ_OUT_DIR");
    out_dir = env ? env : "out";
  }
  std::filesystem::create_directories(out_dir);
  const std::string csv = out_dir + "/" + out.label + "_records.csv";
  const std::string sum = out_dir + "/" + out.label + "_summary.json";
  write_csv(csv, out.records);

  double max_resid = 0;
  long fails = 0;
  for (const auto& r : out.records) {
    max_resid = std::max(max_resid, std::abs(r.value));
    if (!r.pass) ++fails;
  }
  json summary;
  summary["experiment"] = out.experiment;
  summary["label"] = out.label;
  summary["config_digest"] = out.digest;
  summary["config"] = canonical;
  summary["records"] = static_cast<long>(out.records.size());
  summary["failures"] = fails;
  summary["all_pass"] = out.all_pass;
  summary["max_abs_value"] = max_resid;
  summary["records_csv"] = csv;
  std::ofstream sf(sum, std::ios::binary);
  require(sf.good(), "cannot write " + sum);
  sf << summary.dump(2) << '\n';
  return out;
}

int run_from_file(const std::string& config_path, const std::string& out_dir_override,
                  std::optional<std::uint64_t> seed_override, int jobs,
                  std::ostream& log) {
  json config;
  try {
    std::ifstream f(config_path);
    if (!f.good()) {
      log << "error: cannot open config " << config_path << "\n";
      return 2;
    }
    config = json::parse(f);
    if (!config.is_object() || !config.contains("experiment")) {
      log << "error: config must be an object with an 'experiment' field\n";
      return 2;
    }
  } catch (const json::exception& e) {
    log << "error: config parse failure: " << e.what() << "\n";
    return 2;
  }
  try {
    RunOutput out = run_experiment(config, out_dir_override, seed_override, jobs);
    long fails = 0;
    for (const auto& r : out.records)
      if (!r.pass) ++fails;
    log << out.experiment << " [" << out.label << "]: " << out.records.size()
        << " records, " << fails << " failures\n";
    return out.all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int report_files(const std::vector<std::string>& summary_paths, std::ostream& os) {
  os << "experiment            label                 records  fail  max|value|    status\n";
  int status = 0;
  for (const auto& path : summary_paths) {
    std::ifstream f(path);
    if (!f.good()) {
      os << "missing: " << path << "\n";
      status = 1;
      continue;
    }
    json s = json::parse(f, nullptr, false);
    if (s.is_discarded()) {
      os << "unreadable: " << path << "\n";
      status = 1;
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-20s  %-20s  %7ld  %4ld  %-12.5g  %s",
                  s.value("experiment", std::string("?")).c_str(),
                  s.value("label", std::string("?")).c_str(),
                  static_cast<long>(s.value("records", 0L)),
                  static_cast<long>(s.value("failures", 0L)),
                  s.value("max_abs_value", 0.0),
                  s.value("all_pass", false) ? "pass" : "FAIL");
    os << line << "\n";
    if (!s.value("all_pass", false)) status = 1;
  }
  return status;
}

}  // namespace hkq
