#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgqfi/config.hpp"
#include "lgqfi/measurement.hpp"
#include "lgqfi/models.hpp"
#include "lgqfi/report.hpp"
#include "lgqfi/response.hpp"

#ifndef LGQFI_VERSION
#define LGQFI_VERSION "0.0.0"
#endif

namespace lgqfi::scenarios {

using ojson = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

/// Everything a subcommand produces; the writer picks CSV or JSON.
struct Result {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json parameters;  // hashed into config_hash
  ojson summary = ojson::object();
  Table table;
  std::optional<ojson> json_rows;  // replaces the table in JSON output when set
};

inline std::string config_hash(const Result& r) { return hex64(fnv1a(r.command + "\n" + r.parameters.dump())); }

inline ojson cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> ojson {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? ojson(v) : ojson(nullptr);
        else return ojson(v);
      },
      c);
}

inline std::string cell_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_number(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

inline void write_csv(std::ostream& os, const Result& r) {
  os << "# lgqfi version=" << LGQFI_VERSION << " command=" << r.command << " seed=" << r.seed
     << " config_hash=" << config_hash(r) << "\n";
  for (const auto& [key, value] : r.summary.items()) {
    os << "# " << key << "=";
    if (value.is_number_float()) os << format_number(value.get<double>());
    else if (value.is_string()) os << value.get<std::string>();
    else os << value.dump();
    os << "\n";
  }
  for (std::size_t i = 0; i < r.table.header.size(); ++i) os << (i ? "," : "") << r.table.header[i];
  os << "\n";
  for (const auto& row : r.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_csv(row[i]);
    os << "\n";
  }
}

inline void write_json(std::ostream& os, const Result& r) {
  ojson out;
  out["meta"] = {{"version", LGQFI_VERSION}, {"command", r.command}, {"seed", r.seed}, {"config_hash", config_hash(r)}};
  out["summary"] = r.summary;
  if (r.json_rows) {
    out["rows"] = *r.json_rows;
  } else {
    ojson rows = ojson::array();
    for (const auto& row : r.table.rows) {
      ojson o;
      for (std::size_t i = 0; i < row.size(); ++i) o[r.table.header[i]] = cell_json(row[i]);
      rows.push_back(std::move(o));
    }
    out["rows"] = std::move(rows);
  }
  os << out.dump(2) << "\n";
}

inline Cell opt_cell(const std::optional<double>& v) { return v ? Cell(*v) : Cell(); }

/// Runs f(i) for i in [0, n) on up to `threads` workers; rethrows the first
/// failure in index order.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n; i += stride) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run, t, threads);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Independent seed for sub-task (a, b) of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t a, std::uint32_t b) {
  const auto w = Philox4x32::block({a, b, 0x5eed5eed, 0}, Philox4x32::key_from_seed(seed));
  return std::uint64_t{w[0]} << 32 | w[1];
}

// ---------------------------------------------------------------------------
// Instances

struct Instance {
  ModelPair model;
  Eigensystem eig;
  StationaryState state;
  std::optional<int> collective_n;
  std::vector<std::string> warnings;
};

inline ModelPair build_model(const RunConfig& cfg, std::optional<int>& collective_n, std::vector<std::string>& warnings) {
  const auto& m = cfg.model;
  if (m.kind == "qubit") return build_qubit(m.epsilon, m.theta);
  if (m.kind == "tfim") {
    auto pair = build_tfim(m.tfim);
    if (m.observable == "collective") {
      pair.observable = build_collective(m.tfim.n_sites);
      collective_n = m.tfim.n_sites;
    }
    return pair;
  }
  if (m.kind == "ghz" || m.kind == "ghz_effective") {
    collective_n = m.ghz.n_sites;
    return m.kind == "ghz" ? build_ghz(m.ghz) : build_ghz_effective(m.ghz);
  }
  // custom: relative paths resolve against the config file's directory
  std::filesystem::path p(m.path);
  if (p.is_relative() && cfg.source != "<config>") p = std::filesystem::path(cfg.source).parent_path() / p;
  try {
    auto c = load_custom(p.string());
    warnings = c.warnings;
    return c.model;
  } catch (const std::invalid_argument& e) {
    cfg.fail("/model/path", e.what());
  }
}

inline Instance build_instance(const RunConfig& cfg) {
  std::optional<int> collective_n;
  std::vector<std::string> warnings;
  auto model = build_model(cfg, collective_n, warnings);
  auto eig = hermitian_eig(model.hamiltonian);
  Instance in{std::move(model), std::move(eig), {}, cfg.bounds.collective_n ? cfg.bounds.collective_n : collective_n,
              std::move(warnings)};
  switch (cfg.state.kind) {
    case StateSpec::Kind::thermal:
      in.state = make_thermal_state(in.eig, cfg.state.beta);
      break;
    case StateSpec::Kind::pure:
      if (cfg.state.index >= in.eig.dim())
        cfg.fail("/state/index", "index " + std::to_string(cfg.state.index) + " out of range for dimension " +
                                     std::to_string(in.eig.dim()));
      in.state = make_pure_state(in.eig, cfg.state.index);
      break;
    case StateSpec::Kind::ghz_plus: {
      Vector target;
      if (cfg.model.kind == "ghz") {
        target = ghz_state(cfg.model.ghz.n_sites, +1);
      } else {
        target = Vector::Zero(2);
        target(0) = 1.0;
      }
      in.state = make_pure_state(in.eig, find_eigen_index(in.eig, target));
      break;
    }
  }
  return in;
}

inline const char* state_label(const StationaryState& s) { return s.is_thermal() ? "thermal" : "pure"; }

// ---------------------------------------------------------------------------
// gamma-table

inline Result cmd_gamma_table(double y_min, double y_max, int points) {
  if (!(y_min > 0) || !(y_max > y_min) || !std::isfinite(y_max))
    throw ConfigError("gamma-table: need 0 < y_min < y_max, got y_min=" + format_number(y_min) +
                      " y_max=" + format_number(y_max));
  if (points < 2 || points > 1000000) throw ConfigError("gamma-table: points must lie in [2, 1e6]");
  Result r;
  r.command = "gamma-table";
  r.parameters = {{"y_min", y_min}, {"y_max", y_max}, {"points", points}};
  r.summary["y_c"] = critical_y();
  r.table.header = {"y", "gamma", "y2_over_4", "branch", "y_c"};
  for (int i = 0; i < points; ++i) {
    const double y = i == points - 1 ? y_max : y_min + (y_max - y_min) * i / (points - 1);
    const auto g = gamma_lgi(y);
    r.table.rows.push_back({y, g.value, 0.25 * y * y, std::string(to_string(g.method)), critical_y()});
  }
  return r;
}

// ---------------------------------------------------------------------------
// certify

inline Result cmd_certify(const RunConfig& cfg, unsigned threads = 1) {
  const bool any = cfg.bounds_enabled && (cfg.bounds.pure || cfg.bounds.thermal || cfg.bounds.thermal_weak ||
                                          cfg.bounds.two_time || cfg.bounds.fsum || !cfg.bounds.kp.empty());
  if (!any) cfg.fail("/bounds", "certify needs at least one enabled bound family");
  const auto in = build_instance(cfg);
  const SpectralData sd(in.eig, in.model.observable, in.state);
  BoundOptions opt = cfg.bounds;
  opt.collective_n = in.collective_n;

  std::vector<BoundReport> reports(cfg.tau_grid.size());
  parallel_for(reports.size(), threads, [&](std::size_t i) { reports[i] = make_bound_report(sd, cfg.tau_grid[i], opt); });

  Result r;
  r.command = "certify";
  r.parameters = cfg.document;
  r.seed = cfg.protocol ? cfg.protocol->seed : 0;

  const bool zero_t = std::isinf(reports.front().beta);
  const bool pure_col = opt.pure && zero_t;
  const bool fsum_col = opt.fsum && in.state.is_thermal();
  auto& h = r.table.header;
  h = {"tau", "C_tau", "C_2tau", "K", "Q2", "F_Q"};
  auto pair_cols = [&](const std::string& name) {
    h.push_back("lower_" + name);
    h.push_back("slack_" + name);
  };
  if (pure_col) pair_cols("pure");
  if (opt.thermal) pair_cols("thermal");
  if (opt.thermal_weak) pair_cols("thermal_weak");
  if (opt.thermal && !zero_t) pair_cols("thermal_time");
  if (opt.two_time) pair_cols("two_time");
  for (int p : opt.kp) pair_cols("K" + std::to_string(p));
  if (fsum_col) {
    h.push_back("fsum_upper");
    h.push_back("fsum_slack");
  }
  if (in.collective_n) {
    h.push_back("F_Q_tilde");
    h.push_back("depth_witness");
  }
  h.push_back("best_lower");

  std::size_t best = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& b = reports[i];
    if (b.best_lower() > reports[best].best_lower()) best = i;
    std::vector<Cell> row = {b.tau, b.c_tau, b.c_2tau, b.K, b.q2, b.fq};
    auto add = [&](const std::optional<LowerBound>& lb) {
      row.push_back(lb ? Cell(lb->value) : Cell());
      row.push_back(lb ? Cell(lb->slack) : Cell());
    };
    if (pure_col) add(b.lower_pure);
    if (opt.thermal) add(b.lower_thermal);
    if (opt.thermal_weak) add(b.lower_thermal_weak);
    if (opt.thermal && !zero_t) add(b.lower_thermal_time);
    if (opt.two_time) add(b.lower_two_time);
    for (int p : opt.kp) add(b.lower_kp.at(p));
    if (fsum_col) {
      row.push_back(opt_cell(b.fsum_upper));
      row.push_back(opt_cell(b.fsum_slack));
    }
    if (in.collective_n) {
      row.push_back(opt_cell(b.fq_tilde));
      row.push_back(b.depth_witness ? Cell(static_cast<long long>(*b.depth_witness)) : Cell());
    }
    row.push_back(b.best_lower());
    r.table.rows.push_back(std::move(row));
  }

  r.summary["model"] = cfg.model.kind;
  r.summary["dim"] = static_cast<long long>(in.eig.dim());
  r.summary["state"] = state_label(in.state);
  if (in.state.is_thermal() && std::isfinite(in.state.beta)) r.summary["beta"] = in.state.beta;
  else r.summary["beta"] = "inf";
  r.summary["F_Q"] = reports.front().fq;
  r.summary["best_lower"] = reports[best].best_lower();
  r.summary["best_tau"] = reports[best].tau;
  for (std::size_t i = 0; i < in.warnings.size(); ++i) r.summary["warning_" + std::to_string(i)] = in.warnings[i];

  ojson rows = ojson::array();
  for (const auto& b : reports) rows.push_back(ojson::parse(to_json(b).dump()));
  r.json_rows = std::move(rows);
  return r;
}

// ---------------------------------------------------------------------------
// protocol

inline Result cmd_protocol(const RunConfig& cfg, std::optional<std::uint64_t> seed_override = {},
                           unsigned threads = 1) {
  if (!cfg.protocol) cfg.fail("", "protocol needs a 'protocol' block");
  const auto& ps = *cfg.protocol;
  const std::uint64_t seed = seed_override.value_or(ps.seed);
  const auto in = build_instance(cfg);
  const SpectralData sd(in.eig, in.model.observable, in.state);
  const Matrix rho = density_matrix(in.eig, in.state);
  const auto& h = in.model.hamiltonian;
  const auto& q = in.model.observable;
  const Matrix qm = q.matrix();
  const bool dichotomic = max_abs(qm * qm - Matrix::Identity(qm.rows(), qm.cols())) <= 1e-12;

  Result r;
  r.command = "protocol";
  r.seed = seed;
  r.parameters = cfg.document;
  r.parameters["_seed"] = seed;
  r.table.header = {"tau",        "C_spectral", "C_projective", "C_mc",       "C_mc_stderr", "mc_within_gate",
                    "K_spectral", "K_projective", "K_mc",       "K_mc_stderr"};
  for (double dx : ps.weak_dx) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", dx);
    r.table.header.push_back(std::string("C_weak_dx=") + buf);
    r.table.header.push_back(std::string("K_weak_dx=") + buf);
  }

  bool all_gate = true;
  for (std::size_t i = 0; i < cfg.tau_grid.size(); ++i) {
    const double tau = cfg.tau_grid[i];
    const double times[3][2] = {{0.0, tau}, {tau, 2 * tau}, {0.0, 2 * tau}};
    double exact[3];
    ProtocolEstimate mc[3];
    for (int k = 0; k < 3; ++k) {
      exact[k] = projective_joint(h, q, rho, times[k][0], times[k][1]).correlator();
      mc[k] = projective_mc(h, q, rho, times[k][0], times[k][1], ps.shots,
                            derive_seed(seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)), threads);
    }
    const auto k_mc = lgi_from_protocol(mc[0], mc[1], mc[2]);
    all_gate = all_gate && mc[0].within_gate;
    std::vector<Cell> row = {tau,
                             correlator(sd, tau),
                             exact[0],
                             mc[0].value,
                             mc[0].std_error,
                             mc[0].within_gate,
                             lgi_K(sd, tau),
                             exact[0] + exact[1] - exact[2],
                             k_mc.value,
                             k_mc.std_error};
    for (double dx : ps.weak_dx) {
      const MeterConfig meter{ps.lambda, dx};
      double w[3];
      for (int k = 0; k < 3; ++k) w[k] = weak_two_meter(h, q, rho, times[k][0], times[k][1], meter).value;
      row.push_back(w[0]);
      row.push_back(w[0] + w[1] - w[2]);
    }
    r.table.rows.push_back(std::move(row));
  }
  r.summary["model"] = cfg.model.kind;
  r.summary["dim"] = static_cast<long long>(in.eig.dim());
  r.summary["state"] = state_label(in.state);
  r.summary["dichotomic"] = dichotomic;
  r.summary["shots"] = ps.shots;
  r.summary["lambda"] = ps.lambda;
  r.summary["all_within_gate"] = all_gate;
  return r;
}

// ---------------------------------------------------------------------------
// presets

inline void require_kind(const RunConfig& cfg, std::initializer_list<const char*> kinds, const char* command) {
  for (const char* k : kinds)
    if (cfg.model.kind == k) return;
  cfg.fail("/model/kind", std::string(command) + " does not accept model kind '" + cfg.model.kind + "'");
}

inline Result cmd_qubit(const std::optional<RunConfig>& cfg) {
  std::vector<double> eps{0.5, 1.0, 2.0};
  std::vector<double> theta{std::numbers::pi / 4, std::numbers::pi / 2};
  std::vector<double> beta{0.5, 2.0, 8.0};
  std::vector<double> tau;
  for (int i = 1; i <= 8; ++i) tau.push_back(0.375 * i);
  Result r;
  r.command = "qubit";
  if (cfg) {
    require_kind(*cfg, {"qubit"}, "qubit");
    if (cfg->state.kind != StateSpec::Kind::thermal || !std::isfinite(cfg->state.beta))
      cfg->fail("/state", "the qubit scenario needs a thermal state with finite beta");
    eps = {cfg->model.epsilon};
    theta = {cfg->model.theta};
    beta = {cfg->state.beta};
    tau = cfg->tau_grid;
    r.parameters = cfg->document;
  } else {
    r.parameters = {{"epsilon", eps}, {"theta", theta}, {"beta", beta}, {"tau", tau}};
  }
  r.table.header = {"epsilon", "theta", "beta", "tau", "F_Q", "F_Q_closed", "K", "R", "residual", "lower_thermal"};
  double worst = 0;
  for (double e : eps)
    for (double th : theta)
      for (double b : beta) {
        const auto m = build_qubit(e, th);
        const auto eig = hermitian_eig(m.hamiltonian);
        const SpectralData sd(eig, m.observable, make_thermal_state(eig, b));
        const double fq = qfi(sd);
        const double t = std::tanh(0.5 * b * e);
        const double closed = 4 * std::sin(th) * std::sin(th) * t * t;
        for (double tt : tau) {
          const double K = lgi_K(sd, tt);
          const double R = R_kernel(e * tt, 2 * tt / b);
          const double residual = fq * R - (K - 1);
          worst = std::max(worst, std::abs(residual));
          const auto lb = LowerBound::make(bound_thermal(K, expect_q2(sd), tt, b), fq);
          r.table.rows.push_back({e, th, b, tt, fq, closed, K, R, residual, lb.value});
        }
      }
  r.summary["max_abs_residual"] = worst;
  r.summary["rows"] = static_cast<long long>(r.table.rows.size());
  return r;
}

inline Result cmd_tfim(const std::optional<RunConfig>& cfg) {
  TfimParams p;  // N = 8, J = 1, h = 0.5
  std::vector<double> tau{0.005, 0.01, 0.02, 0.05, 0.1};
  Result r;
  r.command = "tfim";
  if (cfg) {
    require_kind(*cfg, {"tfim"}, "tfim");
    if (cfg->model.observable == "collective") cfg->fail("/model/observable", "the tfim scenario uses a site observable");
    if (!(cfg->state.kind == StateSpec::Kind::pure && cfg->state.index == 0) &&
        !(cfg->state.kind == StateSpec::Kind::thermal && std::isinf(cfg->state.beta)))
      cfg->fail("/state", "the tfim scenario runs on the ground state (thermal beta \"inf\" or pure index 0)");
    p = cfg->model.tfim;
    tau = cfg->tau_grid;
    r.parameters = cfg->document;
  } else {
    r.parameters = {{"n_sites", p.n_sites}, {"coupling", p.coupling}, {"field", p.field}, {"tau", tau}};
  }
  const auto m = build_tfim(p);
  const auto eig = hermitian_eig(m.hamiltonian);
  const SpectralData sd(eig, m.observable, make_pure_state(eig, 0));
  const double target = 4 * p.field * p.field;
  r.table.header = {"tau", "K", "rate", "four_h2", "rel_error"};
  for (double t : tau) {
    const double K = lgi_K(sd, t);
    const double rate = (K - 1) / (t * t);
    r.table.rows.push_back({t, K, rate, target, std::abs(rate - target) / target});
  }
  r.summary["n_sites"] = p.n_sites;
  r.summary["coupling"] = p.coupling;
  r.summary["field"] = p.field;
  r.summary["boundary"] = p.boundary == Boundary::open ? "open" : "periodic";
  r.summary["site"] = tfim_site(p);
  r.summary["ground_energy"] = eig.energies(0);
  r.summary["gap"] = eig.energies(1) - eig.energies(0);
  r.summary["sigma_z"] = expect_q(sd);
  r.summary["F_Q"] = qfi(sd);
  r.summary["M2_spectral"] = m2_spectral(sd);
  r.summary["M2_commutator"] = m2_commutator(m.hamiltonian, m.observable, eig.basis.col(0));
  r.summary["four_h2"] = target;
  r.summary["m_reference"] = tfim_reference_magnetization(p.coupling, p.field);
  return r;
}

inline Result cmd_ghz(const std::optional<RunConfig>& cfg) {
  GhzParams p;  // N = 4, J = 1, Omega = 1
  std::vector<double> tau;
  Result r;
  r.command = "ghz";
  if (cfg) {
    require_kind(*cfg, {"ghz", "ghz_effective"}, "ghz");
    p = cfg->model.ghz;
    tau = cfg->tau_grid;
    r.parameters = cfg->document;
  } else {
    for (int k = 1; k <= 120; ++k) tau.push_back(k * std::numbers::pi / 60 / p.omega);
    r.parameters = {{"n_sites", p.n_sites}, {"coupling", p.coupling}, {"omega", p.omega}, {"tau", tau}};
  }
  // the full 2^N model is diagonalized only when asked for and small enough
  const bool full_model = (!cfg || cfg->model.kind == "ghz") && p.n_sites <= 10;
  const auto eff = build_ghz_effective(p);
  const auto eig_eff = hermitian_eig(eff.hamiltonian);
  Vector plus_eff = Vector::Zero(2);
  plus_eff(0) = 1.0;
  const SpectralData sd_eff(eig_eff, eff.observable, make_pure_state(eig_eff, find_eigen_index(eig_eff, plus_eff)));

  std::optional<SpectralData> sd_full;
  std::optional<ModelPair> full;
  if (full_model) {
    full = build_ghz(p);
    const auto eig = hermitian_eig(full->hamiltonian);
    sd_full.emplace(eig, full->observable, make_pure_state(eig, find_eigen_index(eig, ghz_state(p.n_sites, +1))));
  }
  const SpectralData& sd = sd_full ? *sd_full : sd_eff;

  r.table.header = {"tau", "omega_tau", "K_full", "K_effective", "lower_pure"};
  double max_diff = 0;
  for (double t : tau) {
    const double ke = lgi_K(sd_eff, t);
    const double kf = sd_full ? lgi_K(*sd_full, t) : std::nan("");
    if (sd_full) max_diff = std::max(max_diff, std::abs(kf - ke));
    const double k = lgi_K(sd, t);
    r.table.rows.push_back({t, p.omega * t, sd_full ? Cell(kf) : Cell(), ke,
                            LowerBound::make(bound_pure(k, expect_q2(sd)), qfi(sd)).value});
  }

  // K(x / Omega) over one period, refined by golden section
  const auto k_of = [&](double x) { return lgi_K(sd_eff, x / p.omega); };
  double best_x = 0, best_k = -1e300;
  for (int i = 1; i <= 3600; ++i) {
    const double x = std::numbers::pi * i / 3600;
    if (const double k = k_of(x); k > best_k) {
      best_k = k;
      best_x = x;
    }
  }
  best_x = golden_section_max(k_of, best_x - std::numbers::pi / 3600, best_x + std::numbers::pi / 3600);

  const double tau_star = std::numbers::pi / (3 * p.omega);
  const double fq = qfi(sd);
  const double k_star = lgi_K(sd, tau_star);
  const double n = p.n_sites;
  const double fq_tilde = 0.25 * n * n * fq;
  r.summary["n_sites"] = p.n_sites;
  r.summary["coupling"] = p.coupling;
  r.summary["omega"] = p.omega;
  r.summary["model"] = full_model ? "full" : "effective";
  r.summary["K_max"] = k_of(best_x);
  r.summary["omega_tau_at_K_max"] = best_x;
  r.summary["omega_tau_at_K_max_over_pi_3"] = best_x / (std::numbers::pi / 3);
  r.summary["K_at_pi_3"] = k_star;
  r.summary["F_Q"] = fq;
  r.summary["saturation_residual"] = std::abs(fq - bound_pure(k_star, expect_q2(sd)));
  r.summary["F_Q_tilde"] = fq_tilde;
  r.summary["F_Q_tilde_over_N2"] = fq_tilde / (n * n);
  const auto depth = depth_witness(fq_tilde, p.n_sites);
  r.summary["depth_witness"] = depth ? ojson(*depth) : ojson(nullptr);
  const double tau_pi = std::numbers::pi / p.omega;
  r.summary["two_time_bound_at_pi"] = bound_two_time(expect_q2(sd), correlator(sd, tau_pi), tau_pi, kInfiniteBeta);
  if (sd_full) r.summary["full_vs_effective_max_abs_diff"] = max_diff;
  return r;
}

// ---------------------------------------------------------------------------
// entry point shared by the CLI and the tests

struct Invocation {
  std::string command;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  double y_min = 0.01;
  double y_max = 3.0;
  int points = 300;
};

/// Runs one subcommand. Exit codes: 0 success, 1 user or config error,
/// 2 internal invariant violation.
inline int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  try {
    std::optional<RunConfig> cfg;
    if (inv.config) cfg = load_run_config(*inv.config);
    if (inv.format && *inv.format != "csv" && *inv.format != "json")
      throw ConfigError("--format must be csv or json");
    if (inv.threads < 1) throw ConfigError("--threads must be >= 1");

    Result r;
    if (inv.command == "gamma-table") {
      if (cfg) throw ConfigError("gamma-table takes its range from --y-min, --y-max and --points, not a config");
      r = cmd_gamma_table(inv.y_min, inv.y_max, inv.points);
    } else if (inv.command == "certify") {
      if (!cfg) throw ConfigError("certify requires --config");
      r = cmd_certify(*cfg, inv.threads);
    } else if (inv.command == "protocol") {
      if (!cfg) throw ConfigError("protocol requires --config");
      r = cmd_protocol(*cfg, inv.seed, inv.threads);
    } else if (inv.command == "qubit") {
      r = cmd_qubit(cfg);
    } else if (inv.command == "tfim") {
      r = cmd_tfim(cfg);
    } else if (inv.command == "ghz") {
      r = cmd_ghz(cfg);
    } else {
      throw ConfigError("unknown command '" + inv.command + "'");
    }
    if (inv.seed && inv.command != "protocol") r.seed = *inv.seed;

    const std::string format = inv.format.value_or(cfg && cfg->format ? *cfg->format : "csv");
    const std::optional<std::string> path = inv.out ? inv.out : (cfg ? cfg->output_path : std::nullopt);
    std::ofstream file;
    if (path) {
      file.open(*path, std::ios::binary);
      if (!file) throw ConfigError("cannot open output file '" + *path + "'");
    }
    std::ostream& os = path ? static_cast<std::ostream&>(file) : out;
    if (format == "json") write_json(os, r);
    else write_csv(os, r);
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const BoundViolation& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lgqfi::scenarios
