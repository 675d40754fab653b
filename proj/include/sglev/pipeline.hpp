#pragma once

// End-to-end run of a scenario and emission of its artifacts.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entanglement.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "interferometry.hpp"
#include "scenario.hpp"

namespace sglev {

inline constexpr const char* output_dir_env = "SGLEV_OUTPUT_DIR";

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
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

// Full round-trip precision for every number written to an artifact.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ManifestEntry {
  std::string file;
  std::string digest;
  std::size_t bytes = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  bool complete = false;
  std::string failure;  // stage label and message when partial
};

// Writes files into one directory and records their digests.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    f << content;
    f.close();
    if (!f) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
    manifest_.entries.push_back({name, hex64(fnv1a64(content)), content.size()});
  }

  // The manifest lists itself last, without a digest.
  void finish(bool complete, const std::string& failure = {}) {
    manifest_.complete = complete;
    manifest_.failure = failure;
    std::ostringstream o;
    o << "status," << (complete ? "complete" : "partial") << '\n';
    if (!failure.empty()) o << "failure," << failure << '\n';
    o << "file,fnv1a64,bytes\n";
    for (const auto& e : manifest_.entries) o << e.file << ',' << e.digest << ',' << e.bytes << '\n';
    const auto path = dir_ / "manifest.txt";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    f << o.str();
    if (!f) throw Error(ErrorCode::io, "failed writing '" + path.string() + "'");
  }

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
};

inline std::filesystem::path resolve_output_dir(const Scenario& s, const std::optional<std::string>& cli_dir = {}) {
  if (const char* env = std::getenv(output_dir_env); env && *env) return env;
  if (cli_dir) return *cli_dir;
  return s.output_dir;
}

// ---- CSV formats ----

inline std::string arm_csv(const ArmTrajectory& arm) {
  std::string o = "t,x,y,z,vx,vy,vz,branch\n";
  o.reserve(arm.samples.size() * 160);
  for (const auto& s : arm.samples) {
    o += num(s.t) + ',' + num(s.position.x) + ',' + num(s.position.y) + ',' + num(s.position.z) + ',' +
         num(s.velocity.x) + ',' + num(s.velocity.y) + ',' + num(s.velocity.z) + ',' + std::string(to_string(arm.branch)) +
         '\n';
  }
  return o;
}

inline std::string separations_csv(const InterferometerPair& pair) {
  std::string o = "t,d_close,d_far\n";
  for (const auto& s : pair.separations) o += num(s.t) + ',' + num(s.d_close) + ',' + num(s.d_far) + '\n';
  return o;
}

inline std::string distance_csv(const DistanceSweep& sweep) {
  std::string o = "d_um,dphi_cp_rad,dphi_dd_rad\n";
  for (const auto& r : sweep.rows) o += num(r.d * 1e6) + ',' + num(r.dphi_cp) + ',' + num(r.dphi_dd) + '\n';
  return o;
}

inline std::string gamma_csv(const DecoherenceSweep& sweep) {
  std::string o = "gamma,W,entangled\n";
  for (const auto& r : sweep.rows) o += num(r.gamma) + ',' + num(r.W) + ',' + (r.entangled ? "1" : "0") + '\n';
  return o;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

inline std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return v;
}

// ---- stages ----

struct Prepared {
  Vec3 equilibrium;
  TrapFrequencies frequencies;
  InterferometerConfig config;
  ParticleState initial;
};

inline Prepared prepare(const Scenario& s) {
  Prepared p;
  EquilibriumOptions eq;
  eq.gravity = s.dynamics.gravity;
  p.equilibrium = find_equilibrium(s.trap, s.material, {0.0, s.initial_y, 0.0}, eq);
  p.frequencies = trap_frequencies(s.trap, s.material, p.equilibrium);

  auto& c = p.config;
  c.material = s.material;
  c.trap = s.trap;
  c.eta = s.eta;
  c.y_ref = s.initial_y;
  c.schedule = s.t_T ? PulseSchedule::make(s.t_p, *s.t_T, s.closing)
                     : build_schedule(s.eta, s.material, s.n_z_oscillations, p.frequencies.omega_z, s.closing);
  c.integrator = {s.effective_dt(), s.record_every};
  c.dynamics = s.dynamics;
  c.closure = s.closure;
  p.initial = {{0.0, s.initial_y, 0.0}, {0.0, 0.0, 0.0}, 0.0};
  return p;
}

struct PipelineOptions {
  bool tune = true;  // honour scenario.tune
  bool distance_sweep = true;
  bool gamma_sweep = true;
  std::optional<std::string> output_dir;
};

struct PipelineResult {
  Prepared prepared;
  std::optional<TuneResult> tuned;
  Interferometer interferometer;
  double dphi_cp = 0.0;  // at the scenario pair distance
  double dphi_dd = 0.0;
  std::optional<DistanceSweep> distance;
  std::optional<DecoherenceSweep> gamma;
  Manifest manifest;
  std::filesystem::path output_dir;
};

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.message());
  }
}

inline std::string closure_text(const PipelineResult& r) {
  const auto& c = r.interferometer.closure;
  const auto& s = r.interferometer.schedule;
  std::ostringstream o;
  o << "dr," << num(c.dr) << '\n'
    << "dv," << num(c.dv) << '\n'
    << "max_split," << num(c.max_split) << '\n'
    << "return_dr," << num(c.return_dr) << '\n'
    << "min_trap_field," << num(c.min_trap_field) << '\n'
    << "humpty_dumpty_ok," << (c.humpty_dumpty_ok ? 1 : 0) << '\n'
    << "T_total," << num(s.T_total) << '\n'
    << "t_p," << num(s.t_p) << '\n'
    << "t_T," << num(s.t_T) << '\n'
    << "closing_pulse," << to_string(s.closing) << '\n'
    << "eta," << num(r.interferometer.pulse.eta) << '\n'
    << "a3," << num(r.interferometer.trap.a3) << '\n'
    << "equilibrium_y," << num(r.prepared.equilibrium.y) << '\n'
    << "omega_x," << num(r.prepared.frequencies.omega_x) << '\n'
    << "omega_y," << num(r.prepared.frequencies.omega_y) << '\n'
    << "omega_z," << num(r.prepared.frequencies.omega_z) << '\n';
  if (r.tuned) {
    o << "tuned_parameter," << to_string(r.tuned->parameter) << '\n'
      << "tuned_value," << num(r.tuned->value) << '\n'
      << "tune_evaluations," << r.tuned->evaluations << '\n';
  }
  return o.str();
}

inline std::string summary_text(const Scenario& s, const PipelineResult& r) {
  std::ostringstream o;
  o << "scenario: " << (s.preset.empty() ? "custom" : s.preset) << '\n'
    << "T_total_s: " << num(r.interferometer.schedule.T_total) << '\n'
    << "closure_dr_m: " << num(r.interferometer.closure.dr) << '\n'
    << "closure_dv_m_per_s: " << num(r.interferometer.closure.dv) << '\n'
    << "max_split_m: " << num(r.interferometer.closure.max_split) << '\n'
    << "pair_distance_m: " << num(s.pair_distance) << '\n'
    << "dphi_cp_rad: " << num(r.dphi_cp) << '\n'
    << "dphi_dd_rad: " << num(r.dphi_dd) << '\n';
  if (r.distance)
    o << "crossover_d_m: " << (r.distance->crossover ? num(*r.distance->crossover) : std::string("none")) << '\n';
  if (r.gamma) o << "gamma_threshold: " << (r.gamma->threshold ? num(*r.gamma->threshold) : std::string("none")) << '\n';
  return o.str();
}

} // namespace detail

// Runs every stage and writes artifacts as soon as they exist, so a late
// failure leaves the earlier files in place and the manifest marked partial.
inline PipelineResult run_pipeline(const Scenario& s, const PipelineOptions& opt = {}) {
  validate(s);
  PipelineResult r;
  r.output_dir = resolve_output_dir(s, opt.output_dir);
  ArtifactWriter out(r.output_dir);
  const char* stage = "setup";
  try {
    out.write("scenario.cfg", serialize(s));

    stage = "equilibrium";
    r.prepared = detail::staged(stage, [&] { return prepare(s); });
    InterferometerConfig cfg = r.prepared.config;

    if (opt.tune && s.tune) {
      stage = "tune_closure";
      r.tuned = detail::staged(stage, [&] {
        return tune_closure(cfg, r.prepared.initial, *s.tune, relative_bracket(cfg, *s.tune, s.tune_span));
      });
      cfg = r.tuned->config;
    }

    stage = "simulate";
    r.interferometer = detail::staged(stage, [&] { return simulate_interferometer(r.prepared.initial, cfg); });
    out.write("arm_plus.csv", arm_csv(r.interferometer.plus_arm));
    out.write("arm_minus.csv", arm_csv(r.interferometer.minus_arm));
    out.write("closure.txt", detail::closure_text(r));

    stage = "phase";
    const PhaseOptions popt{s.frozen_field};
    detail::staged(stage, [&] {
      const auto pair = pair_interferometers(r.interferometer, s.pair_distance);
      r.dphi_cp = phase_integral(pair, Interaction::casimir_polder, popt).delta_phi;
      r.dphi_dd = phase_integral(pair, Interaction::dipole_dipole, popt).delta_phi;
      out.write("separations.csv", separations_csv(pair));
    });

    if (opt.distance_sweep) {
      stage = "sweep_distance";
      r.distance = detail::staged(stage, [&] {
        return sweep_distance(r.interferometer, log_grid(s.sweeps.d_min, s.sweeps.d_max, s.sweeps.d_points), popt);
      });
      out.write("sweep_distance.csv", distance_csv(*r.distance));
    }

    if (opt.gamma_sweep) {
      stage = "sweep_gamma";
      // The witness is evaluated on the magnitude of the dd phase.
      r.gamma = detail::staged(stage, [&] {
        return sweep_decoherence(std::abs(r.dphi_dd), linear_grid(0.0, s.sweeps.gamma_max, s.sweeps.gamma_points),
                                 s.sweeps.damping_fraction);
      });
      out.write("sweep_gamma.csv", gamma_csv(*r.gamma));
    }

    stage = "summary";
    out.write("summary.txt", detail::summary_text(s, r));
  } catch (const Error& e) {
    out.finish(false, e.what());
    r.manifest = out.manifest();
    throw;
  }
  out.finish(true);
  r.manifest = out.manifest();
  return r;
}

} // namespace sglev
