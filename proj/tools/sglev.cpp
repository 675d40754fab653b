// Command-line front end: simulate, tune, sweep-distance, sweep-gamma, fields probe.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sglev/sglev.hpp"

namespace {

using namespace sglev;

struct Common {
  std::string config;
  std::string preset;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "scenario file (key = value with unit suffixes)");
  app->add_option("--preset", c.preset, "named preset: paper-default or paper-two-z");
  app->add_option("--out", c.out, "output directory (SGLEV_OUTPUT_DIR takes precedence)");
}

Scenario load(const Common& c) {
  std::optional<std::string> preset;
  if (!c.preset.empty()) preset = c.preset;
  if (!c.config.empty()) return load_scenario_file(c.config, preset);
  return load_scenario("", preset.value_or("paper-default"));
}

PipelineOptions pipeline_options(const Common& c) {
  PipelineOptions o;
  if (!c.out.empty()) o.output_dir = c.out;
  return o;
}

void report(const PipelineResult& r) {
  const auto& cl = r.interferometer.closure;
  std::printf("output: %s\n", r.output_dir.string().c_str());
  std::printf("T_total = %.9g s  t_p = %.9g s  t_T = %.9g s\n", r.interferometer.schedule.T_total,
              r.interferometer.schedule.t_p, r.interferometer.schedule.t_T);
  std::printf("closure dr = %.3e m  dv = %.3e m/s  max_split = %.4e m  %s\n", cl.dr, cl.dv, cl.max_split,
              cl.humpty_dumpty_ok ? "closed" : "NOT closed");
  if (r.tuned)
    std::printf("tuned %s = %.12g (%d evaluations)\n", std::string(to_string(r.tuned->parameter)).c_str(),
                r.tuned->value, r.tuned->evaluations);
  std::printf("dphi_cp = %.6e rad  dphi_dd = %.6e rad\n", r.dphi_cp, r.dphi_dd);
  if (r.distance) {
    if (r.distance->crossover) std::printf("crossover d* = %.6g um\n", *r.distance->crossover * 1e6);
    else std::printf("crossover d*: none in range\n");
  }
  if (r.gamma) {
    if (r.gamma->threshold) std::printf("witness threshold Gamma* = %.10g\n", *r.gamma->threshold);
    else std::printf("witness threshold Gamma*: W >= 0 already at Gamma = 0\n");
  }
}

std::vector<double> split_csv_numbers(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(units::parse_quantity(cell, units::Dimension::dimensionless, "points"));
  return v;
}

// Reads x,y,z[,t] rows in SI units. A header line is skipped if present.
int probe(const Scenario& s, const std::string& points, std::optional<double> fixed_time) {
  std::ifstream f(points);
  if (!f) throw Error(ErrorCode::io, "cannot open points file '" + points + "'");
  const Prepared prep = prepare(s);
  const PulseConfig pulse = prep.config.schedule.pulse(s.eta, prep.config.y_ref);
  std::printf("x,y,z,t,Bx,By,Bz,B2,dB2dx,dB2dy,dB2dz\n");
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto t = units::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (lineno == 1 && (t.front() == 'x' || t.front() == 'X')) continue;
    std::vector<double> v;
    try {
      v = split_csv_numbers(std::string(t));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, "points line " + std::to_string(lineno) + ": " + e.message());
    }
    if (v.size() != 3 && v.size() != 4)
      throw Error(ErrorCode::parse, "points line " + std::to_string(lineno) + ": expected x,y,z[,t]");
    const double time = fixed_time ? *fixed_time : (v.size() == 4 ? v[3] : 0.0);
    const Vec3 p{v[0], v[1], v[2]};
    const FieldSample fs = eval_total(p, s.trap, pulse, time);
    const std::string row = num(p.x) + ',' + num(p.y) + ',' + num(p.z) + ',' + num(time) + ',' + num(fs.B.x) + ',' +
                            num(fs.B.y) + ',' + num(fs.B.z) + ',' + num(fs.B_squared) + ',' +
                            num(fs.grad_B_squared.x) + ',' + num(fs.grad_B_squared.y) + ',' +
                            num(fs.grad_B_squared.z);
    std::printf("%s\n", row.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stern-Gerlach interferometer simulator for levitated nanodiamonds"};
  app.require_subcommand(1);

  Common sim_c, tune_c, sd_c, sg_c, probe_c;

  auto* sim = app.add_subcommand("simulate", "run the full pipeline and write all artifacts");
  add_common(sim, sim_c);
  bool no_tune = false;
  sim->add_flag("--no-tune", no_tune, "skip closure tuning even if the scenario requests it");

  auto* tune = app.add_subcommand("tune", "tune one parameter for interferometer closure");
  add_common(tune, tune_c);
  std::string free_param = "t_T";
  tune->add_option("--free", free_param, "free parameter")->check(CLI::IsMember({"t_T", "a3", "eta"}));
  double bracket = 0.0;
  tune->add_option("--bracket", bracket, "relative half-width of the search bracket");

  auto* sd = app.add_subcommand("sweep-distance", "phase differences over a log-spaced distance grid");
  add_common(sd, sd_c);
  std::string d_min, d_max;
  int d_points = 0;
  sd->add_option("--d-min", d_min, "smallest separation, e.g. 2um");
  sd->add_option("--d-max", d_max, "largest separation, e.g. 50um");
  sd->add_option("--points", d_points, "grid points")->check(CLI::Range(2, 100000));

  auto* sg = app.add_subcommand("sweep-gamma", "entanglement witness over decoherence");
  add_common(sg, sg_c);
  double gamma_max = 0.0;
  int g_points = 0;
  std::string g_d;
  sg->add_option("--gamma-max", gamma_max, "largest total Gamma");
  sg->add_option("--points", g_points, "grid points")->check(CLI::Range(2, 1000000));
  sg->add_option("--d", g_d, "pair separation, e.g. 20um");

  auto* fields = app.add_subcommand("fields", "field evaluation utilities");
  fields->require_subcommand(1);
  auto* pr = fields->add_subcommand("probe", "print B, B^2 and grad B^2 at listed points");
  add_common(pr, probe_c);
  std::string points;
  std::optional<double> probe_time;
  pr->add_option("--points", points, "CSV of x,y,z[,t] in metres and seconds")->required();
  pr->add_option("--time", probe_time, "evaluate every point at this time (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      Scenario s = load(sim_c);
      auto opt = pipeline_options(sim_c);
      opt.tune = !no_tune;
      report(run_pipeline(s, opt));
    } else if (*tune) {
      Scenario s = load(tune_c);
      s.tune = *detail::parse_free(free_param, "--free");
      if (bracket > 0.0) s.tune_span = bracket;
      validate(s);
      auto opt = pipeline_options(tune_c);
      opt.distance_sweep = false;
      opt.gamma_sweep = false;
      report(run_pipeline(s, opt));
    } else if (*sd) {
      Scenario s = load(sd_c);
      if (!d_min.empty()) s.sweeps.d_min = units::parse_quantity(d_min, units::Dimension::length, "--d-min");
      if (!d_max.empty()) s.sweeps.d_max = units::parse_quantity(d_max, units::Dimension::length, "--d-max");
      if (d_points > 0) s.sweeps.d_points = d_points;
      validate(s);
      auto opt = pipeline_options(sd_c);
      opt.gamma_sweep = false;
      report(run_pipeline(s, opt));
    } else if (*sg) {
      Scenario s = load(sg_c);
      if (gamma_max > 0.0) s.sweeps.gamma_max = gamma_max;
      if (g_points > 0) s.sweeps.gamma_points = g_points;
      if (!g_d.empty()) s.pair_distance = units::parse_quantity(g_d, units::Dimension::length, "--d");
      validate(s);
      auto opt = pipeline_options(sg_c);
      opt.distance_sweep = false;
      report(run_pipeline(s, opt));
    } else if (*pr) {
      return probe(load(probe_c), points, probe_time);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
