#include "cli.hpp"

#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsfb/errors.hpp"
#include "tsfb/io.hpp"
#include "tsfb/linalg.hpp"
#include "tsfb/verify.hpp"

namespace tsfb::cli {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCertFailed = 2;

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw io::ParseError("config: \"" + key + "\" has the wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool found = false;
    for (const char* k : known) found = found || it.key() == k;
    if (!found) throw io::ParseError("config: unknown key \"" + where + it.key() + "\"");
  }
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ValidationError(std::string(what) + " must look like lo:hi");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": cannot parse \"" + text + "\"");
  }
}

std::filesystem::path out_dir(const RunConfig& c) {
  return c.output_dir.value_or(std::filesystem::path("."));
}

Vector initial_state(const RunConfig& c, Eigen::Index n) {
  if (c.x0.empty()) return Vector::Zero(n);
  if (static_cast<Eigen::Index>(c.x0.size()) != n) {
    throw ValidationError("x0 has " + std::to_string(c.x0.size()) +
                          " entries, the model has " + std::to_string(n) + " states");
  }
  return Eigen::Map<const Vector>(c.x0.data(), n);
}

ordered_json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

struct Prepared {
  TimeScale ts;
  ContinuousLTI plant;
  ControlSystem sys;
  Seconds t0;
  Seconds tf;
  GramianOptions opts;
};

Prepared prepare(const RunConfig& c) {
  if (!(c.alpha > 0.0)) throw ValidationError("alpha must be > 0");
  if (c.window.k < 1) throw ValidationError("k must be >= 1");
  TimeScale ts = resolve_scale(c);
  ContinuousLTI plant = resolve_model(c);
  ControlSystem sys = discretize_on_scale(plant, ts);
  const Seconds t0 = c.t0.value_or(ts.min());
  const Seconds tf = c.tf.value_or(ts.max());
  if (!(tf > t0)) throw ValidationError("tf must exceed t0");
  GramianOptions opts;
  opts.h = c.mesh_h.value_or(default_mesh_step(ts));
  return {std::move(ts), std::move(plant), std::move(sys), t0, tf, opts};
}

int cmd_gain(const RunConfig& c, std::ostream& out) {
  const Prepared p = prepare(c);
  const GainSchedule schedule =
      gain_schedule(p.sys, p.ts, p.t0, p.tf, c.alpha, c.window, p.opts);
  if (schedule.empty()) {
    throw OutOfRangeError("no node of [t0, tf) has a window inside the scale");
  }
  const StabilityCertificate cert = certify(p.sys, schedule, p.ts);
  const auto dir = out_dir(c);
  io::write_atomic(dir / "gains.csv", io::gains_csv(schedule));
  io::write_atomic(dir / "certificate.json", io::certificate_json(cert));
  out << "gains: " << schedule.entries.size() << " nodes, " << schedule.skipped.size()
      << " skipped\n";
  for (const std::string& w : schedule.warnings) out << "warning: " << w << '\n';
  out << "certificate: " << (cert.pass ? "pass" : "FAIL") << " (nu = "
      << io::format_double(cert.nu) << ", worst node t = "
      << io::format_double(cert.worst_node) << ")\n";
  return cert.pass ? kExitOk : kExitCertFailed;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const Prepared p = prepare(c);
  require_rate_admissible(p.ts, c.alpha, p.t0, p.tf);
  const GainSchedule schedule =
      gain_schedule(p.sys, p.ts, p.t0, p.tf, c.alpha, c.window, p.opts);
  if (schedule.empty()) {
    throw OutOfRangeError("no node of [t0, tf) has a window inside the scale");
  }
  const Seconds end = c.tf ? *c.tf : schedule.coverage_end();
  const Vector x0 = initial_state(c, p.plant.n());
  const SimResult sim = simulate(p.sys, p.ts, p.t0, end, x0, schedule,
                                 step_reference(c.amplitude, p.plant.m(), p.t0),
                                 p.opts.h);

  ordered_json metrics;
  const auto settle = settling_time(sim, 0, c.band);
  metrics["settling_time"] = settle ? ordered_json(*settle) : ordered_json(nullptr);
  if (x0.norm() > 0.0) {
    const DecayFit fit = decay_fit(sim, c.alpha, p.ts);
    metrics["gamma"] = finite_or_null(fit.gamma);
    metrics["gamma_node"] = fit.max_ratio_node;
  } else {
    metrics["gamma"] = nullptr;
    metrics["gamma_node"] = nullptr;
  }
  ordered_json final_value = ordered_json::array();
  for (Eigen::Index i = 0; i < sim.samples.back().x.size(); ++i) {
    final_value.push_back(finite_or_null(sim.samples.back().x(i)));
  }
  metrics["final_time"] = sim.samples.back().t;
  metrics["final_value"] = std::move(final_value);
  metrics["samples"] = sim.samples.size();
  metrics["alpha"] = c.alpha;
  metrics["k"] = c.window.k;

  const auto dir = out_dir(c);
  io::write_atomic(dir / "trajectory.csv", io::trajectory_csv(sim));
  io::write_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  out << "simulated " << sim.samples.size() << " samples; settling time "
      << (settle ? io::format_double(*settle) : std::string("none")) << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  if (c.k_lo < 1 || c.k_hi < c.k_lo) throw ValidationError("invalid k range");
  const TimeScale ts = resolve_scale(c);
  const ContinuousLTI plant = resolve_model(c);
  SweepOptions o;
  for (int k = c.k_lo; k <= c.k_hi; ++k) o.ks.push_back(k);
  o.alphas = alpha_grid(c.alpha_lo, c.alpha_hi, c.alpha_step);
  o.band = c.band;
  o.h = c.mesh_h.value_or(default_mesh_step(ts));
  o.delta1 = c.window.delta1;
  o.delta2 = c.window.delta2;
  o.m_max = c.window.m_max;
  if (!c.x0.empty()) o.x0 = initial_state(c, plant.n());
  o.amplitude = c.amplitude;
  const std::vector<SweepRow> rows = sweep(plant, ts, o);
  io::write_atomic(out_dir(c) / "sweep.csv", io::sweep_csv(rows));
  std::size_t completed = 0;
  for (const SweepRow& r : rows) {
    completed += (r.status == "ok" || r.status == "unsettled") ? 1 : 0;
  }
  out << "sweep: " << rows.size() << " cells, " << completed << " completed\n";
  return completed > 0 ? kExitOk : kExitError;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  verify::VerifyOptions o;
  o.seed = c.seed;
  o.exp_perturbation = c.exp_perturbation;
  const auto results = verify::run_suite(c.suite, o);
  const std::string report = verify::report_json(results);
  if (c.output_dir) io::write_atomic(*c.output_dir / "verify.json", report);
  out << report;
  return verify::all_passed(results) ? kExitOk : kExitError;
}

int cmd_scale(const RunConfig& c, std::ostream& out) {
  const TimeScale ts = resolve_scale(c);
  io::write_atomic(out_dir(c) / "scale.json", io::scale_to_json(ts));
  out << "scale: " << ts.elements().size() << " elements on ["
      << io::format_double(ts.min()) << ", " << io::format_double(ts.max()) << "]\n";
  return kExitOk;
}

void report_error(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (const auto* s = dynamic_cast<const ScheduleError*>(&e)) {
    for (const auto& f : s->failures()) {
      err << "  node t = " << io::format_double(f.t) << " [" << f.kind << "] "
          << f.message << '\n';
    }
  } else if (const auto* r = dynamic_cast<const RateInadmissibleError*>(&e)) {
    err << "  node t = " << io::format_double(r->node()) << '\n';
  } else if (const auto* d = dynamic_cast<const DivergenceError*>(&e)) {
    err << "  node t = " << io::format_double(d->node()) << '\n';
  } else if (const auto* v = dynamic_cast<const CoverageError*>(&e)) {
    err << "  node t = " << io::format_double(v->node()) << '\n';
  }
}

// Value of --config from argv, read before the flags so flags win.
std::optional<std::string> find_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void add_run_options(CLI::App& cmd, RunConfig& c) {
  cmd.add_option("--config", "JSON file with any of the flags below");
  cmd.add_option_function<std::string>(
      "--scale", [&c](const std::string& v) { c.scale_path = v; },
      "time scale JSON (generated from --seed when omitted)");
  cmd.add_option_function<std::string>(
      "--model", [&c](const std::string& v) { c.model_path = v; },
      "model JSON with A_hat and B_hat (DC motor when omitted)");
  cmd.add_option("--alpha", c.alpha, "decay rate alpha (1/s)");
  cmd.add_option("--k", c.window.k, "window length in scattered jumps");
  cmd.add_option("--delta1", c.window.delta1, "window width at right-dense nodes (s)");
  cmd.add_option("--delta2", c.window.delta2, "pad after sigma^k in the mixed case (s)");
  cmd.add_option("--m-max", c.window.m_max, "cap on the window length (s)");
  cmd.add_option_function<double>("--t0", [&c](double v) { c.t0 = v; }, "start time");
  cmd.add_option_function<double>("--tf", [&c](double v) { c.tf = v; }, "end time");
  cmd.add_option_function<std::vector<double>>(
         "--x0", [&c](const std::vector<double>& v) { c.x0 = v; },
         "initial state, comma separated")
      ->delimiter(',');
  cmd.add_option("--amplitude", c.amplitude, "step reference amplitude");
  cmd.add_option_function<double>(
      "--mesh-h", [&c](double v) { c.mesh_h = v; }, "mesh step on dense parts (s)");
  cmd.add_option("--band", c.band, "settling band as a fraction of the final value");
  cmd.add_option_function<std::string>(
      "-o,--output-dir", [&c](const std::string& v) { c.output_dir = v; },
      "directory for output files");
  cmd.add_option("--seed", c.seed, "seed for generated scales and property sampling");
  cmd.add_option("--generate", c.generator.kind, "generated scale kind")
      ->check(CLI::IsMember({"random", "deadline"}));
  cmd.add_option("--points", c.generator.n_points, "generated scale size");
  cmd.add_option("--mu-lo", c.generator.mu_lo, "smallest generated gap (random kind)");
  cmd.add_option("--mu-hi", c.generator.mu_hi, "largest generated gap (random kind)");
}

}  // namespace

void apply_config_json(const std::string& text, RunConfig& c) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw io::ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw io::ParseError("config: document must be an object");
  reject_unknown(doc,
                 {"scale_path", "model_path", "alpha", "window", "t0", "tf", "x0",
                  "reference", "mesh_h", "band", "output_dir", "seed",
                  "scale_generator", "k_range", "alpha_range", "suite"},
                 "");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "scale_path") c.scale_path = get_as<std::string>(v, key);
    else if (key == "model_path") c.model_path = get_as<std::string>(v, key);
    else if (key == "alpha") c.alpha = get_as<double>(v, key);
    else if (key == "t0") c.t0 = get_as<double>(v, key);
    else if (key == "tf") c.tf = get_as<double>(v, key);
    else if (key == "x0") c.x0 = get_as<std::vector<double>>(v, key);
    else if (key == "mesh_h") c.mesh_h = get_as<double>(v, key);
    else if (key == "band") c.band = get_as<double>(v, key);
    else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "suite") c.suite = get_as<std::string>(v, key);
    else if (key == "window") {
      if (!v.is_object()) throw io::ParseError("config: \"window\" must be an object");
      reject_unknown(v, {"k", "delta1", "delta2", "m_max"}, "window.");
      if (v.contains("k")) c.window.k = get_as<int>(v["k"], "window.k");
      if (v.contains("delta1")) c.window.delta1 = get_as<double>(v["delta1"], "window.delta1");
      if (v.contains("delta2")) c.window.delta2 = get_as<double>(v["delta2"], "window.delta2");
      if (v.contains("m_max")) c.window.m_max = get_as<double>(v["m_max"], "window.m_max");
    } else if (key == "reference") {
      if (!v.is_object()) throw io::ParseError("config: \"reference\" must be an object");
      reject_unknown(v, {"amplitude"}, "reference.");
      if (v.contains("amplitude")) {
        c.amplitude = get_as<double>(v["amplitude"], "reference.amplitude");
      }
    } else if (key == "scale_generator") {
      if (!v.is_object()) {
        throw io::ParseError("config: \"scale_generator\" must be an object");
      }
      reject_unknown(v, {"kind", "n_points", "mu_lo", "mu_hi"}, "scale_generator.");
      if (v.contains("kind")) c.generator.kind = get_as<std::string>(v["kind"], "kind");
      if (v.contains("n_points")) c.generator.n_points = get_as<int>(v["n_points"], "n_points");
      if (v.contains("mu_lo")) c.generator.mu_lo = get_as<double>(v["mu_lo"], "mu_lo");
      if (v.contains("mu_hi")) c.generator.mu_hi = get_as<double>(v["mu_hi"], "mu_hi");
    } else if (key == "k_range") {
      const auto r = get_as<std::vector<int>>(v, key);
      if (r.size() != 2) throw io::ParseError("config: \"k_range\" must be [lo, hi]");
      c.k_lo = r[0];
      c.k_hi = r[1];
    } else if (key == "alpha_range") {
      const auto r = get_as<std::vector<double>>(v, key);
      if (r.size() != 3) {
        throw io::ParseError("config: \"alpha_range\" must be [lo, hi, step]");
      }
      c.alpha_lo = r[0];
      c.alpha_hi = r[1];
      c.alpha_step = r[2];
    }
  }
}

TimeScale resolve_scale(const RunConfig& c) {
  if (c.scale_path) return io::load_scale(*c.scale_path);
  const ScaleGenerator& g = c.generator;
  if (g.n_points < 2) throw ValidationError("generated scale needs at least 2 points");
  if (g.kind == "random") {
    return make_scale(RandomGrid{g.mu_lo, g.mu_hi, g.n_points, c.seed});
  }
  if (g.kind == "deadline") {
    DeadlineScaleSpec spec;
    spec.n_points = g.n_points;
    spec.seed = c.seed;
    return deadline_scale(spec);
  }
  throw ValidationError("unknown scale generator: " + g.kind);
}

ContinuousLTI resolve_model(const RunConfig& c) {
  return c.model_path ? io::load_model(*c.model_path) : motor_model();
}

std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("invalid alpha range");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    if (const auto path = find_config(argc, argv)) {
      apply_config_json(io::read_file(*path), c);
    }
  } catch (const std::exception& e) {
    report_error(e, err);
    return kExitError;
  }

  CLI::App app{"State-feedback stabilization on time scales"};
  app.require_subcommand(1);
  CLI::App* gain = app.add_subcommand("gain", "gain schedule and stability certificate");
  CLI::App* sim = app.add_subcommand("simulate", "closed-loop step response");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "settling time over a k x alpha grid");
  CLI::App* verify_cmd = app.add_subcommand("verify", "property suites");
  CLI::App* scale_cmd = app.add_subcommand("scale", "write the configured scale as JSON");
  for (CLI::App* cmd : {gain, sim, sweep_cmd, verify_cmd, scale_cmd}) {
    add_run_options(*cmd, c);
  }
  sweep_cmd->add_option_function<std::string>(
      "--k-range",
      [&c](const std::string& v) {
        const auto [lo, hi] = parse_pair(v, "--k-range");
        c.k_lo = static_cast<int>(lo);
        c.k_hi = static_cast<int>(hi);
      },
      "inclusive k range lo:hi");
  sweep_cmd->add_option_function<std::string>(
      "--alpha-range",
      [&c](const std::string& v) {
        const auto first = v.find(':');
        const auto last = v.rfind(':');
        if (first == last) throw ValidationError("--alpha-range must be lo:hi:step");
        const auto [lo, hi] = parse_pair(v.substr(0, last), "--alpha-range");
        c.alpha_lo = lo;
        c.alpha_hi = hi;
        c.alpha_step = std::stod(v.substr(last + 1));
      },
      "alpha grid lo:hi:step");
  verify_cmd->add_option("--suite", c.suite, "calculus | gramian | stability | all")
      ->check(CLI::IsMember({"calculus", "gramian", "stability", "all"}));
  verify_cmd->add_option("--perturb-exp", c.exp_perturbation,
                         "relative noise injected into exponentials (mutation check)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kExitOk : kExitError;
  } catch (const std::exception& e) {
    report_error(e, err);
    return kExitError;
  }

  try {
    if (gain->parsed()) return cmd_gain(c, out);
    if (sim->parsed()) return cmd_simulate(c, out);
    if (sweep_cmd->parsed()) return cmd_sweep(c, out);
    if (verify_cmd->parsed()) return cmd_verify(c, out);
    return cmd_scale(c, out);
  } catch (const std::exception& e) {
    report_error(e, err);
    return kExitError;
  }
}

}  // namespace tsfb::cli
