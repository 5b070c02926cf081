// Copyright 2026 The dqfi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dqfi/errors.hpp"
#include "dqfi/fisher.hpp"
#include "dqfi/generator.hpp"
#include "dqfi/model_dsl.hpp"
#include "dqfi/spectral.hpp"
#include "dqfi/twolevel.hpp"

#ifndef DQFI_VERSION
#define DQFI_VERSION "0.0.0"
#endif

namespace {

using namespace dqfi;

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("dqfi");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("DQFI_LOG");
  const std::string level = env ? env : "warn";
  const std::map<std::string, spdlog::level::level_enum> levels{{"error", spdlog::level::err},
                                                                 {"warn", spdlog::level::warn},
                                                                 {"info", spdlog::level::info},
                                                                 {"debug", spdlog::level::debug}};
  auto it = levels.find(level);
  spdlog::set_level(it != levels.end() ? it->second : spdlog::level::warn);
  if (it == levels.end()) spdlog::warn("DQFI_LOG='{}' is not one of error, warn, info, debug", level);
}

class Csv {
 public:
  explicit Csv(std::ostream& os) : os_(os) {}
  void meta(const std::string& key, const std::string& value) { os_ << "# " << key << ": " << value << "\n"; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os_ << (k ? "," : "") << cells[k];
    os_ << "\n";
  }

 private:
  std::ostream& os_;
};

// Output goes to `path`, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw InputError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw InputError("write failed");
  }

 private:
  std::ofstream file_;
};

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 10.0;
  std::size_t nt = 101;

  void validate() const {
    if (!(t0 >= 0.0) || !std::isfinite(t1) || !(t1 > t0)) throw InputError("time grid needs 0 <= t0 < t1");
    if (nt < 2) throw InputError("time grid needs nt >= 2");
  }
  std::vector<double> values() const {
    std::vector<double> v(nt);
    for (std::size_t k = 0; k < nt; ++k)
      v[k] = k + 1 == nt ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(nt - 1);
    return v;
  }
  std::string describe() const { return "t0=" + num(t0) + " t1=" + num(t1) + " nt=" + std::to_string(nt) + " linear"; }
};

// Evaluates f(0..count-1) on `jobs` threads; results keep index order and the
// lowest-index exception is rethrown.
template <class F>
auto parallel_map(std::size_t count, std::size_t jobs, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  std::vector<decltype(f(std::size_t{0}))> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        out[k] = f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Options {
  std::string model;
  std::optional<double> theta;
  std::optional<double> t0;
  std::optional<double> t1;
  std::optional<std::size_t> nt;
  std::vector<double> params;
  std::string vary;
  std::vector<std::string> sets;
  std::string route = "auto";
  std::optional<std::size_t> n;
  std::string out = "-";
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string figure = "all";
  std::string outdir = ".";
};

struct LoadedModel {
  dsl::ModelSpec spec;
  std::map<std::string, double> overrides;
  std::map<std::string, double> constants;
  std::string hash;
};

LoadedModel load(const Options& o) {
  if (o.model.empty()) throw InputError("--model is required");
  LoadedModel m;
  m.spec = dsl::load_model(o.model);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--set expects NAME=VALUE, got '" + s + "'");
    try {
      std::size_t used = 0;
      const std::string value = s.substr(eq + 1);
      m.overrides[s.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw InputError("--set value is not a number in '" + s + "'");
    }
  }
  m.constants = dsl::constant_values(m.spec, m.overrides);
  m.hash = dsl::model_hash(m.spec);
  spdlog::info("loaded model '{}' (dim {}, hash {})", m.spec.name, m.spec.resolved_dim, m.hash);
  return m;
}

double theta_of(const Options& o, const LoadedModel& m) { return o.theta.value_or(m.spec.default_value); }

double sweep_value(const dsl::ExprPtr& e, const LoadedModel& m) { return dsl::evaluate(*e, m.constants); }

TimeGrid time_grid(const Options& o, const LoadedModel& m) {
  TimeGrid g;
  const dsl::SweepSpec& s = m.spec.sweep;
  if (s.t0) g.t0 = sweep_value(s.t0, m);
  if (s.t1) g.t1 = sweep_value(s.t1, m);
  if (s.nt) g.nt = *s.nt;
  if (o.t0) g.t0 = *o.t0;
  if (o.t1) g.t1 = *o.t1;
  if (o.nt) g.nt = *o.nt;
  g.validate();
  return g;
}

std::optional<Route> route_of(const std::string& name) {
  if (name == "auto") return std::nullopt;
  return parse_route(name);
}

std::string joined(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + num(v[k]);
  return s;
}

void common_meta(Csv& csv, const std::string& command, const LoadedModel& m) {
  csv.meta("dqfi", DQFI_VERSION);
  csv.meta("command", command);
  csv.meta("model", (m.spec.name.empty() ? std::string("unnamed") : m.spec.name) + " hash=" + m.hash);
  for (const auto& [name, value] : m.overrides) csv.meta("set", name + "=" + num(value));
}

OpenSystemModel compile_at(const LoadedModel& m, const std::map<std::string, double>& extra = {}) {
  std::map<std::string, double> ov = m.overrides;
  for (const auto& [k, v] : extra) ov[k] = v;
  return dsl::compile(m.spec, ov);
}

int cmd_spectrum(const Options& o) {
  const LoadedModel m = load(o);
  const double theta = theta_of(o, m);
  const OpenSystemModel model = compile_at(m);
  const LiouvillianMatrix L = build_liouvillian(model, theta);
  const BiorthogonalSpectrum s = biorthogonal_spectrum(L);
  std::vector<bool> ep(s.size(), false);
  for (const auto& c : detect_eps(s))
    if (c.order >= 2)
      for (std::size_t k : c.members) ep[k] = true;

  Output out(o.out);
  Csv csv(out.stream());
  common_meta(csv, "spectrum", m);
  csv.meta("parameter", m.spec.parameter + "=" + num(theta));
  csv.row({"index", "re", "im", "left_norm", "ep_flag"});
  for (std::size_t k = 0; k < s.size(); ++k)
    csv.row({std::to_string(k + 1), num(s.values[k].real()), num(s.values[k].imag()), num(s.left[k].norm()),
             ep[k] ? "1" : "0"});
  out.finish();
  return 0;
}

int cmd_generator(const Options& o) {
  const LoadedModel m = load(o);
  const double theta = theta_of(o, m);
  const TimeGrid grid = time_grid(o, m);
  const OpenSystemModel model = compile_at(m);
  const LiouvillianMatrix L = build_liouvillian(model, theta);
  const CMatrix dL = d_liouvillian(model, theta);
  std::optional<BiorthogonalSpectrum> spec;
  try {
    spec = biorthogonal_spectrum(L);
  } catch (const NumericError& e) {
    spdlog::warn("spectrum unavailable ({}); using quadrature", e.what());
  }
  Route r = route_of(o.route).value_or(spec ? select_route(*spec) : Route::Quadrature);
  bool fallback = false;
  if (r == Route::Spectral && (!spec || spec->ill_conditioned)) {
    r = Route::Quadrature;
    fallback = true;
  }
  const std::vector<double> ts = grid.values();
  const auto gens = parallel_map(ts.size(), o.jobs, [&](std::size_t k) {
    switch (r) {
      case Route::Spectral: return generator_spectral(*spec, dL, ts[k]);
      case Route::PropagatorFd: return generator_propagator_fd(model, theta, ts[k]);
      default: return generator_quadrature(L.matrix, dL, ts[k]);
    }
  });

  Output out(o.out);
  Csv csv(out.stream());
  common_meta(csv, "generator", m);
  csv.meta("parameter", m.spec.parameter + "=" + num(theta));
  csv.meta("grid", grid.describe());
  csv.meta("route", o.route);
  csv.row({"t", "row", "col", "re", "im", "route"});
  const std::string label = route_name(r) + (fallback ? "(fallback)" : "");
  const std::size_t n = L.matrix.rows();
  for (std::size_t k = 0; k < ts.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        csv.row({num(ts[k]), std::to_string(i + 1), std::to_string(j + 1), num(gens[k].xi(i, j).real()),
                 num(gens[k].xi(i, j).imag()), label});
  out.finish();
  return 0;
}

// Uniform superposition of the computational basis; (|e> + |g>)/sqrt(2) for a qubit.
LiouvilleState uniform_probe(std::size_t M) {
  CMatrix rho(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) rho(i, j) = 1.0 / static_cast<double>(M);
  return make_state(rho);
}

int cmd_dqfi(const Options& o, bool sweep) {
  const LoadedModel m = load(o);
  const TimeGrid grid = time_grid(o, m);
  const bool vary_const = !o.vary.empty() && o.vary != m.spec.parameter;
  if (vary_const && !m.constants.count(o.vary)) throw InputError("--vary names no constant '" + o.vary + "'");
  const std::string varied = vary_const ? o.vary : m.spec.parameter;

  std::vector<double> params = o.params;
  if (params.empty() && sweep)
    for (const auto& e : m.spec.sweep.params) params.push_back(sweep_value(e, m));
  if (params.empty()) {
    if (sweep) throw InputError("sweep needs --params or a [sweep] params line");
    params.push_back(vary_const ? m.constants.at(o.vary) : theta_of(o, m));
  }

  EvaluateOptions eo;
  eo.route = route_of(o.route);
  eo.protocols = o.n.value_or(1);
  if (eo.protocols == 0) throw InputError("--n must be positive");

  std::vector<Evaluator> evals;
  for (double p : params) {
    const OpenSystemModel model = vary_const ? compile_at(m, {{o.vary, p}}) : compile_at(m);
    const double theta = vary_const ? theta_of(o, m) : p;
    evals.emplace_back(model, theta, uniform_probe(model.dim()), eo);
  }
  const std::vector<double> ts = grid.values();
  const auto rows = parallel_map(params.size() * ts.size(), o.jobs,
                                 [&](std::size_t k) { return evals[k / ts.size()].at(ts[k % ts.size()]); });

  Output out(o.out);
  Csv csv(out.stream());
  common_meta(csv, sweep ? "sweep" : "dqfi", m);
  if (vary_const) csv.meta("parameter", m.spec.parameter + "=" + num(theta_of(o, m)));
  csv.meta("vary", varied);
  csv.meta("params", joined(params));
  csv.meta("grid", grid.describe());
  csv.meta("route", o.route);
  std::vector<std::string> header{"t", "param", "dqfi", "cqfi", "purity", "bound", "route", "residual"};
  if (o.n) {
    csv.meta("protocols", std::to_string(*o.n));
    header.push_back("crb_dqfi");
    header.push_back("crb_cqfi");
  }
  csv.row(header);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const FisherResult& r = rows[k];
    auto res = r.route_residuals.find(Route::Frechet);
    std::vector<std::string> cells{num(r.t),
                                   num(params[k / ts.size()]),
                                   num(r.dqfi),
                                   opt_num(r.cqfi),
                                   num(r.purity),
                                   opt_num(r.bound),
                                   route_label(r),
                                   res != r.route_residuals.end() ? num(res->second) : num(0.0)};
    if (o.n) {
      cells.push_back(num(r.var_bound));
      cells.push_back(r.cqfi ? num(crb_bounds(*r.cqfi, *o.n)) : std::string());
    }
    csv.row(cells);
  }
  out.finish();
  spdlog::info("wrote {} rows", rows.size());
  return 0;
}

void write_figure(Figure f, const std::filesystem::path& dir) {
  const FigureGrid grid = default_grid(f);
  const std::vector<AnalyticCurve> curves = figure_data(f, grid);
  const int number = f == Figure::Fig1 ? 1 : f == Figure::Fig2 ? 2 : 3;
  const std::filesystem::path path = dir / ("fig" + std::to_string(number) + ".csv");
  Output out(path.string());
  Csv csv(out.stream());
  csv.meta("dqfi", DQFI_VERSION);
  csv.meta("command", "reproduce");
  csv.meta("model", "built-in spin-flip, omega=1, probe (|e>+|g>)/sqrt(2)");
  csv.meta("figure", std::to_string(number));
  csv.meta("grid", "start=" + num(grid.start) + " stop=" + num(grid.stop) + " points=" + std::to_string(grid.points) +
                       " linear");
  const std::vector<double> x = grid.values();
  if (f == Figure::Fig1) {
    std::vector<std::string> header{"gamma_over_omega"};
    for (const auto& c : curves)
      header.push_back(std::string(c.label == CurveLabel::EigReal ? "re" : "im") + "_L" + std::to_string(c.eigen_index));
    csv.row(header);
    for (std::size_t k = 0; k < x.size(); ++k) {
      std::vector<std::string> cells{num(x[k])};
      for (const auto& c : curves) cells.push_back(num(c.values[k]));
      csv.row(cells);
    }
  } else {
    csv.meta("rates", joined(figure_rates()));
    if (f == Figure::Fig2) csv.row({"t", "gamma_x", "dqfi"});
    else csv.row({"t", "gamma_x", "dqfi", "cqfi"});
    for (double g : figure_rates()) {
      const AnalyticCurve* d = nullptr;
      const AnalyticCurve* c = nullptr;
      for (const auto& cv : curves) {
        if (cv.gamma_x != g) continue;
        (cv.label == CurveLabel::Dqfi ? d : c) = &cv;
      }
      if (!d || (f == Figure::Fig3 && !c)) throw NumericError("figure data is missing a curve");
      for (std::size_t k = 0; k < x.size(); ++k) {
        std::vector<std::string> cells{num(x[k]), num(g), num(d->values[k])};
        if (f == Figure::Fig3) cells.push_back(num(c->values[k]));
        csv.row(cells);
      }
    }
  }
  out.finish();
  spdlog::info("wrote {}", path.string());
}

int cmd_reproduce(const Options& o) {
  const std::filesystem::path dir(o.outdir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw InputError("cannot create output directory '" + dir.string() + "'");
  std::vector<Figure> figs;
  if (o.figure == "1" || o.figure == "all") figs.push_back(Figure::Fig1);
  if (o.figure == "2" || o.figure == "all") figs.push_back(Figure::Fig2);
  if (o.figure == "3" || o.figure == "all") figs.push_back(Figure::Fig3);
  for (Figure f : figs) write_figure(f, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Dissipative quantum Fisher information for Lindblad models"};
  app.set_version_flag("--version", std::string(DQFI_VERSION));
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", o.model, "Model file")->required();
    c->add_option("--theta", o.theta, "Parameter value (default: the model's default)");
    c->add_option("--set", o.sets, "Override a model constant, NAME=VALUE");
  };
  auto add_grid = [&](CLI::App* c) {
    c->add_option("--t0", o.t0, "First time");
    c->add_option("--t1", o.t1, "Last time");
    c->add_option("--nt", o.nt, "Number of time points");
    c->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "Output CSV path, '-' for stdout");
  };
  const std::vector<std::string> routes{"auto", "spectral", "quadrature", "fd"};

  auto* spectrum = app.add_subcommand("spectrum", "Biorthogonal spectrum of L(theta)");
  add_model(spectrum);
  spectrum->add_option("--out", o.out, "Output CSV path, '-' for stdout");

  auto* generator = app.add_subcommand("generator", "Dissipative generator matrix over a time grid");
  add_model(generator);
  add_grid(generator);
  generator->add_option("--route", o.route, "Generator route")->check(CLI::IsMember(routes));

  std::vector<CLI::App*> fisher_cmds;
  for (const char* name : {"dqfi", "sweep"}) {
    auto* c = app.add_subcommand(name, std::string(name) == "dqfi" ? "DQFI and CQFI over a time grid"
                                                                    : "DQFI and CQFI over parameters and times");
    add_model(c);
    add_grid(c);
    c->add_option("--params", o.params, "Comma-separated values of the varied quantity")->delimiter(',');
    c->add_option("--vary", o.vary, "Constant to vary instead of the model parameter");
    c->add_option("--route", o.route, "Generator route")->check(CLI::IsMember(routes));
    c->add_option("--n", o.n, "Protocol count for the Cramer-Rao columns");
    fisher_cmds.push_back(c);
  }

  auto* reproduce = app.add_subcommand("reproduce", "Write the spin-flip figure data");
  reproduce->add_option("--figure", o.figure, "1, 2, 3 or all")->check(CLI::IsMember({"1", "2", "3", "all"}));
  reproduce->add_option("--out", o.outdir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*spectrum) return cmd_spectrum(o);
    if (*generator) return cmd_generator(o);
    if (*fisher_cmds[0]) return cmd_dqfi(o, false);
    if (*fisher_cmds[1]) return cmd_dqfi(o, true);
    if (*reproduce) return cmd_reproduce(o);
  } catch (const dsl::ModelError& e) {
    spdlog::error("{}: {}", o.model, e.what());
    return kExitInput;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const DomainError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kExitNumeric;
  }
  return kExitInput;
}
