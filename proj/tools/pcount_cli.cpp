// pcount: simulate, fit and diagnose seasonal count series.

#include "pcount/config.hpp"
#include "pcount/diagnostics.hpp"
#include "pcount/estimate.hpp"
#include "pcount/hermite.hpp"
#include "pcount/io.hpp"
#include "pcount/simulate.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#ifndef PCOUNT_VERSION
#define PCOUNT_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using namespace pcount;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::size_t> particles;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> crn_seed;
  std::optional<int> workers;
  bool svg = false;
};

/// Files produced by a command; written only once the command has succeeded.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;
  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

RunConfig resolve(const Overrides& o) {
  RunConfig c = load_config(o.config);
  if (!o.data.empty()) c.data = o.data;
  if (!o.out.empty()) c.out = o.out;
  if (o.particles) c.fit.particles = c.pit.particles = *o.particles;
  if (o.seed) c.simulate.seed = c.study.seed = *o.seed;
  if (o.crn_seed) c.fit.crn_seed = c.pit.crn_seed = *o.crn_seed;
  if (o.workers) c.study.workers = *o.workers;
  if (o.svg) c.svg = true;
  return c;
}

std::string metadata(const std::string& command, const RunConfig& c, const Outputs& out) {
  Json j;
  j["tool"] = "pcount";
  j["version"] = PCOUNT_VERSION;
  j["command"] = command;
  j["config"] = config_json(c);
  Json files = Json::array();
  for (const auto& f : out.files) files.push_back(f.first);
  j["outputs"] = files;
  return j.dump(2) + "\n";
}

void commit(const std::string& command, const RunConfig& c, Outputs out) {
  out.add(command + ".meta.json", metadata(command, c, out));
  const fs::path dir(c.out);
  fs::create_directories(dir);
  // Stage everything first so a failed write leaves no half-written set.
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto& [name, content] : out.files) {
    const fs::path final_path = dir / name;
    fs::path tmp = final_path;
    tmp += ".tmp";
    std::ofstream f(tmp, std::ios::binary);
    f << content;
    f.close();
    if (!f) {
      for (const auto& s : staged) fs::remove(s.first);
      fs::remove(tmp);
      throw std::runtime_error("cannot write '" + final_path.string() + "'");
    }
    staged.emplace_back(tmp, final_path);
  }
  for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
}

CountSeries load_data(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("no data file given (use --data or the config's data key)");
  return read_counts_csv(c.data, c.model.period);
}

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

std::string svg_bars(const std::vector<double>& heights, double reference, const std::string& title) {
  const double W = 480, H = 300, pad = 40;
  double top = reference;
  for (double h : heights) top = std::max(top, h);
  top *= 1.1;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  const double bw = (W - 2 * pad) / heights.size();
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const double h = (H - 2 * pad) * heights[i] / top;
    os << "<rect x=\"" << format_double(pad + i * bw) << "\" y=\"" << format_double(H - pad - h) << "\" width=\""
       << format_double(bw * 0.9) << "\" height=\"" << format_double(h) << "\" fill=\"steelblue\"/>\n";
  }
  const double y = H - pad - (H - 2 * pad) * reference / top;
  os << "<line x1=\"" << pad << "\" x2=\"" << W - pad << "\" y1=\"" << format_double(y) << "\" y2=\""
     << format_double(y) << "\" stroke=\"black\" stroke-dasharray=\"4\"/>\n</svg>\n";
  return os.str();
}

std::string svg_line(const std::vector<double>& values, const std::string& title) {
  const double W = 640, H = 300, pad = 40;
  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = pad + (W - 2 * pad) * i / std::max<std::size_t>(1, values.size() - 1);
    const double y = H - pad - (H - 2 * pad) * (values[i] - lo) / (hi - lo);
    os << format_double(x) << ',' << format_double(y) << ' ';
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------

int run_simulate(const RunConfig& c) {
  const auto [marginal, latent] = c.model.specs();
  const auto series = simulate_counts(marginal, latent, c.simulate.n, c.simulate.seed);
  Outputs out;
  out.add("series.csv", counts_csv(series));
  commit("simulate", c, std::move(out));
  return kOk;
}

Json fit_report(const FitResult& r, const ModelLayout& layout, std::size_t n) {
  Json j;
  j["family"] = std::string(to_string(layout.family()));
  j["latent"] = std::string(to_string(layout.latent()));
  j["period"] = layout.period();
  j["n"] = n;
  j["parameters"] = layout.size();
  Json est = Json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    Json e;
    e["name"] = r.names[i];
    e["estimate"] = r.estimates[i];
    e["se"] = i < r.se.size() ? Json(r.se[i]) : Json(nullptr);
    e["init"] = r.init[i];
    est.push_back(e);
  }
  j["estimates"] = est;
  j["loglik"] = r.loglik;
  j["init_loglik"] = r.init_loglik;
  j["aic"] = r.aic;
  j["bic"] = r.bic;
  j["particles"] = r.particles;
  j["crn_seed"] = r.crn_seed;
  j["final_particles"] = r.final_particles;
  j["loglik_final"] = r.final_particles > 0 ? Json(r.loglik_final) : Json(nullptr);
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.n_evals;
  if (!r.se_warning.empty()) j["se_warning"] = r.se_warning;
  j["se_pseudo_inverse"] = r.se_pseudo_inverse;
  Json rs = Json::array();
  for (const auto& rec : r.restarts) {
    Json e;
    e["start"] = rec.start;
    e["estimates"] = rec.estimates;
    e["loglik"] = rec.loglik;
    e["converged"] = rec.converged;
    rs.push_back(e);
  }
  j["restarts"] = rs;
  j["model"] = model_json(model_from_vector(layout, r.estimates));
  return j;
}

int run_fit(const RunConfig& c) {
  const auto data = load_data(c);
  const auto layout = c.model.layout();
  std::optional<std::vector<double>> init;
  if (c.model.complete()) init = c.model.vector();
  const auto result = fit(data, layout, init, c.fit.options());
  Outputs out;
  out.add("fit.json", fit_report(result, layout, data.size()).dump(2) + "\n");
  std::ostringstream trace;
  trace << "iteration,neg_loglik,projected_gradient,step,evaluations\n";
  for (const auto& row : result.trace)
    trace << row.iteration << ',' << format_double(row.value) << ',' << format_double(row.projected_gradient) << ','
          << format_double(row.step) << ',' << row.evaluations << '\n';
  out.add("trace.csv", trace.str());
  commit("fit", c, std::move(out));
  if (!result.converged) {
    std::cerr << "pcount: optimizer did not converge (" << result.message << ")\n";
    return kNumeric;
  }
  return kOk;
}

int run_pit(const RunConfig& c) {
  const auto data = load_data(c);
  const auto [marginal, latent] = c.model.specs();
  const auto est = ghk_loglik(marginal, latent, data, {c.pit.particles, c.pit.crn_seed, true});
  const auto summary = pit_summary_from(est.pit_lower, est.pit_upper, c.pit.bins);
  const auto res = residuals_from(est.pit_lower, est.pit_upper);
  const int max_lag = std::min<int>(c.pit.max_lag, static_cast<int>(res.size()) - 1);
  const auto cg = acf_pacf(res, max_lag);
  const auto chi = pit_chi_square(summary);

  Outputs out;
  std::ostringstream bins;
  bins << "bin,lower,upper,mass\n";
  for (int j = 0; j < summary.bins; ++j)
    bins << j + 1 << ',' << format_double(summary.edges[j]) << ',' << format_double(summary.edges[j + 1]) << ','
         << format_double(summary.masses[j]) << '\n';
  out.add("pit_bins.csv", bins.str());
  std::ostringstream rs;
  rs << "t,pit_lower,pit_upper,residual\n";
  for (std::size_t i = 0; i < res.size(); ++i)
    rs << i + 1 << ',' << format_double(est.pit_lower[i]) << ',' << format_double(est.pit_upper[i]) << ','
       << format_double(res[i]) << '\n';
  out.add("residuals.csv", rs.str());
  std::ostringstream ac;
  ac << "lag,acf,pacf\n";
  for (int h = 0; h <= max_lag; ++h)
    ac << h << ',' << format_double(cg.acf[h]) << ',' << format_double(cg.pacf[h]) << '\n';
  out.add("residual_acf.csv", ac.str());
  double mean = 0.0;
  for (double r : res) mean += r;
  mean /= static_cast<double>(res.size());
  Json j;
  j["loglik"] = est.loglik;
  j["particles"] = est.particles;
  j["crn_seed"] = est.crn_seed;
  j["bins"] = summary.bins;
  j["masses"] = summary.masses;
  j["chi_square"] = chi.statistic;
  j["df"] = chi.df;
  j["p_value"] = chi.p_value;
  j["residual_mean"] = mean;
  out.add("pit.json", j.dump(2) + "\n");
  if (c.svg) {
    out.add("pit.svg", svg_bars(summary.masses, 1.0 / summary.bins, "PIT histogram"));
    out.add("residuals.svg", svg_line(res, "Residuals"));
  }
  commit("pit", c, std::move(out));
  return kOk;
}

int run_link(const RunConfig& c) {
  const auto [marginal, latent] = c.model.specs();
  (void)latent;
  const auto table = make_link_table(marginal, c.link.season1, c.link.season2, c.link.order);
  const auto bounds = correlation_bounds(marginal, c.link.season1, c.link.season2);
  Outputs out;
  std::ostringstream os;
  os << "u,link,derivative\n";
  std::vector<double> curve;
  for (int i = 0; i < c.link.grid; ++i) {
    const double u = -1.0 + 2.0 * i / (c.link.grid - 1);
    const double L = link_eval(table, u);
    curve.push_back(L);
    os << format_double(u) << ',' << format_double(L) << ','
       << (std::abs(u) < 1.0 ? format_double(link_derivative(table, u)) : std::string("NA")) << '\n';
  }
  out.add("link.csv", os.str());
  Json j;
  j["season1"] = c.link.season1;
  j["season2"] = c.link.season2;
  j["order"] = c.link.order;
  j["coefficients"] = table.coef;
  j["link_at_0"] = link_eval(table, 0.0);
  j["link_at_1"] = link_eval(table, 1.0);
  j["link_at_minus_1"] = link_eval(table, -1.0);
  j["min_correlation"] = bounds.min;
  j["max_correlation"] = bounds.max;
  out.add("link.json", j.dump(2) + "\n");
  if (c.svg) out.add("link.svg", svg_line(curve, "Link function on [-1, 1]"));
  commit("link", c, std::move(out));
  return kOk;
}

struct Replicate {
  bool ok = false;
  bool converged = false;
  std::string error;
  double loglik = 0.0;
  std::vector<double> est;
  std::vector<double> se;
};

int run_study(const RunConfig& c) {
  const auto [marginal, latent] = c.model.specs();
  const auto layout = c.model.layout();
  const auto truth = c.model.vector();
  const int R = c.study.replicates;
  std::vector<Replicate> reps(R);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r; (r = next.fetch_add(1)) < R;) {
      Replicate& rep = reps[r];
      try {
        const auto data = simulate_counts(marginal, latent, c.study.n, c.study.seed + static_cast<std::uint64_t>(r));
        const auto res = fit(data, layout, truth, c.fit.options());
        rep.ok = true;
        rep.converged = res.converged;
        rep.loglik = res.loglik;
        rep.est = res.estimates;
        rep.se = res.se;
      } catch (const std::exception& e) {
        rep.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min(c.study.workers, R));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const auto names = layout.names();
  std::ostringstream rows;
  rows << "replicate,seed,status,converged,loglik";
  for (const auto& n : names) rows << ',' << n;
  for (const auto& n : names) rows << ",se_" << n;
  rows << '\n';
  int failures = 0;
  for (int r = 0; r < R; ++r) {
    const auto& rep = reps[r];
    rows << r + 1 << ',' << c.study.seed + static_cast<std::uint64_t>(r) << ',' << (rep.ok ? "ok" : "failed") << ','
         << (rep.converged ? 1 : 0) << ',' << (rep.ok ? format_double(rep.loglik) : "NA");
    for (std::size_t i = 0; i < names.size(); ++i) rows << ',' << (rep.ok ? format_double(rep.est[i]) : "NA");
    for (std::size_t i = 0; i < names.size(); ++i)
      rows << ',' << (rep.ok && i < rep.se.size() ? format_double(rep.se[i]) : "NA");
    rows << '\n';
    if (!rep.ok) {
      ++failures;
      std::cerr << "pcount: replicate " << r + 1 << " failed: " << rep.error << '\n';
    }
  }
  std::ostringstream table;
  table << "parameter,truth,mean,sd,mean_se,replicates,failures\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    double sum = 0.0, sum2 = 0.0, se_sum = 0.0;
    int k = 0, k_se = 0;
    for (const auto& rep : reps) {
      if (!rep.ok) continue;
      sum += rep.est[i];
      sum2 += rep.est[i] * rep.est[i];
      ++k;
      if (i < rep.se.size() && std::isfinite(rep.se[i])) {
        se_sum += rep.se[i];
        ++k_se;
      }
    }
    const double mean = k > 0 ? sum / k : std::nan("");
    const std::string sd = k > 1 ? format_double(std::sqrt(std::max(0.0, (sum2 - k * mean * mean) / (k - 1)))) : "NA";
    table << names[i] << ',' << format_double(truth[i]) << ',' << (k > 0 ? format_double(mean) : "NA") << ',' << sd
          << ',' << (k_se > 0 ? format_double(se_sum / k_se) : "NA") << ',' << k << ',' << failures << '\n';
  }
  Outputs out;
  out.add("study.csv", table.str());
  out.add("study_replicates.csv", rows.str());
  commit("study", c, std::move(out));
  return failures == R ? kNumeric : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcount: simulate, fit and diagnose seasonal count time series"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    if (needs_data) sub->add_option("--data", o.data, "count CSV with header t,count (overrides config)");
    sub->add_option("--out", o.out, "output directory (default from config: out)");
    sub->add_option("--particles", o.particles, "GHK particles for fit/pit (default 500)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "simulation seed for simulate/study (default 1)");
    sub->add_option("--crn-seed", o.crn_seed, "common-random-number seed for fit/pit (default 1)");
    sub->add_option("--workers", o.workers, "worker threads for study (default 1)")->check(CLI::PositiveNumber);
    sub->add_flag("--svg", o.svg, "also write SVG plots");
  };
  auto* sim = app.add_subcommand("simulate", "simulate a count series from a fully specified model");
  auto* fitc = app.add_subcommand("fit", "maximum simulated likelihood fit (exit 4 if not converged)");
  auto* pit = app.add_subcommand("pit", "PIT histogram, residuals and residual ACF/PACF");
  auto* link = app.add_subcommand("link", "link function and correlation bounds for two seasons");
  auto* study = app.add_subcommand("study", "replicate simulation study (simulate + fit)");
  add_common(sim, false);
  add_common(fitc, true);
  add_common(pit, true);
  add_common(link, false);
  add_common(study, false);
  auto* cfg = app.add_subcommand("config", "configuration utilities");
  bool print_defaults = false;
  cfg->add_flag("--print-defaults", print_defaults, "print the default configuration as JSON");
  app.footer(
      "Config keys (JSON): model{period, marginal{family, <curves>}, latent{kind, ...}}, data, out, svg,\n"
      "simulate{n=300, seed=1}, fit{particles=500, crn_seed=1, final_particles=5000, restarts=3,\n"
      "restart_seed=12345, max_iterations=200, ftol=1e-6, gtol=1e-5, standard_errors=true},\n"
      "pit{particles=500, crn_seed=1, bins=10, max_lag=20}, link{season1=1, season2=1, order=30, grid=41},\n"
      "study{replicates=20, n=300, seed=1, workers=1}.\n"
      "Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (cfg->parsed()) {
      if (!print_defaults) {
        std::cerr << "pcount config: nothing to do (try --print-defaults)\n";
        return kConfig;
      }
      std::cout << config_json(default_config()).dump(2) << '\n';
      return kOk;
    }
    const RunConfig c = resolve(o);
    if (sim->parsed()) return run_simulate(c);
    if (fitc->parsed()) return run_fit(c);
    if (pit->parsed()) return run_pit(c);
    if (link->parsed()) return run_link(c);
    if (study->parsed()) return run_study(c);
  } catch (const ConfigError& e) {
    std::cerr << "pcount: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "pcount: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "pcount: data error: " << e.what() << '\n';
    return kData;
  } catch (const LikelihoodUnderflow& e) {
    std::cerr << "pcount: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "pcount: numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kConfig;
}
