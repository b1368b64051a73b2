#include "lpde/cli.hpp"

#include "lpde/analysis.hpp"
#include "lpde/bandwidth.hpp"
#include "lpde/bivariate.hpp"
#include "lpde/boundary.hpp"
#include "lpde/closedform.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

namespace lpde {

namespace {

std::string
trim(const std::string& s)
{
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return {};
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::optional<double>
to_double(const std::string& s)
{
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::vector<double>
parse_list(const std::string& spec, const std::string& what)
{
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = to_double(trim(item));
    if (!v)
      throw InputError("bad number '" + item + "' in " + what);
    out.push_back(*v);
  }
  if (out.empty())
    throw InputError(what + " is empty");
  return out;
}

struct Options
{
  std::string in;
  std::string out;
  std::string model = "loglinear";
  std::string weights = "score";
  std::string kernel = "gaussian";
  std::optional<double> h;
  std::string h_select;
  std::string grid = "auto";
  std::string f_init;
  std::uint64_t seed = 1;
  bool support_zero = false;
  bool bivariate = false;
  int threads = 1;

  std::string density;
  int n = 500;
  int reps = 200;
  std::string estimator = "classic";
  double x = 0.5;
  double p = 0.5;
  std::string h_list;
};

void
add_shared(CLI::App* sub, Options& o)
{
  sub->add_option("--in", o.in, "input file, one observation per line");
  sub->add_option("--out", o.out, "output CSV (default: standard output)");
  sub->add_option("--model", o.model,
                  "constant|linear|loglinear|logquad|normal|mult-const|"
                  "mult-loglinear|hjort-glad|polyexp:p|binormal-product");
  sub->add_option("--weights", o.weights, "score|powers|l2");
  sub->add_option("--kernel", o.kernel, "gaussian|uniform|epanechnikov|biweight");
  sub->add_option("--h", o.h, "bandwidth")->check(CLI::PositiveNumber);
  sub->add_option("--h-select", o.h_select, "lscv|plugin-ratio")
    ->check(CLI::IsMember({ "lscv", "plugin-ratio" }));
  sub->add_option("--grid", o.grid, "min:max:count or auto");
  sub->add_option("--f-init", o.f_init, "parametric start, e.g. normal:0,1");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_flag("--support-zero", o.support_zero, "density supported on [0, inf)");
  sub->add_flag("--bivariate", o.bivariate, "two comma-separated coordinates per line");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

class Output
{
public:
  Output(const std::string& path, std::ostream& fallback)
  {
    if (!path.empty()) {
      file_.open(path);
      if (!file_)
        throw InputError("cannot open '" + path + "' for writing");
    }
    os_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& os() { return *os_; }

  void row(const std::vector<std::string>& cells)
  {
    for (std::size_t i = 0; i < cells.size(); ++i)
      *os_ << (i ? "," : "") << cells[i];
    *os_ << '\n';
  }

private:
  std::ofstream file_;
  std::ostream* os_;
};

Vec
load_sample(const std::string& path)
{
  if (path.empty())
    throw InputError("--in is required");
  std::ifstream f(path);
  if (!f)
    throw InputError("cannot read '" + path + "'");
  return read_sample(f);
}

Mat
load_sample2d(const std::string& path)
{
  if (path.empty())
    throw InputError("--in is required");
  std::ifstream f(path);
  if (!f)
    throw InputError("cannot read '" + path + "'");
  return read_sample2d(f);
}

std::function<double(double)>
start_density(const Options& o, const Vec* data, std::string& name)
{
  if (!o.f_init.empty()) {
    name = o.f_init;
    return TrueDensity::from_name(o.f_init).as_function();
  }
  name = "normal-mle";
  NormalDensity nd = data ? NormalDensity::fit(*data) : NormalDensity{};
  return [nd](double t) { return nd(t); };
}

FamilyPtr
make_family(const Options& o, const std::string& id, const Vec* data)
{
  if (id == "constant")
    return family_polyexp(1);
  if (id == "linear")
    return family_linear();
  if (id == "loglinear")
    return family_polyexp(2);
  if (id == "logquad")
    return family_polyexp(3);
  if (id == "normal")
    return family_normal();
  if (id.rfind("polyexp:", 0) == 0) {
    auto p = to_double(id.substr(8));
    if (!p || *p != std::floor(*p) || *p < 1 || *p > 4)
      throw InputError("polyexp order must be 1..4");
    return family_polyexp(static_cast<int>(*p));
  }
  if (id == "mult-const" || id == "mult-loglinear") {
    std::string name;
    auto f0 = start_density(o, data, name);
    return family_mult_correction(f0, id == "mult-const" ? 1 : 2, 0.0, name);
  }
  if (id == "binormal-product")
    throw InputError("binormal-product needs --bivariate");
  throw InputError("unknown model '" + id + "'");
}

Family2DPtr
make_family2d(const std::string& id)
{
  if (id == "constant")
    return family2d_constant();
  if (id == "loglinear")
    return family2d_loglinear();
  if (id == "logquad")
    return family2d_logquad();
  if (id == "binormal-product")
    return family2d_binormal();
  throw InputError("model '" + id + "' has no bivariate version");
}

Kernel
make_kernel(const std::string& id)
{
  try {
    return Kernel::from_name(id);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

WeightKind
make_weights(const std::string& id)
{
  try {
    return weight_kind_from_name(id);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

TrueDensity
make_density(const std::string& spec)
{
  try {
    return TrueDensity::from_name(spec);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

FitConfig
fit_config(const Options& o)
{
  FitConfig cfg;
  if (o.support_zero)
    cfg.support_lower = 0.0;
  cfg.threads = o.threads;
  cfg.warm_start = o.threads <= 1;
  return cfg;
}

Vec
grid_for(const Options& o, double lo, double hi, double pad)
{
  if (o.grid != "auto")
    return parse_grid(o.grid);
  lo -= pad;
  if (o.support_zero)
    lo = std::max(lo, 0.0);
  return Vec::LinSpaced(101, lo, hi + pad);
}

std::vector<double>
h_list_or(const Options& o, std::vector<double> fallback)
{
  if (o.h_list.empty())
    return fallback;
  auto hs = parse_list(o.h_list, "--h-list");
  for (double h : hs)
    if (!(h > 0.0))
      throw InputError("--h-list values must be positive");
  return hs;
}

std::vector<std::string>
theta_header(const LocalFamily& fam, bool log_suffix)
{
  std::vector<std::string> cols;
  auto flags = fam.log_scale();
  for (int j = 0; j < fam.dim(); ++j)
    cols.push_back("theta_" + std::to_string(j + 1) + (log_suffix && flags[j] ? "_log" : ""));
  return cols;
}

std::vector<std::string>
theta_header2d(const LocalFamily2D& fam, bool log_suffix)
{
  std::vector<std::string> cols;
  auto flags = fam.log_scale();
  for (int j = 0; j < fam.dim(); ++j)
    cols.push_back("theta_" + std::to_string(j + 1) + (log_suffix && flags[j] ? "_log" : ""));
  return cols;
}

void
append_theta(std::vector<std::string>& row, const ParamVector& th, bool internal)
{
  Vec v = internal ? th.values : th.decoded();
  for (Eigen::Index j = 0; j < v.size(); ++j)
    row.push_back(format_number(v(j)));
}

bool
failure_rate_exceeded(std::size_t failures, std::size_t total)
{
  return failures * 10 > total;
}

double
resolve_h(const Options& o, const LocalFamily& fam, const WeightScheme& scheme,
          const Kernel& k, const Vec& data, const FitConfig& cfg, std::ostream& err)
{
  if (o.h)
    return *o.h;
  if (o.h_select == "lscv") {
    auto sel = select_h_lscv(fam, scheme, k, data, {}, cfg, o.threads);
    if (!sel.ok)
      throw std::domain_error("bandwidth selection failed: " + sel.diagnostic);
    err << "lscv selected h = " << format_number(sel.h_selected) << '\n';
    return sel.h_selected;
  }
  if (o.h_select == "plugin-ratio") {
    auto pr = plugin_ratio(fam, scheme, k, data, cfg);
    err << "plugin-ratio selected h = " << format_number(pr.h_selected) << '\n';
    return pr.h_selected;
  }
  return normal_reference_h(data);
}

int
cmd_estimate2d(const Options& o, bool trace, std::ostream& out, std::ostream& err)
{
  if (!o.h_select.empty())
    throw InputError("bandwidth selection is univariate only");
  Mat raw = load_sample2d(o.in);
  Sample2D data = raw;
  auto fam = make_family2d(o.model);
  WeightKind kind = make_weights(o.weights);
  if (kind == WeightKind::powers)
    throw InputError("bivariate fits take score or l2 weights");
  Kernel k = make_kernel(o.kernel);
  FitConfig cfg = fit_config(o);
  cfg.support_lower = -std::numeric_limits<double>::infinity();
  double h[2];
  Vec grid[2];
  for (int i = 0; i < 2; ++i) {
    h[i] = o.h ? *o.h : normal_reference_h(data.col(i));
    grid[i] = grid_for(o, data.col(i).minCoeff(), data.col(i).maxCoeff(), 3.0 * h[i]);
    if (o.grid == "auto")
      grid[i] = Vec::LinSpaced(41, grid[i](0), grid[i](grid[i].size() - 1));
  }
  Estimate2D est = fit2d_grid(*fam, { kind }, k, k, h[0], h[1], data, grid[0], grid[1], cfg);

  Output csv(o.out, out);
  std::vector<std::string> head = { "x1", "x2" };
  auto th = theta_header2d(*fam, trace);
  if (trace) {
    head.insert(head.end(), th.begin(), th.end());
    head.push_back("status");
  } else {
    head.insert(head.end(), { "f_hat", "status" });
    head.insert(head.end(), th.begin(), th.end());
  }
  csv.row(head);
  const Eigen::Index m2 = grid[1].size();
  for (std::size_t r = 0; r < est.status.size(); ++r) {
    Eigen::Index i = static_cast<Eigen::Index>(r) / m2, j = static_cast<Eigen::Index>(r) % m2;
    std::vector<std::string> row = { format_number(grid[0](i)), format_number(grid[1](j)) };
    if (trace) {
      append_theta(row, est.theta_trace[r], true);
      row.push_back(to_string(est.status[r]));
    } else {
      row.push_back(format_number(est.f_hat(i, j)));
      row.push_back(to_string(est.status[r]));
      append_theta(row, est.theta_trace[r], false);
    }
    csv.row(row);
  }
  std::size_t bad = est.count(FitStatus::max_iter) + est.count(FitStatus::degenerate);
  if (failure_rate_exceeded(bad, est.status.size())) {
    err << bad << " of " << est.status.size() << " grid points failed\n";
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

int
cmd_estimate(const Options& o, bool trace, std::ostream& out, std::ostream& err)
{
  if (o.bivariate)
    return cmd_estimate2d(o, trace, out, err);
  Vec data = load_sample(o.in);
  Kernel k = make_kernel(o.kernel);
  FitConfig cfg = fit_config(o);

  if (o.model == "hjort-glad") {
    if (trace)
      throw InputError("hjort-glad has no running parameters to trace");
    if (!o.h_select.empty())
      throw InputError("bandwidth selection needs a local model");
    std::string name;
    auto f0 = start_density(o, &data, name);
    double h = o.h ? *o.h : normal_reference_h(data);
    Vec grid = grid_for(o, data.minCoeff(), data.maxCoeff(), 3.0 * h);
    Output csv(o.out, out);
    csv.row({ "x", "f_hat", "status" });
    std::size_t bad = 0;
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      auto r = cf_hjort_glad(f0, k, h, data, grid(j));
      bad += !r.valid;
      csv.row({ format_number(grid(j)), format_number(r.f_hat),
                 r.valid ? "converged" : "degenerate" });
    }
    return failure_rate_exceeded(bad, static_cast<std::size_t>(grid.size()))
             ? exit_code::estimation_failure
             : exit_code::ok;
  }

  FamilyPtr fam = make_family(o, o.model, &data);
  WeightScheme scheme = weights_make(make_weights(o.weights), *fam);
  double h = resolve_h(o, *fam, scheme, k, data, cfg, err);
  Vec grid = grid_for(o, data.minCoeff(), data.maxCoeff(), 3.0 * h);
  DensityEstimate est = fit_grid(*fam, scheme, k, h, data, grid, cfg);

  Output file(o.out, out);
  auto th = theta_header(*fam, trace);
  std::vector<std::string> head = { "x" };
  if (trace) {
    head.insert(head.end(), th.begin(), th.end());
    head.push_back("status");
  } else {
    head.insert(head.end(), { "f_hat", "status" });
    head.insert(head.end(), th.begin(), th.end());
  }
  file.row(head);
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    std::vector<std::string> row = { format_number(grid(j)) };
    if (trace) {
      append_theta(row, est.theta_trace[j], true);
      row.push_back(to_string(est.status[j]));
    } else {
      row.push_back(format_number(est.f_hat(j)));
      row.push_back(to_string(est.status[j]));
      append_theta(row, est.theta_trace[j], false);
    }
    file.row(row);
  }
  std::size_t bad = est.count(FitStatus::max_iter) + est.count(FitStatus::degenerate);
  if (failure_rate_exceeded(bad, static_cast<std::size_t>(grid.size()))) {
    err << bad << " of " << grid.size() << " grid points failed\n";
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

int
cmd_bandwidth(const Options& o, std::ostream& out, std::ostream& err)
{
  if (o.bivariate)
    throw InputError("bandwidth selection is univariate only");
  Vec data = load_sample(o.in);
  Kernel k = make_kernel(o.kernel);
  FitConfig cfg = fit_config(o);
  cfg.warm_start = true;
  FamilyPtr fam = make_family(o, o.model, &data);
  WeightScheme scheme = weights_make(make_weights(o.weights), *fam);
  Output csv(o.out, out);

  if (o.h_select == "plugin-ratio") {
    auto pr = plugin_ratio(*fam, scheme, k, data, cfg);
    csv.row({ "h_classic", "R_trad", "R_new", "ratio", "h_selected" });
    csv.row({ format_number(pr.h_classic), format_number(pr.R_trad),
              format_number(pr.R_new), format_number(pr.ratio),
              format_number(pr.h_selected) });
    return exit_code::ok;
  }

  Vec hs;
  if (!o.h_list.empty()) {
    auto v = h_list_or(o, {});
    hs = Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  auto sel = select_h_lscv(*fam, scheme, k, data, hs, cfg, o.threads);
  csv.row({ "h", "score", "ok", "selected" });
  for (const auto& d : sel.details)
    csv.row({ format_number(d.h), format_number(d.score), d.ok ? "1" : "0",
              sel.ok && d.h == sel.h_selected ? "1" : "0" });
  if (!sel.ok) {
    err << sel.diagnostic << '\n';
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

int
cmd_simulate(const Options& o, std::ostream& out, std::ostream& err)
{
  TrueDensity truth = make_density(o.density.empty() ? "normal" : o.density);
  EstimatorSpec est;
  est.id = o.estimator;
  est.kernel = make_kernel(o.kernel);
  est.h = o.h.value_or(0.3);
  est.scheme = make_weights(o.weights);
  if (o.support_zero)
    est.cfg.support_lower = 0.0;
  if (o.estimator != "classic") {
    if (o.estimator == "hjort-glad")
      throw InputError("hjort-glad is not a local model");
    est.family = make_family(o, o.estimator, nullptr);
  }
  if (o.n < 1 || o.reps < 2)
    throw InputError("--n must be positive and --reps at least 2");
  Vec grid;
  if (o.grid == "auto") {
    auto [lo, hi] = truth.bulk_range();
    grid = Vec::LinSpaced(25, lo, hi);
  } else {
    grid = parse_grid(o.grid);
  }

  McReport rep = mc_experiment(truth, est, o.n, o.reps, o.seed, grid, o.threads);
  Output csv(o.out, out);
  csv.row({ "x", "f_true", "mean", "bias", "variance", "mse", "bias_se",
            "variance_se", "bias_population", "bias_asymptotic", "variance_theory" });
  for (const auto& r : rep.rows)
    csv.row({ format_number(r.x), format_number(r.f_true), format_number(r.mean),
              format_number(r.bias), format_number(r.variance), format_number(r.mse),
              format_number(r.bias_se), format_number(r.variance_se),
              format_number(r.bias_population), format_number(r.bias_asymptotic),
              format_number(r.variance_theory) });
  if (rep.flagged) {
    err << rep.failed_reps << " of " << rep.reps << " replications had failed fits\n";
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

int
cmd_bias_curve(const Options& o, std::ostream& out, std::ostream& err)
{
  TrueDensity truth = make_density(o.density.empty() ? "mixture" : o.density);
  FamilyPtr fam = make_family(o, o.model, nullptr);
  WeightScheme scheme = weights_make(make_weights(o.weights), *fam);
  Kernel k = make_kernel(o.kernel);
  auto hs = h_list_or(o, { 0.4, 0.2, 0.1, 0.05, 0.025 });
  PopulationOptions opts;
  opts.simplex_check = false;
  opts.cfg.support_lower = truth.support_lower();
  BiasCurve curve = population_bias_curve(*fam, scheme, k, truth.as_function(), o.x, hs, opts);
  Output csv(o.out, out);
  csv.row({ "h", "bias", "status", "slope", "coefficient" });
  for (std::size_t i = 0; i < curve.h.size(); ++i)
    csv.row({ format_number(curve.h[i]), format_number(curve.bias[i]),
              to_string(curve.fits[i].status), format_number(curve.slope),
              format_number(curve.coefficient) });
  if (!curve.ok) {
    err << "population fit failed for at least one bandwidth\n";
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

int
cmd_boundary(const Options& o, bool kernel_given, std::ostream& out, std::ostream& err)
{
  TrueDensity truth = make_density(o.density.empty() ? "exp" : o.density);
  FamilyPtr fam = make_family(o, o.model, nullptr);
  WeightScheme scheme = weights_make(make_weights(o.weights), *fam);
  Kernel k = make_kernel(kernel_given ? o.kernel : "uniform-unit");
  if (!k.has_finite_support())
    throw InputError("boundary analysis needs a kernel with finite support");
  if (!(o.p >= 0.0 && o.p < k.support_radius()))
    throw InputError("--p must lie in [0, support radius)");
  auto hs = h_list_or(o, { 0.2, 0.1, 0.05, 0.025 });
  auto rep = boundary_bias_diag(*fam, scheme, k, hs, truth.as_function(), o.p);
  Output csv(o.out, out);
  csv.row({ "h", "x", "bias", "status", "slope", "coefficient" });
  for (std::size_t i = 0; i < rep.h.size(); ++i)
    csv.row({ format_number(rep.h[i]), format_number(rep.x[i]), format_number(rep.bias[i]),
              to_string(rep.status[i]), format_number(rep.slope),
              format_number(rep.coefficient) });
  if (!rep.ok) {
    err << "population fit failed for at least one bandwidth\n";
    return exit_code::estimation_failure;
  }
  return exit_code::ok;
}

} // namespace

Vec
read_sample(std::istream& in)
{
  std::vector<double> v;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    auto d = to_double(t);
    if (!d)
      throw InputError("line " + std::to_string(no) + ": expected one number, got '" + t + "'");
    v.push_back(*d);
  }
  if (v.empty())
    throw InputError("input has no observations");
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat
read_sample2d(std::istream& in)
{
  std::vector<double> v;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    auto comma = t.find(',');
    std::optional<double> a, b;
    if (comma != std::string::npos) {
      a = to_double(trim(t.substr(0, comma)));
      b = to_double(trim(t.substr(comma + 1)));
    }
    if (!a || !b)
      throw InputError("line " + std::to_string(no) + ": expected 'x1,x2', got '" + t + "'");
    v.push_back(*a);
    v.push_back(*b);
  }
  if (v.empty())
    throw InputError("input has no observations");
  const Eigen::Index n = static_cast<Eigen::Index>(v.size() / 2);
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>>(v.data(), n, 2);
}

Vec
parse_grid(const std::string& spec)
{
  auto a = spec.find(':');
  auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos)
    throw InputError("grid must be min:max:count, got '" + spec + "'");
  auto lo = to_double(trim(spec.substr(0, a)));
  auto hi = to_double(trim(spec.substr(a + 1, b - a - 1)));
  auto count = to_double(trim(spec.substr(b + 1)));
  if (!lo || !hi || !count || *count != std::floor(*count))
    throw InputError("grid must be min:max:count, got '" + spec + "'");
  if (*count < 2 || !(*hi > *lo))
    throw InputError("grid needs count >= 2 and min < max");
  return Vec::LinSpaced(static_cast<Eigen::Index>(*count), *lo, *hi);
}

std::string
format_number(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int
run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Locally parametric density estimation" };
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  Options o;
  auto* estimate = app.add_subcommand("estimate", "fit the density on a grid");
  auto* trace = app.add_subcommand("trace", "running parameter estimates on a grid");
  auto* bandwidth = app.add_subcommand("bandwidth", "bandwidth selection");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo bias and variance");
  auto* bias_curve = app.add_subcommand("bias-curve", "population bias over bandwidths");
  auto* boundary = app.add_subcommand("boundary", "population bias next to zero");
  for (auto* sub : { estimate, trace, bandwidth, simulate, bias_curve, boundary })
    add_shared(sub, o);
  bandwidth->add_option("--h-list", o.h_list, "comma-separated bandwidth grid");
  for (auto* sub : { simulate, bias_curve, boundary })
    sub->add_option("--density", o.density, "normal[:mu,sigma]|mixture[:w,mu,sigma,...]|exp[:rate]");
  simulate->add_option("--n", o.n, "sample size");
  simulate->add_option("--reps", o.reps, "replications");
  simulate->add_option("--estimator", o.estimator, "classic or a model id");
  bias_curve->add_option("--x", o.x, "evaluation point");
  bias_curve->add_option("--h-list", o.h_list, "decreasing bandwidths");
  boundary->add_option("--p", o.p, "relative position x / h");
  boundary->add_option("--h-list", o.h_list, "bandwidths");

  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::input_error;
  }

  try {
    if (o.h && o.h_select.size())
      throw InputError("give either --h or --h-select");
    if (*estimate)
      return cmd_estimate(o, false, out, err);
    if (*trace)
      return cmd_estimate(o, true, out, err);
    if (*bandwidth)
      return cmd_bandwidth(o, out, err);
    if (*simulate)
      return cmd_simulate(o, out, err);
    if (*bias_curve)
      return cmd_bias_curve(o, out, err);
    return cmd_boundary(o, boundary->count("--kernel") > 0, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::input_error;
  } catch (const std::exception& e) {
    err << "estimation failed: " << e.what() << '\n';
    return exit_code::estimation_failure;
  }
}

} // namespace lpde
