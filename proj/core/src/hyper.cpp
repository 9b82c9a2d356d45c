#include "hsmc/hyper/hyper.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hsmc/errors.hpp"
#include "hsmc/models/toy.hpp"  // gamma_log_pdf
#include "hsmc/quadrature.hpp"

namespace hsmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kScanGrid = 512;
}  // namespace

PchipInterpolator::PchipInterpolator(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
  const std::size_t n = x_.size();
  if (n < 2) throw std::invalid_argument("PchipInterpolator: need at least 2 knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("PchipInterpolator: x must be ascending");
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = delta[0];
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        slope_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d * d0 <= 0.0) return 0.0;
      if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return d;
    };
    slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
}

double PchipInterpolator::operator()(double x) const {
  const std::size_t n = x_.size();
  if (x <= x_.front()) x = x_.front();
  if (x >= x_.back()) x = x_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
  i = std::min(std::max<std::size_t>(i, 1) - 1, n - 2);
  const double h = x_[i + 1] - x_[i];
  const double u = (x - x_[i]) / h;
  const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
  const double h10 = u * (1.0 - u) * (1.0 - u);
  const double h01 = u * u * (3.0 - 2.0 * u);
  const double h11 = u * u * (u - 1.0);
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

EvidenceLedger build_ledger(const RunTrace& trace) {
  EvidenceLedger ledger;
  for (const auto& r : trace.records) {
    if (!(r.alpha > 0.0) || std::isnan(r.theta)) continue;
    if (!std::isfinite(r.log_evidence)) throw ConfigError("build_ledger: non-finite log evidence");
    ledger.thetas.push_back(r.theta);
    ledger.log_evidence.push_back(r.log_evidence);
    ledger.trace_t.push_back(r.t);
  }
  if (ledger.thetas.empty()) throw ConfigError("build_ledger: trace has no hyper-parameter ladder");
  for (std::size_t i = 1; i < ledger.thetas.size(); ++i) {
    if (!(ledger.thetas[i] < ledger.thetas[i - 1])) {
      throw ConfigError("build_ledger: thetas must be strictly decreasing");
    }
  }
  return ledger;
}

std::vector<double> trapezoid_weights(std::span<const double> thetas) {
  const std::size_t n = thetas.size();
  if (n < 2) throw std::invalid_argument("trapezoid_weights: need at least 2 knots");
  std::vector<double> g(n);
  g[0] = std::abs(thetas[1] - thetas[0]) / 2.0;
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = std::abs(thetas[i + 1] - thetas[i - 1]) / 2.0;
  g[n - 1] = std::abs(thetas[n - 1] - thetas[n - 2]) / 2.0;
  return g;
}

double HyperPrior::log_density(double theta) const {
  if (theta < support_lo || theta > support_hi) return kNegInf;
  switch (family) {
    case Family::Gamma:
      return gamma_log_pdf(theta, params[0], params[1]);
    case Family::Uniform:
      return -std::log(support_hi - support_lo);
  }
  return kNegInf;
}

HyperPrior HyperPrior::gamma(double shape, double scale, double lo, double hi) {
  HyperPrior p;
  p.family = Family::Gamma;
  p.params = {shape, scale};
  p.support_lo = lo;
  p.support_hi = hi;
  return p;
}

HyperPrior HyperPrior::uniform(double lo, double hi) {
  HyperPrior p;
  p.family = Family::Uniform;
  p.support_lo = lo;
  p.support_hi = hi;
  return p;
}

HyperPrior HyperPrior::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  HyperPrior p;
  const std::string family = j.at("family").get<std::string>();
  if (family == "gamma") {
    p.family = Family::Gamma;
    p.params = j.at("params").get<std::vector<double>>();
    if (p.params.size() != 2 || p.params[0] <= 0.0 || p.params[1] <= 0.0) {
      throw ConfigError("hyper prior: gamma needs positive {shape, scale}");
    }
  } else if (family == "uniform") {
    p.family = Family::Uniform;
  } else {
    throw ConfigError("hyper prior: unknown family '" + family + "'");
  }
  const auto support = j.at("support").get<std::vector<double>>();
  if (support.size() != 2 || !(support[0] > 0.0) || !(support[1] > support[0])) {
    throw ConfigError("hyper prior: support must be 0 < lo < hi");
  }
  p.support_lo = support[0];
  p.support_hi = support[1];
  return p;
}

HyperPrior HyperPrior::from_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open hyper-prior file: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string HyperPrior::to_json() const {
  nlohmann::ordered_json j;
  j["family"] = family == Family::Gamma ? "gamma" : "uniform";
  j["params"] = params;
  j["support"] = {support_lo, support_hi};
  return j.dump();
}

namespace {

/// Integrates exp(log_f(theta) - shift) over [lo, hi] by segmented adaptive
/// Simpson on the log-spaced scan grid; returns the log integral.
double log_integral(const std::function<double(double)>& log_f, const std::vector<double>& grid,
                    double shift) {
  double total = 0.0;
  auto f = [&](double th) {
    const double v = log_f(th);
    return v == kNegInf ? 0.0 : std::exp(v - shift);
  };
  // first a coarse pass for the tolerance scale
  double coarse = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    coarse += 0.5 * (f(grid[i]) + f(grid[i + 1])) * (grid[i + 1] - grid[i]);
  }
  const double tol = std::max(coarse, 1e-300) * 1e-8 / static_cast<double>(grid.size());
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    total += adaptive_simpson(f, grid[i], grid[i + 1], tol);
  }
  return shift + std::log(total);
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1.0));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace

HyperPosterior hyper_posterior(const EvidenceLedger& ledger, const HyperPrior& prior) {
  const double theta_min_ledger = ledger.thetas.back();
  const double theta_max_ledger = ledger.thetas.front();
  if (prior.support_lo < theta_min_ledger * (1.0 - 1e-12) ||
      prior.support_hi > theta_max_ledger * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "hyper_posterior: prior support [" << prior.support_lo << ", " << prior.support_hi
        << "] outside the ledger range [" << theta_min_ledger << ", " << theta_max_ledger
        << "]; the interpolant must not extrapolate";
    throw ConfigError(msg.str());
  }

  HyperPosterior post;
  std::vector<double> log_thetas(ledger.thetas.size()), log_ev(ledger.thetas.size());
  for (std::size_t i = 0; i < ledger.thetas.size(); ++i) {
    // ledger is decreasing in theta; the interpolant wants ascending x
    const std::size_t j = ledger.thetas.size() - 1 - i;
    log_thetas[i] = std::log(ledger.thetas[j]);
    log_ev[i] = ledger.log_evidence[j];
  }
  post.interp_ = PchipInterpolator(log_thetas, log_ev);
  post.prior_ = prior;
  post.lo_ = prior.support_lo;
  post.hi_ = prior.support_hi;
  post.grid_ = log_spaced(post.lo_, post.hi_, kScanGrid);

  double shift = kNegInf;
  for (double th : post.grid_) shift = std::max(shift, post.log_unnormalized(th));
  post.log_norm_ =
      log_integral([&](double th) { return post.log_unnormalized(th); }, post.grid_, shift);
  return post;
}

double HyperPosterior::log_evidence_interp(double theta) const { return interp_(std::log(theta)); }

double HyperPosterior::log_unnormalized(double theta) const {
  const double pr = prior_.log_density(theta);
  if (pr == kNegInf) return kNegInf;
  return interp_(std::log(theta)) + pr;
}

double HyperPosterior::density(double theta) const {
  if (theta < lo_ || theta > hi_) return 0.0;
  return std::exp(log_unnormalized(theta) - log_norm_);
}

double HyperPosterior::mode() const {
  std::size_t best = 0;
  double best_val = kNegInf;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v = log_unnormalized(grid_[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = grid_[best == 0 ? 0 : best - 1];
  const double b = grid_[std::min(best + 1, grid_.size() - 1)];
  if (a == b) return a;
  return golden_section_max([&](double th) { return log_unnormalized(th); }, a, b, 1e-7);
}

double HyperPosterior::mean() const {
  double shift = kNegInf;
  for (double th : grid_) shift = std::max(shift, log_unnormalized(th) + std::log(th));
  const double log_num = log_integral(
      [&](double th) {
        const double v = log_unnormalized(th);
        return v == kNegInf ? kNegInf : v + std::log(th);
      },
      grid_, shift);
  return std::exp(log_num - log_norm_);
}

EbSelection eb_select(const HyperPosterior& posterior) {
  EbSelection out;
  out.theta_bar = posterior.mode();
  out.log_posterior_at = posterior.log_unnormalized(out.theta_bar);
  if (!std::isfinite(out.log_posterior_at)) throw ConfigError("eb_select: non-finite objective");
  return out;
}

std::size_t anchor_iteration(std::span<const double> thetas, double theta_bar) {
  if (thetas.empty() || !(thetas.front() > theta_bar)) {
    throw std::invalid_argument("anchor_iteration: theta_bar lies above every ladder theta");
  }
  std::size_t t_bar = 0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i] > theta_bar) t_bar = i;
  }
  return t_bar;
}

ReweightedSample reweight_to_theta(
    const Snapshot& snapshot, double theta_bar, double theta_anchor,
    const std::function<double(std::span<const double>, double)>& lik_from_summary) {
  const std::size_t n = snapshot.weights.size();
  ReweightedSample out;
  out.snapshot = &snapshot;
  std::vector<double> logw(n);
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& stat = snapshot.loglik_stats[i];
    logw[i] = std::log(snapshot.weights[i]) + lik_from_summary(stat, theta_bar) -
              lik_from_summary(stat, theta_anchor);
    mx = std::max(mx, logw[i]);
  }
  if (!std::isfinite(mx)) throw DegeneratePopulationError("reweight_to_theta: all weights vanished");
  out.weights.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i] = std::exp(logw[i] - mx);
    sum += out.weights[i];
  }
  double sum2 = 0.0;
  for (auto& w : out.weights) {
    w /= sum;
    sum2 += w * w;
  }
  out.ess = 1.0 / sum2;
  out.degenerate = out.ess < 5.0;
  return out;
}

EbSelection eb_select_refined(const HyperPosterior& posterior, const EvidenceLedger& ledger,
                              const RunTrace& trace,
                              const std::function<double(std::span<const double>, double)>& lik_from_summary) {
  // IS-refined objective: evidence at theta re-estimated from the anchor
  // iteration's snapshot, plus the prior.
  auto refined = [&](double theta) {
    const std::size_t idx = anchor_iteration(ledger.thetas, theta);
    const auto& rec = trace.records[static_cast<std::size_t>(ledger.trace_t[idx] - 1)];
    if (!rec.snapshot) return posterior.log_unnormalized(theta);
    const auto& snap = *rec.snapshot;
    double mx = kNegInf;
    std::vector<double> logw(snap.weights.size());
    for (std::size_t i = 0; i < snap.weights.size(); ++i) {
      logw[i] = std::log(snap.weights[i]) + lik_from_summary(snap.loglik_stats[i], theta) -
                lik_from_summary(snap.loglik_stats[i], ledger.thetas[idx]);
      mx = std::max(mx, logw[i]);
    }
    double sum = 0.0;
    for (double lw : logw) sum += std::exp(lw - mx);
    const double log_ev = ledger.log_evidence[idx] + mx + std::log(sum);
    return log_ev + posterior.prior().log_density(theta);
  };
  const double coarse = posterior.mode();
  const double lo = std::max(posterior.support_lo(), coarse * 0.9);
  const double hi = std::min(posterior.support_hi(), coarse * 1.1);
  EbSelection out;
  out.theta_bar = golden_section_max(refined, lo, hi, 1e-7);
  out.log_posterior_at = refined(out.theta_bar);
  return out;
}

RecycledPosterior fb_average(const RunTrace& trace, const HyperPrior& prior) {
  const EvidenceLedger ledger = build_ledger(trace);
  const std::vector<double> g = trapezoid_weights(ledger.thetas);

  RecycledPosterior out;
  out.trace = &trace;
  std::vector<double> logw;
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    const double theta = ledger.thetas[i];
    const double pr = prior.log_density(theta);
    if (pr == kNegInf) continue;
    const auto& rec = trace.records[static_cast<std::size_t>(ledger.trace_t[i] - 1)];
    if (!rec.snapshot) {
      throw ConfigError("fb_average: missing snapshot at in-support iteration " +
                        std::to_string(rec.t) + "; rerun with snapshots enabled");
    }
    out.trace_t.push_back(ledger.trace_t[i]);
    out.thetas.push_back(theta);
    logw.push_back(ledger.log_evidence[i] + pr + std::log(g[i]));
    out.total_samples += rec.snapshot->weights.size();
  }
  if (out.trace_t.empty()) throw ConfigError("fb_average: no ladder iteration inside the prior support");

  const double mx = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0;
  out.iter_weight.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) {
    out.iter_weight[i] = std::exp(logw[i] - mx);
    sum += out.iter_weight[i];
  }
  for (auto& w : out.iter_weight) w /= sum;
  return out;
}

double RecycledPosterior::theta_mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) m += iter_weight[i] * thetas[i];
  return m;
}

std::vector<std::pair<double, double>> RecycledPosterior::coord_samples(std::size_t coord) const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < trace_t.size(); ++i) {
    const auto& snap = *trace->records[static_cast<std::size_t>(trace_t[i] - 1)].snapshot;
    for (std::size_t n = 0; n < snap.weights.size(); ++n) {
      out.emplace_back(snap.states[n][coord], iter_weight[i] * snap.weights[n]);
    }
  }
  return out;
}

double RecycledPosterior::coord_mean(std::size_t coord) const {
  double m = 0.0;
  for (const auto& [v, w] : coord_samples(coord)) m += v * w;
  return m;
}

double RecycledPosterior::coord_quantile(std::size_t coord, double q) const {
  auto samples = coord_samples(coord);
  std::vector<double> v, w;
  v.reserve(samples.size());
  w.reserve(samples.size());
  std::sort(samples.begin(), samples.end());
  for (const auto& [val, wt] : samples) {
    v.push_back(val);
    w.push_back(wt);
  }
  return weighted_quantile(v, w, q);
}

double RecycledPosterior::coord_map_kde(std::size_t coord) const {
  const auto samples = coord_samples(coord);
  std::vector<double> v, w;
  v.reserve(samples.size());
  w.reserve(samples.size());
  for (const auto& [val, wt] : samples) {
    v.push_back(val);
    w.push_back(wt);
  }
  return weighted_kde_mode(v, w);
}

SensitivityResult sensitivity_reweight(const RunTrace& trace, const HyperPrior& new_prior) {
  SensitivityResult out;
  out.posterior = hyper_posterior(build_ledger(trace), new_prior);
  out.recycled = fb_average(trace, new_prior);
  return out;
}

ThetaEstimates theta_estimators(const HyperPosterior& posterior) {
  ThetaEstimates est;
  est.map = posterior.mode();
  est.pm = posterior.mean();
  return est;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  double m = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    m += values[i] * weights[i];
    wsum += weights[i];
  }
  return m / wsum;
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += weights[i];
    if (acc >= q * wsum) return values[i];
  }
  return values[order.back()];
}

double weighted_kde_mode(std::span<const double> values, std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("weighted_kde_mode: empty sample");
  double wsum = 0.0, wsum2 = 0.0;
  for (double w : weights) {
    wsum += w;
    wsum2 += w * w;
  }
  const double mean = weighted_mean(values, weights);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += weights[i] * (values[i] - mean) * (values[i] - mean);
  var /= wsum;
  const double sd = std::sqrt(var);
  const double iqr =
      weighted_quantile(values, weights, 0.75) - weighted_quantile(values, weights, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  if (spread <= 0.0) return weighted_quantile(values, weights, 0.5);
  const double n_eff = wsum * wsum / wsum2;
  const double h = 0.9 * spread * std::pow(n_eff, -0.2);  // Silverman

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) return lo;
  double best_x = lo, best_f = -1.0;
  for (int gridpoint = 0; gridpoint < kScanGrid; ++gridpoint) {
    const double x = lo + (hi - lo) * gridpoint / (kScanGrid - 1.0);
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (x - values[i]) / h;
      f += weights[i] * std::exp(-0.5 * z * z);
    }
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace hsmc
