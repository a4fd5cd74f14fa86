#include "asianlv/montecarlo.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "path_kernel.hpp"

namespace asianlv {

std::string to_string(Scheme scheme) { return scheme == Scheme::euler ? "euler" : "log-euler"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::euler;
  if (name == "log-euler") return Scheme::log_euler;
  throw std::invalid_argument(fmt::format("unknown scheme '{}' (euler|log-euler)", name));
}

void SimConfig::validate() const {
  if (steps < 2) throw std::invalid_argument("mc.steps must be >= 2");
  if (n_paths < 1) throw std::invalid_argument("mc.n_paths must be >= 1");
  if (driver_steps != 0 && driver_steps % steps != 0)
    throw std::invalid_argument("mc.driver_steps must be a multiple of mc.steps");
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ASIANLV_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

namespace detail {

PathKernel::PathKernel(const LocalVolSurface& surface, const MarketParams& params, double T,
                       const SimConfig& cfg)
    : surface_(surface),
      params_(params),
      T_(T),
      n_(cfg.steps),
      fine_(cfg.driver() / cfg.steps),
      dt_(T / static_cast<double>(cfg.steps)),
      scheme_(cfg.scheme),
      normals_(cfg.seed, streams::brownian) {
  params.validate();
  cfg.validate();
  if (!(T > 0.0)) throw DomainError(fmt::format("maturity T={} must be positive", T));
  sig0_.resize(n_);
  nu0_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const VolPoint v = vol_at(surface, time(i), params.spot);
    sig0_[i] = v.sigma;
    nu0_[i] = v.nu;
  }
}

void PathKernel::increments(std::uint64_t path, double* dW, double* scratch) const {
  const double sq = std::sqrt(T_ / static_cast<double>(n_ * fine_));
  if (fine_ == 1) {
    normals_.fill(path, 0, dW, n_);
    for (std::size_t i = 0; i < n_; ++i) dW[i] *= sq;
    return;
  }
  normals_.fill(path, 0, scratch, n_ * fine_);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < fine_; ++k) s += scratch[i * fine_ + k];
    dW[i] = sq * s;
  }
}

namespace {

inline double log_step(double x, double mu, double vol, double dt, double dw) {
  return x * std::exp((mu - 0.5 * vol * vol) * dt + vol * dw);
}

inline double euler_step(double x, double mu, double vol, double dt, double dw) {
  return x * (1.0 + mu * dt + vol * dw);
}

inline bool bad(double x) { return !(x > 0.0) || !std::isfinite(x); }

}  // namespace

bool PathKernel::evolve(double x0, double mu, const double* dW, double* x, double* v, VolPoint* vp) const {
  x[0] = x0;
  if (v) v[0] = 1.0;
  const bool log_scheme = scheme_ == Scheme::log_euler;
  const bool need_derivs = v != nullptr || vp != nullptr;
  for (std::size_t i = 0; i < n_; ++i) {
    const double t = time(i);
    VolPoint p;
    if (need_derivs)
      p = surface_.at(t, x[i]);
    else
      p.sigma = surface_.sigma(t, x[i]);
    if (vp) vp[i] = p;
    x[i + 1] = log_scheme ? log_step(x[i], mu, p.sigma, dt_, dW[i]) : euler_step(x[i], mu, p.sigma, dt_, dW[i]);
    if (bad(x[i + 1])) return false;
    if (v) {
      v[i + 1] = log_scheme ? log_step(v[i], mu, p.nu, dt_, dW[i]) : euler_step(v[i], mu, p.nu, dt_, dW[i]);
      if (!std::isfinite(v[i + 1])) return false;
    }
  }
  return true;
}

void PathKernel::tilde(const double* dW, double* xt, double* yt) const {
  if (xt) xt[0] = params_.spot;
  if (yt) yt[0] = 1.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (xt) xt[i + 1] = log_step(xt[i], 0.0, sig0_[i], dt_, dW[i]);
    if (yt) yt[i + 1] = log_step(yt[i], 0.0, nu0_[i], dt_, dW[i]);
  }
}

void PathKernel::hat(const double* dW, double* xh, double* yh) const {
  if (xh) xh[0] = params_.spot;
  if (yh) yh[0] = 1.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (xh) xh[i + 1] = xh[i] + sig0_[i] * params_.spot * dW[i];
    if (yh) yh[i + 1] = yh[i] + nu0_[i] * dW[i];
  }
}

double PathKernel::average(const double* x) const {
  double s = 0.5 * (x[0] + x[n_]);
  for (std::size_t i = 1; i < n_; ++i) s += x[i];
  return s / static_cast<double>(n_);
}

double PathKernel::log_average(const double* x) const {
  double s = 0.5 * (std::log(x[0]) + std::log(x[n_]));
  for (std::size_t i = 1; i < n_; ++i) s += std::log(x[i]);
  return s / static_cast<double>(n_);
}

void parallel_paths(std::size_t n_paths, std::size_t threads,
                    const std::function<void(std::size_t, std::size_t)>& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(1, n_paths));
  if (threads == 1) {
    body(0, n_paths);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_paths + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n_paths, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SampleStats summarize(const std::vector<double>& values, const char* what) {
  std::vector<double> ok;
  ok.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) ok.push_back(v);
  SampleStats st;
  st.used = ok.size();
  st.excluded = values.size() - ok.size();
  if (st.excluded * 1000 > values.size())
    throw NumericError(fmt::format("{}: {} of {} paths exploded (more than 0.1%)", what, st.excluded,
                                   values.size()));
  if (ok.empty()) throw NumericError(fmt::format("{}: no usable paths", what));
  st.mean = pairwise_sum(ok.data(), ok.size()) / static_cast<double>(ok.size());
  for (double& v : ok) v = (v - st.mean) * (v - st.mean);
  const double n = static_cast<double>(st.used);
  st.sd = st.used > 1 ? std::sqrt(pairwise_sum(ok.data(), ok.size()) / (n - 1.0)) : 0.0;
  st.std_error = st.sd / std::sqrt(n);
  return st;
}

}  // namespace detail

using detail::PathKernel;

PathBundle simulate(const LocalVolSurface& surface, const MarketParams& params, double T, const SimConfig& cfg) {
  PathKernel kernel(surface, params, T, cfg);
  const std::size_t N = cfg.steps, P = cfg.n_paths, W = N + 1;
  PathBundle b;
  b.maturity = T;
  b.steps = N;
  b.n_paths = P;
  b.include = cfg.include;
  b.time.resize(W);
  for (std::size_t i = 0; i < W; ++i) b.time[i] = kernel.time(i);
  auto alloc = [&](bool on, std::vector<double>& v) {
    if (on) v.assign(P * W, std::numeric_limits<double>::quiet_NaN());
  };
  const IncludeFlags& f = cfg.include;
  alloc(f.S, b.S);
  alloc(f.X, b.X);
  alloc(f.Y, b.Y);
  alloc(f.Z, b.Z);
  alloc(f.X_tilde, b.X_tilde);
  alloc(f.X_hat, b.X_hat);
  alloc(f.Y_tilde, b.Y_tilde);
  alloc(f.Y_hat, b.Y_hat);
  b.dW.resize(P * N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  b.avg_S.assign(P, nan);
  b.avg_X.assign(P, nan);
  b.avg_Y.assign(P, nan);
  b.avg_log_S.assign(P, nan);
  b.exploded.assign(P, 0);

  detail::parallel_paths(P, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> s(W), z(W), x(W), y(W), scratch(cfg.driver());
    for (std::size_t p = begin; p < end; ++p) {
      double* dW = &b.dW[p * N];
      kernel.increments(p, dW, scratch.data());
      const bool ok_s = kernel.evolve(params.spot, kernel.drift(), dW, s.data(), z.data(), nullptr);
      const bool ok_x = kernel.evolve(params.spot, 0.0, dW, x.data(), y.data(), nullptr);
      if (!ok_s || !ok_x) {
        b.exploded[p] = 1;
        continue;
      }
      auto put = [&](bool on, std::vector<double>& dst, const std::vector<double>& src) {
        if (on) std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(p * W));
      };
      put(f.S, b.S, s);
      put(f.Z, b.Z, z);
      put(f.X, b.X, x);
      put(f.Y, b.Y, y);
      b.avg_S[p] = kernel.average(s.data());
      b.avg_X[p] = kernel.average(x.data());
      b.avg_Y[p] = kernel.average(y.data());
      b.avg_log_S[p] = kernel.log_average(s.data());
      kernel.tilde(dW, f.X_tilde ? &b.X_tilde[p * W] : nullptr, f.Y_tilde ? &b.Y_tilde[p * W] : nullptr);
      kernel.hat(dW, f.X_hat ? &b.X_hat[p * W] : nullptr, f.Y_hat ? &b.Y_hat[p * W] : nullptr);
    }
  });
  b.n_exploded = static_cast<std::size_t>(std::count(b.exploded.begin(), b.exploded.end(), 1));
  return b;
}

void write_paths_csv(const PathBundle& b, std::ostream& out) {
  struct Col {
    const char* name;
    const std::vector<double>* v;
  };
  std::vector<Col> cols;
  if (b.include.S) cols.push_back({"S", &b.S});
  if (b.include.X) cols.push_back({"X", &b.X});
  if (b.include.Y) cols.push_back({"Y", &b.Y});
  if (b.include.Z) cols.push_back({"Z", &b.Z});
  out << "path,step,t";
  for (const auto& c : cols) out << ',' << c.name;
  out << '\n';
  for (std::size_t p = 0; p < b.n_paths; ++p)
    for (std::size_t i = 0; i <= b.steps; ++i) {
      out << fmt::format("{},{},{:.17g}", p, i, b.time[i]);
      for (const auto& c : cols) out << fmt::format(",{:.17g}", b.at(*c.v, p, i));
      out << '\n';
    }
}

namespace {

McEstimate to_estimate(const detail::SampleStats& st, double scale, std::string name) {
  McEstimate e;
  e.mean = scale * st.mean;
  e.std_error = std::abs(scale) * st.std_error;
  e.n_paths = st.used + st.excluded;
  e.n_excluded = st.excluded;
  e.estimator = std::move(name);
  e.weight_mean = std::numeric_limits<double>::quiet_NaN();
  e.weight_sd = std::numeric_limits<double>::quiet_NaN();
  return e;
}

// Runs one value per path; `fn` receives the path index, its increments and
// reusable scratch, and returns NaN for an exploded path.
template <class Fn>
std::vector<double> per_path(const PathKernel& k, const SimConfig& cfg, Fn&& fn) {
  std::vector<double> out(cfg.n_paths);
  detail::parallel_paths(cfg.n_paths, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dW(k.steps()), scratch(cfg.driver());
    for (std::size_t p = begin; p < end; ++p) {
      k.increments(p, dW.data(), scratch.data());
      out[p] = fn(p, dW.data());
    }
  });
  return out;
}

double underlying(const PathKernel& k, Style style, const double* x) {
  switch (style) {
    case Style::asian: return k.average(x);
    case Style::european: return x[k.steps()];
    case Style::geometric: return std::exp(k.log_average(x));
  }
  return 0.0;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

McEstimate mc_price(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                    Style style, double T, const SimConfig& cfg) {
  payoff.validate();
  PathKernel k(surface, params, T, cfg);
  auto vals = per_path(k, cfg, [&](std::size_t, const double* dW) {
    thread_local std::vector<double> s;
    s.resize(k.steps() + 1);
    if (!k.evolve(params.spot, k.drift(), dW, s.data(), nullptr, nullptr)) return kNaN;
    return payoff_eval(payoff, underlying(k, style, s.data()));
  });
  return to_estimate(detail::summarize(vals, "mc_price"), std::exp(-params.rate * T), "price-" + to_string(style));
}

McEstimate mc_delta_fd(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                       Style style, double T, const SimConfig& cfg, double bump) {
  payoff.validate();
  if (!(bump >= 1e-5 && bump <= 1e-1)) throw std::invalid_argument("bump must lie in [1e-5, 1e-1]");
  PathKernel k(surface, params, T, cfg);
  const double up = params.spot * (1.0 + bump), down = params.spot * (1.0 - bump);
  auto vals = per_path(k, cfg, [&](std::size_t, const double* dW) {
    thread_local std::vector<double> a, b;
    a.resize(k.steps() + 1);
    b.resize(k.steps() + 1);
    if (!k.evolve(up, k.drift(), dW, a.data(), nullptr, nullptr)) return kNaN;
    if (!k.evolve(down, k.drift(), dW, b.data(), nullptr, nullptr)) return kNaN;
    return payoff_eval(payoff, underlying(k, style, a.data())) - payoff_eval(payoff, underlying(k, style, b.data()));
  });
  return to_estimate(detail::summarize(vals, "mc_delta_fd"), std::exp(-params.rate * T) / (2.0 * bump * params.spot),
                     "delta-fd-" + to_string(style));
}

namespace {

// Relative floor on the averaged first variation, as a fraction of its mean.
constexpr double kFloor = 1e-6;
// sigma(t,S) S below this multiple of S0 makes the weight undefined.
constexpr double kDiffusionFloor = 1e-12;

struct WeightScratch {
  std::vector<double> Q, suffix_z, suffix_zq;
};

// Asian weight delta(u)/IZ + int u_s D_s IZ ds / IZ^2 with u = 2 Z^2 / (sigma S).
// D_s Z_t = Z_t [nu_s + (c_s/Z_s)(Q_t - Q_s)] with Q_t = int_0^t rho Z (dW - nu dt),
// so int_s^T D_s Z_t dt only needs suffix sums of Z and Z Q.
double asian_weight(const double* S, const double* Z, const VolPoint* vp, const double* dW, std::size_t N, double dt,
                    WeightScratch& w) {
  w.Q.resize(N + 1);
  w.suffix_z.resize(N + 1);
  w.suffix_zq.resize(N + 1);
  w.Q[0] = 0.0;
  for (std::size_t i = 0; i < N; ++i) w.Q[i + 1] = w.Q[i] + vp[i].rho * Z[i] * (dW[i] - vp[i].nu * dt);
  w.suffix_z[N] = 0.0;
  w.suffix_zq[N] = 0.0;
  for (std::size_t i = N; i-- > 0;) {
    w.suffix_z[i] = w.suffix_z[i + 1] + 0.5 * dt * (Z[i] + Z[i + 1]);
    w.suffix_zq[i] = w.suffix_zq[i + 1] + 0.5 * dt * (Z[i] * w.Q[i] + Z[i + 1] * w.Q[i + 1]);
  }
  const double IZ = w.suffix_z[0];
  double du = 0.0, corr = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double c = vp[j].sigma * S[j];
    if (!(std::abs(c) > kDiffusionFloor * S[0])) return kNaN;
    const double u = 2.0 * Z[j] * Z[j] / c;
    du += u * dW[j];
    const double J = vp[j].nu * w.suffix_z[j] + (c / Z[j]) * (w.suffix_zq[j] - w.Q[j] * w.suffix_z[j]);
    corr += dt * u * J;
  }
  return du / IZ + corr / (IZ * IZ);
}

// European weight (G delta(h) + int h H ds) / (S0 T) - 1/S0 with h = Z/(sigma S),
// G = S_T/Z_T and H_s = S_T D_s Z_T / Z_T^2.
double european_weight(const double* S, const double* Z, const VolPoint* vp, const double* dW, std::size_t N,
                       double dt, WeightScratch& w) {
  w.Q.resize(N + 1);
  w.Q[0] = 0.0;
  for (std::size_t i = 0; i < N; ++i) w.Q[i + 1] = w.Q[i] + vp[i].rho * Z[i] * (dW[i] - vp[i].nu * dt);
  const double G = S[N] / Z[N];
  double dh = 0.0, corr = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double c = vp[j].sigma * S[j];
    if (!(std::abs(c) > kDiffusionFloor * S[0])) return kNaN;
    const double h = Z[j] / c;
    dh += h * dW[j];
    const double H = S[N] * (vp[j].nu + (c / Z[j]) * (w.Q[N] - w.Q[j])) / Z[N];
    corr += dt * h * H;
  }
  const double T = dt * static_cast<double>(N);
  return (G * dh + corr) / (S[0] * T) - 1.0 / S[0];
}

}  // namespace

double malliavin_asian_weight(const std::vector<double>& S, const std::vector<double>& Z,
                              const std::vector<VolPoint>& vp, const std::vector<double>& dW, double dt) {
  WeightScratch w;
  return asian_weight(S.data(), Z.data(), vp.data(), dW.data(), dW.size(), dt, w);
}

double malliavin_asian_weight_naive(const std::vector<double>& S, const std::vector<double>& Z,
                                    const std::vector<VolPoint>& vp, const std::vector<double>& dW, double dt) {
  const std::size_t N = dW.size();
  double IZ = 0.0;
  for (std::size_t i = 0; i < N; ++i) IZ += 0.5 * dt * (Z[i] + Z[i + 1]);
  double du = 0.0, corr = 0.0;
  std::vector<double> D(N + 1);
  for (std::size_t j = 0; j < N; ++j) {
    const double c = vp[j].sigma * S[j];
    const double u = 2.0 * Z[j] * Z[j] / c;
    du += u * dW[j];
    // D_{s_j} Z_{t_k} for k >= j, accumulating the Ito sum from s_j.
    double ito = 0.0;
    for (std::size_t k = j; k <= N; ++k) {
      D[k] = Z[k] * (vp[j].nu + (c / Z[j]) * ito);
      if (k < N) ito += vp[k].rho * Z[k] * (dW[k] - vp[k].nu * dt);
    }
    double J = 0.0;
    for (std::size_t k = j; k < N; ++k) J += 0.5 * dt * (D[k] + D[k + 1]);
    corr += dt * u * J;
  }
  return du / IZ + corr / (IZ * IZ);
}

McEstimate mc_delta_malliavin(const LocalVolSurface& surface, const MarketParams& params,
                              const PayoffSpec& payoff, Style style, double T, const SimConfig& cfg) {
  payoff.validate();
  if (style == Style::geometric) throw std::invalid_argument("malliavin delta supports asian and european styles");
  if (static_cast<double>(cfg.steps) * static_cast<double>(cfg.n_paths) > cfg.malliavin_budget)
    throw std::invalid_argument(fmt::format("steps * n_paths = {:.3g} exceeds mc.malliavin_budget = {:.3g}",
                                            static_cast<double>(cfg.steps) * static_cast<double>(cfg.n_paths),
                                            cfg.malliavin_budget));
  PathKernel k(surface, params, T, cfg);
  const std::size_t N = k.steps();
  std::vector<double> weights(cfg.n_paths);
  std::vector<std::uint8_t> flagged(cfg.n_paths, 0);
  auto vals = per_path(k, cfg, [&](std::size_t p, const double* dW) {
    thread_local std::vector<double> s, z;
    thread_local std::vector<VolPoint> vp;
    thread_local WeightScratch scratch;
    s.resize(N + 1);
    z.resize(N + 1);
    vp.resize(N);
    if (!k.evolve(params.spot, k.drift(), dW, s.data(), z.data(), vp.data())) {
      weights[p] = kNaN;
      return kNaN;
    }
    double w;
    double x;
    if (style == Style::asian) {
      x = k.average(s.data());
      // Mirror of the indicator truncation on the averaged first variation.
      if (k.average(z.data()) < kFloor * std::min(1.0, std::exp(k.drift() * T))) {
        flagged[p] = 1;
        weights[p] = 0.0;
        return 0.0;
      }
      w = asian_weight(s.data(), z.data(), vp.data(), dW, N, k.dt(), scratch);
    } else {
      x = s[N];
      w = european_weight(s.data(), z.data(), vp.data(), dW, N, k.dt(), scratch);
    }
    if (std::isnan(w)) {
      flagged[p] = 1;
      w = 0.0;
    }
    weights[p] = w;
    return payoff_eval(payoff, x) * w;
  });
  McEstimate e = to_estimate(detail::summarize(vals, "mc_delta_malliavin"), std::exp(-params.rate * T),
                             "delta-malliavin-" + to_string(style));
  const auto ws = detail::summarize(weights, "mc_delta_malliavin weights");
  e.weight_mean = ws.mean;
  e.weight_sd = ws.sd;
  e.n_flagged = static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
  return e;
}

McEstimate geometric_mc_crosscheck(double sigma, const MarketParams& params, const PayoffSpec& payoff, double T,
                                   const SimConfig& cfg) {
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  McEstimate e = mc_price(LocalVolSurface::constant(sigma), params, payoff, Style::geometric, T, cfg);
  e.estimator = "geometric-crosscheck";
  return e;
}

ProxyLaw proxy_law(const LocalVolSurface& surface, const MarketParams& params, double T, std::size_t steps,
                   Style style) {
  if (!(T > 0.0) || steps < 1) throw DomainError("proxy_law needs T > 0 and steps >= 1");
  if (style == Style::geometric) throw std::invalid_argument("proxy_law supports asian and european styles");
  const double dt = T / static_cast<double>(steps);
  const double n = static_cast<double>(steps);
  const double mu = params.rate - params.dividend;
  ProxyLaw law{std::log(params.spot), 0.0};
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = surface.sigma(static_cast<double>(k) * dt, params.spot);
    // Weight of step k in the trapezoidal average: (1/N) sum_{i>k} w_i with w_N = 1/2.
    const double c = style == Style::european ? 1.0 : (static_cast<double>(steps - k - 1) + 0.5) / n;
    law.log_mean += c * (mu - 0.5 * s * s) * dt;
    law.log_var += c * c * s * s * dt;
  }
  return law;
}

namespace {

// The frozen-coefficient lognormal process L_i = log S0 + sum_{k<i} (mu - sigma0_k^2/2) dt + sigma0_k dW_k
// on one path: its geometric and arithmetic trapezoidal means (asian) or its
// terminal value (european, both fields equal).
struct ProxyPath {
  double geo;
  double arith;
};

ProxyPath proxy_path(const PathKernel& k, Style style, const double* dW) {
  const std::size_t N = k.steps();
  const auto& sig = k.frozen_sigma();
  const double mu = k.drift();
  double level = std::log(k.params().spot);
  double logs = 0.5 * level;
  double vals = 0.5 * k.params().spot;
  for (std::size_t i = 0; i < N; ++i) {
    level += (mu - 0.5 * sig[i] * sig[i]) * k.dt() + sig[i] * dW[i];
    const double w = i + 1 < N ? 1.0 : 0.5;
    logs += w * level;
    if (style == Style::asian) vals += w * std::exp(level);
  }
  if (style == Style::european) {
    const double x = std::exp(level);
    return {x, x};
  }
  const double n = static_cast<double>(N);
  return {std::exp(logs / n), vals / n};
}

// For asian calls and puts the proxy also carries the first-order term
// Phi'(G)(A - G), whose expectation is available because every S-tilde_i is
// jointly lognormal with G.
bool use_tangent(const PayoffSpec& payoff, Style style, const ProxyLaw& law) {
  return style == Style::asian && law.log_var > 0.0 &&
         (payoff.family == PayoffFamily::call || payoff.family == PayoffFamily::put);
}

double slope(const PayoffSpec& payoff, double x) {
  if (payoff.family == PayoffFamily::call) return x > payoff.strike ? 1.0 : 0.0;
  return x < payoff.strike ? -1.0 : 0.0;
}

double proxy_value(const PayoffSpec& payoff, const ProxyPath& p, double scale, bool tangent) {
  const double g = scale * p.geo;
  double v = payoff_eval(payoff, g);
  if (tangent) v += slope(payoff, g) * scale * (p.arith - p.geo);
  return v;
}

// Exact expectation of proxy_value with the spot scaled by `scale`.
double proxy_expectation(const PayoffSpec& payoff, const LocalVolSurface& surface, const MarketParams& params,
                         double T, std::size_t steps, const ProxyLaw& law, double scale, bool tangent) {
  const double m = law.log_mean + std::log(scale);
  double e = lognormal_expectation(payoff, m, law.log_var);
  if (!tangent) return e;
  const double sd = std::sqrt(law.log_var);
  const double lk = std::log(payoff.strike);
  const double sign = payoff.family == PayoffFamily::call ? 1.0 : -1.0;
  // E[1{G > K} Y] = E[Y] N((m + cov(log Y, log G) - log K) / sd) for lognormal Y.
  auto tail = [&](double mean, double cov) { return sign * mean * normal_cdf(sign * (m + cov - lk) / sd); };
  const double dt = T / static_cast<double>(steps);
  const double n = static_cast<double>(steps);
  const double mu = params.rate - params.dividend;
  double arith = 0.5 * tail(scale * params.spot, 0.0);
  double cov = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = surface.sigma(static_cast<double>(k) * dt, params.spot);
    cov += (static_cast<double>(steps - k - 1) + 0.5) / n * s * s * dt;
    const double w = k + 1 < steps ? 1.0 : 0.5;
    arith += w * tail(scale * params.spot * std::exp(mu * static_cast<double>(k + 1) * dt), cov);
  }
  e += arith / n - tail(std::exp(m + 0.5 * law.log_var), law.log_var);
  return e;
}

}  // namespace

McEstimate mc_price_coupled(const LocalVolSurface& surface, const MarketParams& params, const PayoffSpec& payoff,
                            Style style, double T, const SimConfig& cfg) {
  payoff.validate();
  if (style == Style::geometric) throw std::invalid_argument("coupled estimator supports asian and european styles");
  PathKernel k(surface, params, T, cfg);
  const ProxyLaw law = proxy_law(surface, params, T, cfg.steps, style);
  const bool tangent = use_tangent(payoff, style, law);
  auto vals = per_path(k, cfg, [&](std::size_t, const double* dW) {
    thread_local std::vector<double> s;
    s.resize(k.steps() + 1);
    if (!k.evolve(params.spot, k.drift(), dW, s.data(), nullptr, nullptr)) return kNaN;
    const ProxyPath p = proxy_path(k, style, dW);
    return payoff_eval(payoff, underlying(k, style, s.data())) - proxy_value(payoff, p, 1.0, tangent);
  });
  const double exact = proxy_expectation(payoff, surface, params, T, cfg.steps, law, 1.0, tangent);
  const double disc = std::exp(-params.rate * T);
  McEstimate e = to_estimate(detail::summarize(vals, "mc_price_coupled"), disc, "price-coupled-" + to_string(style));
  e.mean += disc * exact;
  return e;
}

McEstimate mc_delta_fd_coupled(const LocalVolSurface& surface, const MarketParams& params,
                               const PayoffSpec& payoff, Style style, double T, const SimConfig& cfg, double bump) {
  payoff.validate();
  if (style == Style::geometric) throw std::invalid_argument("coupled estimator supports asian and european styles");
  if (!(bump >= 1e-5 && bump <= 1e-1)) throw std::invalid_argument("bump must lie in [1e-5, 1e-1]");
  PathKernel k(surface, params, T, cfg);
  const ProxyLaw law = proxy_law(surface, params, T, cfg.steps, style);
  const bool tangent = use_tangent(payoff, style, law);
  const double up = params.spot * (1.0 + bump), down = params.spot * (1.0 - bump);
  auto vals = per_path(k, cfg, [&](std::size_t, const double* dW) {
    thread_local std::vector<double> a, b;
    a.resize(k.steps() + 1);
    b.resize(k.steps() + 1);
    if (!k.evolve(up, k.drift(), dW, a.data(), nullptr, nullptr)) return kNaN;
    if (!k.evolve(down, k.drift(), dW, b.data(), nullptr, nullptr)) return kNaN;
    // The proxy keeps its coefficients frozen at S0, so a bumped start just rescales it.
    const ProxyPath p = proxy_path(k, style, dW);
    const double fd = payoff_eval(payoff, underlying(k, style, a.data())) -
                      payoff_eval(payoff, underlying(k, style, b.data()));
    return fd - (proxy_value(payoff, p, 1.0 + bump, tangent) - proxy_value(payoff, p, 1.0 - bump, tangent));
  });
  const double exact = proxy_expectation(payoff, surface, params, T, cfg.steps, law, 1.0 + bump, tangent) -
                       proxy_expectation(payoff, surface, params, T, cfg.steps, law, 1.0 - bump, tangent);
  const double scale = std::exp(-params.rate * T) / (2.0 * bump * params.spot);
  McEstimate e =
      to_estimate(detail::summarize(vals, "mc_delta_fd_coupled"), scale, "delta-fd-coupled-" + to_string(style));
  e.mean += scale * exact;
  return e;
}

McEstimate mc_asian_minus_european(const LocalVolSurface& surface, const MarketParams& params,
                                   const PayoffSpec& payoff, double T, const SimConfig& cfg) {
  payoff.validate();
  PathKernel k(surface, params, T, cfg);
  auto vals = per_path(k, cfg, [&](std::size_t, const double* dW) {
    thread_local std::vector<double> s;
    s.resize(k.steps() + 1);
    if (!k.evolve(params.spot, k.drift(), dW, s.data(), nullptr, nullptr)) return kNaN;
    return payoff_eval(payoff, k.average(s.data())) - payoff_eval(payoff, s[k.steps()]);
  });
  return to_estimate(detail::summarize(vals, "mc_asian_minus_european"), std::exp(-params.rate * T),
                     "asian-minus-european");
}

}  // namespace asianlv
