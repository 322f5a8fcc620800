#include "benign/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace benign {

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not applicable";
    case CheckStatus::Degenerate: return "degenerate";
  }
  return "?";
}

const ConcentrationCheck& ConcentrationReport::at(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no concentration check named " + std::string(name));
}

bool ConcentrationReport::ok() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const auto& c) { return c.status == CheckStatus::Fail; });
}

namespace {

std::string fmt(const char* what, double value, double lo, double hi) {
  std::ostringstream os;
  os << what << "=" << value << " bounds [" << lo << ", " << hi << "]";
  return os.str();
}

// max_{j,r} <w_{j,r}, j*s> and min of the same, for a signal vector s.
ConcentrationCheck signal_init_check(const char* name, const Weights<double>& w,
                                     const Vec<double>& s, double p) {
  ConcentrationCheck c{name, CheckStatus::Pass, {}};
  if (w.sigma_0 == 0.0) {
    c.status = CheckStatus::Degenerate;
    c.detail = "sigma_0 = 0";
    return c;
  }
  const Eigen::VectorXd ip_plus = w.plus * s;
  const Eigen::VectorXd ip_minus = -(w.minus * s);
  const double hi_ip = std::max(ip_plus.maxCoeff(), ip_minus.maxCoeff());
  const double lo_ip = std::min(ip_plus.minCoeff(), ip_minus.minCoeff());
  const double scale = w.sigma_0 * s.norm();
  const double upper = std::sqrt(2.0 * std::log(16.0 * w.m() / p)) * scale;
  const bool ok = hi_ip >= scale / 2.0 && hi_ip <= upper && lo_ip >= -upper;
  c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  c.detail = fmt("max", hi_ip, scale / 2.0, upper) + "; " + fmt("min", lo_ip, -upper, INFINITY);
  return c;
}

}  // namespace

ConcentrationReport verify_concentration(const Dataset<double>& dataset,
                                         const Weights<double>& weights, double p) {
  ConcentrationReport report;
  const int n = dataset.size();
  const auto& basis = dataset.basis;
  const double d = basis.d;
  const double sp2 = basis.sigma_p * basis.sigma_p;

  {
    ConcentrationCheck c{"label_balance", CheckStatus::Pass, {}};
    const double required = 8.0 * std::log(4.0 / p);
    const auto pos = std::count_if(dataset.samples.begin(), dataset.samples.end(),
                                   [](const auto& s) { return s.label == 1; });
    const auto minority = std::min<long>(pos, n - pos);
    if (n < required) {
      c.status = CheckStatus::NotApplicable;
      c.detail = "needs n >= 8 log(4/p) = " + std::to_string(required);
    } else {
      c.status = minority >= n / 4.0 ? CheckStatus::Pass : CheckStatus::Fail;
      c.detail = fmt("minority class", static_cast<double>(minority), n / 4.0, n);
    }
    report.checks.push_back(c);
  }

  std::vector<const Vec<double>*> noise;
  for (const auto& s : dataset.samples) {
    noise.push_back(&s.xi());
    if (s.xi_tilde()) noise.push_back(s.xi_tilde());
  }

  {
    ConcentrationCheck c{"noise_norm", CheckStatus::Pass, {}};
    if (basis.sigma_p == 0.0) {
      c.status = CheckStatus::Degenerate;
      c.detail = "sigma_p = 0; bound check skipped";
    } else {
      const double lo = sp2 * d / 2.0, hi = 3.0 * sp2 * d / 2.0;
      double worst_lo = INFINITY, worst_hi = -INFINITY;
      for (const auto* xi : noise) {
        worst_lo = std::min(worst_lo, xi->squaredNorm());
        worst_hi = std::max(worst_hi, xi->squaredNorm());
      }
      c.status = (worst_lo >= lo && worst_hi <= hi) ? CheckStatus::Pass : CheckStatus::Fail;
      c.detail = fmt("min |xi|^2", worst_lo, lo, hi) + "; " + fmt("max |xi|^2", worst_hi, lo, hi);
    }
    report.checks.push_back(c);
  }

  {
    ConcentrationCheck c{"noise_correlation", CheckStatus::Pass, {}};
    if (basis.sigma_p == 0.0) {
      c.status = CheckStatus::Degenerate;
      c.detail = "sigma_p = 0; bound check skipped";
    } else {
      const double bound = 2.0 * sp2 * std::sqrt(d * std::log(2.0 * n / p));
      double worst = 0.0;
      for (std::size_t a = 0; a < noise.size(); ++a)
        for (std::size_t b = a + 1; b < noise.size(); ++b)
          worst = std::max(worst, std::abs(noise[a]->dot(*noise[b])));
      c.status = worst <= bound ? CheckStatus::Pass : CheckStatus::Fail;
      c.detail = fmt("max |<xi_i, xi_i'>|", worst, 0.0, bound);
    }
    report.checks.push_back(c);
  }

  report.checks.push_back(signal_init_check("init_u", weights, basis.u, p));
  report.checks.push_back(signal_init_check("init_v", weights, basis.v, p));

  {
    ConcentrationCheck c{"init_xi", CheckStatus::Pass, {}};
    if (basis.sigma_p == 0.0 || weights.sigma_0 == 0.0) {
      c.status = CheckStatus::Degenerate;
      c.detail = "sigma_p = 0 or sigma_0 = 0";
    } else {
      const double scale = weights.sigma_0 * basis.sigma_p * std::sqrt(d);
      const double lo = scale / 4.0;
      const double hi = 2.0 * std::sqrt(std::log(16.0 * weights.m() * n / p)) * scale;
      double worst_lo = INFINITY, worst_hi = -INFINITY;
      for (const auto& s : dataset.samples) {
        for (int j : {1, -1}) {
          const double mx = (static_cast<double>(j) * (weights.branch(j) * s.xi())).maxCoeff();
          worst_lo = std::min(worst_lo, mx);
          worst_hi = std::max(worst_hi, mx);
        }
      }
      c.status = (worst_lo >= lo && worst_hi <= hi) ? CheckStatus::Pass : CheckStatus::Fail;
      c.detail = fmt("min_i max_r j<w,xi_i>", worst_lo, lo, hi) + "; " +
                 fmt("max_i max_r j<w,xi_i>", worst_hi, lo, hi);
    }
    report.checks.push_back(c);
  }

  return report;
}

}  // namespace benign
