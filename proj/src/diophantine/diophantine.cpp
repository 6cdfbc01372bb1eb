#include "perturblab/diophantine.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>

namespace perturblab::diophantine {

namespace {

using boost::multiprecision::cpp_int;

const Quad kEps = std::numeric_limits<Quad>::epsilon();

long long to_ll(const Quad& x) { return static_cast<long long>(x); }

bool push_convergent(ContinuedFraction& cf, long long a) {
  const std::size_t i = cf.convergents.size();
  __int128 pm1 = i >= 1 ? cf.convergents[i - 1].p : 1, qm1 = i >= 1 ? cf.convergents[i - 1].q : 0;
  __int128 pm2 = i >= 2 ? cf.convergents[i - 2].p : 0, qm2 = i >= 2 ? cf.convergents[i - 2].q : 1;
  if (i == 1) {
    pm2 = 1;
    qm2 = 0;
  }
  const __int128 p = a * pm1 + pm2, q = a * qm1 + qm2;
  constexpr __int128 lim = static_cast<__int128>(1) << 62;
  if (p > lim || p < -lim || q > lim) return false;
  cf.partial_quotients.push_back(a);
  cf.convergents.push_back({static_cast<long long>(p), static_cast<long long>(q)});
  return true;
}

Quad ratio(const Quad& omega, long long p, long long q, double nu) {
  Quad d = abs(Quad(q) * omega - Quad(p));
  return d * pow(Quad(q), Quad(nu));
}

}  // namespace

ContinuedFraction continued_fraction(const Quad& x, int n, double rel_err) {
  if (!boost::multiprecision::isfinite(x)) throw Error("continued_fraction needs a finite input");
  ContinuedFraction cf;
  Quad y = x;
  Quad err = abs(x) * Quad(std::max(rel_err, static_cast<double>(kEps))) + kEps;
  for (int i = 0; i <= n; ++i) {
    if (err > Quad(1e-3)) {
      cf.precision_exhausted = true;
      break;
    }
    Quad a = floor(y);
    Quad frac = y - a;
    if (frac <= err || Quad(1) - frac <= err) {
      if (Quad(1) - frac <= err) a += 1;
      if (!push_convergent(cf, to_ll(a))) cf.precision_exhausted = true;
      else cf.terminated = true;
      break;
    }
    if (!push_convergent(cf, to_ll(a))) {
      cf.precision_exhausted = true;
      break;
    }
    if (i == n) break;
    y = Quad(1) / frac;
    err = err / (frac * frac) + kEps * y;
  }
  cf.last_trustworthy_index = static_cast<int>(cf.partial_quotients.size()) - 1;
  return cf;
}

ContinuedFraction continued_fraction(double x, int n) {
  return continued_fraction(Quad(x), n, std::numeric_limits<double>::epsilon());
}

ContinuedFraction continued_fraction_rational(long long p, long long q) {
  if (q == 0) throw Error("zero denominator");
  if (q < 0) {
    p = -p;
    q = -q;
  }
  ContinuedFraction cf;
  while (q != 0) {
    long long a = p / q;
    if (p % q != 0 && p < 0) --a;  // floor
    push_convergent(cf, a);
    const long long r = p - a * q;
    p = q;
    q = r;
  }
  cf.terminated = true;
  cf.last_trustworthy_index = static_cast<int>(cf.partial_quotients.size()) - 1;
  return cf;
}

Quad golden_mean() { return (sqrt(Quad(5)) - 1) / 2; }
Quad sqrt2() { return sqrt(Quad(2)); }

Certification certify_type(const Quad& omega, double C, double nu, long long q_max, ScanMode mode) {
  if (q_max < 1) throw Error("q_max must be at least 1");
  Certification c;
  c.C = C;
  c.nu = nu;
  c.q_max = q_max;
  c.mode = mode;
  c.worst_margin = std::numeric_limits<double>::infinity();

  auto consider = [&](long long p, long long q) {
    if (q < 1 || q > q_max) return;
    const double r = static_cast<double>(ratio(omega, p, q, nu));
    if (r < c.worst_margin) {
      c.worst_margin = r;
      c.worst_p = p;
      c.worst_q = q;
    }
  };

  ContinuedFraction cf = continued_fraction(omega, 400);
  if (cf.terminated && cf.convergents.back().q <= q_max) {
    c.worst_margin = 0.0;
    c.worst_p = cf.convergents.back().p;
    c.worst_q = cf.convergents.back().q;
    c.passed = false;
    return c;
  }

  bool covered = false;
  if (mode == ScanMode::convergents) {
    for (std::size_t i = 0; i < cf.convergents.size(); ++i) {
      const auto& cv = cf.convergents[i];
      consider(cv.p, cv.q);
      // intermediate fractions between consecutive convergents
      long long pm2 = i >= 2 ? cf.convergents[i - 2].p : (i == 1 ? 1 : 0);
      long long qm2 = i >= 2 ? cf.convergents[i - 2].q : (i == 1 ? 0 : 1);
      if (i >= 1)
        for (long long j = 1; j < cf.partial_quotients[i]; ++j) {
          const long long q = qm2 + j * cf.convergents[i - 1].q;
          if (q > q_max) break;
          consider(pm2 + j * cf.convergents[i - 1].p, q);
        }
      // nearest-integer partner of the same denominator
      consider(cv.p + 1, cv.q);
      consider(cv.p - 1, cv.q);
      if (cv.q > q_max) {
        covered = true;
        break;
      }
    }
  }
  if (mode == ScanMode::exhaustive || !covered) {
    for (long long q = 1; q <= q_max; ++q) {
      const long long p = to_ll(round(Quad(q) * omega));
      consider(p, q);
    }
  }
  c.passed = c.worst_margin >= C;
  return c;
}

DiophantineFrequency make_frequency(const Quad& omega, double C, double nu, long long q_max, ScanMode mode) {
  DiophantineFrequency f;
  f.value = omega;
  f.cf = continued_fraction(omega, 60);
  f.certification = certify_type(omega, C, nu, q_max, mode);
  if (f.certification->passed) {
    f.C = C;
    f.nu = nu;
  }
  return f;
}

LiouvilleResult liouville_constant(const std::vector<long long>& coeffs_in, double lo, double hi, int k) {
  std::vector<long long> a = coeffs_in;
  while (!a.empty() && a.back() == 0) a.pop_back();
  const int n = static_cast<int>(a.size()) - 1;
  if (n < 2) throw Error("liouville_constant needs a polynomial of degree at least 2");
  if (!(lo < hi)) throw Error("root bracket must satisfy lo < hi");

  // real roots from the companion matrix
  Mat comp = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -static_cast<double>(a[i]) / static_cast<double>(a[n]);
  Eigen::EigenSolver<Mat> es(comp);
  std::vector<double> real_roots;
  for (int i = 0; i < n; ++i) {
    cplx r = es.eigenvalues()(i);
    if (std::abs(r.imag()) < 1e-7 * std::max(1.0, std::abs(r))) real_roots.push_back(r.real());
  }
  std::vector<double> inside;
  for (double r : real_roots)
    if (r >= lo && r <= hi) inside.push_back(r);
  for (std::size_t i = 1; i < inside.size(); ++i)
    if (std::abs(inside[i] - inside[0]) > 1e-6) throw Error("root not isolated in bracket: several roots inside");
  if (inside.empty()) throw Error("root not isolated in bracket: no real root inside");

  // derivatives as coefficient vectors (in Quad)
  auto deriv = [](const std::vector<Quad>& c) {
    std::vector<Quad> d;
    for (std::size_t j = 1; j < c.size(); ++j) d.push_back(c[j] * Quad(static_cast<long long>(j)));
    return d;
  };
  auto eval = [](const std::vector<Quad>& c, const Quad& x) {
    Quad s = 0;
    for (std::size_t j = c.size(); j-- > 0;) s = s * x + c[j];
    return s;
  };
  std::vector<std::vector<Quad>> D{{}};
  for (long long v : a) D[0].push_back(Quad(v));
  for (int j = 1; j <= n; ++j) D.push_back(deriv(D.back()));

  Quad x = inside[0];
  if (k < 0) {
    k = 0;
    for (int j = 1; j < n; ++j) {
      Quad scale = 0;
      for (const auto& c : D[j]) scale += abs(c);
      if (abs(eval(D[j], x)) > Quad(1e-6) * scale) break;
      k = j;
    }
  }
  if (k > n - 2) throw Error("vanishing order k must satisfy k <= n - 2");
  // Newton on P^{(k)}, which has a simple root there
  for (int it = 0; it < 100; ++it) {
    Quad dx = eval(D[k], x) / eval(D[k + 1], x);
    x -= dx;
    if (abs(dx) < kEps * 16 * abs(x)) break;
  }

  // rational roots have denominators dividing a_n
  const long long an = std::llabs(a[n]);
  for (long long q = 1; q <= an && q <= 100000; ++q) {
    if (an % q != 0) continue;
    const long long p = to_ll(round(x * Quad(q)));
    cpp_int s = 0, pw = 1, qpow = 1;
    for (int j = 0; j < n; ++j) qpow *= q;
    // q^n P(p/q) = sum a_j p^j q^{n-j}
    cpp_int qj = qpow;
    for (int j = 0; j <= n; ++j) {
      s += cpp_int(a[j]) * pw * qj;
      pw *= p;
      if (j < n) qj /= q;
    }
    if (s == 0) throw Error("root in bracket is rational (" + std::to_string(p) + "/" + std::to_string(q) + ")");
  }

  LiouvilleResult res;
  res.root = x;
  res.k = k;
  const double xd = static_cast<double>(x);
  double iso = std::numeric_limits<double>::infinity();
  for (double r : real_roots)
    if (std::abs(r - xd) > 1e-9) iso = std::min(iso, std::abs(r - xd));
  res.isolation_radius = iso;

  // Taylor coefficients of Q = P^{(k+1)}/(k+1)! about the root; sup over |t| <= d bounded by sum |b_j| d^j
  std::vector<double> b;
  {
    std::vector<Quad> Q = D[k + 1];
    Quad fact = 1;
    for (int j = 2; j <= k + 1; ++j) fact *= j;
    for (auto& c : Q) c /= fact;
    std::vector<Quad> cur = Q;
    Quad jf = 1;
    for (int j = 0; !cur.empty(); ++j) {
      if (j > 0) jf *= j;
      b.push_back(static_cast<double>(abs(eval(cur, x)) / jf));
      cur = deriv(cur);
    }
  }
  auto M_of = [&](double d) {
    double s = 0, p = 1;
    for (double bj : b) {
      s += bj * p;
      p *= d;
    }
    return s;
  };
  const double e = 1.0 / (k + 1);
  auto gap = [&](double d) { return d - std::pow(M_of(d), -e); };
  double dlo = 0, dhi = std::min(iso, 1e6);
  double delta;
  if (gap(dhi) <= 0) {
    delta = dhi;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (dlo + dhi);
      (gap(mid) > 0 ? dhi : dlo) = mid;
    }
    delta = dlo;
  }
  res.delta = delta;
  res.M = M_of(delta);
  res.C = std::min(delta, std::pow(res.M, -e));
  res.nu = static_cast<double>(n) / (k + 1) - 1.0;
  return res;
}

double small_denominator(const Quad& omega, long long q) {
  const Quad x = Quad(q) * omega;
  const Quad d = x - round(x);
  return 2.0 * std::abs(std::sin(kPi * static_cast<double>(d)));
}

SmallDenominator small_denominator_bound(const DiophantineFrequency& omega, long long q) {
  if (!omega.C || !omega.nu) throw Error("small_denominator_bound needs a certified frequency");
  if (q == 0) throw Error("q must be nonzero");
  SmallDenominator s;
  s.bound = 4.0 * *omega.C / std::pow(static_cast<double>(std::llabs(q)), *omega.nu);
  s.actual = small_denominator(omega.value, q);
  if (s.actual < s.bound * (1 - 1e-12))
    throw NumericalError("small-denominator inequality violated at q = " + std::to_string(q) +
                         ": the certification does not cover this q");
  return s;
}

double excluded_measure_bound(double C, double nu) {
  if (nu <= 1) return std::numeric_limits<double>::infinity();
  return C * boost::math::zeta(nu);
}

nlohmann::json to_json(const Certification& c) {
  return {{"passed", c.passed},
          {"C", c.C},
          {"nu", c.nu},
          {"q_max", c.q_max},
          {"worst_p", c.worst_p},
          {"worst_q", c.worst_q},
          {"worst_margin", c.worst_margin},
          {"mode", c.mode == ScanMode::convergents ? "convergents" : "exhaustive"}};
}

nlohmann::json to_json(const ContinuedFraction& cf) {
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& c : cf.convergents) conv.push_back({c.p, c.q});
  return {{"partial_quotients", cf.partial_quotients},
          {"convergents", conv},
          {"terminated", cf.terminated},
          {"precision_exhausted", cf.precision_exhausted},
          {"last_trustworthy_index", cf.last_trustworthy_index}};
}

}  // namespace perturblab::diophantine
