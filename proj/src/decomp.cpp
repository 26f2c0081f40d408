#include "kcs/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kcs/error.hpp"

namespace kcs {

namespace {

double safe_hypot(double a, double b) {
  if (a == 0.0) return std::fabs(b);
  const double c = b / a;
  return std::fabs(a) * std::sqrt(1.0 + c * c);
}

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw ContractViolation(std::string(who) + ": matrix not square");
}

void require_finite(const Matrix& a, const char* who) {
  if (!a.all_finite()) throw ContractViolation(std::string(who) + ": nonfinite entry");
}

// Core of the SVD for m >= n, adapted from the classic JAMA routine:
// Householder bidiagonalization, then implicit-shift QR sweeps on the
// bidiagonal with the usual four-way deflation case analysis.
void svd_tall(const Matrix& arg, Matrix& u_out, Vector& s_out, Matrix& v_out) {
  const int m = static_cast<int>(arg.rows());
  const int n = static_cast<int>(arg.cols());
  const int nu = n;  // m >= n

  Matrix a = arg;
  Matrix u(m, nu, 0.0);
  Matrix v(n, n, 0.0);
  Vector s(static_cast<std::size_t>(n), 0.0);
  Vector e(static_cast<std::size_t>(n), 0.0);
  Vector work(static_cast<std::size_t>(m), 0.0);

  const int nct = std::min(m - 1, n);
  const int nrt = std::max(0, std::min(n - 2, m));
  for (int k = 0; k < std::max(nct, nrt); ++k) {
    if (k < nct) {
      // Householder vector for column k; norm via hypot to dodge overflow.
      s[k] = 0.0;
      for (int i = k; i < m; ++i) s[k] = safe_hypot(s[k], a(i, k));
      if (s[k] != 0.0) {
        if (a(k, k) < 0.0) s[k] = -s[k];
        for (int i = k; i < m; ++i) a(i, k) /= s[k];
        a(k, k) += 1.0;
      }
      s[k] = -s[k];
    }
    for (int j = k + 1; j < n; ++j) {
      if (k < nct && s[k] != 0.0) {
        double t = 0.0;
        for (int i = k; i < m; ++i) t += a(i, k) * a(i, j);
        t = -t / a(k, k);
        for (int i = k; i < m; ++i) a(i, j) += t * a(i, k);
      }
      e[j] = a(k, j);
    }
    if (k < nct)
      for (int i = k; i < m; ++i) u(i, k) = a(i, k);
    if (k < nrt) {
      e[k] = 0.0;
      for (int i = k + 1; i < n; ++i) e[k] = safe_hypot(e[k], e[i]);
      if (e[k] != 0.0) {
        if (e[k + 1] < 0.0) e[k] = -e[k];
        for (int i = k + 1; i < n; ++i) e[i] /= e[k];
        e[k + 1] += 1.0;
      }
      e[k] = -e[k];
      if (k + 1 < m && e[k] != 0.0) {
        for (int i = k + 1; i < m; ++i) work[i] = 0.0;
        for (int j = k + 1; j < n; ++j)
          for (int i = k + 1; i < m; ++i) work[i] += e[j] * a(i, j);
        for (int j = k + 1; j < n; ++j) {
          const double t = -e[j] / e[k + 1];
          for (int i = k + 1; i < m; ++i) a(i, j) += t * work[i];
        }
      }
      for (int i = k + 1; i < n; ++i) v(i, k) = e[i];
    }
  }

  // Final bidiagonal of order p.
  int p = std::min(n, m + 1);
  if (nct < n) s[nct] = a(nct, nct);
  if (m < p) s[p - 1] = 0.0;
  if (nrt + 1 < p) e[nrt] = a(nrt, p - 1);
  e[p - 1] = 0.0;

  // Generate U.
  for (int j = nct; j < nu; ++j) {
    for (int i = 0; i < m; ++i) u(i, j) = 0.0;
    u(j, j) = 1.0;
  }
  for (int k = nct - 1; k >= 0; --k) {
    if (s[k] != 0.0) {
      for (int j = k + 1; j < nu; ++j) {
        double t = 0.0;
        for (int i = k; i < m; ++i) t += u(i, k) * u(i, j);
        t = -t / u(k, k);
        for (int i = k; i < m; ++i) u(i, j) += t * u(i, k);
      }
      for (int i = k; i < m; ++i) u(i, k) = -u(i, k);
      u(k, k) = 1.0 + u(k, k);
      for (int i = 0; i < k - 1; ++i) u(i, k) = 0.0;
    } else {
      for (int i = 0; i < m; ++i) u(i, k) = 0.0;
      u(k, k) = 1.0;
    }
  }

  // Generate V.
  for (int k = n - 1; k >= 0; --k) {
    if (k < nrt && e[k] != 0.0) {
      for (int j = k + 1; j < nu; ++j) {
        double t = 0.0;
        for (int i = k + 1; i < n; ++i) t += v(i, k) * v(i, j);
        t = -t / v(k + 1, k);
        for (int i = k + 1; i < n; ++i) v(i, j) += t * v(i, k);
      }
    }
    for (int i = 0; i < n; ++i) v(i, k) = 0.0;
    v(k, k) = 1.0;
  }

  // Iterate on the bidiagonal until it is diagonal.
  const int pp = p - 1;
  int iter = 0;
  std::size_t total_iter = 0;
  const double eps = std::numeric_limits<double>::epsilon();
  while (p > 0) {
    int k, kase;
    if (iter > 200)
      throw NumericFailure("svd: QR iteration failed to converge", total_iter);

    for (k = p - 2; k >= -1; --k) {
      if (k == -1) break;
      if (std::fabs(e[k]) <= eps * (std::fabs(s[k]) + std::fabs(s[k + 1]))) {
        e[k] = 0.0;
        break;
      }
    }
    if (k == p - 2) {
      kase = 4;
    } else {
      int ks;
      for (ks = p - 1; ks >= k; --ks) {
        if (ks == k) break;
        const double t = (ks != p ? std::fabs(e[ks]) : 0.0) +
                         (ks != k + 1 ? std::fabs(e[ks - 1]) : 0.0);
        if (std::fabs(s[ks]) <= eps * t) {
          s[ks] = 0.0;
          break;
        }
      }
      if (ks == k) {
        kase = 3;
      } else if (ks == p - 1) {
        kase = 1;
      } else {
        kase = 2;
        k = ks;
      }
    }
    ++k;

    switch (kase) {
      case 1: {  // deflate negligible s(p)
        double f = e[p - 2];
        e[p - 2] = 0.0;
        for (int j = p - 2; j >= k; --j) {
          double t = safe_hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          if (j != k) {
            f = -sn * e[j - 1];
            e[j - 1] = cs * e[j - 1];
          }
          for (int i = 0; i < n; ++i) {
            t = cs * v(i, j) + sn * v(i, p - 1);
            v(i, p - 1) = -sn * v(i, j) + cs * v(i, p - 1);
            v(i, j) = t;
          }
        }
        break;
      }
      case 2: {  // split at negligible s(k)
        double f = e[k - 1];
        e[k - 1] = 0.0;
        for (int j = k; j < p; ++j) {
          double t = safe_hypot(s[j], f);
          const double cs = s[j] / t;
          const double sn = f / t;
          s[j] = t;
          f = -sn * e[j];
          e[j] = cs * e[j];
          for (int i = 0; i < m; ++i) {
            t = cs * u(i, j) + sn * u(i, k - 1);
            u(i, k - 1) = -sn * u(i, j) + cs * u(i, k - 1);
            u(i, j) = t;
          }
        }
        break;
      }
      case 3: {  // one implicit-shift QR step
        const double scale = std::max(
            std::max(std::max(std::max(std::fabs(s[p - 1]), std::fabs(s[p - 2])),
                              std::fabs(e[p - 2])),
                     std::fabs(s[k])),
            std::fabs(e[k]));
        const double sp = s[p - 1] / scale;
        const double spm1 = s[p - 2] / scale;
        const double epm1 = e[p - 2] / scale;
        const double sk = s[k] / scale;
        const double ek = e[k] / scale;
        const double b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / 2.0;
        const double c = (sp * epm1) * (sp * epm1);
        double shift = 0.0;
        if (b != 0.0 || c != 0.0) {
          shift = std::sqrt(b * b + c);
          if (b < 0.0) shift = -shift;
          shift = c / (b + shift);
        }
        double f = (sk + sp) * (sk - sp) + shift;
        double g = sk * ek;
        for (int j = k; j < p - 1; ++j) {
          double t = safe_hypot(f, g);
          double cs = f / t;
          double sn = g / t;
          if (j != k) e[j - 1] = t;
          f = cs * s[j] + sn * e[j];
          e[j] = cs * e[j] - sn * s[j];
          g = sn * s[j + 1];
          s[j + 1] = cs * s[j + 1];
          for (int i = 0; i < n; ++i) {
            t = cs * v(i, j) + sn * v(i, j + 1);
            v(i, j + 1) = -sn * v(i, j) + cs * v(i, j + 1);
            v(i, j) = t;
          }
          t = safe_hypot(f, g);
          cs = f / t;
          sn = g / t;
          s[j] = t;
          f = cs * e[j] + sn * s[j + 1];
          s[j + 1] = -sn * e[j] + cs * s[j + 1];
          g = sn * e[j + 1];
          e[j + 1] = cs * e[j + 1];
          if (j < m - 1) {
            for (int i = 0; i < m; ++i) {
              t = cs * u(i, j) + sn * u(i, j + 1);
              u(i, j + 1) = -sn * u(i, j) + cs * u(i, j + 1);
              u(i, j) = t;
            }
          }
        }
        e[p - 2] = f;
        ++iter;
        ++total_iter;
        break;
      }
      case 4: {  // converged; fix sign and keep order descending
        if (s[k] <= 0.0) {
          s[k] = (s[k] < 0.0 ? -s[k] : 0.0);
          for (int i = 0; i <= pp; ++i) v(i, k) = -v(i, k);
        }
        while (k < pp) {
          if (s[k] >= s[k + 1]) break;
          std::swap(s[k], s[k + 1]);
          if (k < n - 1)
            for (int i = 0; i < n; ++i) std::swap(v(i, k), v(i, k + 1));
          if (k < m - 1)
            for (int i = 0; i < m; ++i) std::swap(u(i, k), u(i, k + 1));
          ++k;
        }
        iter = 0;
        --p;
        break;
      }
    }
  }

  u_out = std::move(u);
  s_out = std::move(s);
  v_out = std::move(v);
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.empty()) throw ContractViolation("svd: empty matrix");
  require_finite(a, "svd");
  SvdResult r;
  if (a.rows() >= a.cols()) {
    svd_tall(a, r.u, r.s, r.v);
  } else {
    // The bidiagonalization assumes m >= n; transpose and swap factors.
    Matrix u, v;
    svd_tall(transpose(a), u, r.s, v);
    r.u = std::move(v);
    r.v = std::move(u);
  }
  return r;
}

Matrix pinv(const Matrix& a, double rtol) {
  const SvdResult f = svd(a);
  if (rtol < 0.0)
    rtol = std::numeric_limits<double>::epsilon() *
           static_cast<double>(std::max(a.rows(), a.cols()));
  const double cutoff = rtol * (f.s.empty() ? 0.0 : f.s[0]);
  const std::size_t k = f.s.size();

  // pinv = V * diag(1/s) * U^T, dropping singular values at or below cutoff.
  Matrix vs(a.cols(), k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double inv = (f.s[j] > cutoff && f.s[j] > 0.0) ? 1.0 / f.s[j] : 0.0;
    for (std::size_t i = 0; i < a.cols(); ++i) vs(i, j) = f.v(i, j) * inv;
  }
  return matmul(vs, transpose(f.u));
}

SymEigResult sym_eig(const Matrix& a) {
  require_square(a, "sym_eig");
  require_finite(a, "sym_eig");
  double scale_max = 0.0;
  double asym = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      scale_max = std::max(scale_max, std::fabs(a(i, j)));
      asym = std::max(asym, std::fabs(a(i, j) - a(j, i)));
    }
  if (asym > 1e-12 * std::max(1.0, scale_max))
    throw ContractViolation("sym_eig: input is not symmetric");
  const int n = static_cast<int>(a.rows());
  Matrix v = a;
  Vector d(static_cast<std::size_t>(n), 0.0);
  Vector e(static_cast<std::size_t>(n), 0.0);

  // Householder reduction to tridiagonal form (tred2).
  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::fabs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0.0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;
      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= f * e[k] + g * d[k];
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  // Implicit QL iteration on the tridiagonal (tql2).
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f_acc = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::fabs(d[l]) + std::fabs(e[l]));
    int m = l;
    while (m < n) {
      if (std::fabs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 100)
          throw NumericFailure("sym_eig: QL iteration failed to converge",
                               static_cast<std::size_t>(iter));
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = safe_hypot(p, 1.0);
        if (p < 0.0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f_acc += h;
        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = safe_hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::fabs(e[l]) > eps * tst1);
      d[l] += f_acc;
      e[l] = 0.0;
    } else {
      d[l] += f_acc;
    }
  }

  // Sort descending, carrying the eigenvector columns along.
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
  SymEigResult out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.values[j] = d[order[j]];
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
      out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

PivotedCholesky pivoted_cholesky(const Matrix& g, double tol) {
  require_square(g, "pivoted_cholesky");
  require_finite(g, "pivoted_cholesky");
  if (tol < 0.0) throw ContractViolation("pivoted_cholesky: negative tolerance");
  const std::size_t n = g.rows();

  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = g(i, i);

  Matrix l(n, n, 0.0);
  std::vector<std::size_t> pivots;
  std::vector<char> selected(n, 0);
  pivots.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = n;
    double best_d = tol;
    for (std::size_t i = 0; i < n; ++i) {
      if (!selected[i] && d[i] > best_d) {
        best = i;
        best_d = d[i];
      }
      if (d[i] < -tol)
        throw ContractViolation("pivoted_cholesky: input not positive semidefinite");
    }
    if (best == n) break;

    selected[best] = 1;
    pivots.push_back(best);
    const double piv = std::sqrt(best_d);
    double* lk = l.row(k);
    const double* gb = g.row(best);
    for (std::size_t i = 0; i < n; ++i) lk[i] = gb[i];
    for (std::size_t s = 0; s < k; ++s) {
      const double lsb = l(s, best);
      const double* ls = l.row(s);
      for (std::size_t i = 0; i < n; ++i) lk[i] -= lsb * ls[i];
    }
    for (std::size_t i = 0; i < n; ++i) lk[i] /= piv;
    for (std::size_t i = 0; i < n; ++i) d[i] -= lk[i] * lk[i];
  }

  PivotedCholesky out;
  out.rank = pivots.size();
  out.pivots = std::move(pivots);
  if (out.rank > 0) {
    out.factor = Matrix(out.rank, n);
    for (std::size_t i = 0; i < out.rank; ++i)
      for (std::size_t j = 0; j < n; ++j) out.factor(i, j) = l(i, j);
  }
  return out;
}

Matrix cholesky_upper(const Matrix& a) {
  require_square(a, "cholesky");
  const std::size_t n = a.rows();
  Matrix r = a;
  for (std::size_t k = 0; k < n; ++k) {
    const double piv = r(k, k);
    if (!(piv > 0.0))
      throw NumericFailure("cholesky: nonpositive pivot", k);
    const double rkk = std::sqrt(piv);
    r(k, k) = rkk;
    double* rk = r.row(k);
    for (std::size_t j = k + 1; j < n; ++j) rk[j] /= rkk;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double rki = rk[i];
      if (rki == 0.0) continue;
      double* ri = r.row(i);
      for (std::size_t j = i; j < n; ++j) ri[j] -= rki * rk[j];
    }
  }
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) r(i, j) = 0.0;
  return r;
}

Vector cholesky_solve(const Matrix& r, Vector b) {
  const std::size_t n = r.rows();
  if (b.size() != n) throw ContractViolation("cholesky_solve: size mismatch");
  // Forward pass with R^T, then back substitution with R.
  for (std::size_t k = 0; k < n; ++k) {
    b[k] /= r(k, k);
    const double bk = b[k];
    const double* rk = r.row(k);
    for (std::size_t j = k + 1; j < n; ++j) b[j] -= bk * rk[j];
  }
  for (std::size_t k = n; k-- > 0;) {
    const double* rk = r.row(k);
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= rk[j] * b[j];
    b[k] = s / rk[k];
  }
  return b;
}

Matrix spd_inv_sqrt(const Matrix& a) {
  const SymEigResult eig = sym_eig(a);
  const double min_eig = eig.values.back();
  if (!(min_eig > 0.0))
    throw DegenerateCovariance("spd_inv_sqrt: matrix not positive definite", min_eig);
  const std::size_t n = a.rows();
  Matrix scaled(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = 1.0 / std::sqrt(eig.values[j]);
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) = eig.vectors(i, j) * w;
  }
  Matrix out = ref::matmul(scaled, transpose(eig.vectors));
  // Enforce exact symmetry; downstream quadratic forms assume it.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out(j, i) = out(i, j);
  return out;
}

}  // namespace kcs
