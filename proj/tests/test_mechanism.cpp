#include "mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using namespace tvlab;

namespace {

// brute-force Spearman straight from the definition: explicit midranks by
// counting, then the textbook Pearson formula
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      int less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + 0.5 * (equal + 1);
    }
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void test_spearman_examples() {
  std::vector<double> a{1, 2, 3}, b{10, 20, 30}, c{3, 2, 1};
  REQUIRE_CLOSE(spearman(a, b), 1.0, 1e-15);
  REQUIRE_CLOSE(spearman(a, c), -1.0, 1e-15);
  std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
  REQUIRE_CLOSE(spearman(x, y), 0.6, 1e-15);
  REQUIRE_CLOSE(spearman(x, y), spearman_oracle(x, y), 1e-15);
  test_pass("spearman: monotone, reversed, hand-ranked example");
}

void test_spearman_ties_and_oracle() {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 4 + rng.uniform_int(12);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform_int(5);  // ties guaranteed
      y[i] = rng.normal();
    }
    // skip degenerate draws
    bool tied = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    if (tied) continue;
    REQUIRE_CLOSE(spearman(x, y), spearman_oracle(x, y), 1e-12);
  }
  std::vector<double> flat{2, 2, 2, 2}, other{1, 2, 3, 4};
  REQUIRE_THROWS_AS(spearman(flat, other), NumericError);
  test_pass("midranks match the brute-force oracle; all-tied input rejected");
}

void test_spearman_monotone_invariance() {
  Rng rng(42);
  std::vector<double> x(25), y(25), ex(25), cy(25);
  for (int i = 0; i < 25; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    ex[i] = std::exp(x[i]);
    cy[i] = y[i] * y[i] * y[i] + 2.0;
  }
  REQUIRE_CLOSE(spearman(x, y), spearman(ex, y), 1e-12);
  REQUIRE_CLOSE(spearman(x, y), spearman(x, cy), 1e-12);
  test_pass("invariant under strictly increasing transforms");
}

void test_conditioned() {
  {
    // identical within every bin -> 1
    std::vector<double> a, b;
    std::vector<int> bins;
    Rng rng(43);
    for (int g = 0; g < 3; ++g)
      for (int i = 0; i < 5; ++i) {
        double v = rng.normal();
        a.push_back(v);
        b.push_back(v);
        bins.push_back(g);
      }
    REQUIRE_CLOSE(conditioned_spearman(a, b, bins), 1.0, 1e-15);
    for (double& v : b) v = -v;
    REQUIRE_CLOSE(conditioned_spearman(a, b, bins), -1.0, 1e-15);
  }
  {
    // Simpson construction: pooled positive, within-bin negative
    std::vector<double> pe, b;
    std::vector<int> bins;
    Rng rng(44);
    for (int g = 0; g < 5; ++g)
      for (int i = 0; i < 6; ++i) {
        double u = rng.uniform();
        pe.push_back(g + u);
        b.push_back(10.0 * g - u);
        bins.push_back(g);
      }
    REQUIRE(spearman(pe, b) > 0.5);
    REQUIRE_CLOSE(conditioned_spearman(pe, b, bins), -1.0, 1e-12);
  }
  {
    // bins smaller than 3 skipped; all small -> error
    std::vector<double> a{1, 2, 1, 2}, b{2, 1, 1, 2};
    std::vector<int> bins{0, 0, 1, 1};
    REQUIRE_THROWS_AS(conditioned_spearman(a, b, bins), NumericError);
  }
  test_pass("conditioned correlation: bins, weighting, Simpson confounder");
}

void test_bootstrap() {
  {
    // constant statistic collapses the interval
    CiEstimate ci = bootstrap_ci(10, [](std::span<const int>) { return 4.2; }, 200, 9);
    REQUIRE_CLOSE(ci.point, 4.2, 0.0);
    REQUIRE_CLOSE(ci.ci_lo, 4.2, 0.0);
    REQUIRE_CLOSE(ci.ci_hi, 4.2, 0.0);
  }
  {
    // deterministic given seed
    auto stat = [](std::span<const int> idx) {
      double s = 0;
      for (int i : idx) s += i;
      return s / idx.size();
    };
    CiEstimate a = bootstrap_ci(20, stat, 300, 5);
    CiEstimate b = bootstrap_ci(20, stat, 300, 5);
    REQUIRE(a.ci_lo == b.ci_lo && a.ci_hi == b.ci_hi);
  }
  {
    // CI width shrinks with N on noisy-rank data
    double widths[3];
    int idx = 0;
    for (int n : {20, 50, 100}) {
      Rng rng(100 + n);
      std::vector<double> x(n), y(n);
      for (int i = 0; i < n; ++i) {
        x[i] = i;
        y[i] = i + 12.0 * rng.normal();
      }
      auto stat = [&](std::span<const int> id) {
        std::vector<double> xs, ys;
        for (int i : id) {
          xs.push_back(x[i]);
          ys.push_back(y[i]);
        }
        return spearman(xs, ys);
      };
      CiEstimate ci = bootstrap_ci(n, stat, 1000, 7);
      widths[idx++] = ci.ci_hi - ci.ci_lo;
    }
    REQUIRE_MSG(widths[0] > widths[1] && widths[1] > widths[2], "widths %.3f %.3f %.3f",
                widths[0], widths[1], widths[2]);
  }
  REQUIRE_THROWS_AS(bootstrap_ci(5, [](std::span<const int>) { return 0.0; }, 50, 1), ConfigError);
  test_pass("bootstrap: degenerate, deterministic, width shrinks with N");
}

void test_mechanism_report() {
  // identity coupling phi := grad_var forces r_var_phi = 1
  const int n = 24;
  Rng rng(55);
  MechanismInputs in;
  for (int i = 0; i < n; ++i) {
    in.pe.push_back(rng.uniform());
    in.grad_var.push_back(rng.uniform() * 10);
    in.shapley.push_back(in.grad_var.back());
    in.bins.push_back(i / 6);
  }
  std::map<std::string, MechanismInputs> inputs{{"vanilla", in}, {"whitened", in}};
  MechanismReport rep = mechanism_report(inputs, 300, 13, Conditioning::within_decile_mean);
  REQUIRE(rep.variants.size() == 2);
  for (const VariantMechanism& vm : rep.variants) {
    REQUIRE_CLOSE(vm.var_phi.pooled.point, 1.0, 1e-12);
    REQUIRE_CLOSE(vm.var_phi.conditioned.point, 1.0, 1e-12);
    REQUIRE(vm.pe_phi.pooled.ci_lo <= vm.pe_phi.pooled.point);
    REQUIRE(vm.pe_phi.pooled.point <= vm.pe_phi.pooled.ci_hi);
  }
  REQUIRE(rep.flip_pe_phi.has_value());
  REQUIRE_CLOSE(rep.flip_pe_phi->point, 0.0, 1e-12);  // identical inputs

  // mismatched ids rejected
  std::map<std::string, MechanismInputs> bad{{"vanilla", in}};
  bad["whitened"] = in;
  bad["whitened"].pe.pop_back();
  REQUIRE_THROWS_AS(mechanism_report(bad, 300, 13, Conditioning::pooled), ConfigError);
  test_pass("mechanism report: identity coupling, flip diff, id mismatch");
}

}  // namespace

int main() {
  test_spearman_examples();
  test_spearman_ties_and_oracle();
  test_spearman_monotone_invariance();
  test_conditioned();
  test_bootstrap();
  test_mechanism_report();
  std::printf("test_mechanism: all passed\n");
  return 0;
}
