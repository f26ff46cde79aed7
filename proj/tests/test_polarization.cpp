#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlstack/polarization.hpp"

using namespace nlstack;

namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
  std::vector<std::size_t> idx;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] > v[(i + n - 1) % n] && v[i] > v[(i + 1) % n]) idx.push_back(i);
  return idx;
}

}  // namespace

TEST_CASE("D3h reduction fills the three tied entries") {
  const Chi2Tensor t = make_tensor(PointGroup::D3h, {{"chi0", 1.0}});
  CHECK(t.d[1][1] == 1.0);   // d22
  CHECK(t.d[1][0] == -1.0);  // d21
  CHECK(t.d[0][5] == -1.0);  // d16
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) sum += std::abs(t.d[i][j]);
  CHECK(sum == 3.0);
}

TEST_CASE("C2 ties are filled from any member and contradictions rejected") {
  const Chi2Tensor t = make_tensor(PointGroup::C2, {{"d14", 0.2}, {"d22", 1.0}});
  CHECK(t.d[1][4] == 0.2);  // d25 filled
  CHECK(t.d[2][5] == 0.2);  // d36 filled
  CHECK(t.d[1][1] == 1.0);
  CHECK_THROWS_AS(make_tensor(PointGroup::C2, {{"d14", 0.2}, {"d25", 0.3}}),
                  ValidationError);
  CHECK_THROWS_AS(make_tensor(PointGroup::C2, {{"d11", 0.2}}), ValidationError);
  CHECK_THROWS_AS(make_tensor(PointGroup::D3h, {{"d21", 0.2}}), ValidationError);
}

TEST_CASE("D3h co-polarized pattern is cos^2 of three times the offset angle") {
  const double theta0 = 20.0;
  const Chi2Tensor t = make_tensor(PointGroup::D3h, {{"chi0", 1.0}}, theta0);
  const auto grid = angle_grid(1.0);
  const PolarPattern p = polar_pattern(t, Analyzer::co_polarized, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double want = std::pow(std::cos(3.0 * deg2rad(grid[i] - theta0)), 2);
    CHECK(p.intensity[i] == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(local_maxima(p.intensity).size() == 6);
}

TEST_CASE("C2 with only d22 gives the two-lobed cos^6 pattern") {
  const double theta0 = 90.0;
  const Chi2Tensor t = make_tensor(PointGroup::C2, {{"d22", 1.0}}, theta0);
  const auto grid = angle_grid(1.0);
  const PolarPattern p = polar_pattern(t, Analyzer::co_polarized, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double want = std::pow(std::cos(deg2rad(grid[i] - theta0)), 6);
    CHECK(p.intensity[i] == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("rotating the crystal rotates every pattern by the same amount") {
  const auto grid = angle_grid(0.5);
  for (const auto analyzer :
       {Analyzer::co_polarized, Analyzer::cross_polarized, Analyzer::unanalyzed}) {
    const auto base = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 2.0}}, 5.0),
                                    analyzer, grid);
    const auto shifted = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 2.0}}, 15.0),
                                       analyzer, grid);
    const std::size_t steps = 20;  // 10 degrees at 0.5 degree spacing
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(shifted.intensity[(i + steps) % grid.size()] ==
            doctest::Approx(base.intensity[i]).epsilon(1e-9));
  }
}

TEST_CASE("pattern periods: 60 degrees for D3h, 180 for C2") {
  const auto grid = angle_grid(1.0);
  const auto d3h = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 1.0}}, 13.0),
                                 Analyzer::co_polarized, grid);
  const auto c2 =
      polar_pattern(make_tensor(PointGroup::C2, {{"d22", 1.0}, {"d23", 0.1}}, 40.0),
                    Analyzer::co_polarized, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(d3h.intensity[(i + 60) % 360] - d3h.intensity[i]) < 1e-9);
    CHECK(std::abs(c2.intensity[(i + 180) % 360] - c2.intensity[i]) < 1e-9);
  }
}

TEST_CASE("at normal incidence the C2 response involves only d22 and d23") {
  // Full constrained tensor with every tie populated...
  const Chi2Tensor full = make_tensor(
      PointGroup::C2, {{"d14", 0.7}, {"d21", 0.0}, {"d22", 1.0}, {"d23", 0.1}}, 25.0);
  // ...matches the tensor keeping only the in-plane-active pair.
  const Chi2Tensor pair =
      make_tensor(PointGroup::C2, {{"d22", 1.0}, {"d23", 0.1}}, 25.0);
  const auto grid = angle_grid(1.0);
  for (const auto analyzer :
       {Analyzer::co_polarized, Analyzer::cross_polarized, Analyzer::unanalyzed}) {
    const auto a = polar_pattern(full, analyzer, grid);
    const auto b = polar_pattern(pair, analyzer, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(a.intensity[i] == doctest::Approx(b.intensity[i]).epsilon(1e-12));
  }
  // d16 = d23 is tied but sits in the out-of-plane row; it must not leak in.
  CHECK(full.d[0][5] == 0.1);
}

TEST_CASE("co plus cross equals the unanalyzed intensity") {
  const auto grid = angle_grid(2.0);
  for (const Chi2Tensor& t :
       {make_tensor(PointGroup::D3h, {{"chi0", 1.3}}, 12.0),
        make_tensor(PointGroup::C2, {{"d22", 1.0}, {"d23", 0.25}, {"d21", 0.4}}, 77.0)}) {
    const auto co = polar_pattern(t, Analyzer::co_polarized, grid);
    const auto cross = polar_pattern(t, Analyzer::cross_polarized, grid);
    const auto total = polar_pattern(t, Analyzer::unanalyzed, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(co.intensity[i] + cross.intensity[i] ==
            doctest::Approx(total.intensity[i]).epsilon(1e-12));
  }
}

TEST_CASE("argmax set is invariant under tensor rescaling") {
  const auto grid = angle_grid(1.0);
  const auto a = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 1.0}}, 31.0),
                               Analyzer::co_polarized, grid);
  const auto b = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 250.0}}, 31.0),
                               Analyzer::co_polarized, grid);
  CHECK(local_maxima(a.intensity) == local_maxima(b.intensity));
  // all six lobes are exactly degenerate, so compare the maximum set, not the
  // first-of-equals index
  CHECK(a.intensity[argmax(a.intensity)] * 250.0 * 250.0 ==
        doctest::Approx(b.intensity[argmax(b.intensity)]).epsilon(1e-12));
}

TEST_CASE("strained pattern reduces exactly at zero strain") {
  const auto grid = angle_grid(1.0);
  const auto plain = polar_pattern(make_tensor(PointGroup::D3h, {{"chi0", 1.0}}, 20.0),
                                   Analyzer::co_polarized, grid);
  const auto strained = strained_d3h_pattern(1.0, 20.0, 0.0, 35.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(strained.intensity[i] == plain.intensity[i]);
}

TEST_CASE("small strain keeps six maxima but makes neighbors unequal") {
  const auto grid = angle_grid(0.5);
  const auto p = strained_d3h_pattern(1.0, 20.0, 0.15, 33.0, grid);
  const auto peaks = local_maxima(p.intensity);
  REQUIRE(peaks.size() == 6);
  bool any_unequal = false;
  for (std::size_t k = 0; k < 6; ++k) {
    const double a = p.intensity[peaks[k]];
    const double b = p.intensity[peaks[(k + 1) % 6]];
    if (std::abs(a - b) > 1e-6 * std::max(a, b)) any_unequal = true;
  }
  CHECK(any_unequal);
  // Lobes keep their 180-degree pairing: P(theta+180) = P(theta).
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(p.intensity[(i + 360) % grid.size()] ==
          doctest::Approx(p.intensity[i]).epsilon(1e-12));
}

// Any strain term additive in the polarization keeps the crystal's three-fold
// symmetry: rotating the strain axis by 120 degrees shifts the lobe-height
// sequence by two lobes.
TEST_CASE("rotating the strain axis by 120 degrees permutes the lobe heights") {
  const auto grid = angle_grid(0.5);
  const auto a = strained_d3h_pattern(1.0, 0.0, 0.2, 25.0, grid);
  const auto b = strained_d3h_pattern(1.0, 0.0, 0.2, 145.0, grid);
  const auto pa = local_maxima(a.intensity);
  const auto pb = local_maxima(b.intensity);
  REQUIRE(pa.size() == 6);
  REQUIRE(pb.size() == 6);
  std::vector<double> ha, hb;
  for (std::size_t k = 0; k < 6; ++k) {
    ha.push_back(a.intensity[pa[k]]);
    hb.push_back(b.intensity[pb[k]]);
  }
  // heights of b are a cyclic shift of heights of a
  bool matched = false;
  for (std::size_t shift = 0; shift < 6 && !matched; ++shift) {
    bool ok = true;
    for (std::size_t k = 0; k < 6; ++k)
      if (std::abs(hb[(k + shift) % 6] - ha[k]) > 1e-6 * std::max(ha[k], 1e-12)) ok = false;
    matched = ok;
  }
  CHECK(matched);
}

TEST_CASE("negative strain magnitude is rejected") {
  CHECK_THROWS_AS(strained_d3h_pattern(1.0, 0.0, -0.1, 0.0, angle_grid(1.0)),
                  ValidationError);
}
