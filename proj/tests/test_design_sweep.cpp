#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nlstack/design_sweep.hpp"

using namespace nlstack;

namespace {

const MaterialLibrary& lib() {
  static MaterialLibrary l = MaterialLibrary::bundled_defaults();
  return l;
}

SweepTemplate hbn_template(int monolayers, double sio2_nm, const std::string& substrate,
                           Parity parity = Parity::any) {
  SweepTemplate tpl;
  tpl.stack.ambient = "vacuum";
  tpl.stack.substrate = substrate;
  NonlinearSpec nl;
  nl.monolayer_count = monolayers;
  nl.monolayer_thickness_nm = kHbnMonolayerNm;
  tpl.stack.layers.push_back(Layer{"hBN", monolayers * kHbnMonolayerNm, nl});
  if (sio2_nm > 0.0) tpl.stack.layers.push_back(Layer{"SiO2", sio2_nm, std::nullopt});
  tpl.pump_nm = 890.0;
  tpl.parity = parity;
  return tpl;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
  return v;
}

}  // namespace

TEST_CASE("monolayer rounding honors the parity request") {
  CHECK(monolayer_count_for(10.0, kHbnMonolayerNm, Parity::any) == 30);
  CHECK(monolayer_count_for(10.0, kHbnMonolayerNm, Parity::odd) == 31);
  CHECK(monolayer_count_for(10.0, kHbnMonolayerNm, Parity::even) == 30);
  CHECK(monolayer_count_for(8.0, kHbnMonolayerNm, Parity::odd) == 25);
  CHECK(monolayer_count_for(0.1, kHbnMonolayerNm, Parity::odd) == 1);
  CHECK(monolayer_count_for(0.1, kHbnMonolayerNm, Parity::even) == 2);
  // exact tie between the odd neighbors resolves toward the smaller count
  CHECK(monolayer_count_for(4.0 * kHbnMonolayerNm, kHbnMonolayerNm, Parity::odd) == 3);
}

TEST_CASE("template without nonlinear layer sweeps to all zeros") {
  SweepTemplate tpl;
  tpl.stack.ambient = "vacuum";
  tpl.stack.substrate = "Si";
  tpl.stack.layers.push_back(Layer{"SiO2", 100.0, std::nullopt});
  const SweepResult r = sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, {10, 20, 30});
  for (double v : r.intensity) CHECK(v == 0.0);
}

TEST_CASE("degenerate grid equals a direct shg_intensity call") {
  const SweepTemplate tpl = hbn_template(91, 64.0, "Au");
  const SweepResult r = sweep_1d(tpl, lib(), SweepAxis::pump_wavelength, {890.0});
  const double direct = shg_intensity(tpl.stack, lib(), 890.0).intensity_total;
  CHECK(r.intensity.size() == 1);
  CHECK(r.intensity[0] == direct);

  const SweepResult r2 = sweep_2d(tpl, lib(), SweepAxis::hbn_thickness, {91 * 0.333},
                                  SweepAxis::sio2_thickness, {64.0});
  CHECK(r2.intensity[0] == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("results do not depend on the worker count") {
  const SweepTemplate tpl = hbn_template(31, 64.0, "Au", Parity::odd);
  const auto grid = linspace(10.0, 120.0, 23);
  const SweepResult serial = sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, grid, 1);
  const SweepResult parallel = sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, grid, 4);
  CHECK(serial.intensity == parallel.intensity);  // bit identical

  const auto ga = linspace(5.0, 40.0, 6), gb = linspace(20.0, 90.0, 7);
  const SweepResult s2 =
      sweep_2d(tpl, lib(), SweepAxis::hbn_thickness, ga, SweepAxis::sio2_thickness, gb, 1);
  const SweepResult p2 =
      sweep_2d(tpl, lib(), SweepAxis::hbn_thickness, ga, SweepAxis::sio2_thickness, gb, 4);
  CHECK(s2.intensity == p2.intensity);
}

TEST_CASE("sweeping sio2 through zero removes the spacer") {
  const SweepTemplate tpl = hbn_template(25, 64.0, "Au", Parity::odd);
  const SweepResult r = sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, {0.0, 64.0});
  LayerStack bare = tpl.stack;
  bare.layers.pop_back();
  CHECK(r.intensity[0] ==
        doctest::Approx(shg_intensity(bare, lib(), 890.0).intensity_total).epsilon(1e-12));
  CHECK(r.intensity[1] > r.intensity[0]);  // the 64 nm spacer is the design point
}

TEST_CASE("grid validation") {
  const SweepTemplate tpl = hbn_template(31, 0.0, "Au");
  CHECK_THROWS_AS(sweep_1d(tpl, lib(), SweepAxis::hbn_thickness, {}), ValidationError);
  CHECK_THROWS_AS(sweep_1d(tpl, lib(), SweepAxis::hbn_thickness, {10.0, 10.0}),
                  ValidationError);
  CHECK_THROWS_AS(sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, {10.0, 20.0}),
                  ValidationError);  // no SiO2 layer in this template
}

TEST_CASE("enhancement maps are pointwise ratios with flagged zeros") {
  SweepResult num, den;
  num.axes = {AxisDef{"x", "nm", {1, 2, 3}}};
  num.intensity = {2.0, 4.0, 6.0};
  den = num;
  const SweepResult ones = enhancement_map(num, den);
  for (double v : ones.intensity) CHECK(v == 1.0);
  CHECK(ones.flags == std::vector<std::uint8_t>{0, 0, 0});

  den.intensity = {1.0, 0.0, 2.0};
  const SweepResult mixed = enhancement_map(num, den);
  CHECK(mixed.intensity[0] == 2.0);
  CHECK(mixed.flags[1] == 1);
  CHECK(mixed.intensity[1] == 0.0);
  CHECK(mixed.intensity[2] == 3.0);

  SweepResult other = den;
  other.axes[0].values = {1, 2, 4};
  CHECK_THROWS_AS(enhancement_map(num, other), ValidationError);
}

TEST_CASE("find_optima refines a sampled quadratic to its vertex") {
  SweepResult s;
  s.axes = {AxisDef{"x", "nm", {}}};
  const double vertex = 37.3;
  for (double x = 10.0; x <= 70.0; x += 4.0) {
    s.axes[0].values.push_back(x);
    s.intensity.push_back(100.0 - (x - vertex) * (x - vertex));
  }
  const auto optima = find_optima(s, 0.05);
  REQUIRE(optima.size() == 1);
  CHECK_FALSE(optima[0].is_boundary);
  CHECK(optima[0].refined_location[0] == doctest::Approx(vertex).epsilon(0.01));
  CHECK(std::abs(optima[0].refined_location[0] - optima[0].location[0]) <= 4.0);
}

TEST_CASE("flat maps yield no optima, equal peaks are both kept in axis order") {
  SweepResult flat;
  flat.axes = {AxisDef{"x", "nm", {1, 2, 3, 4}}};
  flat.intensity = {5, 5, 5, 5};
  CHECK(find_optima(flat).empty());

  SweepResult twin;
  twin.axes = {AxisDef{"x", "nm", {}}};
  for (int i = 0; i <= 40; ++i) twin.axes[0].values.push_back(i);
  twin.intensity.assign(41, 0.0);
  auto bump = [&](int center) {
    for (int i = -3; i <= 3; ++i)
      twin.intensity[static_cast<std::size_t>(center + i)] = 10.0 - i * i;
  };
  bump(10);
  bump(30);
  const auto optima = find_optima(twin, 0.05);
  REQUIRE(optima.size() == 2);
  CHECK(optima[0].location[0] == 10.0);
  CHECK(optima[1].location[0] == 30.0);
  CHECK(optima[0].value == optima[1].value);
}

TEST_CASE("boundary maxima are flagged, ripple is suppressed by prominence") {
  SweepResult s;
  s.axes = {AxisDef{"x", "nm", {}}};
  for (int i = 0; i <= 50; ++i) {
    s.axes[0].values.push_back(i);
    // decreasing ramp with a weak ripple and a strong interior peak
    double v = 50.0 - 0.5 * i + 1.5 * std::sin(i * 2.1 + 2.5);
    if (i >= 24 && i <= 28) v += 40.0 - 8.0 * std::abs(i - 26);
    s.intensity.push_back(v);
  }
  const auto strong = find_optima(s, 0.05);
  REQUIRE(!strong.empty());
  bool found_boundary = false, found_interior = false;
  for (const auto& o : strong) {
    if (o.is_boundary) found_boundary = true;
    if (!o.is_boundary) {
      found_interior = true;
      CHECK(o.location[0] == doctest::Approx(26.0).epsilon(0.1));
    }
  }
  CHECK(found_boundary);  // the ramp start is a boundary maximum
  CHECK(found_interior);
  // tighter threshold keeps only peaks, looser admits the ripple
  CHECK(find_optima(s, 0.4).size() < find_optima(s, 0.001).size());
}

TEST_CASE("2d optima locate an interior peak with per-axis refinement") {
  SweepResult s;
  s.axes = {AxisDef{"a", "nm", {}}, AxisDef{"b", "nm", {}}};
  for (double a = 0; a <= 20; a += 2) s.axes[0].values.push_back(a);
  for (double b = 0; b <= 30; b += 3) s.axes[1].values.push_back(b);
  const double va = 9.2, vb = 16.1;
  for (double a : s.axes[0].values)
    for (double b : s.axes[1].values)
      s.intensity.push_back(1000.0 - (a - va) * (a - va) - (b - vb) * (b - vb));
  const auto optima = find_optima(s, 0.05);
  REQUIRE(optima.size() == 1);
  CHECK(optima[0].refined_location[0] == doctest::Approx(va).epsilon(0.01));
  CHECK(optima[0].refined_location[1] == doctest::Approx(vb).epsilon(0.01));
}

TEST_CASE("grid refinement moves the physical optimum by less than a coarse step") {
  const SweepTemplate tpl = hbn_template(1, 30.0, "Au", Parity::odd);
  const auto coarse_grid = linspace(40.0, 120.0, 21);  // 4 nm step
  const auto fine_grid = linspace(40.0, 120.0, 41);    // 2 nm step
  const auto coarse =
      find_optima(sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, coarse_grid), 0.05);
  const auto fine =
      find_optima(sweep_1d(tpl, lib(), SweepAxis::sio2_thickness, fine_grid), 0.05);
  REQUIRE(!coarse.empty());
  REQUIRE(!fine.empty());
  CHECK(std::abs(coarse[0].refined_location[0] - fine[0].refined_location[0]) < 4.0);
}

TEST_CASE("csv export carries axes, values and the flag column when present") {
  SweepResult s;
  s.axes = {AxisDef{"sio2_thickness_nm", "nm", {10, 20}}};
  s.intensity = {1.5, 2.5};
  std::ostringstream out;
  write_sweep_csv(out, s);
  CHECK(out.str() == "sio2_thickness_nm,intensity\n10,1.5\n20,2.5\n");

  s.flags = {0, 1};
  std::ostringstream out2;
  write_sweep_csv(out2, s);
  CHECK(out2.str() == "sio2_thickness_nm,intensity,flagged\n10,1.5,0\n20,2.5,1\n");
}
