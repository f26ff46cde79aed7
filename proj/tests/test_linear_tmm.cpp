#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "nlstack/linear_tmm.hpp"
#include "oracles.hpp"

using namespace nlstack;

namespace {

const MaterialLibrary& lib() {
  static MaterialLibrary l = [] {
    MaterialLibrary base = MaterialLibrary::bundled_defaults();
    // lossless synthetic media for the closed-form checks
    base.add(OpticalConstants("n2", {{200, 2.0, 0}, {2000, 2.0, 0}}));
    base.add(OpticalConstants("n15", {{200, 1.5, 0}, {2000, 1.5, 0}}));
    return base;
  }();
  return l;
}

LayerStack bare(const std::string& ambient, const std::string& substrate) {
  LayerStack s;
  s.ambient = ambient;
  s.substrate = substrate;
  return s;
}

LayerStack film(const std::string& mat, double d, const std::string& ambient,
                const std::string& substrate) {
  LayerStack s = bare(ambient, substrate);
  s.layers.push_back(Layer{mat, d, std::nullopt});
  return s;
}

}  // namespace

TEST_CASE("vacuum on vacuum: no reflection") {
  const auto r = reflectance(bare("vacuum", "vacuum"), lib(), 890.0);
  CHECK(std::abs(r.r) < 1e-14);
  CHECK(std::abs(r.t - 1.0) < 1e-14);
}

TEST_CASE("single interface matches the Fresnel formula") {
  const auto resp = reflectance(bare("vacuum", "n2"), lib(), 890.0);
  CHECK(resp.r.real() == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(resp.r.imag()) < 1e-14);
  CHECK(resp.R == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("half-wave film between identical media is transparent") {
  const double lam = 890.0;
  const double d = lam / (2.0 * 2.0);
  const auto resp = reflectance(film("n2", d, "vacuum", "vacuum"), lib(), lam);
  CHECK(resp.R < 1e-18);
  CHECK(resp.T == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("285 nm SiO2 on Si matches the Airy oracle to 1e-9") {
  const double lam = 890.0;
  const auto n0 = lib().index_at("vacuum", lam);
  const auto n1 = lib().index_at("SiO2", lam);
  const auto n2 = lib().index_at("Si", lam);
  const auto expected = oracle::airy_r(n0, n1, n2, 285.0, lam);
  const auto resp = reflectance(film("SiO2", 285.0, "vacuum", "Si"), lib(), lam);
  CHECK(std::abs(resp.r - expected) < 1e-9);
  CHECK(std::abs(resp.t - oracle::airy_t(n0, n1, n2, 285.0, lam)) < 1e-9);
}

TEST_CASE("random single films match the Airy oracle") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> thick(5.0, 400.0);
  std::uniform_real_distribution<double> wl(400.0, 1500.0);
  const char* mats[] = {"SiO2", "hBN", "Au", "Si", "NbOCl2"};
  const char* subs[] = {"Si", "Au", "SiO2", "vacuum"};
  for (int trial = 0; trial < 30; ++trial) {
    const char* m = mats[rng() % 5];
    const char* sub = subs[rng() % 4];
    const double d = thick(rng);
    const double lam = wl(rng);
    const auto got = reflectance(film(m, d, "vacuum", sub), lib(), lam);
    const auto want = oracle::airy_r(lib().index_at("vacuum", lam), lib().index_at(m, lam),
                                     lib().index_at(sub, lam), d, lam);
    CHECK(std::abs(got.r - want) < 1e-9);
  }
}

TEST_CASE("tangential continuity holds at every interface") {
  LayerStack s = bare("vacuum", "Si");
  s.layers = {Layer{"hBN", 47.0, std::nullopt}, Layer{"SiO2", 120.0, std::nullopt},
              Layer{"Au", 30.0, std::nullopt}, Layer{"Ti", 12.0, std::nullopt}};
  const double lam = 700.0;
  const auto coeffs = solve_linear(s, lib(), lam);
  const auto& bounds = coeffs.boundaries();
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    const double z = bounds[j];
    const auto& above = coeffs.region(j);
    const auto& below = coeffs.region(j + 1);
    auto field = [&](const auto& w) {
      const cdouble up = std::exp(cdouble(0, 1) * w.q * (z - w.z_ref));
      const cdouble e_plus = w.e_fwd * up, e_minus = w.e_bwd / up;
      return std::pair<cdouble, cdouble>{e_plus + e_minus,
                                         (w.q) * (e_plus - e_minus)};
    };
    const auto [ea, ha] = field(above);
    const auto [eb, hb] = field(below);
    CHECK(std::abs(ea - eb) <= 1e-10 * std::max(1.0, std::abs(ea)));
    CHECK(std::abs(ha - hb) <= 1e-10 * std::max(1.0, std::abs(ha)));
  }
  CHECK(std::abs(coeffs.region(coeffs.region_count() - 1).e_bwd) == 0.0);
}

TEST_CASE("uniform vacuum gives a plane wave everywhere") {
  const auto coeffs = solve_linear(film("vacuum", 100.0, "vacuum", "vacuum"), lib(), 890.0);
  for (double z : {-50.0, 0.0, 13.7, 99.1, 160.0}) {
    const auto f = coeffs.field_at(z);
    CHECK(std::abs(f.E) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(f.dEdz) == doctest::Approx(2.0 * std::numbers::pi / 890.0).epsilon(1e-12));
  }
}

TEST_CASE("ideal mirror test double produces the textbook standing wave") {
  // Hand-built coefficients: unit incident wave, r = -1, nothing below.
  const double lam = 890.0;
  const double k = 2.0 * std::numbers::pi / lam;
  std::vector<detail::RegionWave> regions(2);
  regions[0] = {1.0, -1.0, cdouble(k, 0.0), 0.0};
  regions[1] = {0.0, 0.0, cdouble(k, 0.0), 0.0};
  const LayerCoefficients mirror(lam, std::move(regions), {0.0});
  CHECK(std::abs(mirror.field_at(-1e-9).E) < 1e-10);  // node at the surface
  CHECK(std::abs(mirror.field_at(-1e-9).dEdz) == doctest::Approx(2.0 * k).epsilon(1e-12));
  for (double depth : {10.0, 100.0, 333.0}) {
    const double expected = 2.0 * std::abs(std::sin(k * depth));
    CHECK(std::abs(mirror.field_at(-depth).E) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient agrees with central finite differences") {
  LayerStack s = bare("vacuum", "Au");
  s.layers = {Layer{"hBN", 99.9, std::nullopt}};
  const auto coeffs = solve_linear(s, lib(), 890.0);
  const double h = 0.01;
  for (double z : {5.0, 20.0, 35.0, 50.0, 80.0, 95.0}) {
    const auto f = coeffs.field_at(z);
    const cdouble fd = (coeffs.field_at(z + h).E - coeffs.field_at(z - h).E) / (2.0 * h);
    CHECK(std::abs(fd - f.dEdz) <= 1e-6 * std::abs(f.dEdz));
  }
}

TEST_CASE("energy bookkeeping: R + T + A = 1, lossless stacks absorb nothing") {
  LayerStack lossless = bare("vacuum", "n15");
  lossless.layers = {Layer{"SiO2", 120.0, std::nullopt}, Layer{"hBN", 40.0, std::nullopt},
                     Layer{"n2", 75.0, std::nullopt}};
  for (double lam : {500.0, 700.0, 890.0, 1200.0}) {
    const auto r = reflectance(lossless, lib(), lam);
    CHECK(std::abs(r.R + r.T + r.A - 1.0) < 1e-12);
    CHECK(std::abs(r.A) < 1e-9);
  }
  LayerStack lossy = bare("vacuum", "Si");
  lossy.layers = {Layer{"Au", 25.0, std::nullopt}};
  const auto r = reflectance(lossy, lib(), 600.0);
  CHECK(r.A > 0.05);
  CHECK(std::abs(r.R + r.T + r.A - 1.0) < 1e-12);
}

TEST_CASE("reflectance is reciprocal for lossless stacks") {
  LayerStack fwd = bare("vacuum", "n15");
  fwd.layers = {Layer{"SiO2", 133.0, std::nullopt}, Layer{"n2", 61.0, std::nullopt},
                Layer{"hBN", 22.0, std::nullopt}};
  LayerStack rev = bare("n15", "vacuum");
  rev.layers = {fwd.layers[2], fwd.layers[1], fwd.layers[0]};
  for (double lam : {520.0, 890.0, 1400.0}) {
    const double Ra = reflectance(fwd, lib(), lam).R;
    const double Rb = reflectance(rev, lib(), lam).R;
    CHECK(Ra == doctest::Approx(Rb).epsilon(1e-10));
  }
}

TEST_CASE("gold reflects strongly in the near infrared") {
  const auto r = reflectance(bare("vacuum", "Au"), lib(), 890.0);
  CHECK(r.R > 0.90);
  CHECK(r.R < 0.99);
}

TEST_CASE("field is suppressed at the metal surface") {
  LayerStack s = bare("vacuum", "Au");
  s.layers = {Layer{"hBN", kHbnMonolayerNm, std::nullopt}};
  const auto coeffs = solve_linear(s, lib(), 890.0);
  CHECK(std::abs(coeffs.field_at(kHbnMonolayerNm - 1e-9).E) < 0.35);
  // Thick flakes build an internal standing wave; the surface then sits well
  // below the interior peak instead of below the incident amplitude.
  LayerStack thick = bare("vacuum", "Au");
  thick.layers = {Layer{"hBN", 99.9, std::nullopt}};
  const auto c2 = solve_linear(thick, lib(), 890.0);
  double peak = 0.0;
  for (double z = 0.0; z < 99.9; z += 0.05) peak = std::max(peak, std::abs(c2.field_at(z).E));
  CHECK(std::abs(c2.field_at(99.9 - 1e-9).E) < 0.36 * peak);
}

TEST_CASE("profile range is bounded and grid export is well-formed") {
  const auto coeffs = solve_linear(film("SiO2", 64.0, "vacuum", "Au"), lib(), 890.0);
  CHECK_THROWS_AS(coeffs.field_at(64.0 + 11.0 * 890.0), RangeError);
  CHECK_THROWS_AS(coeffs.field_at(-11.0 * 890.0), RangeError);

  std::vector<double> grid;
  for (double z = 0.0; z <= 64.0; z += 1.0) grid.push_back(z);
  const FieldProfile p = field_profile(coeffs, grid);
  CHECK(p.z_nm.size() == grid.size());
  std::ostringstream out;
  write_profile_csv(out, p);
  std::istringstream check(out.str());
  std::string header;
  std::getline(check, header);
  CHECK(header == "z_nm,Re_E,Im_E,Re_dEdz,Im_dEdz");
}

TEST_CASE("out-of-table wavelengths are refused") {
  CHECK_THROWS_AS(solve_linear(bare("vacuum", "Au"), lib(), 150.0), RangeError);
  CHECK_THROWS_AS(solve_linear(bare("vacuum", "Au"), lib(), -5.0), ValidationError);
}
