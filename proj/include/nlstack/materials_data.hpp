#pragma once

// Bundled refractive-index tables. Each table is stored in the same CSV
// format accepted by load_material_table so the bundled data and any
// user-supplied override files go through identical parsing and validation.
// `nlstack materials export` writes these tables back out as .csv files.

#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nlstack {
namespace data {

inline constexpr const char* kVacuumCsv = R"(# vacuum, exact
wavelength_nm,n,k
150,1,0
5000,1,0
)";

// Gold, Johnson & Christy, Phys. Rev. B 6, 4370 (1972). Wavelengths converted
// from the published photon energies (1240/E_eV).
inline constexpr const char* kGoldCsv = R"(# Au, Johnson & Christy, Phys. Rev. B 6, 4370 (1972)
wavelength_nm,n,k
310.8,1.53,1.893
320.4,1.54,1.898
331.6,1.48,1.883
342.5,1.48,1.871
354.3,1.50,1.866
368.0,1.48,1.895
381.5,1.46,1.933
397.4,1.47,1.952
413.3,1.46,1.958
430.6,1.45,1.948
450.9,1.38,1.914
471.5,1.31,1.849
496.0,1.04,1.833
521.0,0.62,2.081
548.7,0.43,2.455
582.2,0.29,2.863
616.9,0.21,3.272
659.6,0.14,3.697
704.5,0.13,4.103
756.1,0.14,4.542
821.2,0.16,5.083
892.1,0.17,5.663
984.1,0.22,6.350
1087.7,0.27,7.150
1215.7,0.35,8.145
1393.3,0.43,9.519
1610.4,0.56,11.21
1937.5,0.92,13.78
)";

// Titanium, Johnson & Christy, Phys. Rev. B 9, 5056 (1974), interpolated.
inline constexpr const char* kTitaniumCsv = R"(# Ti, Johnson & Christy, Phys. Rev. B 9, 5056 (1974)
wavelength_nm,n,k
350,1.92,2.67
400,2.08,2.95
450,2.16,3.00
500,2.31,3.11
550,2.42,3.24
600,2.48,3.35
650,2.56,3.38
700,2.74,3.30
750,2.86,3.31
800,3.00,3.32
850,3.09,3.35
900,3.19,3.40
1000,3.35,3.50
1200,3.62,3.65
1600,3.90,3.90
2000,4.10,4.10
)";

// Fused silica, evaluated from the Malitson (1965) Sellmeier equation.
inline constexpr const char* kSilicaCsv = R"(# SiO2, fused silica, Malitson, J. Opt. Soc. Am. 55, 1205 (1965), Sellmeier evaluation
wavelength_nm,n,k
250,1.50745,0
275,1.49602,0
300,1.48779,0
325,1.48164,0
350,1.47689,0
375,1.47314,0
400,1.47012,0
425,1.46763,0
450,1.46557,0
475,1.46382,0
500,1.46233,0
520,1.46128,0
540,1.46034,0
560,1.45950,0
580,1.45873,0
600,1.45804,0
620,1.45740,0
640,1.45681,0
660,1.45627,0
680,1.45576,0
700,1.45529,0
720,1.45485,0
740,1.45444,0
760,1.45404,0
780,1.45367,0
800,1.45332,0
820,1.45298,0
840,1.45266,0
860,1.45234,0
880,1.45204,0
900,1.45175,0
920,1.45147,0
940,1.45120,0
960,1.45093,0
980,1.45067,0
1000,1.45042,0
1100,1.44920,0
1200,1.44805,0
1300,1.44692,0
1400,1.44578,0
1500,1.44462,0
1600,1.44342,0
1700,1.44217,0
1800,1.44087,0
1900,1.43951,0
2000,1.43809,0
)";

// Crystalline silicon, Green, Sol. Energy Mater. Sol. Cells 92, 1305 (2008).
inline constexpr const char* kSiliconCsv = R"(# Si, crystalline, Green, Sol. Energy Mater. Sol. Cells 92, 1305 (2008)
wavelength_nm,n,k
350,5.442,2.990
375,6.709,1.320
400,5.570,0.387
425,5.060,0.260
450,4.676,0.148
475,4.491,0.099
500,4.294,0.071
525,4.189,0.047
550,4.082,0.028
575,4.015,0.021
600,3.943,0.017
625,3.896,0.014
650,3.851,0.012
675,3.812,0.0090
700,3.779,0.0080
725,3.749,0.0066
750,3.721,0.0055
775,3.697,0.0046
800,3.675,0.0039
825,3.656,0.0032
850,3.638,0.0026
875,3.626,0.0021
900,3.614,0.0017
925,3.603,0.0013
950,3.592,0.0010
975,3.582,0.00073
1000,3.572,0.00052
1100,3.543,0.000022
1200,3.522,0.0000022
1500,3.481,0
2000,3.452,0
)";

// h-BN in-plane ordinary index, evaluated from the Sellmeier fit of
// Segura et al., Phys. Rev. Materials 2, 024001 (2018). Transparent over
// the tabulated range (indirect gap near 6 eV).
inline constexpr const char* kHbnCsv = R"(# hBN, in-plane ordinary index, Segura et al., Phys. Rev. Materials 2, 024001 (2018), Sellmeier evaluation
wavelength_nm,n,k
250,2.59485,0
275,2.46321,0
300,2.37827,0
325,2.31939,0
350,2.27649,0
375,2.24407,0
400,2.21885,0
425,2.19880,0
450,2.18254,0
475,2.16915,0
500,2.15799,0
520,2.15033,0
540,2.14359,0
560,2.13764,0
580,2.13235,0
600,2.12763,0
620,2.12340,0
640,2.11958,0
660,2.11613,0
680,2.11300,0
700,2.11015,0
720,2.10755,0
740,2.10517,0
760,2.10299,0
780,2.10098,0
800,2.09912,0
820,2.09741,0
840,2.09582,0
860,2.09435,0
880,2.09298,0
900,2.09170,0
920,2.09051,0
940,2.08939,0
960,2.08835,0
980,2.08737,0
1000,2.08646,0
1100,2.08261,0
1200,2.07971,0
1300,2.07746,0
1400,2.07568,0
1500,2.07425,0
1600,2.07309,0
1700,2.07212,0
1800,2.07132,0
1900,2.07063,0
2000,2.07005,0
)";

// NbOCl2 in-plane average. Approximate values assembled from published
// ellipsometry and first-principles dielectric functions; weak residual
// below-gap absorption at the blue end.
inline constexpr const char* kNbocl2Csv = R"(# NbOCl2, in-plane average, approximate values from published ellipsometry and DFT dielectric functions
wavelength_nm,n,k
380,2.490,0.040
400,2.450,0.030
409,2.434,0.026
425,2.410,0.020
445,2.380,0.012
475,2.350,0.008
500,2.330,0.005
550,2.300,0.002
600,2.280,0.001
650,2.264,0.0007
700,2.250,0.0005
750,2.235,0.0003
800,2.223,0.0002
818,2.220,0.0002
850,2.215,0.00015
900,2.210,0.0001
950,2.205,0.0001
1000,2.200,0.0001
1100,2.195,0
1200,2.190,0
1400,2.185,0
1600,2.180,0
2000,2.170,0
)";

inline const std::vector<std::pair<std::string, const char*>>& bundled_tables() {
  static const std::vector<std::pair<std::string, const char*>> tables = {
      {"vacuum", kVacuumCsv}, {"Au", kGoldCsv},   {"Ti", kTitaniumCsv},
      {"SiO2", kSilicaCsv},   {"Si", kSiliconCsv}, {"hBN", kHbnCsv},
      {"NbOCl2", kNbocl2Csv},
  };
  return tables;
}

}  // namespace data

inline MaterialLibrary MaterialLibrary::bundled_defaults() {
  MaterialLibrary lib;
  for (const auto& [name, csv] : data::bundled_tables()) {
    std::istringstream in(csv);
    lib.add(load_material_table(in, name));
  }
  return lib;
}

}  // namespace nlstack
