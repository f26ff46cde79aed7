#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nlstack/errors.hpp"
#include "nlstack/materials.hpp"

namespace nlstack {

/// Stacking order of the van der Waals layers hosting the nonlinear sheets.
/// D3h_AA_prime: adjacent monolayers are inversion images, dipolar sheet
/// signs alternate. C2_polar: polar stacking, all sheets share one sign.
enum class Symmetry { D3h_AA_prime, C2_polar };

inline const char* to_string(Symmetry s) {
  return s == Symmetry::D3h_AA_prime ? "D3h_AA_prime" : "C2_polar";
}

// Default monolayer steps, overridable per stack definition.
inline constexpr double kHbnMonolayerNm = 0.333;
inline constexpr double kNbocl2MonolayerNm = 0.65;

/// Dimensionless quadrupole-to-dipole coupling ratio. Calibrated once so the
/// dipole/quadrupole amplitude ratio of odd-layer hBN films (30-100 nm) on
/// gold at 890 nm pump averages about 2.5.
inline constexpr double kDefaultChiQRatio = 0.70;

struct TwistInterface {
  int monolayer_index = 0;  // sheet sits between monolayer i and i+1
  double chi_int = 1.0;
};

struct NonlinearSpec {
  Symmetry symmetry = Symmetry::D3h_AA_prime;
  int monolayer_count = 1;
  double monolayer_thickness_nm = kHbnMonolayerNm;
  double chi_d = 1.0;  // dipolar sheet strength per monolayer, arbitrary units
  double chi_q_ratio = kDefaultChiQRatio;
  double orientation_deg = 0.0;
  std::vector<TwistInterface> twist_interfaces;
};

struct Layer {
  std::string material;
  double thickness_nm = 0.0;
  std::optional<NonlinearSpec> nonlinear;
};

/// Ordered layers (top to bottom) between two semi-infinite media.
struct LayerStack {
  std::string ambient;
  std::vector<Layer> layers;
  std::string substrate;

  double total_thickness_nm() const {
    double d = 0.0;
    for (const auto& l : layers) d += l.thickness_nm;
    return d;
  }

  bool has_nonlinear_layer() const {
    for (const auto& l : layers)
      if (l.nonlinear) return true;
    return false;
  }
};

namespace detail {

inline void validate_layer(const Layer& layer, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + " (" + layer.material + ")";
  if (!(layer.thickness_nm > 0.0) || !std::isfinite(layer.thickness_nm))
    throw ValidationError(where + ": thickness must be finite and positive");
  if (!layer.nonlinear) return;
  const NonlinearSpec& nl = *layer.nonlinear;
  if (nl.monolayer_count < 1)
    throw ValidationError(where + ": monolayer_count must be >= 1");
  if (!(nl.monolayer_thickness_nm > 0.0))
    throw ValidationError(where + ": monolayer_thickness_nm must be > 0");
  if (nl.chi_d < 0.0) throw ValidationError(where + ": chi_d must be >= 0");
  if (nl.chi_q_ratio < 0.0)
    throw ValidationError(where + ": chi_q_ratio must be >= 0");
  const double covered = nl.monolayer_count * nl.monolayer_thickness_nm;
  if (std::abs(covered - layer.thickness_nm) > 0.5 * nl.monolayer_thickness_nm) {
    std::ostringstream msg;
    msg << where << ": " << nl.monolayer_count << " monolayers of "
        << nl.monolayer_thickness_nm << " nm cover " << covered
        << " nm, mismatching layer thickness " << layer.thickness_nm
        << " nm by more than half a monolayer";
    throw ValidationError(msg.str());
  }
  for (const auto& tw : nl.twist_interfaces) {
    if (tw.monolayer_index < 1 || tw.monolayer_index > nl.monolayer_count - 1)
      throw ValidationError(where + ": twist interface index " +
                            std::to_string(tw.monolayer_index) +
                            " outside [1, monolayer_count-1]");
  }
}

}  // namespace detail

inline void validate_stack(const LayerStack& stack, const MaterialLibrary& lib) {
  if (!lib.contains(stack.ambient))
    throw ValidationError("unknown material '" + stack.ambient + "'");
  if (!lib.contains(stack.substrate))
    throw ValidationError("unknown material '" + stack.substrate + "'");
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    if (!lib.contains(stack.layers[i].material))
      throw ValidationError("unknown material '" + stack.layers[i].material + "'");
    detail::validate_layer(stack.layers[i], i);
  }
}

/// Default monolayer step for a material, when one is known.
inline std::optional<double> default_monolayer_thickness(const std::string& material) {
  if (material == "hBN") return kHbnMonolayerNm;
  if (material == "NbOCl2") return kNbocl2MonolayerNm;
  return std::nullopt;
}

namespace detail {

inline NonlinearSpec parse_nonlinear(const nlohmann::json& j, const Layer& layer) {
  NonlinearSpec nl;
  if (auto it = j.find("symmetry"); it != j.end()) {
    const std::string s = it->get<std::string>();
    if (s == "D3h_AA_prime")
      nl.symmetry = Symmetry::D3h_AA_prime;
    else if (s == "C2_polar")
      nl.symmetry = Symmetry::C2_polar;
    else
      throw ParseError("nonlinear.symmetry must be 'D3h_AA_prime' or 'C2_polar'");
  }
  if (auto it = j.find("monolayer_thickness_nm"); it != j.end())
    nl.monolayer_thickness_nm = it->get<double>();
  else if (auto dflt = default_monolayer_thickness(layer.material))
    nl.monolayer_thickness_nm = *dflt;
  else
    throw ParseError("layer '" + layer.material +
                     "': monolayer_thickness_nm required (no default for this material)");
  if (auto it = j.find("monolayer_count"); it != j.end())
    nl.monolayer_count = it->get<int>();
  else
    nl.monolayer_count =
        static_cast<int>(std::lround(layer.thickness_nm / nl.monolayer_thickness_nm));
  if (auto it = j.find("chi_d"); it != j.end()) nl.chi_d = it->get<double>();
  if (auto it = j.find("chi_q_ratio"); it != j.end())
    nl.chi_q_ratio = it->get<double>();
  if (auto it = j.find("orientation_deg"); it != j.end())
    nl.orientation_deg = it->get<double>();
  if (auto it = j.find("twist_interfaces"); it != j.end()) {
    for (const auto& tj : *it) {
      TwistInterface tw;
      tw.monolayer_index = tj.at("monolayer_index").get<int>();
      if (auto ci = tj.find("chi_int"); ci != tj.end())
        tw.chi_int = ci->get<double>();
      else
        tw.chi_int = nl.chi_d;  // one extra monolayer-strength dipolar sheet
      nl.twist_interfaces.push_back(tw);
    }
  }
  return nl;
}

}  // namespace detail

/// Build and validate a stack from its JSON description:
///   {"ambient": str, "layers": [{"material": str, "thickness_nm": num,
///    "nonlinear": {...optional...}}], "substrate": str}
inline LayerStack build_stack(const nlohmann::json& j, const MaterialLibrary& lib) {
  LayerStack stack;
  try {
    stack.ambient = j.at("ambient").get<std::string>();
    stack.substrate = j.at("substrate").get<std::string>();
    for (const auto& lj : j.at("layers")) {
      Layer layer;
      layer.material = lj.at("material").get<std::string>();
      layer.thickness_nm = lj.at("thickness_nm").get<double>();
      if (auto it = lj.find("nonlinear"); it != lj.end() && !it->is_null())
        layer.nonlinear = detail::parse_nonlinear(*it, layer);
      stack.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad stack definition: ") + e.what());
  }
  validate_stack(stack, lib);
  return stack;
}

/// build_stack on raw JSON text; malformed documents raise ParseError.
inline LayerStack parse_stack_text(const std::string& json_text,
                                   const MaterialLibrary& lib) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad stack JSON: ") + e.what());
  }
  return build_stack(j, lib);
}

inline nlohmann::json stack_to_json(const LayerStack& stack) {
  nlohmann::json j;
  j["ambient"] = stack.ambient;
  j["substrate"] = stack.substrate;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : stack.layers) {
    nlohmann::json lj;
    lj["material"] = layer.material;
    lj["thickness_nm"] = layer.thickness_nm;
    if (layer.nonlinear) {
      const auto& nl = *layer.nonlinear;
      nlohmann::json nj;
      nj["symmetry"] = to_string(nl.symmetry);
      nj["monolayer_count"] = nl.monolayer_count;
      nj["monolayer_thickness_nm"] = nl.monolayer_thickness_nm;
      nj["chi_d"] = nl.chi_d;
      nj["chi_q_ratio"] = nl.chi_q_ratio;
      nj["orientation_deg"] = nl.orientation_deg;
      if (!nl.twist_interfaces.empty()) {
        nj["twist_interfaces"] = nlohmann::json::array();
        for (const auto& tw : nl.twist_interfaces)
          nj["twist_interfaces"].push_back(
              {{"monolayer_index", tw.monolayer_index}, {"chi_int", tw.chi_int}});
      }
      lj["nonlinear"] = nj;
    }
    j["layers"].push_back(lj);
  }
  return j;
}

/// Depths of the monolayer centers of a nonlinear layer whose top face sits
/// at `z_top`: z_m = z_top + (m - 1/2) * t_ml for m = 1..N.
inline std::vector<double> monolayer_positions(const Layer& layer, double z_top) {
  if (!layer.nonlinear)
    throw ValidationError("layer '" + layer.material + "' has no nonlinear annotation");
  const NonlinearSpec& nl = *layer.nonlinear;
  std::vector<double> z;
  z.reserve(nl.monolayer_count);
  for (int m = 1; m <= nl.monolayer_count; ++m)
    z.push_back(z_top + (m - 0.5) * nl.monolayer_thickness_nm);
  return z;
}

}  // namespace nlstack
