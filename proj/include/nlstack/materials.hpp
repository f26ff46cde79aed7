#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlstack/errors.hpp"

namespace nlstack {

struct IndexSample {
  double wavelength_nm = 0.0;
  double n = 0.0;
  double k = 0.0;
};

/// Tabulated complex refractive index of one material. Immutable after
/// construction; linear interpolation in wavelength, no extrapolation.
class OpticalConstants {
 public:
  OpticalConstants(std::string material_name, std::vector<IndexSample> samples,
                   std::string provenance = {})
      : name_(std::move(material_name)),
        samples_(std::move(samples)),
        provenance_(std::move(provenance)) {
    validate();
  }

  const std::string& name() const { return name_; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<IndexSample>& samples() const { return samples_; }

  double min_wavelength_nm() const { return samples_.front().wavelength_nm; }
  double max_wavelength_nm() const { return samples_.back().wavelength_nm; }

  bool covers(double wavelength_nm) const {
    return wavelength_nm >= min_wavelength_nm() &&
           wavelength_nm <= max_wavelength_nm();
  }

  /// n + i*k at the given wavelength, n and k interpolated independently.
  std::complex<double> index_at(double wavelength_nm) const {
    if (!std::isfinite(wavelength_nm) || !covers(wavelength_nm)) {
      std::ostringstream msg;
      msg << "wavelength " << wavelength_nm << " nm outside tabulated range ["
          << min_wavelength_nm() << ", " << max_wavelength_nm() << "] nm for material '"
          << name_ << "'";
      throw RangeError(msg.str());
    }
    auto upper = std::lower_bound(
        samples_.begin(), samples_.end(), wavelength_nm,
        [](const IndexSample& s, double w) { return s.wavelength_nm < w; });
    if (upper->wavelength_nm == wavelength_nm) return {upper->n, upper->k};
    auto lower = std::prev(upper);
    const double f = (wavelength_nm - lower->wavelength_nm) /
                     (upper->wavelength_nm - lower->wavelength_nm);
    return {lower->n + f * (upper->n - lower->n),
            lower->k + f * (upper->k - lower->k)};
  }

 private:
  void validate() const {
    if (samples_.size() < 2)
      throw ValidationError("material '" + name_ + "': need at least 2 samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      if (!std::isfinite(s.wavelength_nm) || !std::isfinite(s.n) || !std::isfinite(s.k))
        throw ValidationError("material '" + name_ + "': non-finite sample");
      if (s.n <= 0.0)
        throw ValidationError("material '" + name_ + "': refractive index must be > 0");
      if (s.k < 0.0)
        throw ValidationError("material '" + name_ +
                              "': negative extinction (gain media unsupported)");
      if (i > 0 && s.wavelength_nm <= samples_[i - 1].wavelength_nm)
        throw ValidationError("material '" + name_ +
                              "': wavelengths must be strictly increasing");
    }
  }

  std::string name_;
  std::vector<IndexSample> samples_;
  std::string provenance_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& field, std::size_t line_no) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
  }
  if (pos != field.size())
    throw ParseError("line " + std::to_string(line_no) + ": trailing characters in '" +
                     field + "'");
  return v;
}

}  // namespace detail

/// Parse the material CSV format: optional leading '#' provenance comments,
/// a `wavelength_nm,n,k` header, then one sample per line.
inline OpticalConstants load_material_table(std::istream& in,
                                            const std::string& material_name) {
  std::string line;
  std::string provenance;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<IndexSample> samples;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string note = detail::trim(t.substr(1));
      if (!note.empty()) {
        if (!provenance.empty()) provenance += "\n";
        provenance += note;
      }
      continue;
    }
    if (!header_seen) {
      std::string h = t;
      h.erase(std::remove_if(h.begin(), h.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              h.end());
      if (h != "wavelength_nm,n,k")
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected header 'wavelength_nm,n,k', got '" + t + "'");
      header_seen = true;
      continue;
    }
    std::array<std::string, 3> fields;
    std::size_t field_count = 0;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) {
      if (field_count >= 3)
        throw ParseError("line " + std::to_string(line_no) + ": too many fields");
      fields[field_count++] = detail::trim(field);
    }
    if (field_count != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
    IndexSample s;
    s.wavelength_nm = detail::parse_double(fields[0], line_no);
    s.n = detail::parse_double(fields[1], line_no);
    s.k = detail::parse_double(fields[2], line_no);
    samples.push_back(s);
  }
  if (!header_seen) throw ParseError("missing 'wavelength_nm,n,k' header");
  return OpticalConstants(material_name, std::move(samples), provenance);
}

/// Name of the environment variable that points at a directory of per-material
/// CSV files overriding (or extending) the bundled tables.
inline constexpr const char* kMaterialsDirEnvVar = "NLSTACK_MATERIALS_DIR";

/// Immutable set of materials addressed by name.
class MaterialLibrary {
 public:
  MaterialLibrary() = default;

  void add(OpticalConstants mat) {
    const std::string name = mat.name();
    if (entries_.count(name))
      throw ValidationError("material '" + name + "' already present in library");
    entries_.emplace(name, std::move(mat));
  }

  /// Replaces an existing entry of the same name, otherwise adds.
  void add_or_replace(OpticalConstants mat) {
    entries_.erase(mat.name());
    entries_.emplace(mat.name(), std::move(mat));
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  const OpticalConstants& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ValidationError("unknown material '" + name + "'");
    return it->second;
  }

  std::complex<double> index_at(const std::string& name, double wavelength_nm) const {
    return at(name).index_at(wavelength_nm);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  /// Tables compiled into the library (declared in materials_data.hpp).
  static MaterialLibrary bundled_defaults();

  /// Adds every `<name>.csv` under `dir` on top of `base` (replacing clashes).
  static MaterialLibrary from_directory(const std::filesystem::path& dir,
                                        MaterialLibrary base = bundled_defaults()) {
    if (!std::filesystem::is_directory(dir))
      throw ValidationError("materials directory '" + dir.string() + "' not found");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      std::ifstream in(entry.path());
      if (!in) throw ParseError("cannot open '" + entry.path().string() + "'");
      base.add_or_replace(load_material_table(in, entry.path().stem().string()));
    }
    return base;
  }

  /// Bundled defaults, overridden by $NLSTACK_MATERIALS_DIR when set.
  static MaterialLibrary load_default() {
    if (const char* dir = std::getenv(kMaterialsDirEnvVar); dir && *dir)
      return from_directory(dir);
    return bundled_defaults();
  }

 private:
  std::map<std::string, OpticalConstants> entries_;
};

}  // namespace nlstack

#include "nlstack/materials_data.hpp"
