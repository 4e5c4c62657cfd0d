#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace specband {

enum class ClassLabel { A, B };

inline const char* class_name(ClassLabel c) { return c == ClassLabel::A ? "A" : "B"; }

// Shared frequency axis for a set of sampled spectra. Strictly increasing,
// at least two points.
struct FrequencyGrid {
  std::vector<double> freqs;

  double min() const { return freqs.front(); }
  double max() const { return freqs.back(); }
  std::size_t size() const { return freqs.size(); }

  // Smallest spacing between adjacent grid points.
  double min_spacing() const;

  bool operator==(const FrequencyGrid&) const = default;
};

// Throws std::invalid_argument if the grid is too short or not strictly increasing.
void validate_grid(const FrequencyGrid& grid);

// One realization, viewed against its grid. Values are magnitudes sampled
// at grid.freqs; same length as the grid.
struct Spectrum {
  const FrequencyGrid& grid;
  std::span<const double> values;
};

// Class-labeled collection of realizations on one shared grid.
struct SpectrumSet {
  ClassLabel label = ClassLabel::A;
  FrequencyGrid grid;
  std::vector<std::vector<double>> spectra;  // each inner vector matches grid length

  std::size_t count() const { return spectra.size(); }
  Spectrum spectrum(std::size_t i) const { return Spectrum{grid, spectra[i]}; }
};

// Validates grid, row lengths, finiteness and count >= 1.
void validate_spectrum_set(const SpectrumSet& set);

// One frequency interval [lo, hi], lo < hi.
struct Band {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool operator==(const Band&) const = default;
};

// L disjoint bands sorted by lo. Interiors must not overlap (touching
// endpoints are allowed); total width must be positive.
struct BandSet {
  std::vector<Band> bands;

  std::size_t size() const { return bands.size(); }
  double total_width() const;

  // Flat boundary vector [lo_1, hi_1, lo_2, hi_2, ...].
  std::vector<double> boundary_vector() const;

  bool operator==(const BandSet&) const = default;
};

void validate_bandset(const BandSet& bands);
void validate_bandset(const BandSet& bands, const FrequencyGrid& grid);

// Per-realization band-energy vectors, one row per spectrum, one column
// per band, with the class label carried alongside each row.
struct EnergyMatrix {
  Eigen::MatrixXd values;             // rows x L
  std::vector<ClassLabel> labels;     // size == rows

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Integral of the spectrum over [band.lo, band.hi] using the trapezoidal
// rule on the sampled grid; band endpoints off the grid are handled by
// linear interpolation of the spectrum at lo and hi.
// Throws if the band lies outside the grid range.
double band_energy(const Spectrum& spectrum, const Band& band);

// Energy vectors for every realization in every set, in input order.
// All sets must share one grid. Rows may be computed in parallel
// (threads <= 1 means sequential); results are identical either way.
EnergyMatrix energy_matrix(const std::vector<const SpectrumSet*>& sets, const BandSet& bands,
                           int threads = 1);
EnergyMatrix energy_matrix(const SpectrumSet& a, const SpectrumSet& b, const BandSet& bands,
                           int threads = 1);

// Turn an arbitrary vector of 2L boundary values into a valid BandSet on
// the grid: clip to the grid range, sort ascending, pair consecutively,
// widen any interval narrower than min_width symmetrically to min_width,
// then restore disjointness and grid bounds. Throws if the grid cannot
// host L bands of min_width.
BandSet repair_bandset(std::vector<double> raw, double min_width, const FrequencyGrid& grid);

// CSV ingestion: row 1 is the frequency grid, each following row is one
// realization. Malformed content is reported with row/column position.
SpectrumSet load_spectra_csv(const std::string& path, ClassLabel label);
void save_spectra_csv(const std::string& path, const SpectrumSet& set);

// BandSet JSON: {"bands":[{"lo":..,"hi":..},...]}
std::string bandset_to_json(const BandSet& bands);
BandSet bandset_from_json(const std::string& text);
void save_bandset_json(const std::string& path, const BandSet& bands);
BandSet load_bandset_json(const std::string& path);

}  // namespace specband
