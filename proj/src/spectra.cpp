#include "specband/spectra.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace specband {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

// Shortest round-trip decimal representation.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double interpolate(const FrequencyGrid& grid, std::span<const double> values, double f,
                   std::size_t hint_segment) {
  const auto& fs = grid.freqs;
  std::size_t i = hint_segment;
  const double f0 = fs[i];
  const double f1 = fs[i + 1];
  const double t = (f - f0) / (f1 - f0);
  return values[i] + t * (values[i + 1] - values[i]);
}

}  // namespace

double FrequencyGrid::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < freqs.size(); ++i) m = std::min(m, freqs[i + 1] - freqs[i]);
  return m;
}

void validate_grid(const FrequencyGrid& grid) {
  if (grid.freqs.size() < 2) fail("validate_grid", "grid needs at least 2 points");
  for (std::size_t i = 0; i + 1 < grid.freqs.size(); ++i) {
    if (!(grid.freqs[i] < grid.freqs[i + 1]))
      fail("validate_grid",
           "grid not strictly increasing at index " + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < grid.freqs.size(); ++i) {
    if (!std::isfinite(grid.freqs[i]))
      fail("validate_grid", "non-finite frequency at index " + std::to_string(i));
  }
}

void validate_spectrum_set(const SpectrumSet& set) {
  validate_grid(set.grid);
  if (set.spectra.empty()) fail("validate_spectrum_set", "set holds no realizations");
  for (std::size_t r = 0; r < set.spectra.size(); ++r) {
    if (set.spectra[r].size() != set.grid.size())
      fail("validate_spectrum_set",
           "realization " + std::to_string(r) + " length mismatch with grid");
    for (std::size_t c = 0; c < set.spectra[r].size(); ++c) {
      if (!std::isfinite(set.spectra[r][c]))
        fail("validate_spectrum_set", "non-finite value at realization " + std::to_string(r) +
                                          ", column " + std::to_string(c));
    }
  }
}

double BandSet::total_width() const {
  double w = 0.0;
  for (const auto& b : bands) w += b.width();
  return w;
}

std::vector<double> BandSet::boundary_vector() const {
  std::vector<double> v;
  v.reserve(2 * bands.size());
  for (const auto& b : bands) {
    v.push_back(b.lo);
    v.push_back(b.hi);
  }
  return v;
}

void validate_bandset(const BandSet& bands) {
  if (bands.bands.empty()) fail("validate_bandset", "no bands");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const Band& b = bands.bands[i];
    if (!(std::isfinite(b.lo) && std::isfinite(b.hi)))
      fail("validate_bandset", "non-finite boundary in band " + std::to_string(i));
    if (!(b.lo < b.hi)) fail("validate_bandset", "band " + std::to_string(i) + " has lo >= hi");
    if (i > 0 && bands.bands[i - 1].hi > b.lo)
      fail("validate_bandset", "bands " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                   " overlap or are unsorted");
  }
  if (!(bands.total_width() > 0)) fail("validate_bandset", "total width not positive");
}

void validate_bandset(const BandSet& bands, const FrequencyGrid& grid) {
  validate_bandset(bands);
  if (bands.bands.front().lo < grid.min() || bands.bands.back().hi > grid.max())
    fail("validate_bandset", "band set exceeds grid range");
}

double band_energy(const Spectrum& spectrum, const Band& band) {
  const auto& fs = spectrum.grid.freqs;
  if (!(band.lo < band.hi)) fail("band_energy", "band has lo >= hi");
  if (band.lo < fs.front() || band.hi > fs.back())
    fail("band_energy", "band outside grid range");

  // Integrate the piecewise-linear interpolant segment by segment.
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
    const double a = std::max(fs[i], band.lo);
    const double b = std::min(fs[i + 1], band.hi);
    if (b <= a) continue;
    const double va = (a == fs[i]) ? spectrum.values[i] : interpolate(spectrum.grid, spectrum.values, a, i);
    const double vb = (b == fs[i + 1]) ? spectrum.values[i + 1] : interpolate(spectrum.grid, spectrum.values, b, i);
    total += 0.5 * (va + vb) * (b - a);
  }
  return total;
}

EnergyMatrix energy_matrix(const std::vector<const SpectrumSet*>& sets, const BandSet& bands,
                           int threads) {
  if (sets.empty()) fail("energy_matrix", "no spectrum sets");
  const FrequencyGrid& grid = sets.front()->grid;
  for (const auto* s : sets) {
    if (!(s->grid == grid)) fail("energy_matrix", "spectrum sets do not share one grid");
  }
  validate_bandset(bands, grid);

  std::size_t total_rows = 0;
  for (const auto* s : sets) total_rows += s->count();

  EnergyMatrix out;
  out.values.resize(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(bands.size()));
  out.labels.resize(total_rows);

  // Flatten (set, realization) pairs so rows can be processed independently.
  std::vector<std::pair<const SpectrumSet*, std::size_t>> rows;
  rows.reserve(total_rows);
  for (const auto* s : sets)
    for (std::size_t r = 0; r < s->count(); ++r) rows.emplace_back(s, r);

  auto fill_row = [&](std::size_t i) {
    const auto& [set, r] = rows[i];
    out.labels[i] = set->label;
    Spectrum sp = set->spectrum(r);
    for (std::size_t l = 0; l < bands.size(); ++l)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
          band_energy(sp, bands.bands[l]);
  };

  if (threads <= 1 || total_rows < 64) {
    for (std::size_t i = 0; i < total_rows; ++i) fill_row(i);
  } else {
    const int n_workers = std::min<int>(threads, static_cast<int>(total_rows));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t i = static_cast<std::size_t>(w); i < total_rows;
             i += static_cast<std::size_t>(n_workers))
          fill_row(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

EnergyMatrix energy_matrix(const SpectrumSet& a, const SpectrumSet& b, const BandSet& bands,
                           int threads) {
  return energy_matrix({&a, &b}, bands, threads);
}

BandSet repair_bandset(std::vector<double> raw, double min_width, const FrequencyGrid& grid) {
  if (raw.empty() || raw.size() % 2 != 0) fail("repair_bandset", "boundary vector size must be 2L");
  for (double v : raw)
    if (!std::isfinite(v)) fail("repair_bandset", "non-finite boundary value");
  const std::size_t l = raw.size() / 2;
  const double lo = grid.min();
  const double hi = grid.max();
  if (!(min_width > 0)) fail("repair_bandset", "min_width must be positive");
  if (static_cast<double>(l) * min_width > hi - lo)
    fail("repair_bandset", "grid too narrow to host " + std::to_string(l) + " bands of min_width");

  for (double& v : raw) v = std::clamp(v, lo, hi);
  std::sort(raw.begin(), raw.end());

  BandSet out;
  out.bands.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    Band b{raw[2 * i], raw[2 * i + 1]};
    if (b.width() < min_width) {
      const double mid = 0.5 * (b.lo + b.hi);
      b.lo = mid - 0.5 * min_width;
      b.hi = mid + 0.5 * min_width;
    }
    b.lo = std::max(b.lo, lo);
    b.hi = std::min(b.hi, hi);
    if (b.width() < min_width) {  // re-clip pushed an edge band below min_width
      if (b.lo <= lo) b.hi = b.lo + min_width;
      if (b.hi >= hi) b.lo = b.hi - min_width;
    }
    out.bands[i] = b;
  }

  // Forward pass: restore disjointness by shifting bands right.
  for (std::size_t i = 1; i < l; ++i) {
    Band& prev = out.bands[i - 1];
    Band& cur = out.bands[i];
    if (cur.lo < prev.hi) {
      const double w = std::max(cur.width(), min_width);
      cur.lo = prev.hi;
      cur.hi = cur.lo + w;
    }
  }
  // Backward pass: pull everything inside the grid if the shifts overflowed.
  if (out.bands.back().hi > hi) {
    out.bands.back().hi = hi;
    out.bands.back().lo = std::min(out.bands.back().lo, hi - min_width);
    for (std::size_t i = l - 1; i-- > 0;) {
      Band& next = out.bands[i + 1];
      Band& cur = out.bands[i];
      if (cur.hi > next.lo) {
        const double w = std::max(std::min(cur.width(), cur.hi - cur.lo), min_width);
        cur.hi = next.lo;
        cur.lo = cur.hi - w;
      }
    }
  }
  validate_bandset(out, grid);
  return out;
}

SpectrumSet load_spectra_csv(const std::string& path, ClassLabel label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_spectra_csv: cannot open " + path);

  auto parse_row = [&](const std::string& line, std::size_t row_no) {
    std::vector<double> vals;
    std::size_t start = 0;
    std::size_t col = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      double v = 0.0;
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last)
        throw std::runtime_error("load_spectra_csv: " + path + ": malformed number at row " +
                                 std::to_string(row_no) + ", column " + std::to_string(col + 1));
      if (!std::isfinite(v))
        throw std::runtime_error("load_spectra_csv: " + path + ": non-finite value at row " +
                                 std::to_string(row_no) + ", column " + std::to_string(col + 1));
      vals.push_back(v);
      ++col;
      if (end == line.size()) break;
      start = end + 1;
    }
    return vals;
  };

  SpectrumSet set;
  set.label = label;
  std::string line;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row_no;
    std::vector<double> vals = parse_row(line, row_no);
    if (row_no == 1) {
      set.grid.freqs = std::move(vals);
      if (set.grid.freqs.size() < 2)
        throw std::runtime_error("load_spectra_csv: " + path + ": grid row needs >= 2 columns");
      for (std::size_t i = 0; i + 1 < set.grid.freqs.size(); ++i)
        if (!(set.grid.freqs[i] < set.grid.freqs[i + 1]))
          throw std::runtime_error("load_spectra_csv: " + path +
                                   ": non-increasing grid at column " + std::to_string(i + 2));
    } else {
      if (vals.size() != set.grid.size())
        throw std::runtime_error("load_spectra_csv: " + path + ": row " + std::to_string(row_no) +
                                 " has " + std::to_string(vals.size()) + " columns, expected " +
                                 std::to_string(set.grid.size()));
      set.spectra.push_back(std::move(vals));
    }
  }
  if (row_no == 0) throw std::runtime_error("load_spectra_csv: " + path + ": empty file");
  if (set.spectra.empty())
    throw std::runtime_error("load_spectra_csv: " + path + ": no realization rows");
  return set;
}

void save_spectra_csv(const std::string& path, const SpectrumSet& set) {
  validate_spectrum_set(set);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_spectra_csv: cannot open " + path + " for writing");
  auto write_row = [&](const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  };
  write_row(set.grid.freqs);
  for (const auto& s : set.spectra) write_row(s);
  if (!out) throw std::runtime_error("save_spectra_csv: write failed for " + path);
}

std::string bandset_to_json(const BandSet& bands) {
  nlohmann::json j;
  j["bands"] = nlohmann::json::array();
  for (const auto& b : bands.bands) j["bands"].push_back({{"lo", b.lo}, {"hi", b.hi}});
  return j.dump(2);
}

BandSet bandset_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BandSet out;
  for (const auto& jb : j.at("bands"))
    out.bands.push_back(Band{jb.at("lo").get<double>(), jb.at("hi").get<double>()});
  validate_bandset(out);
  return out;
}

void save_bandset_json(const std::string& path, const BandSet& bands) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_bandset_json: cannot open " + path + " for writing");
  out << bandset_to_json(bands) << '\n';
}

BandSet load_bandset_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_bandset_json: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return bandset_from_json(ss.str());
}

}  // namespace specband
