#pragma once

// Quasi-static complex-potential solver on a 2D rectilinear grid.
//
//   div(kappa grad V) = 0,   kappa = sigma + j w eps0 eps_r
//
// Cell-centred finite volumes: one unknown per cell, face conductance from
// the two half-cells in series (the harmonic mean of the admittivities for
// equal cells). Electrodes are cells with prescribed potential; outer edges
// are either insulating or held at a prescribed potential.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ibc/dielectric.hpp"
#include "ibc/error.hpp"
#include "ibc/frequency_response.hpp"
#include "ibc/numeric_text.hpp"

namespace ibc::fem {

using cplx = std::complex<double>;

/// Cell (i, j) spans [x_faces[i], x_faces[i+1]] x [y_faces[j], y_faces[j+1]]
/// (metres). y is depth below the top surface.
struct RectGrid {
  std::vector<double> x_faces;
  std::vector<double> y_faces;

  [[nodiscard]] std::size_t nx() const noexcept { return x_faces.size() - 1; }
  [[nodiscard]] std::size_t ny() const noexcept { return y_faces.size() - 1; }
  [[nodiscard]] std::size_t cells() const noexcept { return nx() * ny(); }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx() + i; }
  [[nodiscard]] double dx(std::size_t i) const { return x_faces[i + 1] - x_faces[i]; }
  [[nodiscard]] double dy(std::size_t j) const { return y_faces[j + 1] - y_faces[j]; }
  [[nodiscard]] double xc(std::size_t i) const { return 0.5 * (x_faces[i] + x_faces[i + 1]); }
  [[nodiscard]] double yc(std::size_t j) const { return 0.5 * (y_faces[j] + y_faces[j + 1]); }

  static RectGrid uniform(double width, std::size_t nx, double height, std::size_t ny) {
    require(nx >= 1 && ny >= 1 && width > 0.0 && height > 0.0, ErrorCode::invalid_argument, "empty grid");
    RectGrid g;
    for (std::size_t i = 0; i <= nx; ++i) g.x_faces.push_back(width * static_cast<double>(i) / static_cast<double>(nx));
    for (std::size_t j = 0; j <= ny; ++j) g.y_faces.push_back(height * static_cast<double>(j) / static_cast<double>(ny));
    return g;
  }
};

struct EdgeCondition {
  /// Empty means insulating (zero normal current). Otherwise the potential
  /// on the edge as a function of the coordinate along it.
  std::function<cplx(double)> potential;

  static EdgeCondition insulating() { return {}; }
  static EdgeCondition fixed(cplx v) {
    return {[v](double) { return v; }};
  }
};

struct ConductionProblem {
  RectGrid grid;
  std::vector<cplx> admittivity;               // per cell, S/m
  std::vector<std::optional<cplx>> fixed;      // per cell, electrode potential
  EdgeCondition x_min, x_max, y_min, y_max;
  double frequency_hz = 0.0;
};

/// Series combination of two half-cells: the face admittivity for the
/// conductance kappa_face / (d1 + d2). Equal cells give 2 k1 k2 / (k1 + k2).
inline cplx face_admittivity(cplx k1, double d1, cplx k2, double d2) {
  if (k1 == 0.0 || k2 == 0.0) return 0.0;
  return (d1 + d2) / (d1 / k1 + d2 / k2);
}

struct LinearSystem {
  Eigen::SparseMatrix<cplx> matrix;
  Eigen::VectorXcd rhs;
  /// Cell-to-cell conductance network (no boundary terms, no electrode
  /// rows): (network * V)[p] is the current leaving cell p into its
  /// neighbours, per metre of slice thickness.
  Eigen::SparseMatrix<cplx> network;
  std::vector<bool> fixed;
  RectGrid grid;
  double frequency_hz = 0.0;
};

inline LinearSystem assemble(const ConductionProblem& prob) {
  const auto& g = prob.grid;
  const std::size_t n = g.cells();
  require(g.x_faces.size() >= 2 && g.y_faces.size() >= 2, ErrorCode::invalid_argument, "empty grid");
  require(prob.admittivity.size() == n && prob.fixed.size() == n, ErrorCode::invalid_argument,
          "per-cell arrays do not match the grid");
  require(prob.frequency_hz >= 0.0, ErrorCode::invalid_argument, "frequency must be >= 0");

  using Triplet = Eigen::Triplet<cplx>;
  std::vector<Triplet> a_entries;
  std::vector<Triplet> net_entries;
  a_entries.reserve(5 * n);
  net_entries.reserve(5 * n);
  LinearSystem sys;
  sys.rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  sys.fixed.assign(n, false);
  sys.grid = g;
  sys.frequency_hz = prob.frequency_hz;

  const auto nx = g.nx();
  const auto ny = g.ny();
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto p = static_cast<int>(g.index(i, j));
      const cplx kp = prob.admittivity[static_cast<std::size_t>(p)];
      cplx diag = 0.0;
      cplx net_diag = 0.0;
      auto link = [&](std::size_t ii, std::size_t jj, double half_p, double half_q, double face_len) {
        const auto q = static_cast<int>(g.index(ii, jj));
        const cplx kf = face_admittivity(kp, half_p, prob.admittivity[static_cast<std::size_t>(q)], half_q);
        const cplx c = kf * face_len / (half_p + half_q);
        a_entries.emplace_back(p, q, -c);
        net_entries.emplace_back(p, q, -c);
        diag += c;
        net_diag += c;
      };
      auto boundary = [&](const EdgeCondition& e, double coord, double half_p, double face_len) {
        if (!e.potential) return;
        const cplx c = kp * face_len / half_p;
        diag += c;
        sys.rhs[p] += c * e.potential(coord);
      };
      if (i > 0) link(i - 1, j, g.dx(i) / 2, g.dx(i - 1) / 2, g.dy(j));
      else boundary(prob.x_min, g.yc(j), g.dx(i) / 2, g.dy(j));
      if (i + 1 < nx) link(i + 1, j, g.dx(i) / 2, g.dx(i + 1) / 2, g.dy(j));
      else boundary(prob.x_max, g.yc(j), g.dx(i) / 2, g.dy(j));
      if (j > 0) link(i, j - 1, g.dy(j) / 2, g.dy(j - 1) / 2, g.dx(i));
      else boundary(prob.y_min, g.xc(i), g.dy(j) / 2, g.dx(i));
      if (j + 1 < ny) link(i, j + 1, g.dy(j) / 2, g.dy(j + 1) / 2, g.dx(i));
      else boundary(prob.y_max, g.xc(i), g.dy(j) / 2, g.dx(i));
      net_entries.emplace_back(p, p, net_diag);

      if (const auto& v = prob.fixed[static_cast<std::size_t>(p)]) {
        // Replace the conservation row by V_p = v.
        while (!a_entries.empty() && a_entries.back().row() == p) a_entries.pop_back();
        a_entries.emplace_back(p, p, 1.0);
        sys.rhs[p] = *v;
        sys.fixed[static_cast<std::size_t>(p)] = true;
      } else {
        a_entries.emplace_back(p, p, diag);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(n);
  sys.matrix.resize(dim, dim);
  sys.matrix.setFromTriplets(a_entries.begin(), a_entries.end());
  sys.network.resize(dim, dim);
  sys.network.setFromTriplets(net_entries.begin(), net_entries.end());
  return sys;
}

struct FieldSolution {
  RectGrid grid;
  std::vector<cplx> potential;  // per cell, V
  std::vector<cplx> ex, ey;     // per cell, V/m
  std::vector<double> e_magnitude;
  double frequency_hz = 0.0;
  double relative_residual = 0.0;

  [[nodiscard]] cplx at(std::size_t i, std::size_t j) const { return potential[grid.index(i, j)]; }
};

inline constexpr double kSolverTolerance = 1e-8;

/// Central differences between cell centres, one-sided on the outer cells.
inline void compute_field(FieldSolution& s) {
  const auto& g = s.grid;
  const auto nx = g.nx();
  const auto ny = g.ny();
  s.ex.assign(g.cells(), 0.0);
  s.ey.assign(g.cells(), 0.0);
  s.e_magnitude.assign(g.cells(), 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto p = g.index(i, j);
      if (nx > 1) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == nx ? i : i + 1;
        s.ex[p] = -(s.at(b, j) - s.at(a, j)) / (g.xc(b) - g.xc(a));
      }
      if (ny > 1) {
        const std::size_t a = j == 0 ? 0 : j - 1;
        const std::size_t b = j + 1 == ny ? j : j + 1;
        s.ey[p] = -(s.at(i, b) - s.at(i, a)) / (g.yc(b) - g.yc(a));
      }
      s.e_magnitude[p] = std::sqrt(std::norm(s.ex[p]) + std::norm(s.ey[p]));
    }
  }
}

/// Sparse LU solve; SolverDidNotConverge when the factorization fails or
/// the relative residual exceeds 1e-8.
inline FieldSolution solve(const LinearSystem& sys) {
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SparseMatrix<cplx> a = sys.matrix;
  a.makeCompressed();
  lu.compute(a);
  require(lu.info() == Eigen::Success, ErrorCode::solver_did_not_converge,
          "sparse factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXcd v = lu.solve(sys.rhs);
  const double bnorm = sys.rhs.norm();
  const double residual = (a * v - sys.rhs).norm() / (bnorm > 0.0 ? bnorm : 1.0);
  require(lu.info() == Eigen::Success && std::isfinite(residual) && residual <= kSolverTolerance,
          ErrorCode::solver_did_not_converge, "relative residual " + text::format_double(residual));
  FieldSolution s;
  s.grid = sys.grid;
  s.potential.assign(v.data(), v.data() + v.size());
  s.frequency_hz = sys.frequency_hz;
  s.relative_residual = residual;
  compute_field(s);
  return s;
}

/// Current leaving each cell into its neighbours (per metre of thickness).
inline std::vector<cplx> cell_outflow(const LinearSystem& sys, const FieldSolution& s) {
  const Eigen::Map<const Eigen::VectorXcd> v(s.potential.data(), static_cast<Eigen::Index>(s.potential.size()));
  const Eigen::VectorXcd out = sys.network * v;
  return {out.data(), out.data() + out.size()};
}

// --- Arm model ----------------------------------------------------------------

enum class ElectrodeRole { tx_plus, tx_minus, rx_plus, rx_minus };

inline const char* to_string(ElectrodeRole r) {
  switch (r) {
    case ElectrodeRole::tx_plus: return "tx+";
    case ElectrodeRole::tx_minus: return "tx-";
    case ElectrodeRole::rx_plus: return "rx+";
    case ElectrodeRole::rx_minus: return "rx-";
  }
  return "?";
}

enum class ElectrodeOrientation { vertical, horizontal };

/// Line electrode in the slice. A vertical electrode spans `height_mm` in
/// depth around (x_mm, depth_mm) and is 2 * radius_mm wide; a horizontal one
/// is the same footprint rotated by 90 degrees.
struct Electrode {
  ElectrodeRole role = ElectrodeRole::tx_plus;
  double x_mm = 0.0;
  double depth_mm = 0.0;
  double height_mm = 20.0;
  double radius_mm = 1.0;
  ElectrodeOrientation orientation = ElectrodeOrientation::vertical;
};

struct ArmModel {
  /// Tissue layers from the top surface of the slice downwards.
  std::vector<TissueLayer> layers;
  double length_mm = 600.0;
  std::vector<Electrode> electrodes;
  double tx_voltage = 1.0;  // tx+ at +V/2, tx- at -V/2

  [[nodiscard]] double thickness_mm() const {
    double t = 0.0;
    for (const auto& l : layers) t += l.thickness_mm;
    return t;
  }
};

struct GridSpec {
  double dx_mm = 2.0;
  /// Cells across the thinnest layer; the depth spacing follows from it.
  int nodes_per_thinnest_layer = 3;
};

inline constexpr int kMinNodesPerLayer = 3;

/// Layer thicknesses for one side of the forearm, skin outermost.
struct ForearmLayers {
  double skin_mm = 1.5;
  double fat_mm = 8.5;
  double muscle_mm = 27.5;
  double cortical_mm = 6.0;
  double cancellous_mm = 6.5;
};

struct ElectrodeLayout {
  double separation_mm = 100.0;    // between tx-pair and rx-pair centres
  double pair_spacing_mm = 40.0;   // between the two electrodes of a pair
  double depth_mm = -1.0;          // negative: middle of the upper muscle layer
  double height_mm = 20.0;
  double radius_mm = 1.0;
};

/// Full-diameter longitudinal slice: the layer sequence is mirrored about
/// the bone axis so that skin bounds both faces. Electrodes are implanted in
/// the upper muscle layer with the tx pair left of centre.
inline ArmModel forearm_model(const DielectricTable& table, const ForearmLayers& t = {},
                              const ElectrodeLayout& layout = {}, double length_mm = 600.0) {
  ArmModel m;
  m.length_mm = length_mm;
  const std::vector<std::pair<std::string, double>> half{
      {"skin", t.skin_mm}, {"fat", t.fat_mm}, {"muscle", t.muscle_mm}, {"cortical_bone", t.cortical_mm}};
  for (const auto& [name, mm] : half) m.layers.push_back({name, mm, table.model(name)});
  m.layers.push_back({"cancellous_bone", 2.0 * t.cancellous_mm, table.model("cancellous_bone")});
  for (auto it = half.rbegin(); it != half.rend(); ++it) m.layers.push_back({it->first, it->second, table.model(it->first)});

  const double depth = layout.depth_mm >= 0.0 ? layout.depth_mm : t.skin_mm + t.fat_mm + 0.5 * t.muscle_mm;
  const double c = length_mm / 2.0;
  const double tx = c - layout.separation_mm / 2.0;
  const double rx = c + layout.separation_mm / 2.0;
  const double h = layout.pair_spacing_mm / 2.0;
  auto e = [&](ElectrodeRole r, double x) {
    return Electrode{r, x, depth, layout.height_mm, layout.radius_mm, ElectrodeOrientation::vertical};
  };
  m.electrodes = {e(ElectrodeRole::tx_plus, tx - h), e(ElectrodeRole::tx_minus, tx + h),
                  e(ElectrodeRole::rx_plus, rx - h), e(ElectrodeRole::rx_minus, rx + h)};
  return m;
}

/// Same geometry with the tx and rx pairs exchanged.
inline ArmModel swap_tx_rx(ArmModel m) {
  for (auto& e : m.electrodes) {
    switch (e.role) {
      case ElectrodeRole::tx_plus: e.role = ElectrodeRole::rx_plus; break;
      case ElectrodeRole::tx_minus: e.role = ElectrodeRole::rx_minus; break;
      case ElectrodeRole::rx_plus: e.role = ElectrodeRole::tx_plus; break;
      case ElectrodeRole::rx_minus: e.role = ElectrodeRole::tx_minus; break;
    }
  }
  return m;
}

/// Cells of the layer grid (x from the left end, y from the top surface).
inline RectGrid arm_grid(const ArmModel& m, const GridSpec& spec) {
  require(!m.layers.empty(), ErrorCode::invalid_argument, "arm model has no layers");
  require(spec.nodes_per_thinnest_layer >= kMinNodesPerLayer, ErrorCode::resolution_too_coarse,
          "need at least " + std::to_string(kMinNodesPerLayer) + " nodes across the thinnest layer, got " +
              std::to_string(spec.nodes_per_thinnest_layer));
  require(spec.dx_mm > 0.0 && m.length_mm > 0.0, ErrorCode::invalid_argument, "grid spacing and length must be > 0");
  double thinnest = std::numeric_limits<double>::infinity();
  for (const auto& l : m.layers) {
    require(l.thickness_mm > 0.0, ErrorCode::invalid_argument, "layer '" + l.name + "' has no thickness");
    thinnest = std::min(thinnest, l.thickness_mm);
  }
  const double target = thinnest / spec.nodes_per_thinnest_layer;
  RectGrid g;
  g.y_faces.push_back(0.0);
  double top = 0.0;
  for (const auto& l : m.layers) {
    const auto cells = static_cast<std::size_t>(std::ceil(l.thickness_mm / target - 1e-9));
    for (std::size_t k = 1; k <= cells; ++k) {
      g.y_faces.push_back(1e-3 * (top + l.thickness_mm * static_cast<double>(k) / static_cast<double>(cells)));
    }
    top += l.thickness_mm;
  }
  const auto nx = static_cast<std::size_t>(std::max(1.0, std::round(m.length_mm / spec.dx_mm)));
  for (std::size_t i = 0; i <= nx; ++i) g.x_faces.push_back(1e-3 * m.length_mm * static_cast<double>(i) / static_cast<double>(nx));
  return g;
}

/// Cells overlapping the electrode footprint by a positive length in both
/// directions.
inline std::vector<std::size_t> electrode_cells(const RectGrid& g, const Electrode& e) {
  const bool vertical = e.orientation == ElectrodeOrientation::vertical;
  const double half_w = 1e-3 * (vertical ? e.radius_mm : e.height_mm / 2.0);
  const double half_h = 1e-3 * (vertical ? e.height_mm / 2.0 : e.radius_mm);
  const double x = 1e-3 * e.x_mm;
  const double y = 1e-3 * e.depth_mm;
  auto overlaps = [](double lo, double hi, double a, double b) {
    return std::min(hi, b) - std::max(lo, a) > 1e-9 * (hi - lo);
  };
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < g.ny(); ++j) {
    if (!overlaps(g.y_faces[j], g.y_faces[j + 1], y - half_h, y + half_h)) continue;
    for (std::size_t i = 0; i < g.nx(); ++i) {
      if (overlaps(g.x_faces[i], g.x_faces[i + 1], x - half_w, x + half_w)) out.push_back(g.index(i, j));
    }
  }
  require(!out.empty(), ErrorCode::empty_electrode,
          std::string("electrode ") + to_string(e.role) + " maps to no grid cells");
  return out;
}

inline std::vector<std::size_t> layer_of_rows(const ArmModel& m, const RectGrid& g) {
  std::vector<std::size_t> out(g.ny());
  for (std::size_t j = 0; j < g.ny(); ++j) {
    const double y_mm = 1e3 * g.yc(j);
    double top = 0.0;
    std::size_t k = 0;
    while (k + 1 < m.layers.size() && y_mm > top + m.layers[k].thickness_mm) top += m.layers[k++].thickness_mm;
    out[j] = k;
  }
  return out;
}

inline ConductionProblem arm_problem(const ArmModel& m, double frequency_hz, const GridSpec& spec) {
  require(frequency_hz >= 0.0 && std::isfinite(frequency_hz), ErrorCode::invalid_argument,
          "frequency must be >= 0");
  int tx_plus = 0;
  int tx_minus = 0;
  int rx_plus = 0;
  int rx_minus = 0;
  for (const auto& e : m.electrodes) {
    tx_plus += e.role == ElectrodeRole::tx_plus;
    tx_minus += e.role == ElectrodeRole::tx_minus;
    rx_plus += e.role == ElectrodeRole::rx_plus;
    rx_minus += e.role == ElectrodeRole::rx_minus;
  }
  require(tx_plus == 1 && tx_minus == 1 && rx_plus == 1 && rx_minus == 1, ErrorCode::invalid_argument,
          "need exactly one tx+, tx-, rx+ and rx- electrode");

  ConductionProblem p;
  p.grid = arm_grid(m, spec);
  p.frequency_hz = frequency_hz;
  const auto rows = layer_of_rows(m, p.grid);
  std::vector<cplx> layer_k;
  for (const auto& l : m.layers) {
    require(static_cast<bool>(l.properties), ErrorCode::invalid_argument, "layer '" + l.name + "' has no properties");
    const auto props = l.properties(frequency_hz);
    require(props.sigma >= 0.0 && props.eps_r >= 1.0, ErrorCode::invalid_argument,
            "layer '" + l.name + "' needs sigma >= 0 and eps_r >= 1");
    layer_k.push_back(admittivity(props, frequency_hz));
  }
  p.admittivity.resize(p.grid.cells());
  for (std::size_t j = 0; j < p.grid.ny(); ++j) {
    for (std::size_t i = 0; i < p.grid.nx(); ++i) p.admittivity[p.grid.index(i, j)] = layer_k[rows[j]];
  }
  p.fixed.assign(p.grid.cells(), std::nullopt);
  for (const auto& e : m.electrodes) {
    if (e.role != ElectrodeRole::tx_plus && e.role != ElectrodeRole::tx_minus) continue;
    const double v = (e.role == ElectrodeRole::tx_plus ? 0.5 : -0.5) * m.tx_voltage;
    for (auto c : electrode_cells(p.grid, e)) {
      require(!p.fixed[c].has_value(), ErrorCode::invalid_argument, "tx electrodes overlap");
      p.fixed[c] = v;
    }
  }
  return p;
}

/// Conduction system of the arm slice at one frequency.
inline LinearSystem assemble_system(const ArmModel& m, double frequency_hz, const GridSpec& spec = {}) {
  return assemble(arm_problem(m, frequency_hz, spec));
}

inline cplx electrode_potential(const FieldSolution& s, const Electrode& e) {
  const auto cells = electrode_cells(s.grid, e);
  cplx sum = 0.0;
  for (auto c : cells) sum += s.potential[c];
  return sum / static_cast<double>(cells.size());
}

/// V_R = mean potential over the rx+ cells minus the mean over the rx- cells.
inline cplx receive_voltage(const FieldSolution& s, const ArmModel& m) {
  cplx plus = 0.0;
  cplx minus = 0.0;
  for (const auto& e : m.electrodes) {
    if (e.role == ElectrodeRole::rx_plus) plus = electrode_potential(s, e);
    if (e.role == ElectrodeRole::rx_minus) minus = electrode_potential(s, e);
  }
  return plus - minus;
}

inline FieldSolution solve_arm(const ArmModel& m, double frequency_hz, const GridSpec& spec = {}) {
  return solve(assemble_system(m, frequency_hz, spec));
}

/// Complex gain V_R / V_T per frequency. Frequencies are solved on up to
/// `threads` workers (0: hardware concurrency); the result is ordered by
/// frequency regardless of completion order.
inline FrequencyResponse gain_sweep(const ArmModel& m, const std::vector<double>& freqs, const GridSpec& spec = {},
                                    unsigned threads = 0) {
  for (double f : freqs) {
    require(f >= 0.0 && std::isfinite(f), ErrorCode::invalid_argument, "sweep frequencies must be >= 0");
  }
  FrequencyResponse::check_grid(freqs);
  std::vector<cplx> gains(freqs.size());
  std::vector<std::optional<Error>> failures(freqs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < freqs.size(); k = next++) {
      try {
        gains[k] = receive_voltage(solve_arm(m, freqs[k], spec), m) / m.tx_voltage;
      } catch (const Error& e) {
        failures[k] = Error(e.code(), "at " + text::format_double(freqs[k]) + " Hz: " + e.what());
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, freqs.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) throw *f;
  }
  return FrequencyResponse::from_gains(freqs, std::move(gains));
}

/// CSV with columns x_m, y_m, re_V, im_V, abs_E; one row per cell centre.
inline void write_field_csv(std::ostream& out, const FieldSolution& s) {
  out << "x_m,y_m,re_V,im_V,abs_E\n";
  for (std::size_t j = 0; j < s.grid.ny(); ++j) {
    for (std::size_t i = 0; i < s.grid.nx(); ++i) {
      const auto p = s.grid.index(i, j);
      out << text::format_double(s.grid.xc(i)) << ',' << text::format_double(s.grid.yc(j)) << ','
          << text::format_double(s.potential[p].real()) << ',' << text::format_double(s.potential[p].imag()) << ','
          << text::format_double(s.e_magnitude[p]) << '\n';
    }
  }
}

}  // namespace ibc::fem
