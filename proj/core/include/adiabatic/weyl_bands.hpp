#pragma once

#include <cstddef>
#include <vector>

#include "adiabatic/band_partition.hpp"
#include "adiabatic/linalg.hpp"
#include "adiabatic/spectral_model.hpp"

namespace adiabatic {

/// Default value of gap * T demanded when planning bands.
inline constexpr double kDefaultGapMargin = 100.0;

/// Normalized eigendifferential: the band's frame vectors summed with
/// uniform weight 1/sqrt(|band|).
struct WeylPacket {
  std::size_t band = 0;
  double s = 0.0;
  Vector coefficients;
};

/// Projector onto the frame vectors phi_j(s), j in `indices`.
struct DifferentialProjector {
  IndexRange indices;
  double s = 0.0;
  /// N x |indices| matrix whose columns are the frame vectors.
  Matrix basis;
  Matrix matrix;
};

struct WeylProjection {
  Vector projected;
  /// C_j = <phi_j(s)|psi> for j in the projector's range (in order).
  Vector coefficients;
};

BandPartition partition(const KGrid& grid, std::size_t m);

WeylPacket weyl_packet(const ContinuumModel& model, const BandPartition& bands, std::size_t band,
                       double s);

DifferentialProjector projector(const ContinuumModel& model, IndexRange indices, double s);
DifferentialProjector band_projector(const ContinuumModel& model, const BandPartition& bands,
                                     std::size_t band, double s);

WeylProjection project(const DifferentialProjector& p, const Vector& psi);

/// min over sampled s, j in band, j' outside of |E(k_j, s) - E(k_j', s)|.
double virtual_gap(const ContinuumModel& model, const BandPartition& bands, std::size_t band,
                   std::size_t s_samples);

/// Same minimum over an explicit exterior index set.
double virtual_gap(const ContinuumModel& model, IndexRange band,
                   const std::vector<std::size_t>& exterior, std::size_t s_samples);

/// Smallest T with gap * T >= margin.
double minimal_T(double gap, double margin);

}  // namespace adiabatic
