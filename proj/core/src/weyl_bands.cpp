#include "adiabatic/weyl_bands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "adiabatic/errors.hpp"

namespace adiabatic {

BandPartition::BandPartition(std::size_t grid_size, std::size_t m) : n_(grid_size), m_(m) {
  if (m < 1 || m > grid_size) {
    std::ostringstream os;
    os << "band size m=" << m << " must lie in [1, " << grid_size << "]";
    throw InvalidArgument(os.str());
  }
  const std::size_t count = grid_size / m;
  for (std::size_t b = 0; b < count; ++b) bands_.push_back({b * m, (b + 1) * m});
  bands_.back().end = grid_size;
}

const IndexRange& BandPartition::band(std::size_t b) const {
  if (b >= bands_.size()) throw InvalidArgument("band id out of range");
  return bands_[b];
}

std::size_t BandPartition::band_of(std::size_t j) const {
  if (j >= n_) throw InvalidArgument("grid index out of range");
  return std::min(j / m_, bands_.size() - 1);
}

BandPartition partition(const KGrid& grid, std::size_t m) { return BandPartition(grid.size(), m); }

WeylPacket weyl_packet(const ContinuumModel& model, const BandPartition& bands, std::size_t band,
                       double s) {
  const IndexRange r = bands.band(band);
  const Matrix f = model.frame(s);
  Vector v = Vector::Zero(f.rows());
  for (std::size_t j = r.begin; j < r.end; ++j) v += f.col(static_cast<Eigen::Index>(j));
  v /= std::sqrt(static_cast<double>(r.size()));
  return {band, s, std::move(v)};
}

DifferentialProjector projector(const ContinuumModel& model, IndexRange indices, double s) {
  if (indices.empty() || indices.end > model.size()) {
    throw InvalidArgument("projector index range empty or outside the grid");
  }
  DifferentialProjector p;
  p.indices = indices;
  p.s = s;
  p.basis = model.frame(s).middleCols(static_cast<Eigen::Index>(indices.begin),
                                      static_cast<Eigen::Index>(indices.size()));
  p.matrix = p.basis * p.basis.adjoint();
  return p;
}

DifferentialProjector band_projector(const ContinuumModel& model, const BandPartition& bands,
                                     std::size_t band, double s) {
  return projector(model, bands.band(band), s);
}

WeylProjection project(const DifferentialProjector& p, const Vector& psi) {
  if (psi.size() != p.basis.rows()) throw InvalidArgument("state dimension mismatch");
  WeylProjection out;
  out.coefficients = p.basis.adjoint() * psi;
  out.projected = p.basis * out.coefficients;
  return out;
}

double virtual_gap(const ContinuumModel& model, IndexRange band,
                   const std::vector<std::size_t>& exterior, std::size_t s_samples) {
  if (exterior.empty()) throw NoExteriorError("band has no exterior states");
  double gap = std::numeric_limits<double>::infinity();
  for (double s : uniform_samples(s_samples)) {
    const RealVector e = model.eigenvalues(s);
    for (std::size_t j = band.begin; j < band.end; ++j) {
      for (std::size_t jp : exterior) {
        if (band.contains(jp)) throw InvalidArgument("exterior index lies inside the band");
        gap = std::min(gap, std::abs(e(static_cast<Eigen::Index>(j)) -
                                     e(static_cast<Eigen::Index>(jp))));
      }
    }
  }
  return gap;
}

double virtual_gap(const ContinuumModel& model, const BandPartition& bands, std::size_t band,
                   std::size_t s_samples) {
  const IndexRange r = bands.band(band);
  std::vector<std::size_t> exterior;
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (!r.contains(j)) exterior.push_back(j);
  }
  return virtual_gap(model, r, exterior, s_samples);
}

double minimal_T(double gap, double margin) {
  if (!(gap > 0.0)) throw InvalidArgument("gap must be positive");
  if (!(margin > 0.0)) throw InvalidArgument("margin must be positive");
  return margin / gap;
}

}  // namespace adiabatic
