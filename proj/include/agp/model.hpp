#pragma once

#include "agp/common.hpp"
#include "agp/linalg.hpp"
#include "agp/priors.hpp"

namespace agp {

// Everything the samplers and summaries need to score a state: standardized
// data, scale grids, noise prior, inclusion prior, and move schedule.
struct AgpModel {
  Matrix X;
  Vector y;
  GridSpec grids;
  MarginalScale noise;
  InclusionPrior inclusion;
  MoveSchedule moves;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  void validate() const {
    grids.validate();
    noise.validate();
    inclusion.validate();
    if (X.rows() != y.size()) throw std::invalid_argument("AgpModel: X rows != y length");
    if (inclusion.p != p()) throw std::invalid_argument("AgpModel: inclusion prior p mismatch");
  }
};

AgpModel make_default_model(Matrix X_std, Vector y_std, double d_star = 1.0);

// Grid cell index of (rho, lambda), or -1 when the values are off-grid.
int find_grid_cell(const GridSpec& grids, double rho, double lambda);

}  // namespace agp
