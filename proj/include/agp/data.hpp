#pragma once

#include "agp/common.hpp"

namespace agp {

// Predictor matrix and response with the standardization statistics needed
// to score new observations and map predictions back to the original scale.
struct Dataset {
  Matrix X_raw;
  Matrix X_std;
  Vector y_raw;
  Vector y_std;
  Vector x_center;
  Vector x_scale;
  double y_center = 0.0;
  double y_scale = 1.0;

  int n() const { return static_cast<int>(X_std.rows()); }
  int p() const { return static_cast<int>(X_std.cols()); }
};

// Centers and scales y to mean 0, sample variance 1; standardizes X columns
// the same way unless standardize_x is false (then X_std = X_raw and the
// stats are identity). Constant predictor columns keep scale 1.
Dataset make_dataset(Matrix X, Vector y, bool standardize_x = true);

// Applies the training-set column statistics to new predictors.
Matrix apply_x_standardization(const Matrix& X_new, const Dataset& train);

// Maps model-scale values back to the original response scale.
Vector destandardize_y(const Vector& values, const Dataset& train);

}  // namespace agp
