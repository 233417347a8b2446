#pragma once

#include "mvlaf/types.hpp"

#include <span>

namespace mvlaf {

struct PointCorrespondence {
  Vec2 x1;
  Vec2 x2;
};

/// Normalized 8-point estimate of F from all correspondences (no RANSAC).
///
/// Each image is translated to zero centroid and scaled to mean distance
/// sqrt(2); F is the last right singular vector of the design matrix with
/// its smallest singular value zeroed, de-normalized and canonicalized.
/// Throws kInvalidArgument for fewer than 8 pairs and
/// kDegenerateConfiguration when the design matrix nullspace is more than
/// one-dimensional (relative threshold 1e-8).
FundamentalMatrix EstimateFundamentalEightPoint(std::span<const PointCorrespondence> pts);

/// Mean |x2~^T F x1~| over the correspondences.
double MeanAlgebraicError(const FundamentalMatrix& F, std::span<const PointCorrespondence> pts);

}  // namespace mvlaf
