#pragma once

#include "adgnn/operators.hpp"

namespace adgnn {

// One step of the passive baseline, Z <- (1 - tau) Z + tau S Z.
// S must be row-normalized; constant rows are fixed points.
template <class T>
Mat<T> passive_step(const Mat<T>& z, const SparseOperator& s, double tau);

// The constant source injected at every active step,
// alpha X* + beta L_hat A_hat X* + gamma L_hat X*.
template <class T>
Mat<T> source_term(const Mat<T>& x_star, const OperatorBundle& bundle,
                   const DiffusionParams& params);

// H <- source + delta * A_hat * H.
template <class T>
Mat<T> active_step(const Mat<T>& h, const Mat<T>& source,
                   const SparseOperator& a_hat, double delta);

// K active steps from H = X*; the local embeddings.
template <class T>
Mat<T> diffuse_local(const Mat<T>& x_star, const OperatorBundle& bundle,
                     const DiffusionParams& params);

// Infinite-diffusion limit by dense solve of (I - delta A_hat) H = source.
template <class T>
Mat<T> diffuse_global_dense(const Mat<T>& x_star, const OperatorBundle& bundle,
                            const DiffusionParams& params);

// Truncated Neumann approximation sum_{t=0}^{T} (delta A_hat)^t source,
// accumulated Horner-style with T sparse products.
template <class T>
Mat<T> diffuse_global_neumann(const Mat<T>& x_star, const OperatorBundle& bundle,
                              const DiffusionParams& params);

// Applies sum_{t=0}^{T} (delta A_hat)^t to an arbitrary matrix. The model
// backward pass reuses this: the partial sum is symmetric, so it is its
// own transpose.
template <class T>
Mat<T> neumann_apply(const Mat<T>& rhs, const SparseOperator& a_hat, double delta,
                     Index T_steps);

}  // namespace adgnn
