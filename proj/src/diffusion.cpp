#include "adgnn/diffusion.hpp"

#include <cmath>

namespace adgnn {

namespace {
constexpr double kRowSumTolerance = 1e-9;
}

template <class T>
Mat<T> passive_step(const Mat<T>& z, const SparseOperator& s, double tau) {
  if (s.cols() != z.rows())
    throw std::invalid_argument("passive_step: dimension mismatch");
  for (const double rs : s.row_sums()) {
    if (std::abs(rs - 1.0) > kRowSumTolerance)
      throw NumericError("passive step requires row-normalized operator");
  }
  Mat<T> out = spmm(s, z);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<T>((1.0 - tau) * static_cast<double>(z.data()[i]) +
                                   tau * static_cast<double>(out.data()[i]));
  return out;
}

template <class T>
Mat<T> source_term(const Mat<T>& x_star, const OperatorBundle& bundle,
                   const DiffusionParams& params) {
  if (bundle.adj.cols() != x_star.rows())
    throw std::invalid_argument("source_term: dimension mismatch");
  Mat<T> source = x_star;
  scale_in_place(source, static_cast<T>(params.alpha));
  if (params.beta != 0.0) {
    Mat<T> boundary = spmm(bundle.log_op, x_star);
    axpy(source, static_cast<T>(params.beta), boundary);
  }
  if (params.gamma != 0.0) {
    Mat<T> anomaly = spmm(bundle.lap, x_star);
    axpy(source, static_cast<T>(params.gamma), anomaly);
  }
  return source;
}

template <class T>
Mat<T> active_step(const Mat<T>& h, const Mat<T>& source,
                   const SparseOperator& a_hat, double delta) {
  if (!h.same_shape(source) || a_hat.cols() != h.rows())
    throw std::invalid_argument("active_step: dimension mismatch");
  Mat<T> out = spmm(a_hat, h);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<T>(static_cast<double>(source.data()[i]) +
                                   delta * static_cast<double>(out.data()[i]));
  return out;
}

template <class T>
Mat<T> diffuse_local(const Mat<T>& x_star, const OperatorBundle& bundle,
                     const DiffusionParams& params) {
  params.validate();
  const Mat<T> source = source_term(x_star, bundle, params);
  Mat<T> h = x_star;
  for (Index k = 0; k < params.K; ++k)
    h = active_step(h, source, bundle.adj, params.delta);
  return h;
}

template <class T>
Mat<T> diffuse_global_dense(const Mat<T>& x_star, const OperatorBundle& bundle,
                            const DiffusionParams& params) {
  const Mat<T> source = source_term(x_star, bundle, params);
  const Matrix rhs = source.template cast<double>();
  const Matrix h = bundle.solve_dense(rhs);
  // Residual check of the solve itself.
  Matrix reconstructed = spmm(bundle.adj, h);
  scale_in_place(reconstructed, -params.delta);
  add_in_place(reconstructed, h);
  const double denom = frobenius_norm(rhs);
  const double resid = frobenius_diff(reconstructed, rhs) / (denom > 0.0 ? denom : 1.0);
  if (resid > 1e-10)
    throw NumericError("diffuse_global_dense: solve residual " + format_real(resid) +
                       " exceeds 1e-10");
  return h.cast<T>();
}

template <class T>
Mat<T> neumann_apply(const Mat<T>& rhs, const SparseOperator& a_hat, double delta,
                     Index T_steps) {
  Mat<T> acc = rhs;
  for (Index t = 0; t < T_steps; ++t) {
    Mat<T> next = spmm(a_hat, acc);
    for (std::size_t i = 0; i < next.size(); ++i)
      next.data()[i] = static_cast<T>(static_cast<double>(rhs.data()[i]) +
                                      delta * static_cast<double>(next.data()[i]));
    acc = std::move(next);
  }
  return acc;
}

template <class T>
Mat<T> diffuse_global_neumann(const Mat<T>& x_star, const OperatorBundle& bundle,
                              const DiffusionParams& params) {
  const Mat<T> source = source_term(x_star, bundle, params);
  return neumann_apply(source, bundle.adj, params.delta, params.T);
}

template Mat<double> passive_step(const Mat<double>&, const SparseOperator&, double);
template Mat<float> passive_step(const Mat<float>&, const SparseOperator&, double);
template Mat<double> source_term(const Mat<double>&, const OperatorBundle&,
                                 const DiffusionParams&);
template Mat<float> source_term(const Mat<float>&, const OperatorBundle&,
                                const DiffusionParams&);
template Mat<double> active_step(const Mat<double>&, const Mat<double>&,
                                 const SparseOperator&, double);
template Mat<float> active_step(const Mat<float>&, const Mat<float>&,
                                const SparseOperator&, double);
template Mat<double> diffuse_local(const Mat<double>&, const OperatorBundle&,
                                   const DiffusionParams&);
template Mat<float> diffuse_local(const Mat<float>&, const OperatorBundle&,
                                  const DiffusionParams&);
template Mat<double> diffuse_global_dense(const Mat<double>&, const OperatorBundle&,
                                          const DiffusionParams&);
template Mat<float> diffuse_global_dense(const Mat<float>&, const OperatorBundle&,
                                         const DiffusionParams&);
template Mat<double> neumann_apply(const Mat<double>&, const SparseOperator&, double,
                                   Index);
template Mat<float> neumann_apply(const Mat<float>&, const SparseOperator&, double,
                                  Index);
template Mat<double> diffuse_global_neumann(const Mat<double>&, const OperatorBundle&,
                                            const DiffusionParams&);
template Mat<float> diffuse_global_neumann(const Mat<float>&, const OperatorBundle&,
                                           const DiffusionParams&);

}  // namespace adgnn
