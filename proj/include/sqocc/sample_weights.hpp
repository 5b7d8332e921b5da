/* Copyright 2026 The sqocc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Batched evaluation of exp(-f) for many superquadric samples.
//
// f = (|x|^p + |y|^p)^q + |z|^r is evaluated as exp/log chains so the work
// maps onto glibc's vector math library (libmvec) when the CPU has AVX2.
// Each lane is computed independently of its neighbours, so a sample's
// weight does not depend on how samples were grouped into batches. Without
// libmvec the same chain runs through scalar std::exp / std::log.
#pragma once

#include <cmath>
#include <cstddef>

#if defined(__x86_64__)
#include <immintrin.h>
#endif

#if defined(SQOCC_HAVE_LIBMVEC) && defined(__x86_64__)
#define SQOCC_USE_LIBMVEC 1
extern "C" __m256d _ZGVdN4v_exp(__m256d);
extern "C" __m256d _ZGVdN4v_log(__m256d);
#endif

namespace sqocc {

// Structure-of-arrays input: ratios already divided by the semi-axes and made
// non-negative; exponents p = 2/eps2, q = eps2/eps1, r = 2/eps1 per sample.
struct WeightLanes {
  const double* ax;
  const double* ay;
  const double* az;
  const double* p;
  const double* q;
  const double* r;
};

namespace detail {

inline double sample_weight_scalar(double ax, double ay, double az, double p, double q, double r) {
  const double xy = std::exp(q * std::log(std::exp(p * std::log(ax)) + std::exp(p * std::log(ay))));
  const double f = xy + std::exp(r * std::log(az));
  return std::exp(-f);
}

inline void sample_weights_scalar(const WeightLanes& in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = sample_weight_scalar(in.ax[i], in.ay[i], in.az[i], in.p[i], in.q[i], in.r[i]);
}

#ifdef SQOCC_USE_LIBMVEC
__attribute__((target("avx2,fma"))) inline __m256d sample_weight_avx2(__m256d ax, __m256d ay, __m256d az, __m256d p,
                                                                       __m256d q, __m256d r) {
  const __m256d tx = _ZGVdN4v_exp(_mm256_mul_pd(p, _ZGVdN4v_log(ax)));
  const __m256d ty = _ZGVdN4v_exp(_mm256_mul_pd(p, _ZGVdN4v_log(ay)));
  const __m256d xy = _ZGVdN4v_exp(_mm256_mul_pd(q, _ZGVdN4v_log(_mm256_add_pd(tx, ty))));
  const __m256d tz = _ZGVdN4v_exp(_mm256_mul_pd(r, _ZGVdN4v_log(az)));
  return _ZGVdN4v_exp(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_add_pd(xy, tz)));
}

__attribute__((target("avx2,fma"))) inline void sample_weights_avx2(const WeightLanes& in, double* out,
                                                                     std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, sample_weight_avx2(_mm256_loadu_pd(in.ax + i), _mm256_loadu_pd(in.ay + i),
                                                 _mm256_loadu_pd(in.az + i), _mm256_loadu_pd(in.p + i),
                                                 _mm256_loadu_pd(in.q + i), _mm256_loadu_pd(in.r + i)));
  }
  if (i == n) return;
  // Pad the tail to a full vector; padding lanes are discarded.
  alignas(32) double buf[6][4] = {{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}};
  for (std::size_t k = 0; i + k < n; ++k) {
    buf[0][k] = in.ax[i + k];
    buf[1][k] = in.ay[i + k];
    buf[2][k] = in.az[i + k];
    buf[3][k] = in.p[i + k];
    buf[4][k] = in.q[i + k];
    buf[5][k] = in.r[i + k];
  }
  alignas(32) double res[4];
  _mm256_store_pd(res, sample_weight_avx2(_mm256_load_pd(buf[0]), _mm256_load_pd(buf[1]), _mm256_load_pd(buf[2]),
                                          _mm256_load_pd(buf[3]), _mm256_load_pd(buf[4]), _mm256_load_pd(buf[5])));
  for (std::size_t k = 0; i + k < n; ++k) out[i + k] = res[k];
}

// Same chain with one exponent set broadcast over all samples.
__attribute__((target("avx2,fma"))) inline void sample_weights_shared_avx2(const double* ax, const double* ay,
                                                                            const double* az, double p, double q,
                                                                            double r, double* out, std::size_t n) {
  const __m256d vp = _mm256_set1_pd(p), vq = _mm256_set1_pd(q), vr = _mm256_set1_pd(r);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, sample_weight_avx2(_mm256_loadu_pd(ax + i), _mm256_loadu_pd(ay + i),
                                                 _mm256_loadu_pd(az + i), vp, vq, vr));
  }
  if (i == n) return;
  alignas(32) double buf[3][4] = {{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}};
  for (std::size_t k = 0; i + k < n; ++k) {
    buf[0][k] = ax[i + k];
    buf[1][k] = ay[i + k];
    buf[2][k] = az[i + k];
  }
  alignas(32) double res[4];
  _mm256_store_pd(res, sample_weight_avx2(_mm256_load_pd(buf[0]), _mm256_load_pd(buf[1]), _mm256_load_pd(buf[2]),
                                          vp, vq, vr));
  for (std::size_t k = 0; i + k < n; ++k) out[i + k] = res[k];
}
#endif

#if defined(__x86_64__)
inline bool cpu_has_avx2() {
  static const bool has = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return has;
}

__attribute__((target("avx2"))) inline void scaled_add_avx2(double* __restrict y, const double* __restrict x,
                                                            double a, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), _mm256_mul_pd(va, _mm256_loadu_pd(x + k))));
  for (; k < n; ++k) y[k] += a * x[k];
}
#endif

}  // namespace detail

// out[i] = exp(-f_i) for n samples.
inline void sample_weights(const WeightLanes& in, double* out, std::size_t n) {
#ifdef SQOCC_USE_LIBMVEC
  if (detail::cpu_has_avx2()) {
    detail::sample_weights_avx2(in, out, n);
    return;
  }
#endif
  detail::sample_weights_scalar(in, out, n);
}

// out[i] = exp(-f_i) for n samples of one shape. Bit-identical to
// sample_weights with the exponents repeated per sample.
inline void sample_weights_shared(const double* ax, const double* ay, const double* az, double p, double q, double r,
                                  double* out, std::size_t n) {
#ifdef SQOCC_USE_LIBMVEC
  if (detail::cpu_has_avx2()) {
    detail::sample_weights_shared_avx2(ax, ay, az, p, q, r, out, n);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::sample_weight_scalar(ax[i], ay[i], az[i], p, q, r);
}

// y[k] += a * x[k]. Every path rounds the product and the sum separately, so
// results do not depend on the path taken.
inline void scaled_add(double* __restrict y, const double* __restrict x, double a, std::size_t n) {
#if defined(__x86_64__)
  if (detail::cpu_has_avx2()) {
    detail::scaled_add_avx2(y, x, a, n);
    return;
  }
#endif
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

// Name of the active backend, for reports.
inline const char* sample_weights_backend() {
#ifdef SQOCC_USE_LIBMVEC
  if (detail::cpu_has_avx2()) return "libmvec-avx2";
#endif
  return "scalar";
}

}  // namespace sqocc
