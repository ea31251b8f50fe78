#pragma once

/* Thin FFTW3 wrapper: process-lifetime plan cache, thread-safe.
 *
 * Plans are created once per transform size under a mutex (the FFTW planner
 * is not thread-safe) with FFTW_ESTIMATE | FFTW_UNALIGNED, then executed via
 * the new-array interface, which is safe to run concurrently on distinct
 * buffers.  std::complex<double> is layout-compatible with fftw_complex.
 */

#include <complex>
#include <cstddef>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

namespace lora {

using cplx = std::complex<double>;

namespace detail {

inline fftw_plan fft_plan_for(std::size_t n) {
    static std::mutex mu;
    static std::unordered_map<std::size_t, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> in(n), out(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(n, p);
    return p;
}

} // namespace detail

/* Forward DFT, X[k] = sum_n x[n] e^{-j2pi kn/K}, K = in.size(). */
inline void fft_forward(std::vector<cplx>& in, std::vector<cplx>& out) {
    const std::size_t n = in.size();
    out.resize(n);
    fftw_execute_dft(detail::fft_plan_for(n),
                     reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace lora
