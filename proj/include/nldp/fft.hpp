#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <new>
#include <vector>

#include "errors.hpp"

namespace nldp {

// Cached FFTW plans keyed by transform length. Planning is serialized;
// execution via the new-array interface is reentrant.
class FftPlans {
public:
    struct Pair {
        fftw_plan fwd;
        fftw_plan bwd;
    };

    // Plans for arbitrary vectors, or for SIMD-aligned buffers when `aligned`.
    static const Pair& get(std::size_t n, bool aligned = false) {
        static FftPlans inst;
        std::lock_guard<std::mutex> lock(inst.mu_);
        const std::size_t key = 2 * n + (aligned ? 1 : 0);
        auto it = inst.plans_.find(key);
        if (it != inst.plans_.end()) return it->second;
        auto* buf = fftw_alloc_complex(n);
        const unsigned flags = FFTW_ESTIMATE | (aligned ? 0u : FFTW_UNALIGNED);
        Pair p{fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags),
               fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags)};
        fftw_free(buf);
        if (!p.fwd || !p.bwd) throw numerical_error("fftw: plan creation failed");
        return inst.plans_.emplace(key, p).first->second;
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.bwd);
        }
    }

    std::mutex mu_;
    std::map<std::size_t, Pair> plans_;
};

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

// Unnormalized e^{-j 2 pi k n / N} transform, in place.
inline void fft_forward(std::vector<std::complex<double>>& v) {
    const auto& p = FftPlans::get(v.size());
    fftw_execute_dft(p.fwd, as_fftw(v.data()), as_fftw(v.data()));
}

// Unnormalized e^{+j 2 pi k n / N} transform, in place.
inline void fft_backward(std::vector<std::complex<double>>& v) {
    const auto& p = FftPlans::get(v.size());
    fftw_execute_dft(p.bwd, as_fftw(v.data()), as_fftw(v.data()));
}

// Work buffer from fftw_malloc, suitable for the aligned plans.
class AlignedBuffer {
public:
    explicit AlignedBuffer(std::size_t n = 0) { resize(n); }
    AlignedBuffer(const AlignedBuffer&) = delete;
    AlignedBuffer& operator=(const AlignedBuffer&) = delete;
    ~AlignedBuffer() { fftw_free(p_); }

    void resize(std::size_t n) {
        if (n == n_) return;
        fftw_free(p_);
        p_ = n ? reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n)) : nullptr;
        n_ = n;
        if (n && !p_) throw std::bad_alloc();
    }
    std::size_t size() const { return n_; }
    std::complex<double>* data() { return p_; }
    const std::complex<double>* data() const { return p_; }
    std::complex<double>& operator[](std::size_t i) { return p_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return p_[i]; }

    void forward() { fftw_execute_dft(FftPlans::get(n_, true).fwd, as_fftw(p_), as_fftw(p_)); }
    void backward() { fftw_execute_dft(FftPlans::get(n_, true).bwd, as_fftw(p_), as_fftw(p_)); }

private:
    std::complex<double>* p_ = nullptr;
    std::size_t n_ = 0;
};

}  // namespace nldp
