#include "amperean/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "amperean/common.hpp"

namespace amperean {

namespace {

template <class T>
struct FftwDeleter {
    void operator()(T* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwDeleter<double>>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwDeleter<fftw_complex>>;

RealBuf alloc_real(std::size_t n) { return RealBuf(fftw_alloc_real(n)); }
ComplexBuf alloc_complex(std::size_t n) { return ComplexBuf(fftw_alloc_complex(n)); }

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

std::mutex g_plan_mutex;
std::map<std::pair<std::size_t, std::size_t>, PlanPair> g_plans;

PlanPair plans_for(std::size_t Nx, std::size_t Ny) {
    std::lock_guard lock(g_plan_mutex);
    auto key = std::make_pair(Nx, Ny);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    std::size_t nc = Ny * (Nx / 2 + 1);
    auto r = alloc_real(Nx * Ny);
    auto c = alloc_complex(nc);
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_2d(static_cast<int>(Ny), static_cast<int>(Nx), r.get(), c.get(), FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_2d(static_cast<int>(Ny), static_cast<int>(Nx), c.get(), r.get(), FFTW_ESTIMATE);
    if (!p.forward || !p.backward) throw Error(ErrorCode::Resolution, "FFT planning failed");
    g_plans.emplace(key, p);
    return p;
}

using Spectrum = std::shared_ptr<const std::vector<std::complex<double>>>;

struct SpectrumCache {
    std::mutex mutex;
    std::map<std::tuple<std::size_t, std::size_t, std::string>, Spectrum> entries;
    std::deque<std::tuple<std::size_t, std::size_t, std::string>> order;
    std::size_t bytes = 0;
    static constexpr std::size_t kMaxBytes = std::size_t{512} << 20;
};

SpectrumCache& spectrum_cache() {
    static SpectrumCache cache;
    return cache;
}

Spectrum compute_spectrum(const Stencil& s, std::size_t Nx, std::size_t Ny, const PlanPair& plans) {
    auto r = alloc_real(Nx * Ny);
    std::fill(r.get(), r.get() + Nx * Ny, 0.0);
    std::size_t wx = 2 * s.rx + 1;
    for (std::size_t a = 0; a < 2 * s.ry + 1; ++a) {
        std::size_t jy = (a + Ny - s.ry) % Ny;
        for (std::size_t b = 0; b < wx; ++b) {
            std::size_t ix = (b + Nx - s.rx) % Nx;
            r[jy * Nx + ix] += s.w[a * wx + b];
        }
    }
    std::size_t nc = Ny * (Nx / 2 + 1);
    auto c = alloc_complex(nc);
    fftw_execute_dft_r2c(plans.forward, r.get(), c.get());
    auto out = std::make_shared<std::vector<std::complex<double>>>(nc);
    for (std::size_t i = 0; i < nc; ++i) (*out)[i] = {c[i][0], c[i][1]};
    return out;
}

Spectrum spectrum_for(const Stencil& s, std::size_t Nx, std::size_t Ny, const PlanPair& plans) {
    if (s.cache_key.empty()) return compute_spectrum(s, Nx, Ny, plans);
    auto& cache = spectrum_cache();
    auto key = std::make_tuple(Nx, Ny, s.cache_key);
    {
        std::lock_guard lock(cache.mutex);
        auto it = cache.entries.find(key);
        if (it != cache.entries.end()) return it->second;
    }
    Spectrum spec = compute_spectrum(s, Nx, Ny, plans);
    std::lock_guard lock(cache.mutex);
    auto [it, inserted] = cache.entries.emplace(key, spec);
    if (inserted) {
        cache.order.push_back(key);
        cache.bytes += spec->size() * sizeof(std::complex<double>);
        while (cache.bytes > SpectrumCache::kMaxBytes && cache.order.size() > 1) {
            auto victim = cache.entries.find(cache.order.front());
            cache.bytes -= victim->second->size() * sizeof(std::complex<double>);
            cache.entries.erase(victim);
            cache.order.pop_front();
        }
    }
    return it->second;
}

void check_stencil(const Stencil& s) {
    if (s.w.size() != (2 * s.rx + 1) * (2 * s.ry + 1)) throw Error(ErrorCode::Shape, "stencil size does not match its radii");
}

}  // namespace

std::size_t fast_fft_size(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

std::vector<std::vector<double>> fft_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny,
                                              const std::vector<const Stencil*>& stencils) {
    if (f.size() != nx * ny) throw Error(ErrorCode::Shape, "field size does not match its dimensions");
    std::size_t rx = 0, ry = 0;
    for (const Stencil* s : stencils) {
        check_stencil(*s);
        rx = std::max(rx, s->rx);
        ry = std::max(ry, s->ry);
    }
    std::size_t Nx = fast_fft_size(std::max(nx + rx, 2 * rx + 1));
    std::size_t Ny = fast_fft_size(std::max(ny + ry, 2 * ry + 1));
    PlanPair plans = plans_for(Nx, Ny);

    std::size_t nc = Ny * (Nx / 2 + 1);
    auto r = alloc_real(Nx * Ny);
    std::fill(r.get(), r.get() + Nx * Ny, 0.0);
    for (std::size_t j = 0; j < ny; ++j) std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(j * nx), nx, r.get() + j * Nx);
    auto fhat = alloc_complex(nc);
    fftw_execute_dft_r2c(plans.forward, r.get(), fhat.get());

    std::vector<std::vector<double>> results;
    auto prod = alloc_complex(nc);
    double scale = 1.0 / (static_cast<double>(Nx) * static_cast<double>(Ny));
    for (const Stencil* s : stencils) {
        Spectrum k = spectrum_for(*s, Nx, Ny, plans);
        for (std::size_t i = 0; i < nc; ++i) {
            std::complex<double> v = std::complex<double>(fhat[i][0], fhat[i][1]) * (*k)[i];
            prod[i][0] = v.real();
            prod[i][1] = v.imag();
        }
        fftw_execute_dft_c2r(plans.backward, prod.get(), r.get());
        std::vector<double> out(nx * ny);
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) out[j * nx + i] = r[j * Nx + i] * scale;
        results.push_back(std::move(out));
    }
    return results;
}

std::vector<double> fft_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny, const Stencil& stencil) {
    return std::move(fft_convolve(f, nx, ny, std::vector<const Stencil*>{&stencil}).front());
}

std::vector<double> direct_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny, const Stencil& s) {
    check_stencil(s);
    if (f.size() != nx * ny) throw Error(ErrorCode::Shape, "field size does not match its dimensions");
    std::vector<double> out(nx * ny, 0.0);
    auto rx = static_cast<std::ptrdiff_t>(s.rx), ry = static_cast<std::ptrdiff_t>(s.ry);
    auto sx = static_cast<std::ptrdiff_t>(nx), sy = static_cast<std::ptrdiff_t>(ny);
    for (std::ptrdiff_t j = 0; j < sy; ++j)
        for (std::ptrdiff_t i = 0; i < sx; ++i) {
            double acc = 0.0;
            for (std::ptrdiff_t dy = -ry; dy <= ry; ++dy) {
                std::ptrdiff_t y = j - dy;
                if (y < 0 || y >= sy) continue;
                for (std::ptrdiff_t dx = -rx; dx <= rx; ++dx) {
                    std::ptrdiff_t x = i - dx;
                    if (x < 0 || x >= sx) continue;
                    acc += f[static_cast<std::size_t>(y * sx + x)] * s.w[static_cast<std::size_t>((dy + ry) * (2 * rx + 1) + dx + rx)];
                }
            }
            out[static_cast<std::size_t>(j * sx + i)] = acc;
        }
    return out;
}

}  // namespace amperean
