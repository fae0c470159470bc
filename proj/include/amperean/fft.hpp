#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace amperean {

// Centred stencil with offsets -rx..rx, -ry..ry; weight(dx, dy) = w[(dy + ry) * (2rx + 1) + dx + rx].
struct Stencil {
    std::size_t rx = 0;
    std::size_t ry = 0;
    std::vector<double> w;
    // Optional key; stencils with equal keys must be identical. Non-empty keys cache the spectrum.
    std::string cache_key;
};

// Smallest integer >= n of the form 2^a 3^b 5^c 7^d.
std::size_t fast_fft_size(std::size_t n);

// Linear (non-periodic) convolution out(i, j) = sum f(i - dx, j - dy) * k(dx, dy) over an
// nx-by-ny row-major field with zero extension, computed by zero-padded real FFTs.
// All stencils share one forward transform of f.
std::vector<std::vector<double>> fft_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny,
                                              const std::vector<const Stencil*>& stencils);

std::vector<double> fft_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny, const Stencil& stencil);

// Straightforward O(nodes * stencil) convolution, for tests and tiny stencils.
std::vector<double> direct_convolve(const std::vector<double>& f, std::size_t nx, std::size_t ny, const Stencil& stencil);

}  // namespace amperean
