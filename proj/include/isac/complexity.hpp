#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "isac/paraming.hpp"

namespace isac::complexity {

using BigInt = boost::multiprecision::cpp_int;

struct OpCount {
    std::int64_t additions = 0;
    std::int64_t multiplications = 0;
};

/// Closed-form addition / multiplication counts of the parametric estimator.
OpCount paraming_flops(const HankelParams& hp, int num_paths, const ArrayConfig& arr,
                       const OfdmConfig& ofdm, int cordic_iterations = 16);

struct GridSizes {
    std::int64_t tau = 1;
    std::int64_t theta = 1;
    std::int64_t phi = 1;
    std::int64_t alpha = 1;
};

/// G_tau^M G_theta^M G_phi^M G_alpha^2M (N_r N_t M^2 N_P^4 + N_r N_P^3 K_P), exact.
BigInt mle_flops(const GridSizes& grids, int num_paths, const ArrayConfig& arr,
                 const OfdmConfig& ofdm);
double mle_log10_flops(const GridSizes& grids, int num_paths, const ArrayConfig& arr,
                       const OfdmConfig& ofdm);
double log10(const BigInt& x);

struct ConvLayer {
    int kernel_h = 3;
    int kernel_w = 3;
    int filters = 10;
    int stride = 1;
    int padding = 1;
};

struct CvnnArch {
    int input_h = 1;
    int input_w = 1;
    int input_channels = 1;
    std::vector<ConvLayer> layers;

    /// Two 3x3 complex conv layers with 10 filters on a (2W+1) x N_rN_t input.
    static CvnnArch reference(int window, const ArrayConfig& arr);
};

struct CvnnCount {
    std::uint64_t forward = 0;
    std::uint64_t training = 0;
};

/// forward = sum_l 4 h_out w_out C_{l-1} h_f w_f C_l; training = 3 E B forward.
CvnnCount cvnn_flops(const CvnnArch& arch, std::uint64_t epochs, std::uint64_t dataset_size);

}  // namespace isac::complexity
