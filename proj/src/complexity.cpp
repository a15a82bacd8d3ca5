#include "isac/complexity.hpp"

#include <cmath>

namespace isac::complexity {

namespace {

std::int64_t checked(const BigInt& v) {
    if (v > BigInt(std::numeric_limits<std::int64_t>::max()) ||
        v < BigInt(std::numeric_limits<std::int64_t>::min())) {
        throw DomainError("operation count does not fit in 64 bits");
    }
    return v.convert_to<std::int64_t>();
}

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw DomainError("operation count does not fit in 64 bits");
    }
    return r;
}

}  // namespace

OpCount paraming_flops(const HankelParams& hp, int num_paths, const ArrayConfig& arr,
                       const OfdmConfig& ofdm, int cordic_iterations) {
    const BigInt m = num_paths;
    const BigInt mtr = BigInt(hp.sub_tx) * hp.sub_rx * hp.sub_sc;
    const BigInt ktrp = BigInt(hp.count_tx(arr)) * hp.count_rx(arr) * (hp.count_sc(ofdm) - 1);
    const BigInt ncord = cordic_iterations;
    const BigInt np = ofdm.num_subcarriers;
    const BigInt ntr = BigInt(arr.num_tx) * arr.num_rx;

    const BigInt backbone = 9 * ktrp * ktrp * ktrp + 8 * mtr * ktrp * ktrp +
                            4 * mtr * mtr * ktrp + m * m * m;
    const BigInt add = backbone + m * m * (mtr + 4 * ncord + 2 * np - 4) +
                       m * (mtr * (ktrp - 1) - 2 * ncord + ntr * (np + 2) - np + 4);
    const BigInt mult = backbone + m * m * (mtr + 2 * np + 3) +
                        m * (mtr * ktrp + ntr * (np + 3) + 9);
    return OpCount{checked(add), checked(mult)};
}

BigInt mle_flops(const GridSizes& grids, int num_paths, const ArrayConfig& arr,
                 const OfdmConfig& ofdm) {
    if (num_paths < 0) {
        throw DomainError("path count must be non-negative");
    }
    const auto m = static_cast<unsigned>(num_paths);
    const BigInt np = ofdm.num_subcarriers;
    const BigInt per_cell = BigInt(arr.num_rx) * arr.num_tx * (BigInt(m) * m) * np * np * np * np +
                            BigInt(arr.num_rx) * np * np * np * ofdm.symbols_per_subframe;
    using boost::multiprecision::pow;
    const BigInt cells = pow(BigInt(grids.tau), m) * pow(BigInt(grids.theta), m) *
                         pow(BigInt(grids.phi), m) * pow(BigInt(grids.alpha), 2 * m);
    return cells * per_cell;
}

double log10(const BigInt& x) {
    if (x <= 0) {
        throw DomainError("log10 of a non-positive count");
    }
    // Keep 17 leading digits and count the rest.
    const std::string digits = x.str();
    const std::size_t keep = std::min<std::size_t>(17, digits.size());
    const double lead = std::stod(digits.substr(0, keep));
    return std::log10(lead) + static_cast<double>(digits.size() - keep);
}

double mle_log10_flops(const GridSizes& grids, int num_paths, const ArrayConfig& arr,
                       const OfdmConfig& ofdm) {
    return log10(mle_flops(grids, num_paths, arr, ofdm));
}

CvnnArch CvnnArch::reference(int window, const ArrayConfig& arr) {
    if (window < 1) {
        throw ConfigError("window half-width must be >= 1");
    }
    CvnnArch a;
    a.input_h = 2 * window + 1;
    a.input_w = arr.num_pairs();
    a.input_channels = 1;
    a.layers = {ConvLayer{}, ConvLayer{}};
    return a;
}

CvnnCount cvnn_flops(const CvnnArch& arch, std::uint64_t epochs, std::uint64_t dataset_size) {
    int h = arch.input_h;
    int w = arch.input_w;
    int c = arch.input_channels;
    if (h < 1 || w < 1 || c < 1) {
        throw ConfigError("network input dimensions must be positive");
    }
    std::uint64_t forward = 0;
    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
        const ConvLayer& ly = arch.layers[l];
        if (ly.stride < 1 || ly.padding < 0 || ly.kernel_h < 1 || ly.kernel_w < 1 ||
            ly.filters < 1) {
            throw ConfigError("layer " + std::to_string(l + 1) + " has invalid parameters");
        }
        const int sh = h + 2 * ly.padding - ly.kernel_h;
        const int sw = w + 2 * ly.padding - ly.kernel_w;
        if (sh < 0 || sw < 0 || sh % ly.stride != 0 || sw % ly.stride != 0) {
            throw ConfigError("layer " + std::to_string(l + 1) +
                              " kernel/stride/padding do not tile its input");
        }
        const int ho = sh / ly.stride + 1;
        const int wo = sw / ly.stride + 1;
        std::uint64_t t = 4;
        for (std::uint64_t f : {static_cast<std::uint64_t>(ho), static_cast<std::uint64_t>(wo),
                                static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(ly.kernel_h),
                                static_cast<std::uint64_t>(ly.kernel_w),
                                static_cast<std::uint64_t>(ly.filters)}) {
            t = mul(t, f);
        }
        forward += t;
        h = ho;
        w = wo;
        c = ly.filters;
    }
    return CvnnCount{forward, mul(mul(mul(3, forward), epochs), dataset_size)};
}

}  // namespace isac::complexity
