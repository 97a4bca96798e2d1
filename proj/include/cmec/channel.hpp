#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cmec/scenario.hpp"

namespace cmec {

using Complex = std::complex<double>;

/// Dense L x M complex matrix stored column-major; column m is UE m's
/// channel vector h_m.
class ChannelMatrix {
public:
    ChannelMatrix() = default;
    ChannelMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::span<Complex> column(int m) {
        return {data_.data() + static_cast<std::size_t>(m) * rows_, static_cast<std::size_t>(rows_)};
    }
    std::span<const Complex> column(int m) const {
        return {data_.data() + static_cast<std::size_t>(m) * rows_, static_cast<std::size_t>(rows_)};
    }

    static ChannelMatrix from_columns(const std::vector<std::vector<Complex>>& cols);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Complex> data_;
};

/// Path loss in dB at `distance_m` from the AP: -35.3 - 37.6 log10(d).
double path_loss_db(double distance_m);
/// Linear large-scale gain 10^(PL/10).
double large_scale_gain(double distance_m);

/// L i.i.d. CN(0, 1) entries.
std::vector<Complex> sample_small_scale(Rng& rng, int antennas);

struct SicResult {
    std::vector<int> decode_order;
    std::vector<double> sinr;
};

/// Matched-filter SINR under successive interference cancellation. UEs are
/// decoded strongest-first (descending ||h||^2, ties by index); each UE sees
/// interference from every UE decoded after it. A zero power marks a silent
/// UE: it gets SINR 0 and contributes no interference.
SicResult sinr_mf_sic(const ChannelMatrix& h, std::span<const double> powers_w, double noise_w);

/// Gaussian tail Q(x) = erfc(x / sqrt 2) / 2.
double q_function(double x);
/// Inverse of Q on (0, 1).
double q_inverse(double eps);
/// V = 1 - (1 + gamma)^-2.
double channel_dispersion(double gamma);
/// Finite-blocklength achievable rate, bits/s, clamped at 0.
double urllc_rate(double gamma, double bandwidth_hz, double blocklength, double eps);

/// Uplink time: the slowest destination among those with bits to send.
/// Returns +inf when some destination has bits but zero rate.
double transmission_latency(std::span<const double> bits, std::span<const double> rates_bps);

struct ChannelRealization {
    ChannelMatrix h;
    std::vector<double> large_scale;
    std::vector<int> decode_order;
    std::vector<double> sinr;
    std::vector<double> rate_bps;
};

/// Draws fading for one slot. UEs with request 0 stay silent.
ChannelRealization realize_channel(const ScenarioState& scn, std::span<const int> requests, Rng& rng);

}  // namespace cmec
