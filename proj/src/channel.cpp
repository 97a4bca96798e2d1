#include "cmec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace cmec {

namespace {

// Placement can put a UE on top of the AP; the path-loss law is only
// meaningful from 1 m out.
constexpr double kMinDistanceM = 1.0;

double norm_sq(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

}  // namespace

ChannelMatrix ChannelMatrix::from_columns(const std::vector<std::vector<Complex>>& cols) {
    if (cols.empty()) return {};
    ChannelMatrix h(static_cast<int>(cols.front().size()), static_cast<int>(cols.size()));
    for (int m = 0; m < h.cols(); ++m) {
        if (static_cast<int>(cols[m].size()) != h.rows()) {
            throw std::invalid_argument("ChannelMatrix: ragged columns");
        }
        std::copy(cols[m].begin(), cols[m].end(), h.column(m).begin());
    }
    return h;
}

double path_loss_db(double distance_m) {
    if (!(distance_m > 0.0)) {
        throw std::invalid_argument("path_loss_db: distance must be positive");
    }
    return -35.3 - 37.6 * std::log10(distance_m);
}

double large_scale_gain(double distance_m) {
    return std::pow(10.0, path_loss_db(distance_m) / 10.0);
}

std::vector<Complex> sample_small_scale(Rng& rng, int antennas) {
    if (antennas < 1) {
        throw std::invalid_argument("sample_small_scale: need at least one antenna");
    }
    std::normal_distribution<double> half(0.0, std::sqrt(0.5));
    std::vector<Complex> h(static_cast<std::size_t>(antennas));
    for (auto& x : h) {
        const double re = half(rng);
        const double im = half(rng);
        x = {re, im};
    }
    return h;
}

SicResult sinr_mf_sic(const ChannelMatrix& h, std::span<const double> powers_w, double noise_w) {
    const int m_count = h.cols();
    if (m_count < 1 || static_cast<int>(powers_w.size()) != m_count) {
        throw std::invalid_argument("sinr_mf_sic: need one power per channel column");
    }
    if (!(noise_w > 0.0)) {
        throw std::invalid_argument("sinr_mf_sic: noise power must be positive");
    }
    std::vector<double> gain(static_cast<std::size_t>(m_count));
    for (int m = 0; m < m_count; ++m) {
        gain[m] = norm_sq(h.column(m));
        if (!(gain[m] > 0.0) || !std::isfinite(gain[m])) {
            throw std::invalid_argument("sinr_mf_sic: zero-norm or non-finite channel column");
        }
    }

    SicResult out;
    out.decode_order.resize(static_cast<std::size_t>(m_count));
    std::iota(out.decode_order.begin(), out.decode_order.end(), 0);
    std::stable_sort(out.decode_order.begin(), out.decode_order.end(),
                     [&](int a, int b) { return gain[a] > gain[b]; });

    out.sinr.assign(static_cast<std::size_t>(m_count), 0.0);
    for (int pos = 0; pos < m_count; ++pos) {
        const int m = out.decode_order[pos];
        if (powers_w[m] <= 0.0) continue;
        double interference = 0.0;
        for (int later = pos + 1; later < m_count; ++later) {
            const int n = out.decode_order[later];
            if (powers_w[n] <= 0.0) continue;
            interference += powers_w[n] * std::norm(inner(h.column(m), h.column(n))) / gain[m];
        }
        out.sinr[m] = powers_w[m] * gain[m] / (interference + noise_w);
    }
    return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::domain_error("q_inverse: eps must lie in (0, 1)");
    }
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eps);
}

double channel_dispersion(double gamma) {
    const double r = 1.0 / (1.0 + gamma);
    return 1.0 - r * r;
}

double urllc_rate(double gamma, double bandwidth_hz, double blocklength, double eps) {
    if (gamma <= 0.0) return 0.0;
    const double capacity = bandwidth_hz * std::log2(1.0 + gamma);
    const double penalty = bandwidth_hz * std::sqrt(channel_dispersion(gamma) / blocklength) *
                           q_inverse(eps) / std::numbers::ln2;
    return std::max(0.0, capacity - penalty);
}

double transmission_latency(std::span<const double> bits, std::span<const double> rates_bps) {
    if (bits.size() != rates_bps.size()) {
        throw std::invalid_argument("transmission_latency: bits/rates size mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] <= 0.0) continue;
        if (!(rates_bps[i] > 0.0)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, bits[i] / rates_bps[i]);
    }
    return worst;
}

ChannelRealization realize_channel(const ScenarioState& scn, std::span<const int> requests,
                                   Rng& rng) {
    const int m_count = scn.n_ues();
    const auto& cfg = scn.config;
    const int antennas = cfg.raw().n_antennas;
    if (static_cast<int>(requests.size()) != m_count) {
        throw std::invalid_argument("realize_channel: one request per UE required");
    }

    ChannelRealization ch;
    ch.h = ChannelMatrix(antennas, m_count);
    ch.large_scale.resize(static_cast<std::size_t>(m_count));
    std::vector<double> powers(static_cast<std::size_t>(m_count), 0.0);
    for (int m = 0; m < m_count; ++m) {
        ch.large_scale[m] = large_scale_gain(std::max(kMinDistanceM, scn.distance_to_ap(m)));
        const double amp = std::sqrt(ch.large_scale[m]);
        const auto small = sample_small_scale(rng, antennas);
        auto col = ch.h.column(m);
        for (int l = 0; l < antennas; ++l) col[l] = amp * small[l];
        if (requests[m] != 0) powers[m] = scn.ues[m].tx_power_w;
    }

    auto sic = sinr_mf_sic(ch.h, powers, cfg.link_noise_power_w());
    ch.decode_order = std::move(sic.decode_order);
    ch.sinr = std::move(sic.sinr);
    ch.rate_bps.resize(static_cast<std::size_t>(m_count));
    for (int m = 0; m < m_count; ++m) {
        ch.rate_bps[m] = urllc_rate(ch.sinr[m], cfg.link_bandwidth_hz(), cfg.raw().blocklength,
                                    cfg.raw().decode_error_prob);
    }
    return ch;
}

}  // namespace cmec
