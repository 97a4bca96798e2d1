#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmec/nn.hpp"

using namespace cmec;
using namespace cmec::nn;

namespace {

std::vector<double> random_inputs(Rng& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

// Half squared error against a fixed target, summed over the batch.
double loss_of(const Mlp& net, std::span<const double> x, int batch, std::span<const double> y) {
    Workspace ws;
    serial::forward_batch(net, x, batch, ws);
    const auto out = outputs(ws);
    double l = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) l += 0.5 * (out[i] - y[i]) * (out[i] - y[i]);
    return l;
}

// Maximum relative difference between analytic and central-difference gradients.
double gradient_check(Mlp& net, std::span<const double> x, int batch, std::span<const double> y) {
    Workspace ws;
    forward_batch(net, x, batch, ws);
    const auto out = outputs(ws);
    std::vector<double> d_out(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) d_out[i] = out[i] - y[i];
    std::vector<double> grad(net.param_count());
    backward_batch(net, ws, d_out, grad);

    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t p = 0; p < net.param_count(); ++p) {
        const double keep = net.params()[p];
        net.params()[p] = keep + h;
        const double up = loss_of(net, x, batch, y);
        net.params()[p] = keep - h;
        const double down = loss_of(net, x, batch, y);
        net.params()[p] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(grad[p]), 1e-6});
        worst = std::max(worst, std::abs(numeric - grad[p]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("layout of the flat parameter vector") {
    const Mlp net({3, 4, 2});
    CHECK(net.param_count() == 3 * 4 + 4 + 4 * 2 + 2);
    CHECK(net.weight_offset(0) == 0);
    CHECK(net.bias_offset(0) == 12);
    CHECK(net.weight_offset(1) == 16);
    CHECK(net.bias_offset(1) == 24);
    CHECK_THROWS(Mlp({3}));
    CHECK_THROWS(Mlp({3, 0, 2}));
}

TEST_CASE("forward pass by hand") {
    Mlp net({2, 2, 1});
    auto p = net.params();
    // W0 (input-major): x0 -> (1, -1), x1 -> (2, 0.5); b0 = (0, 0.25).
    p[0] = 1.0;
    p[1] = -1.0;
    p[2] = 2.0;
    p[3] = 0.5;
    p[4] = 0.0;
    p[5] = 0.25;
    // W1 = (3, -2), b1 = 0.1.
    p[6] = 3.0;
    p[7] = -2.0;
    p[8] = 0.1;
    const std::vector<double> x{1.0, 1.0};
    // Hidden: relu(3), relu(-0.25) = (3, 0); output 9.1.
    CHECK(serial::forward(net, x)[0] == doctest::Approx(9.1));
    Workspace ws;
    forward_batch(net, x, 1, ws);
    CHECK(outputs(ws)[0] == doctest::Approx(9.1));
}

TEST_CASE("OpenMP kernels match the serial reference") {
    Rng rng = make_rng(4, 4);
    Mlp net({24, 64, 64, 30});
    net.init(rng);
    for (int batch : {1, 7, 64}) {
        const auto x = random_inputs(rng, static_cast<std::size_t>(batch) * 24);
        Workspace a;
        Workspace b;
        forward_batch(net, x, batch, a);
        serial::forward_batch(net, x, batch, b);
        const auto oa = outputs(a);
        const auto ob = outputs(b);
        REQUIRE(oa.size() == ob.size());
        for (std::size_t i = 0; i < oa.size(); ++i) REQUIRE(oa[i] == doctest::Approx(ob[i]).epsilon(1e-12));
        for (int s = 0; s < batch; ++s) {
            const auto one = serial::forward(net, std::span<const double>(x).subspan(static_cast<std::size_t>(s) * 24, 24));
            for (int o = 0; o < 30; ++o) REQUIRE(one[o] == doctest::Approx(oa[static_cast<std::size_t>(s) * 30 + o]).epsilon(1e-12));
        }

        const auto d_out = random_inputs(rng, oa.size());
        std::vector<double> ga(net.param_count());
        std::vector<double> gb(net.param_count());
        backward_batch(net, a, d_out, ga);
        serial::backward_batch(net, b, d_out, gb);
        for (std::size_t i = 0; i < ga.size(); ++i) REQUIRE(ga[i] == doctest::Approx(gb[i]).epsilon(1e-10));
    }
}

TEST_CASE("gradients agree with central differences") {
    Rng rng = make_rng(9, 9);
    SUBCASE("single-unit chain") {
        Mlp net({1, 1, 1});
        net.init(rng);
        // Keep the hidden unit active so the ReLU kink is not straddled.
        net.params()[0] = 0.8;
        net.params()[1] = 0.3;
        net.params()[2] = -1.2;
        net.params()[3] = 0.05;
        const std::vector<double> x{0.7};
        const std::vector<double> y{0.4};
        CHECK(gradient_check(net, x, 1, y) <= 1e-4);
    }
    SUBCASE("small network, batch of 5") {
        Mlp net({4, 6, 5, 3});
        net.init(rng);
        const auto x = random_inputs(rng, 20);
        const auto y = random_inputs(rng, 15);
        CHECK(gradient_check(net, x, 5, y) <= 1e-4);
    }
}

TEST_CASE("SGD step") {
    Optimizer opt(OptimizerKind::Sgd, 0.1, 2);
    std::vector<double> p{1.0, -1.0};
    const std::vector<double> g{2.0, -4.0};
    opt.step(p, g);
    CHECK(p[0] == doctest::Approx(0.8));
    CHECK(p[1] == doctest::Approx(-0.6));
}

TEST_CASE("Adam step") {
    Optimizer opt(OptimizerKind::Adam, 0.01, 2);
    std::vector<double> p{1.0, -1.0};
    const std::vector<double> g{2.0, -4.0};
    // First step: bias-corrected m / sqrt(v) is sign(g).
    opt.step(p, g);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-1.0 + 0.01).epsilon(1e-6));

    // Second step with a different gradient, against the update rule.
    const std::vector<double> g2{1.0, 0.0};
    const double m = 0.9 * 0.1 * 2.0 + 0.1 * 1.0;
    const double v = 0.999 * 0.001 * 4.0 + 0.001 * 1.0;
    const double want = p[0] - 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
    opt.step(p, g2);
    CHECK(p[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("optimizer names") {
    CHECK(parse_optimizer("adam") == OptimizerKind::Adam);
    CHECK(parse_optimizer(to_string(OptimizerKind::Sgd)) == OptimizerKind::Sgd);
    CHECK_THROWS(parse_optimizer("rmsprop"));
}

TEST_CASE("He-uniform init bounds and zero biases") {
    Rng rng = make_rng(1, 1);
    Mlp net({16, 8, 4});
    net.init(rng);
    const double b0 = std::sqrt(6.0 / 16);
    for (std::size_t i = net.weight_offset(0); i < net.bias_offset(0); ++i) CHECK(std::abs(net.params()[i]) <= b0);
    for (std::size_t i = net.bias_offset(0); i < net.weight_offset(1); ++i) CHECK(net.params()[i] == 0.0);
}
