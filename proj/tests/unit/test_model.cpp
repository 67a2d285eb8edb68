#include <doctest.h>

#include <cmath>

#include "anisopr/error.hpp"
#include "anisopr/model.hpp"
#include "anisopr/rng.hpp"
#include "helpers.hpp"

using namespace anisopr;

namespace {

std::vector<double> scaled(const std::vector<double>& v, double c) {
    std::vector<double> out(v);
    for (auto& x : out) x *= c;
    return out;
}

std::vector<double> fd_gradient(const std::vector<double>& w, const Teacher& t, const Spectrum& spec,
                                double h) {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        auto wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        g[i] = (loss_closed_form(wp, t, spec).value - loss_closed_form(wm, t, spec).value) / (2 * h);
    }
    return g;
}

double vec_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num = std::max(num, std::abs(got[i] - want[i]));
        den = std::max(den, std::abs(want[i]));
    }
    return num / std::max(den, 1e-300);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("closed-form loss at landmark points") {
    const Spectrum spec = build_spectrum(50, 1.5);
    const Teacher t = sample_teacher(spec, 3);
    CHECK(std::abs(loss_closed_form(t.w_star, t, spec).value) <= 1e-12);
    const std::vector<double> zero(50, 0.0);
    CHECK(loss_closed_form(zero, t, spec).value == doctest::Approx(3.0).epsilon(1e-12));
    // s = 4, u = 2, s* = 1: 48 + 3 - 16 - 8
    const LossEval e = loss_closed_form(scaled(t.w_star, 2.0), t, spec);
    CHECK(e.s == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(e.u == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.value == doctest::Approx(27.0).epsilon(1e-12));
    CHECK_THROWS_AS(loss_closed_form(std::vector<double>(49, 0.0), t, spec), InvalidArgument);
}

TEST_CASE("closed form matches its definition and lower bound") {
    const Spectrum spec = build_spectrum(10, 1.0);
    const Teacher t = sample_teacher(spec, 5);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto w = testutil::gaussian_vector(10, 1000 + k);
        const LossEval e = loss_closed_form(w, t, spec);
        double s = 0.0, u = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            s += spec.lambdas[i] * w[i] * w[i];
            u += spec.lambdas[i] * w[i] * t.w_star[i];
        }
        const double direct = 3 * s * s + 3 * t.s_star() * t.s_star() - 4 * u * u - 2 * t.s_star() * s;
        CHECK(std::abs(e.value - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
        CHECK(e.value >= 0.0);
        CHECK(e.value >= 3 * (s - t.s_star()) * (s - t.s_star()) - 1e-12);
    }
}

TEST_CASE("Monte-Carlo oracle") {
    const Spectrum spec = build_spectrum(8, 1.5);
    const Teacher t = sample_teacher(spec, 1);
    const MonteCarloEstimate zero = loss_monte_carlo(t.w_star, t, spec, 1000, 9);
    CHECK(zero.mean == 0.0);
    CHECK(zero.std_error == 0.0);

    const auto w = testutil::gaussian_vector(8, 77);
    const MonteCarloEstimate mc = loss_monte_carlo(w, t, spec, 1'000'000, 4);
    const double exact = loss_closed_form(w, t, spec).value;
    CHECK(mc.n == 1'000'000u);
    CHECK(std::abs(mc.mean - exact) <= 3 * mc.std_error);

    const MonteCarloEstimate twice = loss_monte_carlo(scaled(t.w_star, 2.0), t, spec, 200'000, 8);
    CHECK(std::abs(twice.mean - 27.0) <= 3 * twice.std_error);

    int agree = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto wk = testutil::gaussian_vector(8, 500 + k);
        const MonteCarloEstimate e = loss_monte_carlo(wk, t, spec, 20'000, 600 + k);
        if (std::abs(e.mean - loss_closed_form(wk, t, spec).value) <= 3 * e.std_error) ++agree;
    }
    CHECK(agree >= 17);
}

TEST_CASE("single-sample Monte-Carlo arithmetic, d = 1") {
    const Spectrum spec = build_spectrum(1, 0.0);
    const Teacher t = make_teacher(spec, {1.3});
    const std::vector<double> w{0.4};
    Rng rng = make_rng(21, Stream::kMonteCarlo);
    std::normal_distribution<double> normal;
    const double z = normal(rng);
    const double want = std::pow(z * z * (0.4 * 0.4 - 1.3 * 1.3), 2);
    CHECK(loss_monte_carlo(w, t, spec, 1, 21).mean == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("gradient: critical points and finite differences") {
    const Spectrum spec = build_spectrum(6, 2.0);
    const Teacher t = sample_teacher(spec, 2);
    CHECK(testutil::max_abs(gradient(t.w_star, t, spec)) <= 1e-14);
    CHECK(testutil::max_abs(gradient(std::vector<double>(6, 0.0), t, spec)) == 0.0);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto w = testutil::gaussian_vector(6, 10 + k);
        CHECK(vec_rel_err(gradient(w, t, spec), fd_gradient(w, t, spec, 1e-5)) <= 1e-6);
    }
}

TEST_CASE("hessian action") {
    const Spectrum spec = build_spectrum(6, 1.0);
    const Teacher t = sample_teacher(spec, 4);
    const std::vector<double> zero(6, 0.0);

    // At the origin: (-4 s* Q - 8 (Q w*)(Q w*)^T) w*
    std::vector<double> want(6);
    double qws_ws = 0.0;
    for (std::size_t i = 0; i < 6; ++i) qws_ws += spec.lambdas[i] * t.w_star[i] * t.w_star[i];
    for (std::size_t i = 0; i < 6; ++i) {
        const double qws = spec.lambdas[i] * t.w_star[i];
        want[i] = -4 * t.s_star() * qws - 8 * qws * qws_ws;
    }
    CHECK(vec_rel_err(hessian_apply(zero, t.w_star, t, spec), want) <= 1e-14);

    const auto w0 = testutil::gaussian_vector(6, 1);
    CHECK(testutil::max_abs(hessian_apply(w0, zero, t, spec)) == 0.0);

    const double h = 1e-5;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto w = testutil::gaussian_vector(6, 200 + k);
        const auto v = testutil::gaussian_vector(6, 400 + k);
        auto wp = w, wm = w;
        for (std::size_t i = 0; i < 6; ++i) {
            wp[i] += h * v[i];
            wm[i] -= h * v[i];
        }
        const auto gp = gradient(wp, t, spec), gm = gradient(wm, t, spec);
        std::vector<double> fd(6);
        for (std::size_t i = 0; i < 6; ++i) fd[i] = (gp[i] - gm[i]) / (2 * h);
        CHECK(vec_rel_err(hessian_apply(w, v, t, spec), fd) <= 1e-5);

        const auto v2 = testutil::gaussian_vector(6, 600 + k);
        const auto h1 = hessian_apply(w, v, t, spec), h2 = hessian_apply(w, v2, t, spec);
        double a = 0.0, b = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            a += h1[i] * v2[i];
            b += h2[i] * v[i];
            scale += std::abs(h1[i] * v2[i]);
        }
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, scale));
    }
    CHECK_THROWS_AS(hessian_apply(w0, std::vector<double>(5, 0.0), t, spec), InvalidArgument);
}

TEST_CASE("critical point classification") {
    const Spectrum spec = build_spectrum(50, 2.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Teacher t = sample_teacher(spec, seed);
        CHECK(classify_critical_point(t.w_star, t, spec) == CriticalKind::kGlobalMin);
        CHECK(classify_critical_point(scaled(t.w_star, -1.0), t, spec) == CriticalKind::kGlobalMin);
        CHECK(classify_critical_point(std::vector<double>(50, 0.0), t, spec) == CriticalKind::kLocalMax);
        const auto saddle = construct_saddle_point(t, spec);
        const LossEval e = loss_closed_form(saddle, t, spec);
        CHECK(std::abs(e.u) <= 1e-14);
        CHECK(e.s == doctest::Approx(t.s_star() / 3).epsilon(1e-12));
        CHECK(classify_critical_point(saddle, t, spec) == CriticalKind::kSaddle);
        CHECK(classify_critical_point(testutil::gaussian_vector(50, seed), t, spec) ==
              CriticalKind::kNoncritical);
    }
    const Teacher t = sample_teacher(spec, 1);
    ClassifyOptions bad;
    bad.grad_tol = 0.0;
    CHECK_THROWS_AS(classify_critical_point(t.w_star, t, spec, bad), InvalidArgument);
    CHECK(std::string(to_string(CriticalKind::kSaddle)) == "SADDLE");
}

}
