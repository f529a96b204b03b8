#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "spinrot/analysis.hpp"
#include "spinrot/experiment.hpp"
#include "spinrot/poisson.hpp"

using namespace spinrot;

namespace {

std::vector<double> sinusoid(const std::vector<double>& chi, double c, double a, double phase) {
    std::vector<double> y;
    for (double x : chi) y.push_back(c + a * std::cos(x + phase));
    return y;
}

InterferometerSetup adjusted_setup(double t1) {
    InterferometerSetup s;
    const double v = s.kinematics().velocity();
    s.rfg_length = v * t1;
    s.accelerator_length = std::min(s.accelerator_length, s.rfg_length);
    const double d = kTwoPi * v / larmor_frequency(s.guide_field);
    s.dc1_rfg_distance = d;
    s.rfg_dc2_distance = d;
    s.larmor_accelerator_field = -s.guide_field * s.rfg_length / s.accelerator_length;
    return s;
}

CalibrationTable closed_form_table(const InterferometerSetup& s, const std::vector<double>& freqs) {
    CalibrationTable t;
    t.dc1_rfg_distance = s.dc1_rfg_distance;
    t.rfg_dc2_distance = s.rfg_dc2_distance;
    t.larmor_accelerator_field = s.larmor_accelerator_field;
    for (double f : freqs) {
        const double b = cyclic_amplitude_closed_form(kTwoPi * f, s.rfg_dwell_time());
        t.rows.push_back({f, b, b, false});
    }
    return t;
}

// phase of each interferogram relative to the first one
std::vector<PhasePoint> phase_series(const std::vector<Interferogram>& sweep) {
    const FitResult ref = fit_sinusoid(sweep.front());
    std::vector<PhasePoint> out;
    for (const auto& ig : sweep) {
        const FitResult fit = fit_sinusoid(ig);
        out.push_back({ig.frequency, relative_phase(fit, ref).value, fit.phase_error});
    }
    return unwrap_phases(out);
}

}  // namespace

TEST_CASE("fit_sinusoid recovers an exact sinusoid") {
    const auto chi = chi_grid(16);
    const FitResult r = fit_sinusoid(chi, sinusoid(chi, 200.0, 150.0, 0.3));
    CHECK(r.offset == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(r.amplitude == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(std::abs(r.phase - 0.3) < 1e-12);
    CHECK(r.reduced_chi_square < 1e-20);
    CHECK(r.phase_constrained);
    CHECK(r.amplitude_error > 0.0);

    // amplitude >= 0 with the sign folded into the phase
    const FitResult neg = fit_sinusoid(chi, sinusoid(chi, 200.0, -150.0, 0.3));
    CHECK(neg.amplitude == doctest::Approx(150.0));
    CHECK(std::abs(wrap_phase(neg.phase - 0.3 - kPi)) < 1e-12);
}

TEST_CASE("fit_sinusoid degenerate input") {
    const auto chi = chi_grid(16);
    const FitResult flat = fit_sinusoid(chi, std::vector<double>(16, 250.0));
    CHECK(flat.amplitude < 1e-9);
    CHECK_FALSE(flat.phase_constrained);
    CHECK(flat.phase_error == doctest::Approx(kPi));

    const std::vector<double> same(8, 1.0), counts{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK_THROWS_AS(fit_sinusoid(same, counts), std::invalid_argument);
    const std::vector<double> three{0.0, 1.0, 2.0}, c3{1, 2, 3};
    CHECK_THROWS_AS(fit_sinusoid(three, c3), std::invalid_argument);
}

TEST_CASE("fit_sinusoid equivariance and scaling") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto chi = chi_grid(16);
    for (int i = 0; i < 200; ++i) {
        const double c = 100.0 + 400.0 * u(rng), a = c * (0.1 + 0.8 * u(rng)), ph = kTwoPi * u(rng);
        const auto y = sinusoid(chi, c, a, ph);
        const FitResult base = fit_sinusoid(chi, y);

        const double delta = kTwoPi * u(rng);
        std::vector<double> shifted;
        for (double x : chi) shifted.push_back(x + delta);
        const FitResult s = fit_sinusoid(shifted, y);
        CHECK(std::abs(wrap_phase(s.phase - (base.phase - delta))) < 1e-11);

        const double k = 0.5 + 3.0 * u(rng);
        std::vector<double> scaled;
        for (double v : y) scaled.push_back(k * v);
        const FitResult sc = fit_sinusoid(chi, scaled);
        CHECK(sc.offset == doctest::Approx(k * base.offset).epsilon(1e-11));
        CHECK(sc.amplitude == doctest::Approx(k * base.amplitude).epsilon(1e-11));
        CHECK(std::abs(wrap_phase(sc.phase - base.phase)) < 1e-12);
    }
}

TEST_CASE("fit_sinusoid error bars cover the truth under Poisson noise") {
    const auto chi = chi_grid(16);
    const double truth = 0.7;
    int covered = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        CountingRng rng(mix64(static_cast<std::uint64_t>(t)));
        std::vector<double> y;
        for (double x : chi) y.push_back(static_cast<double>(rng.poisson(200.0 + 200.0 * std::cos(x + truth))));
        const FitResult r = fit_sinusoid(chi, y);
        CHECK(r.phase_constrained);
        if (std::abs(wrap_phase(r.phase - truth)) < 3.0 * r.phase_error) ++covered;
    }
    CHECK(covered >= 990);
}

TEST_CASE("wrap_phase and relative_phase") {
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(3.0 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));

    FitResult a, b;
    a.phase = 3.0;
    b.phase = -3.0;
    a.phase_error = 0.03;
    b.phase_error = 0.04;
    CHECK(relative_phase(a, a).value == 0.0);
    CHECK(relative_phase(a, b).value == doctest::Approx(-(kTwoPi - 6.0)));
    CHECK(std::abs(relative_phase(b, a).value) == doctest::Approx(kTwoPi - 6.0));
    CHECK(relative_phase(a, b).error == doctest::Approx(0.05));

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 500; ++i) {
        a.phase = u(rng);
        b.phase = u(rng);
        const double ab = relative_phase(a, b).value, ba = relative_phase(b, a).value;
        CHECK(std::abs(wrap_phase(ab + ba)) < 1e-15);
    }

    FitResult loose = a;
    loose.phase_constrained = false;
    CHECK_THROWS_AS(relative_phase(loose, a), std::invalid_argument);
    CHECK_THROWS_AS(relative_phase(a, loose), std::invalid_argument);
}

TEST_CASE("unwrap_phases") {
    std::vector<PhasePoint> line{{0, 0.0, 0.1}, {1, 0.4, 0.1}, {2, 0.8, 0.1}};
    auto out = unwrap_phases(line);
    for (std::size_t i = 0; i < line.size(); ++i) CHECK(out[i].phase == line[i].phase);

    const std::vector<PhasePoint> single{{5.0, -2.5, 0.1}};
    CHECK(unwrap_phases(single)[0].phase == -2.5);

    // a steep line that wraps several times
    const double slope = 0.9;
    std::vector<PhasePoint> wrapped, truth;
    for (int i = 0; i < 20; ++i) {
        truth.push_back({static_cast<double>(i), 0.2 + slope * i, 0.1});
        wrapped.push_back({static_cast<double>(i), wrap_phase(0.2 + slope * i), 0.1});
    }
    out = unwrap_phases(wrapped);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].phase == doctest::Approx(truth[i].phase).epsilon(1e-12));
}

TEST_CASE("fit_phase_vs_frequency") {
    const std::vector<PhasePoint> two{{0.0, 0.1, 0.02}, {10.0, 0.6, 0.02}};
    const LinearFit l = fit_phase_vs_frequency(two);
    CHECK(l.slope == doctest::Approx(0.05));
    CHECK(l.intercept == doctest::Approx(0.1));
    CHECK(l.chi_square < 1e-24);
    CHECK(l.degrees_of_freedom == 0);

    std::mt19937_64 rng(43);
    std::normal_distribution<double> g;
    std::vector<PhasePoint> noisy;
    for (int i = 0; i < 9; ++i) noisy.push_back({2500.0 * i, 3e-5 * 2500.0 * i + 0.02 * g(rng), 0.02});
    const LinearFit n = fit_phase_vs_frequency(noisy);
    CHECK(n.covariance[1] == n.covariance[2]);
    CHECK(n.covariance[0] > 0.0);
    CHECK(n.covariance[3] > 0.0);
    CHECK(n.covariance[0] * n.covariance[3] - n.covariance[1] * n.covariance[2] >= 0.0);
    CHECK(n.slope_error == doctest::Approx(std::sqrt(n.covariance[0])).epsilon(1e-12));
    CHECK(n.degrees_of_freedom == 7);

    const std::vector<PhasePoint> one{{1.0, 0.1, 0.1}, {1.0, 0.2, 0.1}};
    CHECK_THROWS_AS(fit_phase_vs_frequency(one), std::invalid_argument);
}

TEST_CASE("noiseless sweeps give slope pi t1 for t1 in [1, 20] us") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(1e-6, 20e-6);
    std::vector<double> t1s{1e-6, 20e-6};
    for (int i = 0; i < 6; ++i) t1s.push_back(u(rng));
    const std::vector<double> freqs = frequency_list(20e3, 2.5e3);
    for (double t1 : t1s) {
        const InterferometerSetup s = adjusted_setup(t1);
        const auto sweep = frequency_sweep(s, freqs, closed_form_table(s, freqs), default_acquisition(), false);
        const LinearFit l = fit_phase_vs_frequency(phase_series(sweep));
        CHECK(l.slope == doctest::Approx(kPi * s.rfg_dwell_time()).epsilon(1e-9));
    }
}

TEST_CASE("field imbalance shows up as excess scatter about the line") {
    const std::vector<double> freqs = frequency_list(20e3, 2.5e3);
    InterferometerSetup s = adjusted_setup(9.6e-6);
    const CalibrationTable table = closed_form_table(s, freqs);
    // ten times the default statistics
    Acquisition acq = default_acquisition();
    acq.count_rate = 200.0;

    const LinearFit clean = fit_phase_vs_frequency(phase_series(frequency_sweep(s, freqs, table, acq, false)));
    CHECK(clean.reduced_chi_square < 1e-12);

    s.imbalance = 0.15;
    s.integrator_steps = 4000;
    const LinearFit skewed = fit_phase_vs_frequency(phase_series(frequency_sweep(s, freqs, table, acq, false)));
    CHECK(skewed.reduced_chi_square > 1.0);
}
