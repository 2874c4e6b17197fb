/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The gcfs authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "gcfs/cli/commands.hpp"
#include "../oracles.hpp"

using namespace gcfs;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_theta(RandomStream& s, std::size_t a)
{
    std::vector<double> theta(a + 1);
    double sum = 0.0;
    for (auto& t : theta) {
        t = 0.02 + s.uniform();
        sum += t;
    }
    for (auto& t : theta)
        t /= sum;
    return theta;
}

double max_abs_diff(const StationaryDistribution& x, const StationaryDistribution& y)
{
    const std::size_t n = std::max(x.pi.size(), y.pi.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(x.probability(i) - y.probability(i)));
    return worst;
}

// --- chain solvers ----------------------------------------------------------

struct ChainCase {
    std::vector<double> theta;
    double p;
};

std::vector<ChainCase> chain_cases()
{
    RandomStream s(2024);
    std::vector<ChainCase> out;
    for (int n = 0; n < 200; ++n) {
        const std::size_t a = 1 + s() % 4;
        out.push_back({random_theta(s, a), 0.05 + 0.95 * s.uniform()});
    }
    return out;
}

Outcome ac1_solver_equivalence()
{
    const auto t0 = Clock::now();
    double worst = 0.0, worst_a1 = 0.0;
    int a1 = 0;
    for (const auto& c : chain_cases()) {
        const ChainParams params(c.theta, c.p);
        const auto roots = steady_state_roots(params);
        const auto trunc = steady_state_truncated(params);
        worst = std::max(worst, max_abs_diff(roots, trunc));
        if (c.theta.size() == 2) {
            ++a1;
            const auto closed = steady_state_closed_form_a1(c.theta[1], c.p);
            worst_a1 = std::max({worst_a1, max_abs_diff(roots, closed), max_abs_diff(trunc, closed)});
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && worst_a1 <= 1e-10 && secs < 30.0,
            fmt("200 cases, max |roots - truncated| %.2e, %d A=1 cases max vs closed form %.2e, %.1f s",
                worst, a1, worst_a1, secs)};
}

Outcome ac2_delay_identity()
{
    double worst = 0.0;
    for (const auto& c : chain_cases()) {
        const auto d = steady_state_roots(ChainParams(c.theta, c.p));
        const double got = chain_mean_delay(d, TrafficModel(c.theta, 1.0));
        worst = std::max(worst, std::abs(got - (1.0 - c.p) / c.p));
    }
    return {worst <= 1e-6, fmt("max |chain delay - (1-p)/p| %.2e over 200 cases", worst)};
}

// --- mean field against simulation ------------------------------------------

// Powers that place p near 0.32, 0.38 and 0.45 for N = 5000, B = 80 symbols.
struct FieldPoint {
    double theta1;
    double power;
};

const std::vector<FieldPoint> field_points = {
    {0.4, 8.535e-06}, {0.4, 9.424e-06}, {0.4, 1.052e-05},
    {0.6, 4.944e-02}, {0.6, 5.459e-02}, {0.6, 6.092e-02},
    {0.8, 2.864e+02}, {0.8, 3.162e+02}, {0.8, 3.529e+02},
};

constexpr std::size_t field_users = 5000;
constexpr double field_slot = 80.0;
constexpr double field_noise = 1e-12;
constexpr SimOptions field_run{20000, 2000, 1, false};

struct FieldResult {
    FieldPoint point;
    cli::Analysis analysis;
    SimSummary gcfs;
    SimSummary threshold;
    double gcfs_seconds = 0.0;
};

std::vector<FieldResult> run_field_points()
{
    std::vector<FieldResult> out;
    for (const auto& fp : field_points) {
        FieldResult r{fp, {}, {}, {}, 0.0};
        const auto traffic = TrafficModel::bernoulli(fp.theta1);
        const SystemParams sys(field_users, 1.0, field_slot, fp.power, field_noise);
        const Scenario<Channel> sc{Channel(RayleighChannel{}), traffic, sys};
        r.analysis = cli::analyze(sc.channel, traffic, sys, std::nullopt);
        auto t0 = Clock::now();
        r.gcfs = simulate(sc, Policy::gcfs(), field_run);
        r.gcfs_seconds = seconds_since(t0);
        r.threshold = simulate(sc, Policy::threshold_at(r.analysis.solution.threshold), field_run);
        out.push_back(std::move(r));
    }
    return out;
}

Outcome ac3_mean_field(const std::vector<FieldResult>& results)
{
    Outcome o;
    double secs = 0.0, worst_rel = 0.0, worst_p = 0.0;
    for (const auto& r : results) {
        const auto& s = r.analysis.solution;
        const double p = s.service_probability;
        const double rel = std::abs(r.gcfs.mean_delay_slots - s.mean_delay_slots) / s.mean_delay_slots;
        const double dp = std::abs(r.gcfs.served_fraction - p);
        secs += r.gcfs_seconds;
        worst_rel = std::max(worst_rel, rel);
        worst_p = std::max(worst_p, dp);
        const bool ok = s.status == SolutionStatus::balanced && p >= 0.3 && p <= 0.9 && rel <= 0.05 &&
                        dp <= 0.02 && !r.gcfs.diverged;
        o.pass = o.pass && ok;
        std::printf("    theta1 %.1f power %.4g: p %.4f D %.4f sim %.4f rel %.4f p_hat %.4f%s\n",
                    r.point.theta1, r.point.power, p, s.mean_delay_slots, r.gcfs.mean_delay_slots, rel,
                    r.gcfs.served_fraction, ok ? "" : "  <-- out of bounds");
    }
    o.pass = o.pass && secs < 300.0;
    o.detail = fmt("9 configs, max relative delay error %.4f, max |p_hat - p| %.4f, %.0f s", worst_rel,
                   worst_p, secs);
    return o;
}

Outcome ac4_distribution(const std::vector<FieldResult>& results)
{
    double worst = 0.0;
    bool ok = true;
    for (const auto& r : results) {
        if (!r.analysis.stationary) {
            ok = false;
            continue;
        }
        const auto pmf = histogram_pmf(r.gcfs.packet_histogram);
        worst = std::max(worst, compare_distributions(pmf, *r.analysis.stationary).tv_distance);
    }
    return {ok && worst <= 0.05, fmt("max total variation %.4f over 9 configs", worst)};
}

Outcome ac5_threshold_policy(const std::vector<FieldResult>& results)
{
    double worst = 0.0;
    for (const auto& r : results)
        worst = std::max(worst, std::abs(r.threshold.mean_delay_slots - r.gcfs.mean_delay_slots) /
                                    r.gcfs.mean_delay_slots);
    return {worst <= 0.10, fmt("max relative gap to greedy delay %.4f over 9 configs", worst)};
}

// --- slot optimality ----------------------------------------------------------

Outcome ac6_exact_optimality()
{
    RandomStream s(606);
    std::size_t orders = 0, violations = 0, mismatched = 0;
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = 1 + s() % 4;
        std::vector<double> demand(n), gains(n), rates(n);
        const double snr = 0.5 * static_cast<double>(1 + s() % 8);
        for (std::size_t i = 0; i < n; ++i) {
            demand[i] = static_cast<double>(1 + s() % 6);
            gains[i] = 0.25 * static_cast<double>(s() % 9);
            rates[i] = rate_bits_per_symbol(gains[i], snr);
        }
        const double budget = static_cast<double>(1 + s() % 8);
        const auto plan = gcfs_plan(demand, std::vector<int>(n, 0), gains, snr, budget);
        const auto best = oracle::served_bits_exact(demand, rates, plan.ordering, budget);
        if (std::abs(best.convert_to<double>() - plan.total_bits) > 1e-12)
            ++mismatched;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        do {
            ++orders;
            if (oracle::served_bits_exact(demand, rates, order, budget) > best)
                ++violations;
        } while (std::next_permutation(order.begin(), order.end()));
    }
    return {violations == 0 && mismatched == 0,
            fmt("500 instances, %zu serving orders compared exactly, %zu beat the greedy order", orders,
                violations)};
}

// --- threshold solver -----------------------------------------------------------

Outcome ac7_bisection()
{
    const UniformChannel ch(1.0);
    const double rho = 3.0, budget = 1.0;
    const std::size_t users = 10;
    const std::size_t grid = 100000;
    const double step = 1.0 / static_cast<double>(grid);
    std::vector<double> scan(grid);
    for (std::size_t k = 0; k < grid; ++k)
        scan[k] = oracle::uniform_phi(1.0, rho, budget, static_cast<double>(k) * step);

    Outcome o;
    double worst = 0.0;
    const double lo = scan.front(), hi = 2.0;
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double target = lo + f * (hi - lo);
        const auto traffic = TrafficModel::bernoulli(target / static_cast<double>(users));
        const auto s = solve_threshold(ch, traffic, SystemParams(users, 1.0, budget, rho, 1.0));
        const auto first = std::lower_bound(scan.begin(), scan.end(), target);
        const double h_grid = static_cast<double>(first - scan.begin()) * step;
        const double err = std::abs(s.threshold - h_grid);
        worst = std::max(worst, err);
        o.pass = o.pass && s.status == SolutionStatus::balanced && err <= step;
    }
    const auto over = solve_threshold(ch, TrafficModel::bernoulli(0.6), SystemParams(3, 1.0, 1.0, 1e6, 1.0));
    const auto under = solve_threshold(ch, TrafficModel::bernoulli(0.6), SystemParams(10, 1.0, 1.0, 1.0, 1.0));
    const bool branches = over.status == SolutionStatus::over_provisioned && over.threshold == 0.0 &&
                          under.status == SolutionStatus::unstable && under.threshold == 1.0;
    o.pass = o.pass && branches;
    o.detail = fmt("5 targets, max |h_th - grid crossing| %.2e (step %.0e); over-provisioned h %g, "
                   "unstable h %g",
                   worst, step, over.threshold, under.threshold);
    return o;
}

Outcome ac8_monotone_phi()
{
    RandomStream s(808);
    const auto tri = load_channel_table(std::string(GCFS_TEST_DATA) + "/triangle.csv");
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double rho = std::pow(10.0, -2.0 + 5.0 * s.uniform());
        const int which = i % 3;
        const double hmax = 0.5 + 2.0 * s.uniform();
        const double top = which == 0 ? 5.0 : which == 1 ? hmax : 2.0;
        double h1 = top * s.uniform(), h2 = top * s.uniform();
        if (h1 > h2)
            std::swap(h1, h2);
        double a = 0.0, b = 0.0;
        if (which == 0) {
            a = phi(RayleighChannel{}, rho, 1.0, h1);
            b = phi(RayleighChannel{}, rho, 1.0, h2);
        } else if (which == 1) {
            a = phi(UniformChannel(hmax), rho, 1.0, h1);
            b = phi(UniformChannel(hmax), rho, 1.0, h2);
        } else {
            a = phi(tri, rho, 1.0, h1);
            b = phi(tri, rho, 1.0, h2);
        }
        worst = std::max(worst, a - b);
        if (a > b + 1e-9)
            ++bad;
    }
    return {bad == 0, fmt("1000 triples, %zu violations, max phi(h1) - phi(h2) %.2e", bad, worst)};
}

Outcome ac9_series()
{
    RandomStream s(909);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const std::size_t a = 1 + s() % 3;
        const ChainParams params(random_theta(s, a), 0.05 + 0.95 * s.uniform());
        const auto chi = steady_state_roots(params, 150).chi_sequence();
        const auto series = series_coefficients(chi_transform(params, boundary_chi(params)), 101);
        for (std::size_t i = 0; i <= 100; ++i)
            worst = std::max(worst, std::abs(series[i] - chi[i]));
    }
    return {worst <= 1e-8, fmt("50 cases to order 100, max coefficient error %.2e", worst)};
}

// --- CLI determinism --------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome ac10_determinism()
{
    const auto root = fs::temp_directory_path() / "gcfs_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto cfg = root / "config.yaml";
    std::ofstream(cfg) << "system: {users: 60, bandwidth: 1.0, slot_duration: 8.0, power: 3.0e-11, noise: 1.0e-12}\n"
                          "traffic: {theta: [0.3, 0.5, 0.2]}\n"
                          "run: {horizon: 2000, warmup: 200, seeds: [3, 4]}\n"
                          "sweep: {axis: theta1, values: [0.3, 0.5], simulate: true}\n";
    std::size_t files = 0, differing = 0;
    int failed = 0;
    for (const char* cmd : {"analyze", "simulate", "compare", "sweep"}) {
        for (const char* tag : {"a", "b"}) {
            const auto out = root / cmd / tag;
            const std::string line = std::string(GCFS_CLI_PATH) + " " + cmd + " --config " + cfg.string() +
                                     " --out " + out.string() + " --workers 2 > /dev/null 2>&1";
            const int rc = std::system(line.c_str());
            if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0)
                ++failed;
        }
        for (const auto& e : fs::directory_iterator(root / cmd / "a")) {
            ++files;
            const auto twin = root / cmd / "b" / e.path().filename();
            if (!fs::exists(twin) || slurp(e.path()) != slurp(twin))
                ++differing;
        }
    }
    return {failed == 0 && differing == 0 && files > 0,
            fmt("4 commands run twice, %zu output files, %zu differ, %d failed runs", files, differing,
                failed)};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](const char* id, const char* name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    };

    report("AC-1", "solver equivalence", ac1_solver_equivalence);
    report("AC-2", "delay identity", ac2_delay_identity);

    std::vector<FieldResult> field;
    std::string field_error;
    try {
        field = run_field_points();
    } catch (const std::exception& e) {
        field_error = e.what();
    }
    auto with_field = [&](Outcome (*f)(const std::vector<FieldResult>&)) {
        return [&, f] {
            if (!field_error.empty())
                return Outcome{false, "simulation failed: " + field_error};
            return f(field);
        };
    };
    report("AC-3", "mean field vs simulation", with_field(ac3_mean_field));
    report("AC-4", "packet distribution", with_field(ac4_distribution));
    report("AC-5", "threshold policy", with_field(ac5_threshold_policy));

    report("AC-6", "slot optimality", ac6_exact_optimality);
    report("AC-7", "threshold bisection", ac7_bisection);
    report("AC-8", "monotone phi", ac8_monotone_phi);
    report("AC-9", "z-transform series", ac9_series);
    report("AC-10", "determinism", ac10_determinism);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
