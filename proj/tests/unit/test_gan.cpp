#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "finite_diff.hpp"
#include "ganinf/autodiff/vjp.hpp"
#include "ganinf/errors.hpp"
#include "ganinf/gan/model.hpp"

using namespace ganinf;
using ad::Tensor;
using ganinf::testing::central_gradient;
using ganinf::testing::central_jacobian_columns;
using ganinf::testing::relative_error;
using ganinf::testing::uniform_vector;

namespace {

GanArchitecture small_arch()
{
    GanArchitecture a;
    a.latent_dim = 2;
    a.data_dim = 2;
    a.gen_hidden = 8;
    a.disc_hidden = 8;
    a.l2_rate = 1e-2;
    return a;
}

Tensor random_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = n(rng);
    return Tensor({rows, cols}, v);
}

// Mean losses evaluated directly from the per-sample value API; independent of
// the joint-gradient graph construction.
double mean_gen_loss(const GanModel& m, std::span<const double> theta, const MiniBatch& b)
{
    double s = 0.0;
    for (std::size_t r = 0; r < b.latents.rows(); ++r) s += m.per_sample_loss(LossTerm::Generator, theta, b.latents.row(r).data());
    return s / static_cast<double>(b.latents.rows());
}

double mean_disc_loss(const GanModel& m, std::span<const double> theta, const MiniBatch& b)
{
    double s = 0.0;
    for (std::size_t r = 0; r < b.latents.rows(); ++r) s += m.per_sample_loss(LossTerm::DiscriminatorFake, theta, b.latents.row(r).data());
    for (std::size_t r = 0; r < b.data.rows(); ++r) s += m.per_sample_loss(LossTerm::DiscriminatorReal, theta, b.data.row(r).data());
    return s / static_cast<double>(b.latents.rows());
}

double l2_of_kernels(const GanModel& m, std::span<const double> theta)
{
    double s = 0.0;
    for (const auto& e : m.layout().entries()) {
        if (e.kind != ParamKind::Kernel) continue;
        for (std::size_t i = 0; i < e.size(); ++i) s += theta[e.offset + i] * theta[e.offset + i];
    }
    return m.architecture().l2_rate * s;
}

}  // namespace

TEST_CASE("layout: desk architecture sizes and ordering")
{
    GanModel m(GanArchitecture{});
    CHECK(m.generator_size() == 10 * 32 + 32 + 32 * 2 + 2);
    CHECK(m.discriminator_size() == 2 * 64 + 64 + 64 + 1);
    CHECK(m.generator_size() == 418);
    CHECK(m.discriminator_size() == 257);
    const auto& e = m.layout().entries();
    REQUIRE(e.size() == 8);
    for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i].offset == e[i - 1].offset + e[i - 1].size());
    CHECK(m.layout().find(Network::Discriminator, 0, ParamKind::Kernel).offset == 418);

    ParamLayout bad;
    bad.add(Network::Discriminator, 0, ParamKind::Bias, {1, 1});
    CHECK_THROWS_AS(bad.add(Network::Generator, 0, ParamKind::Bias, {1, 1}), std::logic_error);
}

TEST_CASE("params: pack and unpack round trip")
{
    GanModel m(small_arch());
    auto theta = m.initialize(3);
    auto parts = theta.unpack();
    auto again = ParamVector::pack(m.layout_ptr(), parts);
    CHECK(again == theta);
    CHECK(theta.generator_block().size() == m.generator_size());
    CHECK(theta.discriminator_block().size() == m.discriminator_size());
    parts[0] = Tensor({1, 1}, 0.0);
    CHECK_THROWS_AS(ParamVector::pack(m.layout_ptr(), parts), ShapeError);
    CHECK_THROWS_AS((void)m.wrap(std::vector<double>(3, 0.0)), ShapeError);
}

TEST_CASE("init: deterministic, zero biases, bounded kernels")
{
    GanModel m(GanArchitecture{});
    auto a = m.initialize(11);
    auto b = m.initialize(11);
    auto c = m.initialize(12);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (const auto& e : m.layout().entries()) {
        const double lim = std::sqrt(6.0 / static_cast<double>(e.shape.rows + e.shape.cols));
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double v = a.values()[e.offset + i];
            if (e.kind == ParamKind::Bias) CHECK(v == 0.0);
            else CHECK(std::abs(v) <= lim);
        }
    }
}

TEST_CASE("forward: zero generator gives zero output; linear generator exposes its kernel")
{
    GanModel m(GanArchitecture{});
    auto theta = m.initialize(1);
    std::vector<double> t(theta.values().begin(), theta.values().end());
    std::fill(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(m.generator_size()), 0.0);
    std::vector<double> z(10, 0.7);
    for (double v : m.generator_forward(t, z)) CHECK(v == 0.0);

    GanArchitecture lin;
    lin.gen_hidden = 0;
    lin.gen_output_activation = Activation::Identity;
    lin.latent_dim = 3;
    GanModel ml(lin);
    auto p = ml.initialize(5);
    const auto& k = ml.layout().find(Network::Generator, 0, ParamKind::Kernel);
    std::vector<double> e0 = {1.0, 0.0, 0.0};
    auto out = ml.generator_forward(p.values(), e0);
    REQUIRE(out.size() == 2);
    // Row-major (3 x 2) kernel: the first latent unit maps to its first row.
    CHECK(out[0] == doctest::Approx(p.values()[k.offset + 0]).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(p.values()[k.offset + 1]).epsilon(1e-15));
}

TEST_CASE("losses: a zero discriminator outputs one half")
{
    GanModel m(small_arch());
    std::vector<double> t(m.parameter_count(), 0.0);
    std::vector<double> x = {0.3, -0.2};
    std::vector<double> z = {0.1, 0.4};
    CHECK(m.per_sample_loss(LossTerm::DiscriminatorReal, t, x) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(m.per_sample_loss(LossTerm::DiscriminatorFake, t, z) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(m.per_sample_loss(LossTerm::Generator, t, z) == doctest::Approx(-0.5).epsilon(1e-14));

    auto mm = small_arch();
    mm.objective = Objective::Minimax;
    GanModel mx(mm);
    CHECK(mx.per_sample_loss(LossTerm::Generator, t, z) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("losses: the clamp keeps a saturated discriminator finite")
{
    GanArchitecture a = small_arch();
    a.disc_hidden = 0;
    GanModel m(a);
    std::vector<double> t(m.parameter_count(), 0.0);
    const auto& b = m.layout().find(Network::Discriminator, 0, ParamKind::Bias);
    t[b.offset] = -60.0;  // sigmoid(-60) is far below the clamp
    std::vector<double> x = {0.0, 0.0};
    const double loss = m.per_sample_loss(LossTerm::DiscriminatorReal, t, x);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(kProbabilityClamp)).epsilon(1e-12));
    // The clamp is flat there, so the removal gradient vanishes.
    for (double v : m.remove_term_gradient(x, t)) CHECK(v == 0.0);
}

TEST_CASE("joint gradient: each block matches finite differences of its own loss")
{
    GanModel m(small_arch());
    std::mt19937_64 rng(21);
    auto theta = m.initialize(7).vector();
    MiniBatch batch{random_rows(5, 2, rng), random_rows(5, 2, rng)};
    auto g = m.joint_gradient(theta, batch);
    REQUIRE(g.size() == m.parameter_count());

    auto lg = [&](std::span<const double> t) { return mean_gen_loss(m, t, batch) + l2_of_kernels(m, t); };
    auto ld = [&](std::span<const double> t) { return mean_disc_loss(m, t, batch) + l2_of_kernels(m, t); };
    auto fd_g = central_gradient(lg, theta, 1e-6);
    auto fd_d = central_gradient(ld, theta, 1e-6);
    const auto dg = static_cast<std::ptrdiff_t>(m.generator_size());
    std::vector<double> ag(g.begin(), g.begin() + dg), ad_(g.begin() + dg, g.end());
    std::vector<double> og(fd_g.begin(), fd_g.begin() + dg), od(fd_d.begin() + dg, fd_d.end());
    CHECK(relative_error(ag, og) < 1e-6);
    CHECK(relative_error(ad_, od) < 1e-6);
}

TEST_CASE("joint gradient: batch structure")
{
    GanArchitecture a = small_arch();
    a.l2_rate = 0.0;
    GanModel m(a);
    std::mt19937_64 rng(4);
    auto theta = m.initialize(2).vector();
    Tensor z = random_rows(4, 2, rng);
    Tensor x = random_rows(4, 2, rng);

    SUBCASE("a batch equals the average of its singletons")
    {
        auto full = m.joint_gradient(theta, {z, x});
        std::vector<double> avg(full.size(), 0.0);
        for (std::size_t r = 0; r < 4; ++r) {
            std::uint32_t idx[] = {static_cast<std::uint32_t>(r)};
            auto one = m.joint_gradient(theta, {z.gather_rows(idx), x.gather_rows(idx)});
            for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += one[i] / 4.0;
        }
        CHECK(relative_error(full, avg) < 1e-12);
    }
    SUBCASE("the generator block ignores the data")
    {
        auto with = m.joint_gradient(theta, {z, x});
        auto without = m.joint_gradient(theta, {z, Tensor({0, 2}, 0.0)});
        for (std::size_t i = 0; i < m.generator_size(); ++i) CHECK(with[i] == without[i]);
    }
    SUBCASE("dropping a data row keeps the latent denominator")
    {
        // Removing row 0 from the data changes grad_D by exactly grad f_D^x(x_0) / |Z|.
        std::uint32_t keep[] = {1, 2, 3};
        auto full = m.joint_gradient(theta, {z, x});
        auto dropped = m.joint_gradient(theta, {z, x.gather_rows(keep)});
        auto removed = m.remove_term_gradient(x.row(0).data(), theta);
        std::vector<double> diff(removed.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = 4.0 * (full[m.generator_size() + i] - dropped[m.generator_size() + i]);
        CHECK(relative_error(diff, removed) < 1e-10);
    }
    CHECK_THROWS_AS((void)m.joint_gradient(theta, {Tensor({0, 2}, 0.0), x}), std::invalid_argument);
    CHECK_THROWS_AS((void)m.joint_gradient(std::vector<double>(3, 0.0), {z, x}), ShapeError);
    CHECK_THROWS_AS((void)m.joint_gradient(theta, {random_rows(2, 3, rng), x}), ShapeError);
}

TEST_CASE("removal gradient: one-parameter discriminator in closed form")
{
    // No hidden layer, zero kernel: D(x) = sigmoid(b), f = -log sigmoid(b),
    // df/db = sigmoid(b) - 1; kernel gradient is (sigmoid(b) - 1) x.
    GanArchitecture a = small_arch();
    a.disc_hidden = 0;
    GanModel m(a);
    std::vector<double> t(m.parameter_count(), 0.0);
    const auto& b = m.layout().find(Network::Discriminator, 0, ParamKind::Bias);
    const auto& k = m.layout().find(Network::Discriminator, 0, ParamKind::Kernel);
    t[b.offset] = 0.4;
    std::vector<double> x = {1.5, -2.0};
    auto g = m.remove_term_gradient(x, t);
    REQUIRE(g.size() == m.discriminator_size());
    const double s = 1.0 / (1.0 + std::exp(-0.4)) - 1.0;
    const auto off = m.generator_size();
    CHECK(g[b.offset - off] == doctest::Approx(s).epsilon(1e-14));
    CHECK(g[k.offset - off] == doctest::Approx(s * 1.5).epsilon(1e-14));
    CHECK(g[k.offset - off + 1] == doctest::Approx(s * -2.0).epsilon(1e-14));
}

TEST_CASE("removal directional derivatives match per-row inner products")
{
    GanModel m(small_arch());
    std::mt19937_64 rng(9);
    auto theta = m.initialize(8).vector();
    Tensor x = random_rows(6, 2, rng);
    auto v = uniform_vector(m.discriminator_size(), rng, -1.0, 1.0);
    auto batched = m.removal_directional_derivatives(theta, x, v);
    REQUIRE(batched.size() == 6);
    for (std::size_t r = 0; r < 6; ++r) {
        auto g = m.remove_term_gradient(x.row(r).data(), theta);
        const double ref = std::inner_product(g.begin(), g.end(), v.begin(), 0.0);
        CHECK(batched[r] == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(m.removal_directional_derivatives(theta, Tensor({0, 2}, 0.0), v).empty());
    CHECK_THROWS_AS((void)m.removal_directional_derivatives(theta, x, std::vector<double>(2, 0.0)), ShapeError);
}

TEST_CASE("vjp of the joint gradient matches a finite-difference Jacobian")
{
    GanArchitecture a = small_arch();
    GanModel m(a);
    std::mt19937_64 rng(33);
    auto theta = m.initialize(13).vector();
    MiniBatch batch{random_rows(3, 2, rng), random_rows(3, 2, rng)};
    auto u = uniform_vector(m.parameter_count(), rng, -1.0, 1.0);
    ad::GradientFn fn = [&](ad::Graph&, ad::Var p) { return m.joint_gradient(p, batch); };
    auto got = ad::vjp_of_gradient(u, fn, theta);

    auto cols = central_jacobian_columns([&](std::span<const double> t) { return m.joint_gradient(t, batch); },
                                         theta, 1e-4);
    std::vector<double> ref(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
        ref[i] = std::inner_product(u.begin(), u.end(), cols[i].begin(), 0.0);
    CHECK(relative_error(got, ref) < 1e-5);

    // Block-diagonal lr scaling commutes with the vjp: u^T B J == (B u)^T J.
    std::vector<double> bu(u);
    for (std::size_t i = 0; i < bu.size(); ++i) bu[i] *= i < m.generator_size() ? 0.3 : 0.7;
    auto scaled = ad::vjp_of_gradient(bu, fn, theta);
    std::vector<double> ref_scaled(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
        ref_scaled[i] = std::inner_product(bu.begin(), bu.end(), cols[i].begin(), 0.0);
    CHECK(relative_error(scaled, ref_scaled) < 1e-5);
}

TEST_CASE("architecture: parsing and canonical form")
{
    CHECK(parse_activation("tanh") == Activation::Tanh);
    CHECK(parse_objective("minimax") == Objective::Minimax);
    CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
    CHECK_THROWS_AS(parse_objective("wgan"), ConfigError);
    GanArchitecture a;
    GanArchitecture b;
    CHECK(a.canonical() == b.canonical());
    b.l2_rate = 2e-3;
    CHECK(a.canonical() != b.canonical());
    b.latent_dim = 0;
    CHECK_THROWS_AS(GanModel{b}, ConfigError);
}
