#include <doctest.h>

#include "pointgr/layers.hpp"
#include "pointgr/optimizer.hpp"

using namespace pointgr;

namespace {

// single scalar parameter with a hand-picked constant gradient
struct ScalarRig {
    Graph<double> g;
    ParamStore<double> ps{g};
    Var p;

    explicit ScalarRig(double init = 0.0) { p = ps.add("p", Tensor<double>({1}, {init})); }

    void apply_gradient(SgdMomentum<double>& opt, double grad, double lr) {
        const std::size_t mark = g.mark();
        g.backward(g.weighted_sum(p, Tensor<double>({1}, {grad})));
        opt.step(lr);
        g.zero_grad();
        g.rewind(mark);
    }

    double value() const { return g.value(p)[0]; }
};

} // namespace

TEST_CASE("plain sgd step without momentum") {
    ScalarRig rig;
    SgdMomentum<double> opt(rig.ps, 0.0);
    rig.apply_gradient(opt, 2.0, 1.0);
    CHECK(rig.value() == -2.0);
}

TEST_CASE("momentum accumulates across steps") {
    ScalarRig rig;
    SgdMomentum<double> opt(rig.ps, 0.9);
    rig.apply_gradient(opt, 1.0, 1.0);
    CHECK(rig.value() == doctest::Approx(-1.0));
    rig.apply_gradient(opt, 1.0, 1.0);
    CHECK(rig.value() == doctest::Approx(-2.9));
}

TEST_CASE("zero gradients leave parameters untouched") {
    ScalarRig rig(1.25);
    SgdMomentum<double> opt(rig.ps, 0.9);
    rig.apply_gradient(opt, 0.0, 0.5);
    CHECK(rig.value() == 1.25);
}

TEST_CASE("parameters outside the backward pass keep their values") {
    Graph<double> g;
    ParamStore<double> ps(g);
    Var a = ps.add("a", Tensor<double>({1}, {3.0}));
    ps.add("b", Tensor<double>({1}, {4.0}));
    SgdMomentum<double> opt(ps, 0.9);
    g.backward(g.weighted_sum(a, Tensor<double>({1}, {1.0})));
    opt.step(0.1);
    CHECK(g.value(ps.var("a"))[0] == doctest::Approx(2.9));
    CHECK(g.value(ps.var("b"))[0] == 4.0);
}

TEST_CASE("a zero learning rate step is bit-exact identity") {
    Rng rng = make_rng(3);
    Graph<double> g;
    ParamStore<double> ps(g);
    LinearLayer<double> l = register_linear(ps, "fc", 6, 4, rng);
    const std::vector<double> before = g.value(l.w).vec();

    SgdMomentum<double> opt(ps, 0.9);
    Tensor<double> x = random_uniform<double>(rng, {3, 6}, -1.0, 1.0);
    Rng wrng = make_rng(4);
    Tensor<double> ws = random_uniform<double>(wrng, {3, 4}, -1.0, 1.0);
    g.backward(g.weighted_sum(linear_forward(g, l, g.leaf(std::move(x))), ws));
    opt.step(0.0);
    CHECK(g.value(l.w).vec() == before);
}

TEST_CASE("non-finite gradients abort the step and name the parameter") {
    Graph<double> g;
    ParamStore<double> ps(g);
    Var x = ps.add("theta", Tensor<double>({1, 1}, {1e-5}));
    Var w = g.leaf(Tensor<double>({1, 2}, {1e10, -1e10}));
    Var b = g.leaf(Tensor<double>({2}));
    Var y = g.linear(x, w, b);
    // the two overflowing products cancel in the forward value but collide as
    // inf - inf when the gradient is pulled back through the weights
    g.backward(g.weighted_sum(y, Tensor<double>({1, 2}, {1e300, 1e300})));
    SgdMomentum<double> opt(ps, 0.9);
    CHECK_THROWS_WITH_AS(opt.step(0.1), doctest::Contains("theta"), NumericError);
}

TEST_CASE("velocity state round-trips through save and load") {
    auto run = [](int steps_before_save) {
        ScalarRig rig;
        SgdMomentum<double> opt(rig.ps, 0.9);
        for (int i = 0; i < steps_before_save; ++i) rig.apply_gradient(opt, 1.0, 0.1);
        return std::pair{rig.g.value(rig.p)[0], opt.velocity()};
    };

    auto [p2, vel2] = run(2);

    ScalarRig rig;
    rig.g.value_mut(rig.p)[0] = p2;
    SgdMomentum<double> opt(rig.ps, 0.9);
    opt.load_velocity(vel2);
    rig.apply_gradient(opt, 1.0, 0.1);

    auto [p3, vel3] = run(3);
    CHECK(rig.value() == p3);
    CHECK(opt.velocity().at("p").vec() == vel3.at("p").vec());
}

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(0, 10, 0.1, 0.001) == doctest::Approx(0.1));
    CHECK(cosine_lr(10, 10, 0.1, 0.001) == doctest::Approx(0.001));
    CHECK(cosine_lr(5, 10, 0.1, 0.001) == doctest::Approx(0.0505));
    CHECK(cosine_lr(0, 0, 0.1, 0.001) == doctest::Approx(0.1));
    // monotone decay across the whole schedule
    double prev = cosine_lr(0, 100, 0.1, 0.001);
    for (std::size_t t = 1; t <= 100; ++t) {
        double cur = cosine_lr(t, 100, 0.1, 0.001);
        CHECK(cur <= prev);
        prev = cur;
    }
}
