#include "doctest.h"

#include <cmath>
#include <functional>

#include "autodiff.hpp"
#include "gradcheck.hpp"
#include "optim.hpp"

using namespace cdln;

namespace {

// forward+FD scaffold: run(false) evaluates the loss, run(true) also runs
// backward into Parameter::grad
FdReport check_graph(std::vector<Parameter*> params, const std::function<double(bool)>& run,
                     double eps = 1e-5, double tol = 1e-4) {
    auto loss_fn = [&run] { return run(false); };
    auto grad_fn = [&] {
        for (Parameter* p : params) p->zero_grad();
        run(true);
    };
    return finite_diff_check(params, loss_fn, grad_fn, eps, tol);
}

Tensor rand_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    return Tensor::uniform(std::move(shape), rng, lo, hi);
}

}  // namespace

TEST_CASE("linear forward matches hand arithmetic") {
    Parameter W("W", Tensor({2, 2}, {1, 0, 0, 1}));
    Parameter b("b", Tensor({2}, {0, 0}));
    Tape tape;
    auto y = tape.linear(tape.param(W), tape.constant(Tensor({2}, {3, -1})), tape.param(b));
    CHECK(tape.value(y)[0] == doctest::Approx(3.0));
    CHECK(tape.value(y)[1] == doctest::Approx(-1.0));

    Parameter W2("W2", Tensor({2, 2}, {1, 2, 3, 4}));
    Parameter b2("b2", Tensor({2}, {1, 1}));
    Tape tape2;
    auto y2 = tape2.linear(tape2.param(W2), tape2.constant(Tensor({2}, {1, 1})), tape2.param(b2));
    CHECK(tape2.value(y2)[0] == doctest::Approx(4.0));
    CHECK(tape2.value(y2)[1] == doctest::Approx(8.0));
}

TEST_CASE("linear rejects non-conforming shapes") {
    Parameter W("W", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Parameter b("b", Tensor({2}, {0, 0}));
    Tape tape;
    CHECK_THROWS_WITH_AS(
        tape.linear(tape.param(W), tape.constant(Tensor({2}, {1, 1})), tape.param(b)),
        doctest::Contains("[2x3]"), error);
    try {
        Tape t2;
        t2.linear(t2.param(W), t2.constant(Tensor({2}, {1, 1})), t2.param(b));
    } catch (const error& e) {
        CHECK(e.kind() == errc::dimension);
        CHECK(std::string(e.what()).find("[2]") != std::string::npos);  // both shapes named
    }
}

TEST_CASE("activations at fixed points") {
    Tape tape;
    auto z = tape.constant(Tensor({1}, {0.0}));
    CHECK(tape.value(tape.activation(Activation::tanh, z))[0] == doctest::Approx(0.0));
    CHECK(tape.value(tape.activation(Activation::sigmoid, z))[0] == doctest::Approx(0.5));
    auto r = tape.activation(Activation::relu, tape.constant(Tensor({2}, {-2, 3})));
    CHECK(tape.value(r)[0] == 0.0);
    CHECK(tape.value(r)[1] == 3.0);
    CHECK_THROWS_AS((void)activation_from_string("gelu"), error);
}

TEST_CASE("conv1d hand cases") {
    SUBCASE("box kernel over ramp, valid") {
        Parameter sig("sig", Tensor({1, 4}, {1, 2, 3, 4}));
        Parameter ker("ker", Tensor({1, 1, 3}, {1, 1, 1}));
        Tape tape;
        auto y = tape.conv1d(tape.param(sig), tape.param(ker), 1, Padding::valid);
        REQUIRE(tape.value(y).shape() == std::vector<std::size_t>{1, 2});
        CHECK(tape.value(y)[0] == doctest::Approx(6.0));
        CHECK(tape.value(y)[1] == doctest::Approx(9.0));
    }
    SUBCASE("identity kernel is the identity map") {
        Rng rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            std::size_t L = 1 + rng.below(12);
            Parameter sig("sig", rand_tensor({1, L}, rng));
            Parameter ker("ker", Tensor({1, 1, 1}, {1.0}));
            Tape tape;
            auto y = tape.conv1d(tape.param(sig), tape.param(ker), 1, Padding::valid);
            for (std::size_t i = 0; i < L; ++i) CHECK(tape.value(y)[i] == sig.value[i]);
        }
    }
    SUBCASE("kernel longer than signal rejected") {
        Parameter sig("sig", Tensor({1, 2}, {1, 2}));
        Parameter ker("ker", Tensor({1, 1, 3}, {1, 1, 1}));
        Tape tape;
        CHECK_THROWS_AS(tape.conv1d(tape.param(sig), tape.param(ker), 1, Padding::valid), error);
    }
    SUBCASE("zero signal stays exactly zero") {
        Parameter sig("sig", Tensor({2, 9}));
        Rng rng(3);
        Parameter ker("ker", rand_tensor({3, 2, 4}, rng));
        Tape tape;
        auto y = tape.conv1d(tape.param(sig), tape.param(ker), 2, Padding::same);
        for (double v : tape.value(y).values()) CHECK(v == 0.0);
    }
}

TEST_CASE("avgpool1d hand cases") {
    Tape tape;
    auto y = tape.avgpool1d(tape.constant(Tensor({1, 4}, {1, 3, 5, 7})), 2, 2);
    CHECK(tape.value(y)[0] == doctest::Approx(2.0));
    CHECK(tape.value(y)[1] == doctest::Approx(6.0));

    auto c = tape.avgpool1d(tape.constant(Tensor({1, 3}, {5, 5, 5})), 3, 1);
    REQUIRE(tape.value(c).size() == 1);
    CHECK(tape.value(c)[0] == doctest::Approx(5.0));

    CHECK_THROWS_AS(tape.avgpool1d(tape.constant(Tensor({1, 3}, {5, 5, 5})), 0, 1), error);
    CHECK_THROWS_AS(tape.avgpool1d(tape.constant(Tensor({1, 3}, {5, 5, 5})), 4, 1), error);
}

TEST_CASE("avgpool of constant signal is constant") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t L = 2 + rng.below(20);
        std::size_t w = 1 + rng.below(L);
        std::size_t s = 1 + rng.below(3);
        double v = rng.uniform(-5, 5);
        Tensor x({2, L});
        x.fill(v);
        Tape tape;
        auto y = tape.avgpool1d(tape.constant(std::move(x)), w, s);
        for (double o : tape.value(y).values()) CHECK(o == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("dropout contract") {
    Rng rng(5);
    Tensor x = rand_tensor({40}, rng);
    SUBCASE("rate 0 and inference mode are bit-identical identity") {
        Tape tape;
        auto xid = tape.constant(x);
        CHECK(tape.dropout(xid, 0.0, true, 1) == xid);
        CHECK(tape.dropout(xid, 0.7, false, 1) == xid);
    }
    SUBCASE("survivor scaling keeps the mean near one") {
        Tensor ones({10000});
        ones.fill(1.0);
        Tape tape;
        auto y = tape.dropout(tape.constant(std::move(ones)), 0.5, true, 42);
        double mean = 0.0;
        for (double v : tape.value(y).values()) mean += v;
        mean /= 10000.0;
        CHECK(std::fabs(mean - 1.0) < 0.05);
    }
    SUBCASE("rate >= 1 rejected") {
        Tape tape;
        auto xid = tape.constant(x);
        CHECK_THROWS_AS(tape.dropout(xid, 1.0, true, 1), error);
    }
}

TEST_CASE("backward hand cases") {
    SUBCASE("grad of sum(W*x) has rows equal to x") {
        Parameter W("W", Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
        Parameter b("b", Tensor({3}));
        Tape tape;
        auto loss = tape.sum(tape.linear(tape.param(W), tape.constant(Tensor({2}, {2.5, -1.5})),
                                         tape.param(b)));
        tape.backward(loss);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(W.grad.at(r, 0) == doctest::Approx(2.5));
            CHECK(W.grad.at(r, 1) == doctest::Approx(-1.5));
        }
    }
    SUBCASE("unused parameter keeps zero gradient") {
        Parameter used("used", Tensor({2}, {1, 2}));
        Parameter unused("unused", Tensor({2}, {3, 4}));
        Tape tape;
        (void)tape.param(unused);
        auto loss = tape.sum(tape.param(used));
        tape.backward(loss);
        CHECK(unused.grad[0] == 0.0);
        CHECK(unused.grad[1] == 0.0);
        CHECK(used.grad[0] == 1.0);
    }
    SUBCASE("constant loss yields zero gradients") {
        Parameter p("p", Tensor({2}, {1, 2}));
        Tape tape;
        (void)tape.param(p);
        auto loss = tape.constant(Tensor::scalar(3.0));
        tape.backward(loss);
        CHECK(p.grad[0] == 0.0);
    }
    SUBCASE("non-scalar loss rejected") {
        Tape tape;
        auto v = tape.constant(Tensor({2}, {1, 2}));
        CHECK_THROWS_AS(tape.backward(v), error);
    }
}

TEST_CASE("backward is additive over losses") {
    Rng rng(23);
    Parameter W("W", rand_tensor({3, 3}, rng));
    Parameter b("b", rand_tensor({3}, rng));
    Tensor x = rand_tensor({3}, rng);

    auto make = [&](Parameter& Wp, Parameter& bp, bool joint, bool first) {
        Tape tape;
        auto lin = tape.linear(tape.param(Wp), tape.constant(x), tape.param(bp));
        auto l1 = tape.sum(tape.activation(Activation::tanh, lin));
        auto l2 = tape.dot(lin, lin);
        if (joint) {
            tape.backward(tape.add(l1, l2));
        } else {
            tape.backward(first ? l1 : l2);
        }
    };

    // joint
    W.zero_grad();
    b.zero_grad();
    make(W, b, true, false);
    Tensor joint_gW = W.grad, joint_gb = b.grad;

    // separate passes accumulate
    W.zero_grad();
    b.zero_grad();
    make(W, b, false, true);
    make(W, b, false, false);

    for (std::size_t i = 0; i < W.grad.size(); ++i)
        CHECK(W.grad[i] == doctest::Approx(joint_gW[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < b.grad.size(); ++i)
        CHECK(b.grad[i] == doctest::Approx(joint_gb[i]).epsilon(1e-12));
}

TEST_CASE("finite differences agree with analytic gradients for every primitive") {
    // 50 random shape/seed draws per primitive family
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(derive_seed(900, seed));

        SUBCASE("") {}  // keep doctest quiet about empty case
        {
            // linear + activations
            std::size_t m = 1 + rng.below(5), n = 1 + rng.below(5);
            Parameter W("W", rand_tensor({m, n}, rng));
            Parameter x("x", rand_tensor({n}, rng));
            Parameter b("b", rand_tensor({m}, rng));
            auto run = [&](bool grad) {
                Tape tape;
                auto lin = tape.linear(tape.param(W), tape.param(x), tape.param(b));
                auto act = tape.activation(static_cast<Activation>(seed % 3), lin);
                auto loss = tape.sum(act);
                if (grad) tape.backward(loss);
                return tape.value(loss)[0];
            };
            auto rep = check_graph({&W, &x, &b}, run);
            CHECK_MESSAGE(rep.pass, rep.summary());
        }
        {
            // conv1d over random channel counts, strides, paddings; half the
            // draws get a zero suffix to exercise the sparse fast paths
            std::size_t c_in = 1 + rng.below(3), c_out = 1 + rng.below(3);
            std::size_t L = 4 + rng.below(12), K = 1 + rng.below(4);
            std::size_t stride = 1 + rng.below(3);
            Padding pad = (seed % 2) ? Padding::same : Padding::valid;
            Parameter sig("sig", rand_tensor({c_in, L}, rng));
            if (seed % 2) {
                for (std::size_t c = 0; c < c_in; ++c)
                    for (std::size_t i = L - L / 3; i < L; ++i) sig.value.at(c, i) = 0.0;
            }
            Parameter ker("ker", rand_tensor({c_out, c_in, K}, rng));
            auto run = [&](bool grad) {
                Tape tape;
                auto y = tape.conv1d(tape.param(sig), tape.param(ker), stride, pad);
                auto loss = tape.dot(tape.flatten(y), tape.flatten(y));
                if (grad) tape.backward(loss);
                return tape.value(loss)[0];
            };
            auto rep = check_graph({&sig, &ker}, run);
            CHECK_MESSAGE(rep.pass, rep.summary());
        }
        {
            // avgpool + pad1d
            std::size_t C = 1 + rng.below(3), L = 3 + rng.below(10);
            std::size_t w = 1 + rng.below(L), s = 1 + rng.below(3);
            Parameter x("x", rand_tensor({C, L}, rng));
            auto run = [&](bool grad) {
                Tape tape;
                auto padded = tape.pad1d(tape.param(x), seed % 3, seed % 2);
                auto y = tape.avgpool1d(padded, w, s);
                auto loss = tape.sum(tape.activation(Activation::tanh, tape.flatten(y)));
                if (grad) tape.backward(loss);
                return tape.value(loss)[0];
            };
            auto rep = check_graph({&x}, run);
            CHECK_MESSAGE(rep.pass, rep.summary());
        }
        {
            // dropout with fixed seed (deterministic surrogate), mul, dot, axpb
            Parameter a("a", rand_tensor({6}, rng));
            Parameter bb("bb", rand_tensor({6}, rng));
            auto run = [&](bool grad) {
                Tape tape;
                auto d = tape.dropout(tape.param(a), 0.4, true, 1234 + seed);
                auto m = tape.mul(d, tape.param(bb));
                auto loss = tape.dot(tape.axpb(m, 1.5, -0.25), m);
                if (grad) tape.backward(loss);
                return tape.value(loss)[0];
            };
            auto rep = check_graph({&a, &bb}, run);
            CHECK_MESSAGE(rep.pass, rep.summary());
        }
        {
            // rows gather + mean_rows + concat + slice + as_channels
            std::size_t V = 3 + rng.below(5), E = 2 + rng.below(4);
            Parameter table("table", rand_tensor({V, E}, rng));
            std::vector<std::size_t> idx;
            for (int i = 0; i < 4; ++i) idx.push_back(rng.below(V));
            auto run = [&](bool grad) {
                Tape tape;
                auto tid = tape.param(table);
                auto gathered = tape.rows(tid, idx);
                auto mean = tape.mean_rows(gathered);
                auto flat = tape.flatten(gathered);
                std::vector<Tape::NodeId> parts{mean, tape.slice(flat, 0, E)};
                auto cat = tape.concat(parts);
                auto two = tape.as_channels(cat, 2);
                auto loss = tape.sum(tape.activation(Activation::sigmoid, tape.flatten(two)));
                if (grad) tape.backward(loss);
                return tape.value(loss)[0];
            };
            auto rep = check_graph({&table}, run);
            CHECK_MESSAGE(rep.pass, rep.summary());
        }
    }
}

TEST_CASE("gathered row gradient of a summed lookup is all ones") {
    Parameter table("table", Tensor({4, 3}, {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3}));
    Tape tape;
    auto loss = tape.sum(tape.rows(tape.param(table), {2}));
    tape.backward(loss);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(table.grad.at(2, j) == 1.0);
        CHECK(table.grad.at(0, j) == 0.0);
    }
}

TEST_CASE("finite_diff_check notices a corrupted adjoint") {
    Parameter p("p", Tensor({3}, {0.3, -0.2, 0.9}));
    auto run = [&](bool grad) {
        Tape tape;
        auto loss = tape.dot(tape.param(p), tape.param(p));
        if (grad) tape.backward(loss);
        return tape.value(loss)[0];
    };
    auto loss_fn = [&] { return run(false); };

    SUBCASE("clean gradients pass tightly") {
        auto grad_fn = [&] {
            p.zero_grad();
            run(true);
        };
        auto rep = finite_diff_check(std::vector<Parameter*>{&p}, loss_fn, grad_fn);
        CHECK(rep.pass);
        CHECK(rep.max_rel_err < 1e-8);  // quadratic: central differences are near-exact
    }
    SUBCASE("corrupted gradient is reported") {
        auto grad_fn = [&] {
            p.zero_grad();
            run(true);
            p.grad[1] += 0.05;
        };
        auto rep = finite_diff_check(std::vector<Parameter*>{&p}, loss_fn, grad_fn);
        CHECK_FALSE(rep.pass);
        CHECK(rep.worst_param == "p");
        CHECK(rep.worst_index == 1);
        CHECK_FALSE(rep.failures.empty());
    }
    SUBCASE("non-deterministic model function rejected") {
        int calls = 0;
        auto noisy = [&] { return static_cast<double>(calls++); };
        auto grad_fn = [] {};
        CHECK_THROWS_AS(finite_diff_check(std::vector<Parameter*>{&p}, noisy, grad_fn), error);
    }
}

TEST_CASE("adam update rule") {
    SUBCASE("zero gradients leave parameters unchanged") {
        Parameter p("p", Tensor({2}, {1.0, -2.0}));
        Adam opt(AdamConfig{});
        opt.step(std::vector<Parameter*>{&p});
        CHECK(p.value[0] == 1.0);
        CHECK(p.value[1] == -2.0);
    }
    SUBCASE("first bias-corrected step moves by about lr against the gradient") {
        Parameter p("p", Tensor({1}, {0.5}));
        p.grad[0] = 1.0;
        AdamConfig cfg;
        cfg.lr = 1e-4;
        Adam opt(cfg);
        opt.step(std::vector<Parameter*>{&p});
        CHECK(p.value[0] == doctest::Approx(0.5 - 1e-4).epsilon(1e-6));
        CHECK(p.grad[0] == 0.0);  // gradients cleared after the step
    }
    SUBCASE("lr zero is a permitted no-op") {
        Parameter p("p", Tensor({1}, {0.5}));
        p.grad[0] = 3.0;
        AdamConfig cfg;
        cfg.lr = 0.0;
        Adam opt(cfg);
        opt.step(std::vector<Parameter*>{&p});
        CHECK(p.value[0] == 0.5);
    }
    SUBCASE("negative lr rejected") {
        AdamConfig cfg;
        cfg.lr = -1.0;
        CHECK_THROWS_AS(Adam{cfg}, error);
    }
}

TEST_CASE("gradient sink matches direct accumulation") {
    Rng rng(77);
    Parameter W("W", rand_tensor({4, 4}, rng));
    Parameter b("b", rand_tensor({4}, rng));
    Tensor x = rand_tensor({4}, rng);

    auto pass = [&](GradSink* sink) {
        Tape tape;
        auto loss =
            tape.sum(tape.activation(Activation::tanh,
                                     tape.linear(tape.param(W), tape.constant(x), tape.param(b))));
        tape.backward(loss, sink);
    };

    W.zero_grad();
    b.zero_grad();
    pass(nullptr);
    Tensor direct_gW = W.grad, direct_gb = b.grad;

    W.zero_grad();
    b.zero_grad();
    std::vector<Parameter*> params{&W, &b};
    GradSink sink(params);
    pass(&sink);
    CHECK(W.grad[0] == 0.0);  // nothing flushed yet
    sink.flush_into_params();
    for (std::size_t i = 0; i < W.grad.size(); ++i) CHECK(W.grad[i] == direct_gW[i]);
    for (std::size_t i = 0; i < b.grad.size(); ++i) CHECK(b.grad[i] == direct_gb[i]);
}
