#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scbm/error.hpp"
#include "scbm/models.hpp"
#include "scbm/nncore.hpp"

using namespace scbm;

TEST_SUITE("nncore") {
    TEST_CASE("losses at analytic points") {
        // Equal logits, uniform target: ln 2 per column.
        const auto ce = nn::softmax_cross_entropy(Matrix::Zero(2, 3), Matrix::Constant(2, 3, 0.5));
        CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        const auto bce = nn::binary_cross_entropy(Matrix::Zero(4, 2), Matrix::Constant(4, 2, 1.0));
        CHECK(bce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(bce.grad_logits(0, 0) == doctest::Approx(-0.5 / 8).epsilon(1e-15));
        CHECK_THROWS_AS(nn::softmax_cross_entropy(Matrix::Zero(2, 3), Matrix::Zero(3, 3)), ShapeError);
        Matrix bad = Matrix::Zero(2, 1);
        bad(0, 0) = std::nan("");
        CHECK_THROWS_AS(nn::softmax_cross_entropy(bad, Matrix::Constant(2, 1, 0.5)), NumericalError);
    }

    TEST_CASE("softmax is shift invariant and stable") {
        Matrix z(3, 1);
        z << 1000.0, 1001.0, 999.0;
        const Matrix p = nn::softmax(z);
        CHECK(p.allFinite());
        CHECK(p.sum() == doctest::Approx(1.0));
        Matrix z2 = z.array() - 1000.0;
        CHECK((nn::softmax(z2) - p).cwiseAbs().maxCoeff() < 1e-15);
        Matrix big(1, 2);
        big << -800.0, 800.0;
        const Matrix s = nn::sigmoid(big);
        CHECK(s(0, 0) >= 0.0);
        CHECK(s(0, 1) == 1.0);
    }

    TEST_CASE("RMSProp single step matches the update rule") {
        nn::DenseParams p = nn::DenseParams::zeros(1, 2);
        p.weight << 1.0, -1.0;
        p.bias << 0.5;
        nn::DenseParams g = nn::DenseParams::zeros(1, 2);
        g.weight << 0.2, 0.0;
        g.bias << -0.4;
        nn::RmsPropState state;
        std::vector<nn::DenseParams*> params{&p};
        const std::vector<nn::DenseParams> grads{g};
        nn::rmsprop_step(params, grads, state);
        // acc = 0.1 g^2, step = lr g / (sqrt(acc) + eps)
        const double acc = 0.1 * 0.04;
        CHECK(p.weight(0, 0) == doctest::Approx(1.0 - 2e-3 * 0.2 / (std::sqrt(acc) + 1e-8)).epsilon(1e-14));
        CHECK(p.weight(0, 1) == -1.0);
        CHECK(p.bias(0) == doctest::Approx(0.5 + 2e-3 * 0.4 / (std::sqrt(0.1 * 0.16) + 1e-8)).epsilon(1e-14));
        CHECK(state.accumulators[0].weight(0, 0) == doctest::Approx(acc).epsilon(1e-15));
    }

    TEST_CASE("Xavier initialization is seeded and bounded") {
        Rng a(5), b(5);
        const auto p = nn::DenseParams::xavier(8, 24, a);
        CHECK(p == nn::DenseParams::xavier(8, 24, b));
        CHECK(p.weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 32.0));
        CHECK(p.bias.isZero());
    }
}

TEST_SUITE("models") {
    TEST_CASE("SCBM gradients match central differences") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            Rng rng(seed);
            const Task task = seed % 2 ? Task::identification : Task::categorization;
            ScbmHead head = ScbmHead::create(7, task, {{5}}, rng);
            const Matrix c = oracle::random_matrix(rng, 7, 4);
            const Matrix t = oracle::random_targets(rng, static_cast<Eigen::Index>(output_arity(task)), 4,
                                                    task != Task::categorization);
            const LossAndGrad lg = head.loss_and_grad(c, t);
            const auto check =
                oracle::finite_difference_check(head, lg.grads, [&] { return head.loss_and_grad(c, t).loss; });
            CHECK(check.max_rel_error < 1e-4);
        }
    }

    TEST_CASE("SCBMT gradients match central differences") {
        for (std::uint64_t seed = 11; seed <= 14; ++seed) {
            Rng rng(seed);
            const Task task = seed % 2 ? Task::intention : Task::categorization;
            ScbmtHead head = ScbmtHead::create(6, 3, task, {{5}}, rng);
            const Matrix c = oracle::random_matrix(rng, 6, 3);
            const Matrix e = oracle::random_matrix(rng, 3, 3, -1.0, 1.0);
            const Matrix t = oracle::random_targets(rng, static_cast<Eigen::Index>(output_arity(task)), 3,
                                                    task != Task::categorization);
            const LossAndGrad lg = head.loss_and_grad(c, e, t);
            const auto check =
                oracle::finite_difference_check(head, lg.grads, [&] { return head.loss_and_grad(c, e, t).loss; });
            CHECK(check.max_rel_error < 1e-4);
        }
    }

    TEST_CASE("zero gate gives half the concept vector") {
        Rng rng(2);
        ScbmHead head = ScbmHead::create(5, Task::identification, {}, rng);
        head.gate() = nn::DenseParams::zeros(5, 5);
        Vector c(5);
        c << 0.1, 0.9, 0.4, 0.0, 1.0;
        const auto out = head.forward(c);
        CHECK((out.activation - c / 2).cwiseAbs().maxCoeff() == 0.0);
        CHECK(out.probabilities.sum() == doctest::Approx(1.0));
        // c = 0: output is the same constant for any gate.
        const auto z1 = head.forward(Vector::Zero(5));
        head.gate().bias.setConstant(3.0);
        CHECK(head.forward(Vector::Zero(5)).probabilities == z1.probabilities);
    }

    TEST_CASE("activation equals a straight-line recomputation and stays below c") {
        Rng rng(8);
        const ScbmHead head = ScbmHead::create(12, Task::intention, {}, rng);
        for (int i = 0; i < 20; ++i) {
            const Vector c = oracle::random_matrix(rng, 12, 1).col(0);
            const Vector r = head.forward(c).activation;
            CHECK((r - oracle::gated_activation(head.gate(), c)).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((r.array() <= c.array()).all());
            CHECK((r.array() >= 0.0).all());
        }
        CHECK_THROWS_AS(head.forward(Vector::Zero(11)), ShapeError);
    }

    TEST_CASE("permuting concepts with consistent weights leaves the output unchanged") {
        Rng rng(21);
        const ScbmHead head = ScbmHead::create(6, Task::identification, {{4}}, rng);
        std::vector<int> perm{3, 0, 5, 1, 4, 2};
        Eigen::PermutationMatrix<Eigen::Dynamic> P(6);
        for (int i = 0; i < 6; ++i) P.indices()[i] = perm[static_cast<std::size_t>(i)];
        nn::DenseParams gate = head.gate();
        gate.weight = P * gate.weight * P.transpose();
        gate.bias = P * gate.bias;
        nn::Mlp mlp = head.mlp();
        mlp.layers()[0].weight = mlp.layers()[0].weight * P.transpose();
        const ScbmHead permuted(gate, mlp, Task::identification);
        const Vector c = oracle::random_matrix(rng, 6, 1).col(0);
        const Vector pc = P * c;
        CHECK((head.forward(c).probabilities - permuted.forward(pc).probabilities).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("SCBMT shapes") {
        Rng rng(4);
        const ScbmtHead head = ScbmtHead::create(131, 1024, Task::identification, {}, rng);
        CHECK(head.mlp().in_dim() == 2048);
        CHECK(head.embedding_dim() == 1024);
        CHECK_THROWS_AS(head.forward(Vector::Zero(131), Vector::Zero(1023)), ShapeError);
    }

    TEST_CASE("decision rules") {
        Vector p(2);
        p << 0.9, 0.1;
        CHECK(hard_class(decide(p, Task::identification).label) == 0);
        p << 0.5, 0.5;
        CHECK(hard_class(decide(p, Task::identification).label) == 0);
        CHECK(hard_class(decide(p, Task::identification, {0.5, 1}).label) == 1);
        Vector q(5);
        q << 0.7, 0.2, 0.6, 0.4, 0.1;
        CHECK(hard_set(decide(q, Task::categorization).label) == std::vector<int>{0, 2});
        q << 0.5, 0.49, 0.0, 0.0, 0.0;
        CHECK(hard_set(decide(q, Task::categorization).label) == std::vector<int>{0});
        Vector m(4);
        m << 0.3, 0.3, 0.1, 0.3;
        CHECK(hard_class(decide(m, Task::intention).label) == 0);
        CHECK_THROWS_AS(decide(p, Task::intention), ConfigError);
    }

    TEST_CASE("embedding file") {
        const auto t = parse_embeddings("#scbm-embeddings v1 dim=2 provider=test\na\t0.5\t-1\nb\t0\t2\n");
        CHECK(t.dim == 2);
        CHECK(t.provider_tag == "test");
        CHECK(parse_embeddings(export_embeddings(t)).vectors == t.vectors);
        const Matrix g = t.gather({"b", "a"});
        CHECK(g(1, 0) == 2.0);
        CHECK(g(0, 1) == 0.5);
        try {
            (void)t.gather({"a", "x", "y"});
            FAIL("expected JoinError");
        } catch (const JoinError& e) {
            CHECK(e.missing_ids() == std::vector<std::string>{"x", "y"});
        }
        CHECK_THROWS_AS(parse_embeddings("#scbm-embeddings v1 dim=2 provider=t\na\t1\n"), ShapeError);
        CHECK_THROWS_AS(parse_embeddings("#scbm-embeddings v1 dim=1 provider=t\na\tnan\n"), InvalidInput);
        CHECK_THROWS_AS(parse_embeddings("a\t1\n"), InvalidInput);
    }
}
