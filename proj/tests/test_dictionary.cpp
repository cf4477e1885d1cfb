#include "helpers.hpp"

#include <koopman/dictionary.hpp>
#include <koopman/error.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace koopman;
using testing::box;
using testing::vec;

TEST_SUITE("dictionary") {

TEST_CASE("identity lift") {
    const IdentityDictionary d(2);
    CHECK(eval_lift(d, vec({1, 2})) == vec({1, 2}));
    CHECK(d.lifted_dim() == 2);
}

TEST_CASE("function dictionary {x, x^2}") {
    const auto d = testing::scalar_dictionary({[](double x) { return x * x; }});
    CHECK(eval_lift(*d, vec({3})) == vec({3, 9}));
}

TEST_CASE("non-finite observable names its index") {
    const auto d = testing::scalar_dictionary(
        {[](double x) { return x; }, [](double) { return std::numeric_limits<double>::quiet_NaN(); }});
    try {
        (void)eval_lift(*d, vec({1}));
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}

TEST_CASE("rbf values") {
    CHECK(rbf(0.3, 0.3, 1.0) == 1.0);
    CHECK(rbf(1.0, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(rbf(1.0, 0.0, -1.0, true) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
}

TEST_CASE("rbf dictionary layout") {
    SUBCASE("20 per state on two states") {
        const auto d = make_rbf_dictionary(box({-1, -1}, {1, 1}), 20, 1.0);
        CHECK(d->observable_count() == 40);
        CHECK(d->lifted_dim() == 42);
        const Vector x = vec({0.2, -0.7});
        const Vector z = d->eval(x);
        CHECK(z.head(2) == x);
    }
    SUBCASE("centers are evenly spaced with endpoints") {
        const auto d = make_rbf_dictionary(box({0}, {1}), 3, 1.0);
        const auto& rbfd = dynamic_cast<const RbfDictionary&>(*d);
        const Vector& c = rbfd.spec().centers[0];
        REQUIRE(c.size() == 3);
        CHECK(c(0) == 0.0);
        CHECK(c(1) == 0.5);
        CHECK(c(2) == 1.0);
        CHECK(d->eval(vec({0.5}))(2) == 1.0);
    }
    SUBCASE("degenerate range collapses centers") {
        const auto d = make_rbf_dictionary(box({0, 2}, {1, 2}), 4, 1.0);
        const auto& rbfd = dynamic_cast<const RbfDictionary&>(*d);
        REQUIRE(rbfd.degenerate_dims().size() == 1);
        CHECK(rbfd.degenerate_dims()[0] == 1);
        CHECK((rbfd.spec().centers[1].array() == 2.0).all());
    }
}

TEST_CASE("batch evaluation matches pointwise") {
    const auto d = make_rbf_dictionary(box({-1, -1}, {1, 1}), 5, 0.7);
    Matrix xs(3, 2);
    xs << 0.1, 0.2, -0.5, 0.9, 1.3, -1.1;
    const Matrix zs = d->eval_batch(xs);
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        CHECK((zs.row(i).transpose() - d->eval(xs.row(i).transpose())).norm() == 0.0);
}

TEST_CASE("concat keeps one state prefix") {
    const auto a = testing::scalar_dictionary({[](double x) { return x * x; }});
    const auto b = testing::scalar_dictionary({[](double x) { return x * x * x; }, [](double) { return 1.0; }});
    const ConcatDictionary c({a, b});
    CHECK(c.observable_count() == 3);
    CHECK(c.eval(vec({2})) == vec({2, 4, 8, 1}));
}

TEST_CASE("json round trip of rbf and identity") {
    const auto d = make_rbf_dictionary(box({-1, 0}, {1, 2}), 4, 0.5);
    const auto back = dictionary_from_json(d->describe());
    const Vector x = vec({0.3, 1.7});
    CHECK((back->eval(x) - d->eval(x)).norm() == 0.0);
    const auto id = dictionary_from_json(IdentityDictionary(3).describe());
    CHECK(id->lifted_dim() == 3);
}

}
