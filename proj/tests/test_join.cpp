#include <doctest.h>

#include "orsnn/residual/join.hpp"

using namespace orsnn;

TEST_CASE("truth tables") {
    const Tensor<double> x({4}, {0, 0, 1, 1}), y({4}, {0, 1, 0, 1});
    auto row = [&](JoinMode m) {
        const auto r = join(x, y, m);
        return std::vector<double>(r.values().begin(), r.values().end());
    };
    CHECK(row(JoinMode::Or) == std::vector<double>{0, 1, 1, 1});
    CHECK(row(JoinMode::And) == std::vector<double>{0, 0, 0, 1});
    CHECK(row(JoinMode::IAnd) == std::vector<double>{0, 1, 0, 0});
    CHECK(row(JoinMode::Add) == std::vector<double>{0, 1, 1, 2});
}

TEST_CASE("exhaustive bit oracle over [2,2,2]") {
    for (unsigned a = 0; a < 256; ++a) {
        for (unsigned b = 0; b < 256; ++b) {
            std::vector<float> xv(8), yv(8);
            for (unsigned i = 0; i < 8; ++i) {
                xv[i] = static_cast<float>((a >> i) & 1u);
                yv[i] = static_cast<float>((b >> i) & 1u);
            }
            const Tensor<float> x({2, 2, 2}, xv), y({2, 2, 2}, yv);
            const auto o = join(x, y, JoinMode::Or), n = join(x, y, JoinMode::And), i = join(x, y, JoinMode::IAnd);
            for (unsigned k = 0; k < 8; ++k) {
                const unsigned xb = (a >> k) & 1u, yb = (b >> k) & 1u;
                if (o[k] != static_cast<float>(xb | yb)) FAIL("OR mismatch at " << a << "," << b);
                if (n[k] != static_cast<float>(xb & yb)) FAIL("AND mismatch at " << a << "," << b);
                if (i[k] != static_cast<float>((~xb & 1u) & yb)) FAIL("IAND mismatch at " << a << "," << b);
            }
        }
    }
}

TEST_CASE("mode names") {
    CHECK(parse_join_mode("OR") == JoinMode::Or);
    CHECK(parse_join_mode("IAND") == JoinMode::IAnd);
    CHECK(to_string(JoinMode::Add) == "ADD");
    CHECK_THROWS_AS(parse_join_mode("XOR"), Error);
    CHECK(is_bitwise(JoinMode::Or));
    CHECK_FALSE(is_bitwise(JoinMode::Add));
}

TEST_CASE("checked join") {
    const Tensor<double> good({2}, {0, 1}), bad({2}, {0, 2});
    CHECK_NOTHROW(join_checked(good, good, JoinMode::Or, "j", true));
    try {
        join_checked(good, bad, JoinMode::Or, "block1.join", true);
        FAIL("expected NotBinary");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotBinary);
        CHECK(std::string(e.what()).find("block1.join") != std::string::npos);
    }
    CHECK_NOTHROW(join_checked(good, bad, JoinMode::Or, "j", false));
    CHECK_NOTHROW(join_checked(good, bad, JoinMode::Add, "j", true));  // ADD does not require bits
    const auto c = check_binary<double>(std::vector<double>{0, 1, 2, -3});
    CHECK(c.non_binary == 2);
    CHECK(c.max_magnitude == 3.0);
}

TEST_CASE("OR absorbs a silent operand") {
    const Tensor<double> x({5}, {0, 1, 1, 0, 1});
    const auto r = join(x, Tensor<double>({5}, 0.0), JoinMode::Or);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r[i] == x[i]);
}
