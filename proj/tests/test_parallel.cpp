#include <doctest.h>

#include "causalkit/counterfactuals.hpp"
#include "causalkit/harness.hpp"
#include "causalkit/transport.hpp"
#include "testutil.hpp"

using namespace causalkit;

// The OpenMP kernels accumulate into per-slot partials that are combined in a
// fixed order, so they must agree with the serial references bit for bit.

TEST_CASE("parallel and serial joint enumeration are bit-identical") {
    Xoshiro256StarStar rng(101);
    for (int it = 0; it < 10; ++it) {
        const CausalModel m = testutil::random_cgm(rng, 6 + testutil::pick(rng, 3), 3);
        const Table par = joint(m);
        const Table ser = joint_serial(m);
        CHECK(par.values() == ser.values());
    }
    // above the parallel threshold too: 2^15 cells
    const CausalModel big = testutil::random_cgm(rng, 15, 2, 0.3);
    CHECK(joint(big).values() == joint_serial(big).values());
}

TEST_CASE("parallel and serial transport are bit-identical") {
    Xoshiro256StarStar rng(103);
    const FunctionalModel auction = gen_auction_model(0.37);
    const TransportInputs t = auction_transport_inputs(auction);
    CHECK(approx_transport(t).values() == approx_transport_serial(t).values());
}

TEST_CASE("parallel and serial certificates are bit-identical") {
    Xoshiro256StarStar rng(107);
    for (int it = 0; it < 5; ++it) {
        const FunctionalModel f = testutil::random_fcm(rng, 5);
        const auto observed = f.observed();
        const Certificate a = counterfactual_certificate(f, {{observed[0], 1}}, {observed.back()},
                                                         {observed[1], observed.back()});
        const Certificate b = counterfactual_certificate_serial(
            f, {{observed[0], 1}}, {observed.back()}, {observed[1], observed.back()});
        CHECK(a.divergence.bits == b.divergence.bits);
        CHECK(a.bound.bits == b.bound.bits);
    }
}
